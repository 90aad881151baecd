// core/include/relid/nn-graph.h

// Copyright 2026  relid contributors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef RELID_NN_GRAPH_H_
#define RELID_NN_GRAPH_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "relid/common.h"

namespace relid::nn {

// A named trainable tensor with its gradient slot.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

// Owns parameters with stable addresses, in creation order.
class ParameterStore {
 public:
  Parameter &Add(const std::string &name, int rows, int cols);
  Parameter *Find(const std::string &name);
  const Parameter *Find(const std::string &name) const;
  Parameter &Get(const std::string &name);

  std::vector<Parameter *> All();
  std::vector<const Parameter *> All() const;
  std::size_t size() const { return params_.size(); }
  std::size_t NumValues() const;

  void ZeroGrad();
  // Copies values from `other`; names and shapes must match.
  void CopyValuesFrom(const ParameterStore &other);
  // Copies values of every parameter whose name starts with `prefix` in
  // `other` into the parameter named `into_prefix` + rest here.
  void CopyPrefixFrom(const ParameterStore &other, const std::string &prefix,
                      const std::string &into_prefix);

  // "RNET" checkpoint: count, then per tensor name, rows, cols and
  // little-endian float64 values.
  void Write(std::ostream &os) const;
  // Loads values into existing parameters; names and shapes must match.
  void Read(std::istream &is);

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

class Graph;

// Handle to a node of a Graph.
class Var {
 public:
  Var() = default;
  const Matrix &value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Graph *graph() const { return graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph *g, int id) : graph_(g), id_(id) {}
  Graph *graph_ = nullptr;
  int id_ = -1;
};

// Dynamic tape. Nodes are appended in evaluation order; Backward walks them
// in reverse. A graph built with training = false records no backward
// closures and treats parameters as constants.
class Graph {
 public:
  explicit Graph(bool training = true) : training_(training) {}
  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;

  bool training() const { return training_; }

  // Leaf without gradient.
  Var Constant(Matrix value);
  // Leaf whose gradient is kept (readable after Backward via Grad).
  Var Input(Matrix value);
  // Leaf bound to a parameter; Backward adds into p.grad.
  Var Param(Parameter &p);

  const Matrix &Value(Var v) const { return nodes_[v.id_].value; }
  // Zero matrix of the right shape when no gradient reached the node.
  Matrix Grad(Var v) const;

  // Seeds d(loss)/d(loss) = 1 for a 1x1 node and back-propagates.
  void Backward(Var loss);

  std::size_t NumNodes() const { return nodes_.size(); }

  // Op construction: inputs are the parent nodes; backward receives this
  // node's output gradient and must call AccumulateGrad on the parents.
  Var AddNode(Matrix value, std::span<const Var> inputs,
              std::function<void(const Matrix &grad)> backward);
  bool NeedsGrad(Var v) const { return nodes_[v.id_].needs_grad; }
  void AccumulateGrad(Var v, const Matrix &grad);
  // Adds grad into the block of v's gradient starting at (row, col).
  void AccumulateGradBlock(Var v, Eigen::Index row, Eigen::Index col,
                           const Matrix &grad);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    Parameter *param = nullptr;
    std::function<void(const Matrix &)> backward;
  };
  Var Make(Node node);

  bool training_;
  std::vector<Node> nodes_;
};

// Elementary differentiable ops. Shapes follow row-vector convention: a
// frame or a step is 1 x K, a sequence is T x K, and an affine map is
// x W + b.

Var MatMul(Var a, Var b);
// a + b; b may also be a 1 x n row broadcast over the rows of a.
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var a, double s);
Var Tanh(Var a);
Var Sigmoid(Var a);
Var Relu(Var a);
Var Transpose(Var a);
Var ConcatCols(std::span<const Var> parts);
Var ConcatRows(std::span<const Var> parts);
Var SliceRows(Var a, Eigen::Index begin, Eigen::Index count);
Var SliceCols(Var a, Eigen::Index begin, Eigen::Index count);
// Rows indices[0], indices[1], ... of a (repeats allowed).
Var GatherRows(Var a, std::vector<int> indices);
// Rows in reverse order.
Var ReverseRows(Var a);
// Sum of all entries (1 x 1).
Var SumAll(Var a);
// Softmax over all entries of a column vector (T x 1).
Var SoftmaxColumn(Var a);
// -log softmax(logits)[label] for a 1 x L row (1 x 1).
Var SoftmaxXent(Var logits, int label);
// Row t of the output concatenates rows t + o - min(offsets) of a for every
// offset o; output has T - span + 1 rows.
Var Splice(Var a, std::span<const int> offsets);
// Fused LSTM cell. z holds the gate pre-activations [i f o | g] (R x 4H)
// and c the previous cell state (R x H); returns [h | c'] (R x 2H).
Var LstmCell(Var z, Var c);
// [mean ; std] over rows (1 x 2K); variance floored at 1e-10 before sqrt.
Var StatsPool(Var a);

// Numerically stable softmax of a row or column vector.
Matrix Softmax(const Matrix &logits);
double SoftmaxXentValue(const Matrix &logits, int label);

}  // namespace relid::nn

#endif  // RELID_NN_GRAPH_H_
