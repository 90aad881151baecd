// core/include/relid/nn-layers.h

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

#ifndef RELID_NN_LAYERS_H_
#define RELID_NN_LAYERS_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "relid/nn-graph.h"

namespace relid::nn {

using Rng = std::mt19937_64;

// Fills p.value with uniform(-bound, bound).
void InitUniform(Parameter &p, double bound, Rng &rng);

// x W + b over the rows of x.
class Dense {
 public:
  Dense() = default;
  // Weights uniform(+-1/sqrt(in)), zero bias; zero_init zeroes the weights.
  Dense(ParameterStore &store, const std::string &name, int in, int out, Rng &rng,
        bool zero_init = false);

  Var Apply(Graph &g, Var x) const;
  int InDim() const { return in_; }
  int OutDim() const { return out_; }

 private:
  Parameter *w_ = nullptr;
  Parameter *b_ = nullptr;
  int in_ = 0, out_ = 0;
};

// Peephole-free LSTM. Gate columns are ordered [input, forget, output, cell];
// the forget-gate bias starts at 1.
class Lstm {
 public:
  Lstm() = default;
  Lstm(ParameterStore &store, const std::string &name, int in, int hidden, Rng &rng);

  // One step for a batch: x is B x in, (h, c) are B x H.
  void Step(Graph &g, Var x, Var *h, Var *c) const;
  // T x in -> T x H, zero initial state.
  Var Run(Graph &g, Var seq) const;
  int Hidden() const { return hidden_; }

 private:
  // Unroll over pre-projected inputs (rows of xw are x W_x + b).
  Var Unroll(Graph &g, Var xw) const;

  Parameter *wx_ = nullptr, *wh_ = nullptr, *b_ = nullptr;
  int in_ = 0, hidden_ = 0;
};

// GRU with update gate z, reset gate r:
//   n = tanh(x W_n + b_n + (r * h) U_n),  h' = (1 - z) * n + z * h.
class Gru {
 public:
  Gru() = default;
  Gru(ParameterStore &store, const std::string &name, int in, int hidden, Rng &rng);

  // x W_x + b for every row (N x 3H); reusable across many unrolls.
  Var Project(Graph &g, Var x) const;
  // One step over pre-projected input xw (B x 3H) from state h (B x H).
  Var StepProjected(Graph &g, Var xw, Var h) const;
  Var Step(Graph &g, Var x, Var h) const;
  // T x in -> T x H, zero initial state.
  Var Run(Graph &g, Var seq) const;
  int Hidden() const { return hidden_; }

 private:
  Parameter *wx_ = nullptr, *wh_ = nullptr, *wn_ = nullptr, *b_ = nullptr;
  int in_ = 0, hidden_ = 0;
};

// [fwd(seq) ; reverse(bwd(reverse(seq)))] column-wise.
template <typename Layer>
Var Bidirectional(Graph &g, const Layer &fwd, const Layer &bwd, Var seq) {
  Var f = fwd.Run(g, seq);
  Var b = ReverseRows(bwd.Run(g, ReverseRows(seq)));
  Var parts[] = {f, b};
  return ConcatCols(parts);
}

// Affine map over spliced context frames followed by ReLU. Output length is
// T - span + 1.
class Tdnn {
 public:
  Tdnn() = default;
  Tdnn(ParameterStore &store, const std::string &name, int in, int out,
       std::vector<int> offsets, Rng &rng);

  Var Apply(Graph &g, Var seq) const;
  int Span() const;
  int OutDim() const { return dense_.OutDim(); }

 private:
  std::vector<int> offsets_;
  Dense dense_;
};

struct AttentionOutput {
  Var embedding;  // 1 x K
  Var weights;    // T x 1
};

// u_t = tanh(h_t W_e + b_e), a = softmax_t(u_t . u_e), e = sum_t a_t h_t.
class Attention {
 public:
  Attention() = default;
  Attention(ParameterStore &store, const std::string &name, int dim, Rng &rng);

  AttentionOutput Apply(Graph &g, Var seq) const;

 private:
  Parameter *we_ = nullptr, *be_ = nullptr, *ue_ = nullptr;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction over every parameter of a store.
class Adam {
 public:
  Adam(ParameterStore &store, AdamOptions options);
  void Step();
  void set_lr(double lr) { options_.lr = lr; }
  long steps() const { return t_; }

 private:
  ParameterStore *store_;
  AdamOptions options_;
  std::vector<Matrix> m_, v_;
  long t_ = 0;
};

// Scales all gradients so their global L2 norm is at most max_norm; returns
// the norm before clipping.
double ClipGradNorm(ParameterStore &store, double max_norm);

}  // namespace relid::nn

#endif  // RELID_NN_LAYERS_H_
