// core/src/nn-graph.cc

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

#include "relid/nn-graph.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "relid/binary-io.h"

namespace relid::nn {

Parameter &ParameterStore::Add(const std::string &name, int rows, int cols) {
  Require(!index_.count(name), ErrorKind::kInvalidArgument,
          "duplicate parameter name: " + name);
  index_[name] = params_.size();
  params_.push_back(Parameter{name, Matrix::Zero(rows, cols), Matrix::Zero(rows, cols)});
  return params_.back();
}

Parameter *ParameterStore::Find(const std::string &name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

const Parameter *ParameterStore::Find(const std::string &name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

Parameter &ParameterStore::Get(const std::string &name) {
  Parameter *p = Find(name);
  Require(p != nullptr, ErrorKind::kInvalidArgument, "no parameter named " + name);
  return *p;
}

std::vector<Parameter *> ParameterStore::All() {
  std::vector<Parameter *> out;
  for (auto &p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter *> ParameterStore::All() const {
  std::vector<const Parameter *> out;
  for (const auto &p : params_) out.push_back(&p);
  return out;
}

std::size_t ParameterStore::NumValues() const {
  std::size_t n = 0;
  for (const auto &p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ParameterStore::ZeroGrad() {
  for (auto &p : params_) p.grad.setZero(p.value.rows(), p.value.cols());
}

void ParameterStore::CopyValuesFrom(const ParameterStore &other) {
  Require(other.size() == size(), ErrorKind::kDimensionMismatch,
          "parameter sets differ in size");
  for (auto &p : params_) {
    const Parameter *q = other.Find(p.name);
    Require(q != nullptr && q->value.rows() == p.value.rows() &&
                q->value.cols() == p.value.cols(),
            ErrorKind::kDimensionMismatch, "parameter mismatch: " + p.name);
    p.value = q->value;
  }
}

void ParameterStore::CopyPrefixFrom(const ParameterStore &other,
                                    const std::string &prefix,
                                    const std::string &into_prefix) {
  int copied = 0;
  for (const Parameter *q : other.All()) {
    if (q->name.rfind(prefix, 0) != 0) continue;
    std::string target = into_prefix + q->name.substr(prefix.size());
    Parameter *p = Find(target);
    Require(p != nullptr && p->value.rows() == q->value.rows() &&
                p->value.cols() == q->value.cols(),
            ErrorKind::kDimensionMismatch, "architecture mismatch at " + target);
    p->value = q->value;
    ++copied;
  }
  Require(copied > 0, ErrorKind::kDimensionMismatch,
          "no parameters with prefix " + prefix);
}

namespace {
constexpr std::string_view kNetMagic = "RNET";
}  // namespace

void ParameterStore::Write(std::ostream &os) const {
  io::WriteMagic(os, kNetMagic);
  io::WriteU32(os, static_cast<std::uint32_t>(params_.size()));
  for (const auto &p : params_) {
    io::WriteString(os, p.name);
    io::WriteU32(os, static_cast<std::uint32_t>(p.value.rows()));
    io::WriteU32(os, static_cast<std::uint32_t>(p.value.cols()));
    for (Eigen::Index r = 0; r < p.value.rows(); ++r)
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) io::WriteF64(os, p.value(r, c));
  }
}

void ParameterStore::Read(std::istream &is) {
  io::ExpectMagic(is, kNetMagic);
  std::uint32_t count = io::ReadU32(is);
  Require(count == params_.size(), ErrorKind::kDimensionMismatch,
          "checkpoint has " + std::to_string(count) + " tensors, model expects " +
              std::to_string(params_.size()));
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = io::ReadString(is);
    std::uint32_t rows = io::ReadU32(is), cols = io::ReadU32(is);
    io::CheckDims(rows, cols, "tensor " + name);
    Parameter *p = Find(name);
    Require(p != nullptr, ErrorKind::kDimensionMismatch,
            "checkpoint tensor not in model: " + name);
    Require(p->value.rows() == rows && p->value.cols() == cols,
            ErrorKind::kDimensionMismatch, "shape mismatch for " + name);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) p->value(r, c) = io::ReadF64(is);
  }
}

const Matrix &Var::value() const { return graph_->Value(*this); }

Var Graph::Make(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::Constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return Make(std::move(n));
}

Var Graph::Input(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = training_;
  return Make(std::move(n));
}

Var Graph::Param(Parameter &p) {
  Node n;
  n.value = p.value;
  if (training_) {
    n.needs_grad = true;
    n.param = &p;
  }
  return Make(std::move(n));
}

Matrix Graph::Grad(Var v) const {
  const Node &n = nodes_[v.id_];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Graph::AddNode(Matrix value, std::span<const Var> inputs,
                   std::function<void(const Matrix &)> backward) {
  Node n;
  n.value = std::move(value);
  if (training_)
    for (const Var &in : inputs)
      if (nodes_[in.id_].needs_grad) n.needs_grad = true;
  if (n.needs_grad) n.backward = std::move(backward);
  return Make(std::move(n));
}

void Graph::AccumulateGrad(Var v, const Matrix &grad) {
  Node &n = nodes_[v.id_];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0)
    n.grad = grad;
  else
    n.grad += grad;
}

void Graph::AccumulateGradBlock(Var v, Eigen::Index row, Eigen::Index col,
                                const Matrix &grad) {
  Node &n = nodes_[v.id_];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  n.grad.block(row, col, grad.rows(), grad.cols()) += grad;
}

void Graph::Backward(Var loss) {
  Require(loss.graph_ == this, ErrorKind::kInvalidArgument, "loss from another graph");
  Require(training_, ErrorKind::kInvalidArgument, "Backward on an inference graph");
  Node &root = nodes_[loss.id_];
  Require(root.value.size() == 1, ErrorKind::kInvalidArgument, "loss must be 1x1");
  root.grad = Matrix::Ones(1, 1);
  for (int i = loss.id_; i >= 0; --i) {
    Node &n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(n.grad);
    if (n.param) {
      if (n.param->grad.size() == 0)
        n.param->grad = n.grad;
      else
        n.param->grad += n.grad;
    }
  }
}

namespace {

Graph &G(Var a) {
  Require(a.valid(), ErrorKind::kInvalidArgument, "invalid node handle");
  return *a.graph();
}

void CheckSameGraph(Var a, Var b) {
  Require(a.graph() == b.graph(), ErrorKind::kInvalidArgument,
          "nodes belong to different graphs");
}

}  // namespace

Var MatMul(Var a, Var b) {
  CheckSameGraph(a, b);
  Graph &g = G(a);
  Require(a.cols() == b.rows(), ErrorKind::kDimensionMismatch,
          "MatMul shape mismatch");
  Var in[] = {a, b};
  return g.AddNode(a.value() * b.value(), in, [&g, a, b](const Matrix &d) {
    if (g.NeedsGrad(a)) g.AccumulateGrad(a, d * b.value().transpose());
    if (g.NeedsGrad(b)) g.AccumulateGrad(b, a.value().transpose() * d);
  });
}

namespace {

Var AddSub(Var a, Var b, double sign) {
  CheckSameGraph(a, b);
  Graph &g = G(a);
  const Matrix &av = a.value(), &bv = b.value();
  bool broadcast = bv.rows() == 1 && av.rows() != 1 && bv.cols() == av.cols();
  Require(broadcast || (av.rows() == bv.rows() && av.cols() == bv.cols()),
          ErrorKind::kDimensionMismatch, "Add/Sub shape mismatch");
  Matrix out = av;
  if (broadcast)
    out.rowwise() += sign * bv.row(0);
  else
    out += sign * bv;
  Var in[] = {a, b};
  return g.AddNode(std::move(out), in, [&g, a, b, broadcast, sign](const Matrix &d) {
    g.AccumulateGrad(a, d);
    if (!g.NeedsGrad(b)) return;
    if (broadcast)
      g.AccumulateGrad(b, sign * d.colwise().sum());
    else
      g.AccumulateGrad(b, sign * d);
  });
}

}  // namespace

Var Add(Var a, Var b) { return AddSub(a, b, 1.0); }
Var Sub(Var a, Var b) { return AddSub(a, b, -1.0); }

Var Mul(Var a, Var b) {
  CheckSameGraph(a, b);
  Graph &g = G(a);
  Require(a.rows() == b.rows() && a.cols() == b.cols(),
          ErrorKind::kDimensionMismatch, "Mul shape mismatch");
  Var in[] = {a, b};
  return g.AddNode(a.value().cwiseProduct(b.value()), in, [&g, a, b](const Matrix &d) {
    if (g.NeedsGrad(a)) g.AccumulateGrad(a, d.cwiseProduct(b.value()));
    if (g.NeedsGrad(b)) g.AccumulateGrad(b, d.cwiseProduct(a.value()));
  });
}

Var Scale(Var a, double s) {
  Graph &g = G(a);
  Var in[] = {a};
  return g.AddNode(s * a.value(), in,
                   [&g, a, s](const Matrix &d) { g.AccumulateGrad(a, s * d); });
}

Var Tanh(Var a) {
  Graph &g = G(a);
  Var in[] = {a};
  Matrix y = a.value().array().tanh().matrix();
  if (!g.training() || !g.NeedsGrad(a)) return g.AddNode(std::move(y), in, {});
  Matrix yc = y;
  return g.AddNode(std::move(y), in, [&g, a, yc](const Matrix &d) {
    g.AccumulateGrad(a, d.cwiseProduct((1.0 - yc.array().square()).matrix()));
  });
}

Var Sigmoid(Var a) {
  Graph &g = G(a);
  Var in[] = {a};
  Matrix y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  if (!g.training() || !g.NeedsGrad(a)) return g.AddNode(std::move(y), in, {});
  Matrix yc = y;
  return g.AddNode(std::move(y), in, [&g, a, yc](const Matrix &d) {
    g.AccumulateGrad(a, d.cwiseProduct((yc.array() * (1.0 - yc.array())).matrix()));
  });
}

Var LstmCell(Var z, Var c) {
  CheckSameGraph(z, c);
  Graph &g = G(z);
  const Eigen::Index hd = c.cols();
  Require(z.cols() == 4 * hd && z.rows() == c.rows(), ErrorKind::kDimensionMismatch,
          "LstmCell shape mismatch");
  Matrix s = (1.0 / (1.0 + (-z.value().leftCols(3 * hd).array()).exp())).matrix();
  Matrix cand = z.value().rightCols(hd).array().tanh().matrix();
  Matrix out(z.rows(), 2 * hd);
  out.rightCols(hd) = s.middleCols(hd, hd).cwiseProduct(c.value()) +
                      s.leftCols(hd).cwiseProduct(cand);
  Matrix tc = out.rightCols(hd).array().tanh().matrix();
  out.leftCols(hd) = s.middleCols(2 * hd, hd).cwiseProduct(tc);
  Var in[] = {z, c};
  if (!g.training() || (!g.NeedsGrad(z) && !g.NeedsGrad(c)))
    return g.AddNode(std::move(out), in, {});
  return g.AddNode(std::move(out), in,
                   [&g, z, c, hd, s = std::move(s), cand = std::move(cand),
                    tc = std::move(tc)](const Matrix &d) {
    auto i = s.leftCols(hd).array(), f = s.middleCols(hd, hd).array(),
         o = s.middleCols(2 * hd, hd).array();
    Matrix dc = (d.rightCols(hd).array() +
                 d.leftCols(hd).array() * o * (1.0 - tc.array().square())).matrix();
    if (g.NeedsGrad(z)) {
      Matrix dz(z.rows(), 4 * hd);
      dz.leftCols(hd) = (dc.array() * cand.array() * i * (1.0 - i)).matrix();
      dz.middleCols(hd, hd) = (dc.array() * c.value().array() * f * (1.0 - f)).matrix();
      dz.middleCols(2 * hd, hd) = (d.leftCols(hd).array() * tc.array() * o * (1.0 - o)).matrix();
      dz.rightCols(hd) = (dc.array() * i * (1.0 - cand.array().square())).matrix();
      g.AccumulateGrad(z, dz);
    }
    if (g.NeedsGrad(c)) g.AccumulateGrad(c, (dc.array() * f).matrix());
  });
}

Var Relu(Var a) {
  Graph &g = G(a);
  Var in[] = {a};
  return g.AddNode(a.value().cwiseMax(0.0), in, [&g, a](const Matrix &d) {
    g.AccumulateGrad(a, (a.value().array() > 0.0).select(d, 0.0).matrix());
  });
}

Var Transpose(Var a) {
  Graph &g = G(a);
  Var in[] = {a};
  return g.AddNode(a.value().transpose(), in, [&g, a](const Matrix &d) {
    g.AccumulateGrad(a, d.transpose());
  });
}

Var ConcatCols(std::span<const Var> parts) {
  Require(!parts.empty(), ErrorKind::kInvalidArgument, "ConcatCols of nothing");
  Graph &g = G(parts[0]);
  Eigen::Index rows = parts[0].rows(), cols = 0;
  for (const Var &p : parts) {
    CheckSameGraph(parts[0], p);
    Require(p.rows() == rows, ErrorKind::kDimensionMismatch, "ConcatCols row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (const Var &p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  std::vector<Var> copy(parts.begin(), parts.end());
  return g.AddNode(std::move(out), parts, [&g, copy](const Matrix &d) {
    Eigen::Index c = 0;
    for (const Var &p : copy) {
      if (g.NeedsGrad(p)) g.AccumulateGrad(p, d.middleCols(c, p.cols()));
      c += p.cols();
    }
  });
}

Var ConcatRows(std::span<const Var> parts) {
  Require(!parts.empty(), ErrorKind::kInvalidArgument, "ConcatRows of nothing");
  Graph &g = G(parts[0]);
  Eigen::Index cols = parts[0].cols(), rows = 0;
  for (const Var &p : parts) {
    CheckSameGraph(parts[0], p);
    Require(p.cols() == cols, ErrorKind::kDimensionMismatch, "ConcatRows column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const Var &p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  std::vector<Var> copy(parts.begin(), parts.end());
  return g.AddNode(std::move(out), parts, [&g, copy](const Matrix &d) {
    Eigen::Index r = 0;
    for (const Var &p : copy) {
      if (g.NeedsGrad(p)) g.AccumulateGrad(p, d.middleRows(r, p.rows()));
      r += p.rows();
    }
  });
}

Var SliceRows(Var a, Eigen::Index begin, Eigen::Index count) {
  Graph &g = G(a);
  Require(begin >= 0 && count >= 1 && begin + count <= a.rows(),
          ErrorKind::kDimensionMismatch, "SliceRows out of range");
  Var in[] = {a};
  return g.AddNode(a.value().middleRows(begin, count), in,
                   [&g, a, begin](const Matrix &d) {
                     g.AccumulateGradBlock(a, begin, 0, d);
                   });
}

Var SliceCols(Var a, Eigen::Index begin, Eigen::Index count) {
  Graph &g = G(a);
  Require(begin >= 0 && count >= 1 && begin + count <= a.cols(),
          ErrorKind::kDimensionMismatch, "SliceCols out of range");
  Var in[] = {a};
  return g.AddNode(a.value().middleCols(begin, count), in,
                   [&g, a, begin](const Matrix &d) {
                     g.AccumulateGradBlock(a, 0, begin, d);
                   });
}

Var GatherRows(Var a, std::vector<int> indices) {
  Graph &g = G(a);
  Require(!indices.empty(), ErrorKind::kInvalidArgument, "GatherRows of nothing");
  Matrix out(static_cast<Eigen::Index>(indices.size()), a.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    Require(indices[i] >= 0 && indices[i] < a.rows(), ErrorKind::kDimensionMismatch,
            "GatherRows index out of range");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(indices[i]);
  }
  Var in[] = {a};
  return g.AddNode(std::move(out), in, [&g, a, idx = std::move(indices)](const Matrix &d) {
    for (std::size_t i = 0; i < idx.size(); ++i)
      g.AccumulateGradBlock(a, idx[i], 0, d.row(static_cast<Eigen::Index>(i)));
  });
}

Var ReverseRows(Var a) {
  Graph &g = G(a);
  Var in[] = {a};
  return g.AddNode(a.value().colwise().reverse(), in, [&g, a](const Matrix &d) {
    g.AccumulateGrad(a, d.colwise().reverse());
  });
}

Var SumAll(Var a) {
  Graph &g = G(a);
  Var in[] = {a};
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return g.AddNode(std::move(out), in, [&g, a](const Matrix &d) {
    g.AccumulateGrad(a, Matrix::Constant(a.rows(), a.cols(), d(0, 0)));
  });
}

Matrix Softmax(const Matrix &logits) {
  Matrix z = logits.array() - logits.maxCoeff();
  z = z.array().exp().matrix();
  return z / z.sum();
}

double SoftmaxXentValue(const Matrix &logits, int label) {
  Require(label >= 0 && label < logits.size(), ErrorKind::kInvalidArgument,
          "label out of range");
  double mx = logits.maxCoeff();
  return mx + std::log((logits.array() - mx).exp().sum()) - logits.data()[label];
}

Var SoftmaxColumn(Var a) {
  Graph &g = G(a);
  Require(a.cols() == 1 && a.rows() >= 1, ErrorKind::kDimensionMismatch,
          "SoftmaxColumn expects a T x 1 column");
  Matrix y = Softmax(a.value());
  Matrix yc = y;
  Var in[] = {a};
  return g.AddNode(std::move(y), in, [&g, a, yc](const Matrix &d) {
    double dot = d.cwiseProduct(yc).sum();
    g.AccumulateGrad(a, yc.cwiseProduct((d.array() - dot).matrix()));
  });
}

Var SoftmaxXent(Var logits, int label) {
  Graph &g = G(logits);
  Require(logits.rows() == 1, ErrorKind::kDimensionMismatch,
          "SoftmaxXent expects a 1 x L row");
  Require(label >= 0 && label < logits.cols(), ErrorKind::kInvalidArgument,
          "label " + std::to_string(label) + " out of range");
  Matrix out(1, 1);
  out(0, 0) = SoftmaxXentValue(logits.value(), label);
  Var in[] = {logits};
  return g.AddNode(std::move(out), in, [&g, logits, label](const Matrix &d) {
    Matrix p = Softmax(logits.value());
    p(0, label) -= 1.0;
    g.AccumulateGrad(logits, d(0, 0) * p);
  });
}

Var Splice(Var a, std::span<const int> offsets) {
  Graph &g = G(a);
  Require(!offsets.empty(), ErrorKind::kInvalidArgument, "Splice needs offsets");
  int lo = *std::min_element(offsets.begin(), offsets.end());
  int hi = *std::max_element(offsets.begin(), offsets.end());
  Eigen::Index span = hi - lo + 1;
  Eigen::Index t_out = a.rows() - span + 1;
  Require(t_out >= 1, ErrorKind::kInvalidArgument,
          "sequence of " + std::to_string(a.rows()) +
              " frames is shorter than the context span " + std::to_string(span));
  const Eigen::Index k = a.cols();
  std::vector<int> offs(offsets.begin(), offsets.end());
  Matrix out(t_out, k * static_cast<Eigen::Index>(offs.size()));
  for (std::size_t j = 0; j < offs.size(); ++j)
    out.middleCols(static_cast<Eigen::Index>(j) * k, k) =
        a.value().middleRows(offs[j] - lo, t_out);
  Var in[] = {a};
  return g.AddNode(std::move(out), in, [&g, a, offs, lo, t_out, k](const Matrix &d) {
    for (std::size_t j = 0; j < offs.size(); ++j)
      g.AccumulateGradBlock(a, offs[j] - lo, 0,
                            d.middleCols(static_cast<Eigen::Index>(j) * k, k));
  });
}

Var StatsPool(Var a) {
  Graph &g = G(a);
  Require(a.rows() >= 1, ErrorKind::kInvalidArgument, "StatsPool of empty sequence");
  const Eigen::Index t = a.rows(), k = a.cols();
  RowVector mean = a.value().colwise().mean();
  Matrix centered = a.value().rowwise() - mean;
  RowVector var = centered.array().square().colwise().sum() / static_cast<double>(t);
  constexpr double kFloor = 1e-10;
  RowVector sd = var.cwiseMax(kFloor).cwiseSqrt();
  Matrix out(1, 2 * k);
  out.leftCols(k) = mean;
  out.rightCols(k) = sd;
  Var in[] = {a};
  return g.AddNode(std::move(out), in, [&g, a, centered, var, sd, t, k](const Matrix &d) {
    RowVector dmean = d.leftCols(k);
    RowVector dsd = d.rightCols(k);
    RowVector coef(k);
    for (Eigen::Index j = 0; j < k; ++j)
      coef(j) = var(j) > kFloor ? dsd(j) / (static_cast<double>(t) * sd(j)) : 0.0;
    Matrix grad = centered.array().rowwise() * coef.array();
    grad.rowwise() += dmean / static_cast<double>(t);
    g.AccumulateGrad(a, grad);
  });
}

}  // namespace relid::nn
