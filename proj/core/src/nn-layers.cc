// core/src/nn-layers.cc

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

#include "relid/nn-layers.h"

#include <algorithm>
#include <cmath>

namespace relid::nn {

void InitUniform(Parameter &p, double bound, Rng &rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index r = 0; r < p.value.rows(); ++r)
    for (Eigen::Index c = 0; c < p.value.cols(); ++c) p.value(r, c) = u(rng);
}

Dense::Dense(ParameterStore &store, const std::string &name, int in, int out,
             Rng &rng, bool zero_init)
    : in_(in), out_(out) {
  Require(in >= 1 && out >= 1, ErrorKind::kInvalidArgument, "bad Dense size " + name);
  w_ = &store.Add(name + ".w", in, out);
  b_ = &store.Add(name + ".b", 1, out);
  if (!zero_init) InitUniform(*w_, 1.0 / std::sqrt(static_cast<double>(in)), rng);
}

Var Dense::Apply(Graph &g, Var x) const {
  Require(x.cols() == in_, ErrorKind::kDimensionMismatch,
          "Dense expects " + std::to_string(in_) + " inputs, got " +
              std::to_string(x.cols()));
  return Add(MatMul(x, g.Param(*w_)), g.Param(*b_));
}

Lstm::Lstm(ParameterStore &store, const std::string &name, int in, int hidden,
           Rng &rng)
    : in_(in), hidden_(hidden) {
  Require(in >= 1 && hidden >= 1, ErrorKind::kInvalidArgument, "bad LSTM size " + name);
  wx_ = &store.Add(name + ".wx", in, 4 * hidden);
  wh_ = &store.Add(name + ".wh", hidden, 4 * hidden);
  b_ = &store.Add(name + ".b", 1, 4 * hidden);
  InitUniform(*wx_, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  InitUniform(*wh_, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  b_->value.middleCols(hidden, hidden).setOnes();
}

namespace {

void StepCell(Var z, int hidden, Var *h, Var *c) {
  Var hc = LstmCell(z, *c);
  *h = SliceCols(hc, 0, hidden);
  *c = SliceCols(hc, hidden, hidden);
}

}  // namespace

void Lstm::Step(Graph &g, Var x, Var *h, Var *c) const {
  Require(x.cols() == in_ && h->cols() == hidden_ && c->cols() == hidden_ &&
              h->rows() == x.rows(),
          ErrorKind::kDimensionMismatch, "LSTM step shape mismatch");
  Var z = Add(Add(MatMul(x, g.Param(*wx_)), MatMul(*h, g.Param(*wh_))), g.Param(*b_));
  StepCell(z, hidden_, h, c);
}

Var Lstm::Unroll(Graph &g, Var xw) const {
  Var wh = g.Param(*wh_);
  Var h = g.Constant(Matrix::Zero(1, hidden_));
  Var c = g.Constant(Matrix::Zero(1, hidden_));
  std::vector<Var> outs;
  outs.reserve(static_cast<std::size_t>(xw.rows()));
  for (Eigen::Index t = 0; t < xw.rows(); ++t) {
    Var z = Add(SliceRows(xw, t, 1), MatMul(h, wh));
    StepCell(z, hidden_, &h, &c);
    outs.push_back(h);
  }
  return ConcatRows(outs);
}

Var Lstm::Run(Graph &g, Var seq) const {
  Require(seq.rows() >= 1, ErrorKind::kInvalidArgument, "LSTM over empty sequence");
  Require(seq.cols() == in_, ErrorKind::kDimensionMismatch, "LSTM input dim mismatch");
  return Unroll(g, Add(MatMul(seq, g.Param(*wx_)), g.Param(*b_)));
}

Gru::Gru(ParameterStore &store, const std::string &name, int in, int hidden, Rng &rng)
    : in_(in), hidden_(hidden) {
  Require(in >= 1 && hidden >= 1, ErrorKind::kInvalidArgument, "bad GRU size " + name);
  wx_ = &store.Add(name + ".wx", in, 3 * hidden);
  wh_ = &store.Add(name + ".wh", hidden, 2 * hidden);
  wn_ = &store.Add(name + ".wn", hidden, hidden);
  b_ = &store.Add(name + ".b", 1, 3 * hidden);
  InitUniform(*wx_, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  InitUniform(*wh_, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  InitUniform(*wn_, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
}

Var Gru::Project(Graph &g, Var x) const {
  Require(x.cols() == in_, ErrorKind::kDimensionMismatch, "GRU input dim mismatch");
  return Add(MatMul(x, g.Param(*wx_)), g.Param(*b_));
}

namespace {

Var GruCell(Var xw, Var h, Var wh, Var wn, int hidden) {
  Var zr = Sigmoid(Add(SliceCols(xw, 0, 2 * hidden), MatMul(h, wh)));
  Var z = SliceCols(zr, 0, hidden);
  Var r = SliceCols(zr, hidden, hidden);
  Var n = Tanh(Add(SliceCols(xw, 2 * hidden, hidden), MatMul(Mul(r, h), wn)));
  return Add(n, Mul(z, Sub(h, n)));
}

}  // namespace

Var Gru::StepProjected(Graph &g, Var xw, Var h) const {
  Require(xw.cols() == 3 * hidden_ && h.cols() == hidden_ && xw.rows() == h.rows(),
          ErrorKind::kDimensionMismatch, "GRU step shape mismatch");
  return GruCell(xw, h, g.Param(*wh_), g.Param(*wn_), hidden_);
}

Var Gru::Step(Graph &g, Var x, Var h) const { return StepProjected(g, Project(g, x), h); }

Var Gru::Run(Graph &g, Var seq) const {
  Require(seq.rows() >= 1, ErrorKind::kInvalidArgument, "GRU over empty sequence");
  Var xw = Project(g, seq);
  Var wh = g.Param(*wh_), wn = g.Param(*wn_);
  Var h = g.Constant(Matrix::Zero(1, hidden_));
  std::vector<Var> outs;
  outs.reserve(static_cast<std::size_t>(seq.rows()));
  for (Eigen::Index t = 0; t < seq.rows(); ++t) {
    h = GruCell(SliceRows(xw, t, 1), h, wh, wn, hidden_);
    outs.push_back(h);
  }
  return ConcatRows(outs);
}

Tdnn::Tdnn(ParameterStore &store, const std::string &name, int in, int out,
           std::vector<int> offsets, Rng &rng)
    : offsets_(std::move(offsets)) {
  Require(!offsets_.empty(), ErrorKind::kInvalidArgument, "TDNN needs offsets");
  dense_ = Dense(store, name, in * static_cast<int>(offsets_.size()), out, rng);
}

int Tdnn::Span() const {
  auto [lo, hi] = std::minmax_element(offsets_.begin(), offsets_.end());
  return *hi - *lo + 1;
}

Var Tdnn::Apply(Graph &g, Var seq) const {
  return Relu(dense_.Apply(g, Splice(seq, offsets_)));
}

Attention::Attention(ParameterStore &store, const std::string &name, int dim, Rng &rng) {
  we_ = &store.Add(name + ".we", dim, dim);
  be_ = &store.Add(name + ".be", 1, dim);
  ue_ = &store.Add(name + ".ue", dim, 1);
  double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  InitUniform(*we_, bound, rng);
  InitUniform(*ue_, bound, rng);
}

AttentionOutput Attention::Apply(Graph &g, Var seq) const {
  Require(seq.rows() >= 1, ErrorKind::kInvalidArgument, "attention over empty sequence");
  Require(seq.cols() == we_->value.rows(), ErrorKind::kDimensionMismatch,
          "attention input dim mismatch");
  Var u = Tanh(Add(MatMul(seq, g.Param(*we_)), g.Param(*be_)));
  Var a = SoftmaxColumn(MatMul(u, g.Param(*ue_)));
  return {MatMul(Transpose(a), seq), a};
}

Adam::Adam(ParameterStore &store, AdamOptions options)
    : store_(&store), options_(options) {
  for (const Parameter *p : store.All()) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::Step() {
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  std::vector<Parameter *> params = store_->All();
  Require(params.size() == m_.size(), ErrorKind::kInvalidArgument,
          "parameter store changed under the optimizer");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter &p = *params[i];
    if (p.grad.size() == 0) continue;
    m_[i] = b1 * m_[i] + (1.0 - b1) * p.grad;
    v_[i] = b2 * v_[i] + (1.0 - b2) * p.grad.cwiseAbs2();
    p.value.array() -= options_.lr * (m_[i].array() / c1) /
                       ((v_[i].array() / c2).sqrt() + options_.eps);
  }
}

double ClipGradNorm(ParameterStore &store, double max_norm) {
  double sq = 0.0;
  for (const Parameter *p : store.All())
    if (p->grad.size() != 0) sq += p->grad.squaredNorm();
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    double s = max_norm / norm;
    for (Parameter *p : store.All())
      if (p->grad.size() != 0) p->grad *= s;
  }
  return norm;
}

}  // namespace relid::nn
