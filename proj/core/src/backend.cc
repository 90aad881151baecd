// core/src/backend.cc

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

#include "relid/backend.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "relid/binary-io.h"

namespace relid {

Vector LinearTransform::Apply(const Vector &v) const {
  Require(v.size() == InDim(), ErrorKind::kDimensionMismatch,
          "transform input dimension mismatch");
  return matrix * v;
}

LinearTransform LinearTransform::Identity(int dim) {
  return LinearTransform{Matrix::Identity(dim, dim)};
}

namespace {
constexpr std::string_view kTransformMagic = "RLTX";
constexpr std::string_view kSvmMagic = "RSVM";
}  // namespace

void LinearTransform::Write(std::ostream &os) const {
  io::WriteMagic(os, kTransformMagic);
  io::WriteU32(os, static_cast<std::uint32_t>(OutDim()));
  io::WriteU32(os, static_cast<std::uint32_t>(InDim()));
  io::WriteF32Matrix(os, matrix);
}

LinearTransform LinearTransform::Read(std::istream &is) {
  io::ExpectMagic(is, kTransformMagic);
  std::uint32_t out = io::ReadU32(is), in = io::ReadU32(is);
  io::CheckDims(out, in, "transform");
  return LinearTransform{io::ReadF32Matrix(is, out, in)};
}

void LinearTransform::Write(const std::string &path) const {
  auto os = io::OpenOut(path);
  Write(os);
}

LinearTransform LinearTransform::Read(const std::string &path) {
  auto is = io::OpenIn(path);
  return Read(is);
}

Vector LengthNormalize(const Vector &v) {
  double norm = v.norm();
  if (norm == 0.0) return v;
  return v / norm;
}

int CountClasses(const std::vector<int> &labels) {
  int l = 0;
  for (int y : labels) {
    Require(y >= 0, ErrorKind::kInvalidArgument, "negative class label");
    l = std::max(l, y + 1);
  }
  return l;
}

namespace {

void CheckLabelled(const std::vector<Vector> &vectors, const std::vector<int> &labels) {
  Require(!vectors.empty(), ErrorKind::kInvalidArgument, "no vectors");
  Require(vectors.size() == labels.size(), ErrorKind::kDimensionMismatch,
          "vector and label counts differ");
  for (const auto &v : vectors) {
    Require(v.size() == vectors.front().size(), ErrorKind::kDimensionMismatch,
            "vectors differ in dimension");
    Require(v.allFinite(), ErrorKind::kNumerical, "non-finite vector");
  }
}

struct ClassStats {
  std::vector<int> counts;
  std::vector<Vector> means;
  Vector global_mean;
};

ClassStats ComputeClassStats(const std::vector<Vector> &vectors,
                             const std::vector<int> &labels) {
  const int l = CountClasses(labels);
  const Eigen::Index dim = vectors.front().size();
  ClassStats s;
  s.counts.assign(l, 0);
  s.means.assign(l, Vector::Zero(dim));
  s.global_mean = Vector::Zero(dim);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    s.counts[labels[i]]++;
    s.means[labels[i]] += vectors[i];
    s.global_mean += vectors[i];
  }
  for (int k = 0; k < l; ++k)
    if (s.counts[k] > 0) s.means[k] /= s.counts[k];
  s.global_mean /= static_cast<double>(vectors.size());
  return s;
}

}  // namespace

Matrix WithinClassCovariance(const std::vector<Vector> &vectors,
                             const std::vector<int> &labels) {
  CheckLabelled(vectors, labels);
  ClassStats cs = ComputeClassStats(vectors, labels);
  const Eigen::Index dim = vectors.front().size();
  const int l = static_cast<int>(cs.counts.size());
  std::vector<Matrix> covs(l, Matrix::Zero(dim, dim));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    Vector c = vectors[i] - cs.means[labels[i]];
    covs[labels[i]] += c * c.transpose();
  }
  Matrix w = Matrix::Zero(dim, dim);
  int present = 0;
  for (int k = 0; k < l; ++k) {
    if (cs.counts[k] == 0) continue;
    w += covs[k] / cs.counts[k];
    ++present;
  }
  return w / present;
}

LinearTransform FitWccn(const std::vector<Vector> &vectors,
                        const std::vector<int> &labels) {
  CheckLabelled(vectors, labels);
  ClassStats cs = ComputeClassStats(vectors, labels);
  int classes = 0;
  for (int c : cs.counts) {
    if (c == 0) continue;
    Require(c >= 2, ErrorKind::kInvalidArgument,
            "WCCN needs at least 2 vectors per class");
    ++classes;
  }
  Require(classes >= 2, ErrorKind::kInvalidArgument, "WCCN needs at least 2 classes");
  Matrix w = WithinClassCovariance(vectors, labels);
  const Eigen::Index dim = w.rows();
  Eigen::LDLT<Matrix> check(w);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(w, Eigen::EigenvaluesOnly);
  double max_eig = eig.eigenvalues().maxCoeff();
  if (check.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 1e-12 * max_eig)
    w.diagonal().array() += 1e-6 * w.trace() / static_cast<double>(dim) +
                            std::numeric_limits<double>::min();
  Matrix winv = w.llt().solve(Matrix::Identity(dim, dim));
  winv = 0.5 * (winv + winv.transpose());
  Eigen::LLT<Matrix> llt(winv);
  Require(llt.info() == Eigen::Success, ErrorKind::kNumerical,
          "WCCN: inverse within-class covariance is not positive definite");
  return LinearTransform{Matrix(llt.matrixL()).transpose()};
}

LinearTransform FitLda(const std::vector<Vector> &vectors,
                       const std::vector<int> &labels, int out_dim,
                       std::vector<double> *eigenvalues) {
  CheckLabelled(vectors, labels);
  ClassStats cs = ComputeClassStats(vectors, labels);
  const int l = static_cast<int>(cs.counts.size());
  const Eigen::Index dim = vectors.front().size();
  Require(out_dim >= 1 && out_dim <= l - 1 && out_dim <= dim,
          ErrorKind::kInvalidArgument,
          "LDA output dimension must be in [1, L-1] (L=" + std::to_string(l) + ")");
  Matrix sw = Matrix::Zero(dim, dim), sb = Matrix::Zero(dim, dim);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    Vector c = vectors[i] - cs.means[labels[i]];
    sw += c * c.transpose();
  }
  for (int k = 0; k < l; ++k) {
    if (cs.counts[k] == 0) continue;
    Vector c = cs.means[k] - cs.global_mean;
    sb += cs.counts[k] * c * c.transpose();
  }
  double n = static_cast<double>(vectors.size());
  sw /= n;
  sb /= n;
  sw.diagonal().array() += 1e-9 * std::max(sw.trace() / dim, 1e-300);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(sb, sw);
  Require(ges.info() == Eigen::Success, ErrorKind::kNumerical,
          "LDA eigenproblem failed");
  // Eigen returns ascending eigenvalues.
  const Vector &evals = ges.eigenvalues();
  Require(evals(dim - 1) > 1e-10, ErrorKind::kNumerical,
          "LDA: between-class scatter is zero (identical class means)");
  Matrix out(out_dim, dim);
  if (eigenvalues) eigenvalues->clear();
  for (int k = 0; k < out_dim; ++k) {
    Vector v = ges.eigenvectors().col(dim - 1 - k);
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    out.row(k) = v.transpose();
    if (eigenvalues) eigenvalues->push_back(evals(dim - 1 - k));
  }
  return LinearTransform{std::move(out)};
}

Vector LinearClassifier::Classify(const Vector &v) const {
  Require(v.size() == Dim(), ErrorKind::kDimensionMismatch,
          "classifier input dimension mismatch");
  return weights * v + bias;
}

Vector LinearClassifier::Posteriors(const Vector &v) const {
  Vector z = score_scale * Classify(v);
  z.array() -= z.maxCoeff();
  z = z.array().exp().matrix();
  return z / z.sum();
}

void LinearClassifier::Write(std::ostream &os) const {
  io::WriteMagic(os, kSvmMagic);
  io::WriteU32(os, static_cast<std::uint32_t>(NumClasses()));
  io::WriteU32(os, static_cast<std::uint32_t>(Dim()));
  Matrix packed(NumClasses(), Dim() + 1);
  packed.leftCols(Dim()) = weights;
  packed.col(Dim()) = bias;
  io::WriteF32Matrix(os, packed);
  io::WriteF32(os, static_cast<float>(score_scale));
}

LinearClassifier LinearClassifier::Read(std::istream &is) {
  io::ExpectMagic(is, kSvmMagic);
  std::uint32_t l = io::ReadU32(is), dim = io::ReadU32(is);
  io::CheckDims(l, std::uint64_t{dim} + 1, "classifier");
  Matrix packed = io::ReadF32Matrix(is, l, std::size_t{dim} + 1);
  LinearClassifier clf;
  clf.weights = packed.leftCols(dim);
  clf.bias = packed.col(dim);
  clf.score_scale = io::ReadF32(is);
  return clf;
}

void LinearClassifier::Write(const std::string &path) const {
  auto os = io::OpenOut(path);
  Write(os);
}

LinearClassifier LinearClassifier::Read(const std::string &path) {
  auto is = io::OpenIn(path);
  return Read(is);
}

LinearClassifier TrainLinearSvm(const std::vector<Vector> &vectors,
                                const std::vector<int> &labels,
                                const SvmOptions &options) {
  CheckLabelled(vectors, labels);
  Require(options.c_reg > 0 && options.epochs >= 1, ErrorKind::kInvalidArgument,
          "SVM needs c_reg > 0 and epochs >= 1");
  const int l = CountClasses(labels);
  Require(l >= 2, ErrorKind::kInvalidArgument, "SVM needs at least 2 classes");
  std::vector<int> counts(l, 0);
  for (int y : labels) counts[y]++;
  for (int k = 0; k < l; ++k)
    Require(counts[k] > 0, ErrorKind::kInvalidArgument,
            "SVM class " + std::to_string(k) + " has no examples");

  const std::size_t n = vectors.size();
  const Eigen::Index dim = vectors.front().size();
  const double lambda = 1.0 / (options.c_reg * static_cast<double>(n));
  Matrix w = Matrix::Zero(l, dim + 1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(options.seed);
  Vector x(dim + 1);
  long step = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      ++step;
      double eta = 1.0 / (lambda * static_cast<double>(step));
      x.head(dim) = vectors[i];
      x(dim) = 1.0;
      for (int k = 0; k < l; ++k) {
        double y = labels[i] == k ? 1.0 : -1.0;
        double margin = y * w.row(k).dot(x);
        w.row(k) *= (1.0 - eta * lambda);
        if (margin < 1.0) w.row(k) += eta * y * x.transpose();
      }
    }
  }
  LinearClassifier clf;
  clf.weights = w.leftCols(dim);
  clf.bias = w.col(dim);
  return clf;
}

double FitScoreScale(const LinearClassifier &clf, const std::vector<Vector> &vectors,
                     const std::vector<int> &labels) {
  CheckLabelled(vectors, labels);
  std::vector<Vector> margins;
  margins.reserve(vectors.size());
  for (const auto &v : vectors) margins.push_back(clf.Classify(v));
  auto loglike = [&](double s) {
    double total = 0.0;
    for (std::size_t i = 0; i < margins.size(); ++i) {
      Vector z = s * margins[i];
      double mx = z.maxCoeff();
      total += z(labels[i]) - mx - std::log((z.array() - mx).exp().sum());
    }
    return total;
  };
  double lo = 0.0, hi = 100.0;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
  double fa = loglike(a), fb = loglike(b);
  for (int it = 0; it < 80; ++it) {
    if (fa < fb) {
      lo = a;
      a = b;
      fa = fb;
      b = lo + phi * (hi - lo);
      fb = loglike(b);
    } else {
      hi = b;
      b = a;
      fb = fa;
      a = hi - phi * (hi - lo);
      fa = loglike(a);
    }
  }
  return 0.5 * (lo + hi);
}

Vector Backend::Project(const Vector &v) const {
  return lda.Apply(LengthNormalize(wccn.Apply(v)));
}

Vector Backend::Scores(const Vector &v) const { return svm.Classify(Project(v)); }

Vector Backend::Posteriors(const Vector &v) const { return svm.Posteriors(Project(v)); }

Backend TrainBackend(const std::vector<Vector> &vectors, const std::vector<int> &labels,
                     const BackendOptions &options) {
  CheckLabelled(vectors, labels);
  const int l = CountClasses(labels);
  Backend be;
  be.wccn = FitWccn(vectors, labels);
  std::vector<Vector> normed;
  normed.reserve(vectors.size());
  for (const auto &v : vectors) normed.push_back(LengthNormalize(be.wccn.Apply(v)));
  int lda_dim = options.lda_dim > 0 ? options.lda_dim : l - 1;
  be.lda = FitLda(normed, labels, lda_dim);
  std::vector<Vector> projected;
  projected.reserve(vectors.size());
  for (const auto &v : normed) projected.push_back(be.lda.Apply(v));
  be.svm = TrainLinearSvm(projected, labels, options.svm);
  be.svm.score_scale = FitScoreScale(be.svm, projected, labels);
  return be;
}

}  // namespace relid
