// core/include/relid/backend.h

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

#ifndef RELID_BACKEND_H_
#define RELID_BACKEND_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "relid/common.h"

namespace relid {

// y = A x with A out x in.
struct LinearTransform {
  Matrix matrix;

  int InDim() const { return static_cast<int>(matrix.cols()); }
  int OutDim() const { return static_cast<int>(matrix.rows()); }
  Vector Apply(const Vector &v) const;
  static LinearTransform Identity(int dim);

  void Write(std::ostream &os) const;
  static LinearTransform Read(std::istream &is);
  void Write(const std::string &path) const;
  static LinearTransform Read(const std::string &path);
};

// v / |v|_2; the zero vector maps to itself.
Vector LengthNormalize(const Vector &v);

// Average within-class covariance (each class's ML covariance, averaged
// over classes).
Matrix WithinClassCovariance(const std::vector<Vector> &vectors,
                             const std::vector<int> &labels);

// Returns B' where B B' = W^-1 (B lower-triangular Cholesky factor of W^-1),
// so the transformed within-class covariance is the identity. W is
// regularized with 1e-6 tr(W)/dim I only when it is not positive definite.
// Requires >= 2 classes with >= 2 vectors each.
LinearTransform FitWccn(const std::vector<Vector> &vectors,
                        const std::vector<int> &labels);

// Rows are generalized eigenvectors of (S_b, S_w), ordered by decreasing
// eigenvalue, with the largest-magnitude entry of each row positive.
// out_dim <= L - 1. Fails when the between-class scatter is (numerically)
// zero. Eigenvalues of the kept rows go to *eigenvalues when given.
LinearTransform FitLda(const std::vector<Vector> &vectors,
                       const std::vector<int> &labels, int out_dim,
                       std::vector<double> *eigenvalues = nullptr);

// One-vs-rest linear classifier; row l of weights with bias(l) scores
// language l.
struct LinearClassifier {
  Matrix weights;  // L x dim
  Vector bias;     // L
  // Temperature applied to margins before the softmax in Posteriors.
  double score_scale = 1.0;

  int NumClasses() const { return static_cast<int>(weights.rows()); }
  int Dim() const { return static_cast<int>(weights.cols()); }
  // Raw margins w_l . v + b_l.
  Vector Classify(const Vector &v) const;
  // softmax(score_scale * margins).
  Vector Posteriors(const Vector &v) const;

  void Write(std::ostream &os) const;
  static LinearClassifier Read(std::istream &is);
  void Write(const std::string &path) const;
  static LinearClassifier Read(const std::string &path);
};

struct SvmOptions {
  double c_reg = 1.0;
  int epochs = 30;
  std::uint64_t seed = 1;
};

// Hinge loss with L2 regularization lambda = 1 / (c_reg n), optimized by
// Pegasos-style subgradient steps over epoch-shuffled samples. The bias is
// an extra weight on a constant input.
LinearClassifier TrainLinearSvm(const std::vector<Vector> &vectors,
                                const std::vector<int> &labels,
                                const SvmOptions &options);

// Maximum-likelihood temperature s for softmax(s * margins) on labelled
// data (one-dimensional concave problem, golden-section search).
double FitScoreScale(const LinearClassifier &clf, const std::vector<Vector> &vectors,
                     const std::vector<int> &labels);

struct BackendOptions {
  int lda_dim = -1;  // -1: L - 1
  SvmOptions svm;
};

// WCCN -> length normalization -> LDA -> linear SVM.
struct Backend {
  LinearTransform wccn;
  LinearTransform lda;
  LinearClassifier svm;

  Vector Project(const Vector &v) const;
  Vector Scores(const Vector &v) const;
  Vector Posteriors(const Vector &v) const;
};

Backend TrainBackend(const std::vector<Vector> &vectors, const std::vector<int> &labels,
                     const BackendOptions &options);

int CountClasses(const std::vector<int> &labels);

}  // namespace relid

#endif  // RELID_BACKEND_H_
