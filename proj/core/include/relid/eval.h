// core/include/relid/eval.h

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

#ifndef RELID_EVAL_H_
#define RELID_EVAL_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "relid/common.h"

namespace relid {

// Per-trial, per-language detection scores (higher = more target-like).
struct ScoreSet {
  Matrix scores;                       // N x L
  std::vector<int> labels;             // N, in [0, L)
  std::vector<std::string> languages;  // L names
  std::vector<std::string> trial_ids;  // N; may be empty

  int NumTrials() const { return static_cast<int>(scores.rows()); }
  int NumLanguages() const { return static_cast<int>(scores.cols()); }
  // N >= 1, labels in range, no NaN scores (infinities are allowed), names
  // and ids sized consistently.
  void Validate() const;
};

// Fraction of trials whose arg-max score (lowest index on ties) is the label.
double Accuracy(const ScoreSet &s);

// Miss and false-alarm rates at every distinct threshold: a trial is
// accepted when its score is above the threshold. Starts at threshold
// -infinity (Pm = 0, Pf = 1) and ends at the largest score (Pm = 1, Pf = 0).
struct DetPoint {
  double threshold;
  double p_miss;
  double p_fa;
};
std::vector<DetPoint> DetCurve(const std::vector<double> &targets,
                               const std::vector<double> &nontargets);

// Equal error rate of the ROC convex hull: the point where the lower hull of
// the (Pf, Pm) operating points crosses Pm = Pf, interpolating linearly
// along the hull segment.
double DetectionEer(const std::vector<double> &targets,
                    const std::vector<double> &nontargets);

struct EerResult {
  double average = 0.0;
  std::vector<double> per_language;
};

// Column l scored with trials labeled l as targets; averaged over languages.
EerResult Eer(const ScoreSet &s);

struct CavgResult {
  double primary = 0.0;         // mean over betas
  std::vector<double> betas;
  std::vector<double> per_beta;
  // p_miss[b][l] at beta b for target language l.
  std::vector<std::vector<double>> p_miss;
};

// C(beta) = 1/N_L sum_T [Pm(T) + sum_{N != T} beta Pf(T, N) / (N_L - 1)]
// with threshold ln(beta); score <= threshold is a miss.
CavgResult Cavg(const ScoreSet &s, const std::vector<double> &betas = {1.0, 9.0});

inline constexpr double kLlrClamp = 30.0;

// Flat-prior detection log-likelihood ratios of a posterior vector:
// log p_l - log((1 - p_l) / (L - 1)), clamped to +-30.
Vector ToLlr(const Vector &posteriors);

struct MetricsReport {
  int num_trials = 0;
  double accuracy = 0.0;
  EerResult eer;
  CavgResult c_avg;
  std::vector<std::string> languages;
};

MetricsReport Evaluate(const ScoreSet &s);
// key=value lines: accuracy, eer, c_avg, c_avg_beta<b>, num_trials.
void WriteReport(const MetricsReport &r, std::ostream &os);
// CSV: language,eer,p_miss_beta<b>...
void WriteLanguageTable(const MetricsReport &r, std::ostream &os);
// CSV: language,threshold,p_miss,p_fa for every operating point.
void WriteDetPoints(const ScoreSet &s, std::ostream &os);

// CSV with header trial_id,label,<lang0>,...; label is the language name.
// Values are written with 17 significant digits so reading them back is
// exact.
void WriteScores(const ScoreSet &s, std::ostream &os);
void WriteScores(const ScoreSet &s, const std::string &path);
ScoreSet ReadScores(std::istream &is);
ScoreSet ReadScores(const std::string &path);

}  // namespace relid

#endif  // RELID_EVAL_H_
