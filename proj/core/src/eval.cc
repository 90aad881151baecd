// core/src/eval.cc

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

#include "relid/eval.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace relid {

void ScoreSet::Validate() const {
  Require(NumTrials() >= 1 && NumLanguages() >= 2, ErrorKind::kInvalidArgument,
          "score set needs at least one trial and two languages");
  Require(static_cast<int>(labels.size()) == NumTrials(), ErrorKind::kDimensionMismatch,
          "score set has " + std::to_string(labels.size()) + " labels for " +
              std::to_string(NumTrials()) + " trials");
  Require(languages.empty() || static_cast<int>(languages.size()) == NumLanguages(),
          ErrorKind::kDimensionMismatch, "language names do not match score columns");
  Require(trial_ids.empty() || static_cast<int>(trial_ids.size()) == NumTrials(),
          ErrorKind::kDimensionMismatch, "trial ids do not match score rows");
  for (int l : labels)
    Require(l >= 0 && l < NumLanguages(), ErrorKind::kInvalidArgument,
            "label " + std::to_string(l) + " out of range");
  Require(!scores.array().isNaN().any(), ErrorKind::kNumerical, "NaN score");
}

double Accuracy(const ScoreSet &s) {
  s.Validate();
  int correct = 0;
  for (int i = 0; i < s.NumTrials(); ++i) {
    int best = 0;
    for (int l = 1; l < s.NumLanguages(); ++l)
      if (s.scores(i, l) > s.scores(i, best)) best = l;
    correct += best == s.labels[i];
  }
  return static_cast<double>(correct) / s.NumTrials();
}

std::vector<DetPoint> DetCurve(const std::vector<double> &targets,
                               const std::vector<double> &nontargets) {
  Require(!targets.empty() && !nontargets.empty(), ErrorKind::kInvalidArgument,
          "detection curve needs target and non-target trials");
  std::vector<double> t = targets, n = nontargets;
  std::sort(t.begin(), t.end());
  std::sort(n.begin(), n.end());
  std::vector<double> thresholds;
  thresholds.reserve(t.size() + n.size());
  std::merge(t.begin(), t.end(), n.begin(), n.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  const double nt = static_cast<double>(t.size()), nn = static_cast<double>(n.size());
  std::vector<DetPoint> out;
  out.reserve(thresholds.size() + 1);
  out.push_back({-std::numeric_limits<double>::infinity(), 0.0, 1.0});
  std::size_t ti = 0, ni = 0;
  for (double th : thresholds) {
    while (ti < t.size() && t[ti] <= th) ++ti;
    while (ni < n.size() && n[ni] <= th) ++ni;
    out.push_back({th, ti / nt, (nn - static_cast<double>(ni)) / nn});
  }
  return out;
}

double DetectionEer(const std::vector<double> &targets,
                    const std::vector<double> &nontargets) {
  std::vector<DetPoint> det = DetCurve(targets, nontargets);
  struct P { double x, y; };  // x = Pf, y = Pm
  std::vector<P> pts;
  pts.reserve(det.size());
  for (const auto &d : det) pts.push_back({d.p_fa, d.p_miss});
  std::sort(pts.begin(), pts.end(),
            [](const P &a, const P &b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  std::vector<P> hull;
  for (const P &p : pts) {
    while (hull.size() >= 2) {
      const P &o = hull[hull.size() - 2], &a = hull.back();
      double cross = (a.x - o.x) * (p.y - o.y) - (a.y - o.y) * (p.x - o.x);
      if (cross > 0) break;
      hull.pop_back();
    }
    hull.push_back(p);
  }
  // Along the hull (increasing Pf) Pm - Pf decreases from >= 0 to < 0.
  for (std::size_t i = 0; i < hull.size(); ++i) {
    double gi = hull[i].y - hull[i].x;
    if (gi > 0) continue;
    if (i == 0) return hull[0].y;
    const P &a = hull[i - 1], &b = hull[i];
    double ga = a.y - a.x;
    double frac = ga / (ga - gi);
    return a.x + frac * (b.x - a.x);
  }
  Fail(ErrorKind::kNumerical, "ROC hull does not cross the diagonal");
}

namespace {

void SplitColumn(const ScoreSet &s, int l, std::vector<double> *tar, std::vector<double> *non) {
  tar->clear();
  non->clear();
  for (int i = 0; i < s.NumTrials(); ++i)
    (s.labels[i] == l ? tar : non)->push_back(s.scores(i, l));
}

std::string LanguageName(const ScoreSet &s, int l) {
  return s.languages.empty() ? "lang" + std::to_string(l) : s.languages[l];
}

}  // namespace

EerResult Eer(const ScoreSet &s) {
  s.Validate();
  EerResult r;
  std::vector<double> tar, non;
  for (int l = 0; l < s.NumLanguages(); ++l) {
    SplitColumn(s, l, &tar, &non);
    Require(!tar.empty(), ErrorKind::kInvalidArgument,
            "language " + LanguageName(s, l) + " has no target trials");
    Require(!non.empty(), ErrorKind::kInvalidArgument,
            "language " + LanguageName(s, l) + " has no non-target trials");
    r.per_language.push_back(DetectionEer(tar, non));
  }
  double sum = 0.0;
  for (double e : r.per_language) sum += e;
  r.average = sum / static_cast<double>(r.per_language.size());
  return r;
}

CavgResult Cavg(const ScoreSet &s, const std::vector<double> &betas) {
  s.Validate();
  Require(!betas.empty(), ErrorKind::kInvalidArgument, "no beta values");
  const int nl = s.NumLanguages();
  std::vector<int> count(static_cast<std::size_t>(nl), 0);
  for (int l : s.labels) ++count[static_cast<std::size_t>(l)];
  for (int l = 0; l < nl; ++l)
    Require(count[static_cast<std::size_t>(l)] > 0, ErrorKind::kInvalidArgument,
            "language " + LanguageName(s, l) + " has no trials");
  CavgResult r;
  r.betas = betas;
  for (double beta : betas) {
    Require(beta > 0, ErrorKind::kInvalidArgument, "beta must be positive");
    const double th = std::log(beta);
    // accepted(t, n): trials labeled n whose column-t score exceeds th.
    Matrix accepted = Matrix::Zero(nl, nl);
    for (int i = 0; i < s.NumTrials(); ++i)
      for (int t = 0; t < nl; ++t)
        if (s.scores(i, t) > th) accepted(t, s.labels[i]) += 1.0;
    double c = 0.0;
    std::vector<double> pm(static_cast<std::size_t>(nl));
    for (int t = 0; t < nl; ++t) {
      pm[t] = 1.0 - accepted(t, t) / count[t];
      double fa = 0.0;
      for (int n = 0; n < nl; ++n)
        if (n != t) fa += accepted(t, n) / count[n];
      c += pm[t] + beta * fa / (nl - 1);
    }
    r.per_beta.push_back(c / nl);
    r.p_miss.push_back(std::move(pm));
  }
  double sum = 0.0;
  for (double c : r.per_beta) sum += c;
  r.primary = sum / static_cast<double>(r.per_beta.size());
  return r;
}

Vector ToLlr(const Vector &posteriors) {
  const Eigen::Index nl = posteriors.size();
  Require(nl >= 2, ErrorKind::kInvalidArgument, "LLR needs at least two classes");
  Vector out(nl);
  for (Eigen::Index l = 0; l < nl; ++l) {
    // Mean of the other posteriors, accumulated as offsets from one of them
    // so that equal posteriors give exactly zero.
    const Eigen::Index ref = l == 0 ? 1 : 0;
    double offset = 0.0;
    for (Eigen::Index k = 0; k < nl; ++k)
      if (k != l) offset += posteriors(k) - posteriors(ref);
    const double p = posteriors(l);
    const double q = posteriors(ref) + offset / static_cast<double>(nl - 1);
    double v;
    if (p <= 0.0)
      v = -kLlrClamp;
    else if (q <= 0.0)
      v = kLlrClamp;
    else
      v = std::log(p) - std::log(q);
    out(l) = std::clamp(v, -kLlrClamp, kLlrClamp);
  }
  return out;
}

MetricsReport Evaluate(const ScoreSet &s) {
  MetricsReport r;
  r.num_trials = s.NumTrials();
  r.accuracy = Accuracy(s);
  r.eer = Eer(s);
  r.c_avg = Cavg(s);
  for (int l = 0; l < s.NumLanguages(); ++l) r.languages.push_back(LanguageName(s, l));
  return r;
}

namespace {

std::string BetaTag(double beta) {
  std::ostringstream os;
  os << beta;
  return os.str();
}

}  // namespace

void WriteReport(const MetricsReport &r, std::ostream &os) {
  os << std::setprecision(10);
  os << "num_trials=" << r.num_trials << '\n';
  os << "accuracy=" << r.accuracy << '\n';
  os << "eer=" << r.eer.average << '\n';
  os << "c_avg=" << r.c_avg.primary << '\n';
  for (std::size_t b = 0; b < r.c_avg.betas.size(); ++b)
    os << "c_avg_beta" << BetaTag(r.c_avg.betas[b]) << '=' << r.c_avg.per_beta[b] << '\n';
}

void WriteLanguageTable(const MetricsReport &r, std::ostream &os) {
  os << std::setprecision(10) << "language,eer";
  for (double b : r.c_avg.betas) os << ",p_miss_beta" << BetaTag(b);
  os << '\n';
  for (std::size_t l = 0; l < r.languages.size(); ++l) {
    os << r.languages[l] << ',' << r.eer.per_language[l];
    for (const auto &pm : r.c_avg.p_miss) os << ',' << pm[l];
    os << '\n';
  }
}

void WriteDetPoints(const ScoreSet &s, std::ostream &os) {
  s.Validate();
  os << std::setprecision(17) << "language,threshold,p_miss,p_fa\n";
  std::vector<double> tar, non;
  for (int l = 0; l < s.NumLanguages(); ++l) {
    SplitColumn(s, l, &tar, &non);
    if (tar.empty() || non.empty()) continue;
    for (const DetPoint &d : DetCurve(tar, non))
      os << LanguageName(s, l) << ',' << d.threshold << ',' << d.p_miss << ',' << d.p_fa
         << '\n';
  }
}

void WriteScores(const ScoreSet &s, std::ostream &os) {
  s.Validate();
  os << "trial_id,label";
  for (int l = 0; l < s.NumLanguages(); ++l) os << ',' << LanguageName(s, l);
  os << '\n' << std::setprecision(17);
  for (int i = 0; i < s.NumTrials(); ++i) {
    os << (s.trial_ids.empty() ? "trial" + std::to_string(i) : s.trial_ids[i]) << ','
       << LanguageName(s, s.labels[i]);
    for (int l = 0; l < s.NumLanguages(); ++l) os << ',' << s.scores(i, l);
    os << '\n';
  }
}

void WriteScores(const ScoreSet &s, const std::string &path) {
  std::ofstream os(path);
  Require(os.good(), ErrorKind::kIo, "cannot write " + path);
  WriteScores(s, os);
  Require(os.good(), ErrorKind::kIo, "write failed: " + path);
}

namespace {

std::vector<std::string> SplitCsv(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseScore(const std::string &cell) {
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  Require(used == cell.size() && !cell.empty(), ErrorKind::kFormat,
          "bad score value '" + cell + "'");
  return v;
}

}  // namespace

ScoreSet ReadScores(std::istream &is) {
  std::string line;
  Require(static_cast<bool>(std::getline(is, line)), ErrorKind::kFormat, "empty score file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = SplitCsv(line);
  Require(header.size() >= 4 && header[0] == "trial_id" && header[1] == "label",
          ErrorKind::kFormat, "score header must be trial_id,label,<languages>");
  ScoreSet s;
  s.languages.assign(header.begin() + 2, header.end());
  const int nl = static_cast<int>(s.languages.size());
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = SplitCsv(line);
    Require(static_cast<int>(cells.size()) == nl + 2, ErrorKind::kFormat,
            "score row for " + cells[0] + " has the wrong number of columns");
    s.trial_ids.push_back(cells[0]);
    auto it = std::find(s.languages.begin(), s.languages.end(), cells[1]);
    int label;
    if (it != s.languages.end()) {
      label = static_cast<int>(it - s.languages.begin());
    } else {
      std::size_t used = 0;
      try {
        label = std::stoi(cells[1], &used);
      } catch (const std::exception &) {
        used = 0;
        label = -1;
      }
      Require(used == cells[1].size() && label >= 0 && label < nl, ErrorKind::kFormat,
              "unknown label '" + cells[1] + "'");
    }
    s.labels.push_back(label);
    std::vector<double> row;
    for (int l = 0; l < nl; ++l) row.push_back(ParseScore(cells[2 + l]));
    rows.push_back(std::move(row));
  }
  s.scores.resize(static_cast<Eigen::Index>(rows.size()), nl);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int l = 0; l < nl; ++l) s.scores(static_cast<Eigen::Index>(i), l) = rows[i][l];
  s.Validate();
  return s;
}

ScoreSet ReadScores(const std::string &path) {
  std::ifstream is(path);
  Require(is.good(), ErrorKind::kMissingArtifact, "cannot open score file " + path);
  return ReadScores(is);
}

}  // namespace relid
