#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "h2v/classes.hpp"

namespace h2v {

struct Prediction {
  int64_t uid = 0;
  std::vector<float> raw;                        // kNumClasses scores in [0,1]
  std::optional<std::vector<float>> calibrated;  // filled by calibrate_all
  ClassVector truth;
  std::optional<std::string> lang;
};

struct PredictionSet {
  std::vector<Prediction> items;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  size_t positives = 0;
  size_t negatives = 0;
  // No predicted positives: precision is reported as 0 with this flag
  // so macro averages stay defined.
  bool precision_undefined = false;
};

struct MacroMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
};

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct CalibrationBin {
  double lo = 0.0, hi = 0.0;
  std::optional<double> mean_score;         // absent when the bin is empty
  std::optional<double> positive_fraction;  // absent when the bin is empty
  size_t count = 0;
};

struct EvalReport {
  std::string protocol;  // "balanced" or "unbalanced"
  uint64_t seed = 0;
  std::vector<std::optional<ClassMetrics>> per_class;  // absent: no positives
  MacroMetrics macro;
  std::vector<std::vector<PrPoint>> pr_curves;              // per class
  std::vector<std::vector<CalibrationBin>> calibration;     // per class
  std::map<std::string, MacroMetrics> per_language;
  std::vector<std::string> warnings;
};

// ---- operations ----

// Prior adjustment for classifiers trained on a balanced distribution:
// s / (s + p (1 - s)). Identity at p = 1, fixed points at 0 and 1,
// strictly increasing in s. p <= 0 raises ErrorKind::Validation.
double calibrate(double s, double p_k);

// Applies calibrate per class to every sample.
PredictionSet calibrate_all(const PredictionSet& preds,
                            const ClassPriors& priors);

// Threshold 0.5, inclusive.
ClassVector binary_decisions(const std::vector<float>& calibrated_scores);

// Per-class evaluation with negatives subsampled (seeded) to match the
// positive count; metrics on raw scores at threshold 0.5.
EvalReport balanced_eval(const PredictionSet& preds, uint64_t seed);

// Full-distribution evaluation on calibrated scores, with per-class
// precision-recall curves swept over the unique score values.
EvalReport unbalanced_eval(const PredictionSet& preds,
                           const ClassPriors& priors);

// Equal-width bins over [0,1] (upper bin right-closed). Uses calibrated
// scores when use_calibrated and they are present, else raw.
std::vector<std::vector<CalibrationBin>> calibration_bins(
    const PredictionSet& preds, size_t n_bins, bool use_calibrated = true);

// Balanced macro metrics per language, for groups of at least
// min_samples samples.
std::map<std::string, MacroMetrics> per_language_report(
    const PredictionSet& preds, size_t min_samples, uint64_t seed = 0);

// ---- report serialization ----

std::string report_to_json(const EvalReport& report);
void write_report_csv(std::ostream& out, const EvalReport& report);
void write_pr_csv(std::ostream& out, const EvalReport& report);
void write_calibration_csv(std::ostream& out,
                           const std::vector<std::vector<CalibrationBin>>& bins);

}  // namespace h2v
