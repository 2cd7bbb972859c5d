#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "edgejudge/classifier.hpp"
#include "edgejudge/preprocess.hpp"
#include "edgejudge/types.hpp"

namespace edgejudge::eval {

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Positives = edge errors.
struct ConfusionMatrix {
  long tp = 0, tn = 0, fp = 0, fn = 0;

  long total() const { return tp + tn + fp + fn; }
};

ConfusionMatrix confusion(const std::vector<int>& predictions,
                          const std::vector<int>& labels);

/// Standard accuracy (TP+TN)/total. paper_printed_accuracy is the formula
/// as printed in the source table context, (TP+FP)/total, kept selectable
/// for auditing only.
double accuracy(const ConfusionMatrix& cm);
double paper_printed_accuracy(const ConfusionMatrix& cm);

/// F = 2TP/(2TP+FP+FN); 1.0 when TP=FP=FN=0 (an all-negative fold judged
/// perfectly), 0.0 when TP=0 but FP+FN>0.
double f_measure(const ConfusionMatrix& cm);

struct FoldResult {
  std::string skater_id;
  bool ok = false;
  std::string error;  // set when the fold failed (e.g. one-class training)
  double accuracy = 0;
  double f_measure = 0;
  ConfusionMatrix cm;
  std::vector<std::string> train_ids;  // audit trail for fold purity
};

struct CVReport {
  preprocess::FeatureConfig config;
  std::vector<FoldResult> folds;
  // Mean and sample standard deviation over successful folds.
  double mean_accuracy = 0, std_accuracy = 0;
  double mean_f = 0, std_f = 0;
};

/// Leave-one-skater-out cross-validation: each skater's samples form one
/// test fold, the model trains on everyone else.
CVReport loso_cv(const Dataset& dataset, preprocess::FeatureConfig config,
                 const classifier::Hyperparams& hyper = {},
                 preprocess::ZOffsetMode z_mode = preprocess::ZOffsetMode::PerSequence,
                 int jobs = 1);

struct ImportanceEntry {
  std::string group;  // joint name or angle axis
  double importance;  // mean |coefficient| over frames and axes
};

struct ImportanceReport {
  preprocess::FeatureConfig config;
  std::vector<ImportanceEntry> entries;  // sorted descending
};

ImportanceReport feature_importance(const classifier::ModelWeights& model);

struct TrajectoryDistance {
  std::string skater_id;
  int joint = 0;
  double mean = 0;  // over frames, between class-mean trajectories
  double stddev = 0;
};

TrajectoryDistance trajectory_distance(
    const Dataset& dataset, const std::string& skater_id, int joint,
    preprocess::ZOffsetMode z_mode = preprocess::ZOffsetMode::PerSequence);

/// "83.56±13.43%" style.
std::string format_pct(double mean, double stddev);

void write_cv_csv(std::ostream& out, const CVReport& report);
void write_cv_summary_csv(std::ostream& out, const std::vector<CVReport>& reports);
void write_importance_csv(std::ostream& out, const ImportanceReport& report);
void write_trajectory_csv(std::ostream& out,
                          const std::vector<TrajectoryDistance>& rows);

double sample_stddev(const std::vector<double>& values);

}  // namespace edgejudge::eval
