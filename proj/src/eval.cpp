#include "edgejudge/eval.hpp"

#include "edgejudge/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <thread>

namespace edgejudge::eval {

ConfusionMatrix confusion(const std::vector<int>& predictions,
                          const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    throw EvalError("predictions and labels differ in length");
  ConfusionMatrix cm;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1)
      (predictions[i] == 1 ? cm.tp : cm.fn)++;
    else
      (predictions[i] == 1 ? cm.fp : cm.tn)++;
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw EvalError("empty confusion matrix");
  return static_cast<double>(cm.tp + cm.tn) / cm.total();
}

double paper_printed_accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw EvalError("empty confusion matrix");
  return static_cast<double>(cm.tp + cm.fp) / cm.total();
}

double f_measure(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw EvalError("empty confusion matrix");
  const long denom = 2 * cm.tp + cm.fp + cm.fn;
  if (denom == 0) return 1.0;  // all-negative fold judged perfectly
  return 2.0 * cm.tp / denom;
}

double sample_stddev(const std::vector<double>& values) {
  const size_t n = values.size();
  if (n < 2) return 0.0;
  double mean = 0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1));
}

namespace {

FoldResult run_fold(const Dataset& dataset, const std::string& skater_id,
                    preprocess::FeatureConfig config,
                    const classifier::Hyperparams& hyper,
                    preprocess::ZOffsetMode z_mode) {
  FoldResult fold;
  fold.skater_id = skater_id;

  std::vector<JumpSample> train_samples, test_samples;
  for (const auto& s : dataset.samples)
    (s.skater_id == skater_id ? test_samples : train_samples).push_back(s);

  try {
    auto train_features = preprocess::build_feature_matrix(train_samples, config, z_mode);
    for (const auto& s : train_samples) fold.train_ids.push_back(s.sample_id);
    auto model = classifier::train(train_features, hyper);

    std::vector<int> predictions, labels;
    for (const auto& s : test_samples) {
      auto fv = preprocess::build_features(s, config, z_mode);
      predictions.push_back(classifier::predict(model, fv).label);
      labels.push_back(s.label);
    }
    fold.cm = confusion(predictions, labels);
    fold.accuracy = accuracy(fold.cm);
    fold.f_measure = f_measure(fold.cm);
    fold.ok = true;
  } catch (const std::exception& e) {
    fold.ok = false;
    fold.error = e.what();
  }
  return fold;
}

}  // namespace

CVReport loso_cv(const Dataset& dataset, preprocess::FeatureConfig config,
                 const classifier::Hyperparams& hyper,
                 preprocess::ZOffsetMode z_mode, int jobs) {
  if (dataset.skater_index.size() < 2)
    throw EvalError("leave-one-skater-out needs at least 2 skaters");

  // Surface config/dataset incompatibilities (wrong source, missing angles)
  // as validation errors up front instead of failing every fold.
  const auto spec = preprocess::config_spec(config);
  for (const auto& s : dataset.samples)
    if (s.source != spec.source || (spec.angle_fps > 0 && !s.angles))
      (void)preprocess::build_features(s, config, z_mode);

  CVReport report;
  report.config = config;

  std::vector<std::string> skaters;
  for (const auto& [skater_id, _] : dataset.skater_index)
    skaters.push_back(skater_id);
  report.folds.resize(skaters.size());

  if (jobs <= 1) {
    for (size_t i = 0; i < skaters.size(); ++i)
      report.folds[i] = run_fold(dataset, skaters[i], config, hyper, z_mode);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (size_t i = next.fetch_add(1); i < skaters.size(); i = next.fetch_add(1))
        report.folds[i] = run_fold(dataset, skaters[i], config, hyper, z_mode);
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min<int>(jobs, static_cast<int>(skaters.size())); ++t)
      pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<double> accs, fs;
  for (const auto& fold : report.folds) {
    if (!fold.ok) continue;
    accs.push_back(fold.accuracy);
    fs.push_back(fold.f_measure);
  }
  if (accs.empty()) throw EvalError("every cross-validation fold failed");
  report.mean_accuracy = std::accumulate(accs.begin(), accs.end(), 0.0) / accs.size();
  report.mean_f = std::accumulate(fs.begin(), fs.end(), 0.0) / fs.size();
  report.std_accuracy = sample_stddev(accs);
  report.std_f = sample_stddev(fs);
  return report;
}

ImportanceReport feature_importance(const classifier::ModelWeights& model) {
  ImportanceReport report;
  report.config = model.config;

  std::vector<std::string> groups = model.layout.groups();
  std::vector<double> sums(groups.size(), 0.0);
  std::vector<long> counts(groups.size(), 0);

  auto group_index = [&](const std::string& g) {
    return static_cast<size_t>(
        std::find(groups.begin(), groups.end(), g) - groups.begin());
  };
  for (int i = 0; i < model.weights.size(); ++i) {
    size_t gi = group_index(model.layout.group_of(i));
    sums[gi] += std::abs(model.weights(i));
    counts[gi]++;
  }
  for (size_t gi = 0; gi < groups.size(); ++gi)
    report.entries.push_back({groups[gi], counts[gi] ? sums[gi] / counts[gi] : 0.0});
  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const ImportanceEntry& a, const ImportanceEntry& b) {
                     return a.importance > b.importance;
                   });
  return report;
}

TrajectoryDistance trajectory_distance(const Dataset& dataset,
                                       const std::string& skater_id, int joint,
                                       preprocess::ZOffsetMode z_mode) {
  if (joint < 0 || joint >= kNumJoints) throw EvalError("joint index out of range");

  std::vector<const JumpSample*> error_samples, correct_samples;
  for (const auto& s : dataset.samples) {
    if (s.skater_id != skater_id) continue;
    (s.label == 1 ? error_samples : correct_samples).push_back(&s);
  }
  if (error_samples.empty() || correct_samples.empty())
    throw EvalError("trajectory distance undefined for single-class skater '" +
                    skater_id + "'");

  auto class_mean = [&](const std::vector<const JumpSample*>& group) {
    const int frames = group.front()->pose.frames();
    Matrix mean = Matrix::Zero(frames, 3);
    for (const auto* s : group) {
      if (s->pose.frames() != frames)
        throw EvalError("samples of skater '" + skater_id +
                        "' are not cropped to equal length");
      auto norm = preprocess::normalize_pose(s->pose, z_mode);
      mean += norm.positions.middleCols(joint * 3, 3);
    }
    return Matrix(mean / static_cast<double>(group.size()));
  };

  Matrix mean_error = class_mean(error_samples);
  Matrix mean_correct = class_mean(correct_samples);
  if (mean_error.rows() != mean_correct.rows())
    throw EvalError("classes of skater '" + skater_id + "' differ in length");

  std::vector<double> distances(mean_error.rows());
  for (int t = 0; t < mean_error.rows(); ++t)
    distances[t] = (mean_error.row(t) - mean_correct.row(t)).norm();

  TrajectoryDistance result;
  result.skater_id = skater_id;
  result.joint = joint;
  result.mean = std::accumulate(distances.begin(), distances.end(), 0.0) /
                distances.size();
  result.stddev = sample_stddev(distances);
  return result;
}

std::string format_pct(double mean, double stddev) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f±%.2f%%", mean * 100, stddev * 100);
  return buf;
}

void write_cv_csv(std::ostream& out, const CVReport& report) {
  out << "skater,status,accuracy,f_measure,tp,tn,fp,fn\n";
  for (const auto& fold : report.folds) {
    if (fold.ok) {
      out << fold.skater_id << ",ok," << ingest::format_real(fold.accuracy) << ','
          << ingest::format_real(fold.f_measure) << ',' << fold.cm.tp << ','
          << fold.cm.tn << ',' << fold.cm.fp << ',' << fold.cm.fn << '\n';
    } else {
      out << fold.skater_id << ",error:" << fold.error << ",,,,,,\n";
    }
  }
  out << "aggregate,ok," << ingest::format_real(report.mean_accuracy) << ','
      << ingest::format_real(report.mean_f) << ",,,,\n";
  out << "# accuracy " << format_pct(report.mean_accuracy, report.std_accuracy)
      << "  f_measure " << format_pct(report.mean_f, report.std_f) << '\n';
}

void write_cv_summary_csv(std::ostream& out, const std::vector<CVReport>& reports) {
  out << "config,accuracy,f_measure\n";
  for (const auto& r : reports)
    out << preprocess::to_string(r.config) << ','
        << format_pct(r.mean_accuracy, r.std_accuracy) << ','
        << format_pct(r.mean_f, r.std_f) << '\n';
}

void write_importance_csv(std::ostream& out, const ImportanceReport& report) {
  out << "group,importance\n";
  for (const auto& e : report.entries)
    out << e.group << ',' << ingest::format_real(e.importance) << '\n';
}

void write_trajectory_csv(std::ostream& out,
                          const std::vector<TrajectoryDistance>& rows) {
  out << "skater,joint,mean,stddev\n";
  for (const auto& r : rows)
    out << r.skater_id << ',' << joint_names()[r.joint] << ','
        << ingest::format_real(r.mean) << ',' << ingest::format_real(r.stddev)
        << '\n';
}

}  // namespace edgejudge::eval
