#include <doctest.h>

#include "edgejudge/eval.hpp"
#include "edgejudge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

using namespace edgejudge;
using namespace edgejudge::eval;

TEST_CASE("confusion counting basics") {
  auto cm = confusion({1, 0, 1}, {1, 0, 1});
  CHECK(cm.tp == 2);
  CHECK(cm.tn == 1);
  CHECK(cm.fp == 0);
  CHECK(cm.fn == 0);

  auto inverted = confusion({0, 1, 0}, {1, 0, 1});
  CHECK(inverted.tp == 0);
  CHECK(inverted.tn == 0);
  CHECK(inverted.fp == 1);
  CHECK(inverted.fn == 2);
}

TEST_CASE("confusion rejects mismatched lengths") {
  CHECK_THROWS_AS(confusion({1, 0}, {1}), EvalError);
}

TEST_CASE("confusion equals brute-force tally on random data") {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> preds(50), labels(50);
    for (int i = 0; i < 50; ++i) {
      preds[i] = static_cast<int>(rng() % 2);
      labels[i] = static_cast<int>(rng() % 2);
    }
    auto cm = confusion(preds, labels);
    long tp = 0, tn = 0, fp = 0, fn = 0;
    for (int i = 0; i < 50; ++i) {
      if (labels[i] == 1 && preds[i] == 1) tp++;
      if (labels[i] == 0 && preds[i] == 0) tn++;
      if (labels[i] == 0 && preds[i] == 1) fp++;
      if (labels[i] == 1 && preds[i] == 0) fn++;
    }
    CHECK(cm.tp == tp);
    CHECK(cm.tn == tn);
    CHECK(cm.fp == fp);
    CHECK(cm.fn == fn);
    CHECK(cm.total() == 50);
  }
}

TEST_CASE("accuracy and F-measure formulas") {
  ConfusionMatrix cm{3, 5, 1, 1};
  CHECK(accuracy(cm) == doctest::Approx(0.8));
  CHECK(f_measure(cm) == doctest::Approx(0.75));
}

TEST_CASE("all-error fold predicted perfectly scores 100/100") {
  ConfusionMatrix cm{29, 0, 0, 0};
  CHECK(accuracy(cm) == 1.0);
  CHECK(f_measure(cm) == 1.0);
}

TEST_CASE("empty-positive conventions") {
  CHECK(f_measure(ConfusionMatrix{0, 4, 0, 0}) == 1.0);
  CHECK(accuracy(ConfusionMatrix{0, 4, 0, 0}) == 1.0);
  CHECK(f_measure(ConfusionMatrix{0, 3, 1, 0}) == 0.0);
  CHECK_THROWS_AS(accuracy(ConfusionMatrix{}), EvalError);
}

TEST_CASE("printed-variant accuracy is the predicted-positive rate") {
  ConfusionMatrix cm{3, 5, 1, 1};
  CHECK(paper_printed_accuracy(cm) == doctest::Approx(0.4));
}

TEST_CASE("metrics stay in range and F=1 iff perfect") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    ConfusionMatrix cm{static_cast<long>(rng() % 10), static_cast<long>(rng() % 10),
                       static_cast<long>(rng() % 10), static_cast<long>(rng() % 10)};
    if (cm.total() == 0) continue;
    double a = accuracy(cm), f = f_measure(cm);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    if (f == 1.0) {
      CHECK(cm.fp == 0);
      CHECK(cm.fn == 0);
    }
  }
}

namespace {

Dataset stub_dataset() {
  // two skaters, constant one-frame poses whose LFoot y encodes the label
  Dataset dataset;
  auto add = [&](const std::string& skater, int idx, int label, double signal) {
    JumpSample s;
    s.sample_id = skater + std::to_string(idx);
    s.skater_id = skater;
    s.source = SampleSource::Camera;
    s.pose.fps = 60;
    s.pose.positions = Matrix::Zero(5, kPoseDims);
    for (int f = 0; f < 5; ++f)
      s.pose.positions(f, kJointLeftFoot * 3 + 1) = signal;
    s.label = label;
    dataset.samples.push_back(std::move(s));
  };
  for (int i = 0; i < 6; ++i) {
    add("p", i, i % 2, i % 2 ? 1.0 : -1.0);
    add("q", i, i % 2, i % 2 ? 1.0 : -1.0);
  }
  dataset.rebuild_index();
  return dataset;
}

}  // namespace

TEST_CASE("two-fold LOSO aggregates the per-fold metrics") {
  auto dataset = stub_dataset();
  auto report = loso_cv(dataset, preprocess::FeatureConfig::CamPos60);
  REQUIRE(report.folds.size() == 2);
  for (const auto& fold : report.folds) {
    REQUIRE(fold.ok);
    CHECK(fold.accuracy == 1.0);
  }
  CHECK(report.mean_accuracy ==
        doctest::Approx((report.folds[0].accuracy + report.folds[1].accuracy) / 2));
  CHECK(report.std_accuracy ==
        doctest::Approx(sample_stddev({report.folds[0].accuracy,
                                       report.folds[1].accuracy})));
}

TEST_CASE("LOSO purity: no test sample ever appears in training") {
  auto dataset = stub_dataset();
  auto report = loso_cv(dataset, preprocess::FeatureConfig::CamPos60);
  for (const auto& fold : report.folds) {
    for (const auto& s : dataset.samples) {
      bool in_train = std::find(fold.train_ids.begin(), fold.train_ids.end(),
                                s.sample_id) != fold.train_ids.end();
      if (s.skater_id == fold.skater_id)
        CHECK_FALSE(in_train);
      else
        CHECK(in_train);
    }
  }
}

TEST_CASE("one-class training partition surfaces as a fold error") {
  // two skaters where removing q leaves p all-error
  Dataset dataset;
  auto add = [&](const std::string& skater, int idx, int label) {
    JumpSample s;
    s.sample_id = skater + std::to_string(idx);
    s.skater_id = skater;
    s.source = SampleSource::Camera;
    s.pose.fps = 60;
    s.pose.positions = Matrix::Constant(3, kPoseDims, label);
    s.label = label;
    dataset.samples.push_back(std::move(s));
  };
  add("p", 0, 1);
  add("p", 1, 1);
  add("q", 0, 1);
  add("q", 1, 0);
  dataset.rebuild_index();
  auto report = loso_cv(dataset, preprocess::FeatureConfig::CamPos60);
  // testing on q trains on p alone, which has one class
  for (const auto& fold : report.folds) {
    if (fold.skater_id == "q") {
      CHECK_FALSE(fold.ok);
      CHECK(fold.error.find("degenerate") != std::string::npos);
    }
  }
}

TEST_CASE("separable synthetic 6-skater dataset classifies at 0.95+") {
  auto dir = std::filesystem::temp_directory_path() / "edgejudge_eval_synth";
  std::filesystem::remove_all(dir);
  synth::SynthConfig config;
  config.jumps_per_skater = 10;
  config.noise_sigma = 0.02;
  config.seed = 3;
  auto dataset = synth::generate_dataset(config, dir, synth::SegmentMode::Analytic);
  auto report = loso_cv(dataset, preprocess::FeatureConfig::CamPos12);
  CHECK(report.mean_accuracy >= 0.95);
}

TEST_CASE("parallel folds match sequential folds") {
  auto dataset = stub_dataset();
  auto sequential = loso_cv(dataset, preprocess::FeatureConfig::CamPos60);
  auto parallel = loso_cv(dataset, preprocess::FeatureConfig::CamPos60, {},
                          preprocess::ZOffsetMode::PerSequence, 4);
  REQUIRE(sequential.folds.size() == parallel.folds.size());
  for (size_t i = 0; i < sequential.folds.size(); ++i) {
    CHECK(sequential.folds[i].skater_id == parallel.folds[i].skater_id);
    CHECK(sequential.folds[i].accuracy == parallel.folds[i].accuracy);
  }
}

TEST_CASE("feature importance with uniform weights") {
  classifier::ModelWeights model;
  model.config = preprocess::FeatureConfig::CamPos60;
  model.layout.parts.push_back({preprocess::FeaturePart::Kind::Pose, 2, 60});
  model.weights = Vector::Constant(2 * kPoseDims, -0.7);
  auto report = feature_importance(model);
  CHECK(report.entries.size() == kNumJoints);
  for (const auto& e : report.entries) CHECK(e.importance == doctest::Approx(0.7));
}

TEST_CASE("importance concentrated on the left foot ranks it first") {
  classifier::ModelWeights model;
  model.config = preprocess::FeatureConfig::CamPos60;
  model.layout.parts.push_back({preprocess::FeaturePart::Kind::Pose, 3, 60});
  model.weights = Vector::Zero(3 * kPoseDims);
  for (int f = 0; f < 3; ++f)
    for (int a = 0; a < 3; ++a)
      model.weights(f * kPoseDims + kJointLeftFoot * 3 + a) = 0.5;
  auto report = feature_importance(model);
  CHECK(report.entries.front().group == "LFoot");
  CHECK(report.entries.front().importance == doctest::Approx(0.5));
  CHECK(report.entries[1].importance == 0.0);
}

TEST_CASE("importance ranking invariant under uniform raw-feature rescaling") {
  auto dir = std::filesystem::temp_directory_path() / "edgejudge_eval_scale";
  std::filesystem::remove_all(dir);
  synth::SynthConfig config;
  config.n_skaters = 2;
  config.jumps_per_skater = 8;
  config.noise_sigma = 0.02;
  config.seed = 19;
  auto dataset = synth::generate_dataset(config, dir, synth::SegmentMode::Analytic);

  auto features =
      preprocess::build_feature_matrix(dataset.samples, preprocess::FeatureConfig::CamPos12);
  auto model_a = classifier::train(features);
  auto scaled = features;
  scaled.rows *= 12.5;
  auto model_b = classifier::train(scaled);

  auto order = [](const ImportanceReport& r) {
    std::vector<std::string> names;
    for (const auto& e : r.entries) names.push_back(e.group);
    return names;
  };
  CHECK(order(feature_importance(model_a)) == order(feature_importance(model_b)));
}

namespace {

Dataset trajectory_dataset(const Vector3& offset) {
  Dataset dataset;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> value(-1, 1);
  Matrix base(8, kPoseDims);
  for (int f = 0; f < 8; ++f)
    for (int c = 0; c < kPoseDims; ++c) base(f, c) = value(rng);
  // keep hip and feet fixed so normalization is a fixed translation
  for (int f = 0; f < 8; ++f) {
    base.block<1, 3>(f, kJointHip * 3).setZero();
    base(f, kJointLeftFoot * 3 + 2) = 0;
    base(f, kJointRightFoot * 3 + 2) = 0.5;
  }

  auto add = [&](const std::string& id, int label, const Matrix& positions) {
    JumpSample s;
    s.sample_id = id;
    s.skater_id = "b";
    s.source = SampleSource::Camera;
    s.pose.fps = 60;
    s.pose.positions = positions;
    s.label = label;
    dataset.samples.push_back(std::move(s));
  };
  Matrix shifted = base;
  for (int f = 0; f < 8; ++f) {
    shifted(f, kJointHip * 3 + 0) += 0;  // hip untouched so offset survives
    shifted.block<1, 3>(f, kJointLeftFoot * 3) += offset.transpose();
  }
  // undo z shift on the left foot so the ground reference stays put
  add("e0", 1, shifted);
  add("c0", 0, base);
  dataset.rebuild_index();
  return dataset;
}

}  // namespace

TEST_CASE("identical mean trajectories give zero distance") {
  auto dataset = trajectory_dataset(Vector3::Zero());
  auto result = trajectory_distance(dataset, "b", kJointLeftFoot);
  CHECK(result.mean == doctest::Approx(0.0));
  CHECK(result.stddev == doctest::Approx(0.0));
}

TEST_CASE("constant x offset gives mean d and zero stddev") {
  auto dataset = trajectory_dataset({0.25, 0, 0});
  auto result = trajectory_distance(dataset, "b", kJointLeftFoot);
  CHECK(result.mean == doctest::Approx(0.25));
  CHECK(result.stddev == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("trajectory distance is symmetric and translation invariant") {
  auto dataset = trajectory_dataset({0.3, -0.1, 0});
  auto base = trajectory_distance(dataset, "b", kJointLeftFoot);

  // swap class labels
  auto swapped = dataset;
  for (auto& s : swapped.samples) s.label = 1 - s.label;
  swapped.rebuild_index();
  auto sym = trajectory_distance(swapped, "b", kJointLeftFoot);
  CHECK(sym.mean == doctest::Approx(base.mean));
  CHECK(sym.stddev == doctest::Approx(base.stddev));

  // rigid x-y translation of every sample
  auto moved = dataset;
  for (auto& s : moved.samples)
    for (int f = 0; f < s.pose.frames(); ++f)
      for (int j = 0; j < kNumJoints; ++j) {
        s.pose.positions(f, j * 3 + 0) += 3.5;
        s.pose.positions(f, j * 3 + 1) -= 1.25;
      }
  auto shifted = trajectory_distance(moved, "b", kJointLeftFoot);
  CHECK(shifted.mean == doctest::Approx(base.mean));
}

TEST_CASE("single-class skater has undefined trajectory distance") {
  auto dataset = trajectory_dataset(Vector3::Zero());
  for (auto& s : dataset.samples) s.label = 1;
  dataset.rebuild_index();
  CHECK_THROWS_AS(trajectory_distance(dataset, "b", kJointLeftFoot), EvalError);
}

TEST_CASE("report formatting mirrors the mean±std percent style") {
  CHECK(format_pct(0.8356, 0.1343) == "83.56±13.43%");
}
