#include <doctest.h>

#include "edgejudge/preprocess.hpp"
#include "edgejudge/synth.hpp"
#include "edgejudge/tracker.hpp"

#include <cmath>
#include <random>

using namespace edgejudge;
using namespace edgejudge::preprocess;

namespace {

PoseSequence random_pose(int frames, double fps, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> value(-3, 3);
  PoseSequence seq;
  seq.fps = fps;
  seq.positions.resize(frames, kPoseDims);
  for (int f = 0; f < frames; ++f)
    for (int c = 0; c < kPoseDims; ++c) seq.positions(f, c) = value(rng);
  return seq;
}

}  // namespace

TEST_CASE("normalize_pose identity on already normalized input") {
  PoseSequence seq;
  seq.fps = 60;
  seq.positions = Matrix::Zero(3, kPoseDims);
  for (int f = 0; f < 3; ++f) {
    seq.positions(f, kJointLeftFoot * 3 + 2) = 0.0;
    seq.positions(f, kJointRightFoot * 3 + 2) = 0.3;
    seq.positions(f, kJointHip * 3 + 2) = 0.9;
  }
  auto out = normalize_pose(seq);
  CHECK(out.positions == seq.positions);
}

TEST_CASE("normalize_pose single-frame arithmetic") {
  PoseSequence seq;
  seq.fps = 60;
  seq.positions = Matrix::Zero(1, kPoseDims);
  seq.set_joint(0, kJointHip, {2, 3, 9});
  seq.set_joint(0, kJointLeftFoot, {2.5, 3.5, 1.0});
  seq.set_joint(0, kJointRightFoot, {1.5, 2.5, 1.2});
  auto out = normalize_pose(seq);
  CHECK(out.joint(0, kJointHip).isApprox(Vector3{0, 0, 8}));
  CHECK(out.joint(0, kJointLeftFoot).isApprox(Vector3{0.5, 0.5, 0.0}));
  CHECK(out.joint(0, kJointRightFoot).z() == doctest::Approx(0.2));
}

TEST_CASE("normalize_pose is idempotent") {
  auto seq = random_pose(20, 60, 1);
  auto once = normalize_pose(seq);
  auto twice = normalize_pose(once);
  CHECK(once.positions.isApprox(twice.positions, 1e-12));
}

TEST_CASE("normalize_pose preserves inter-joint distances per frame") {
  auto seq = random_pose(10, 60, 2);
  auto out = normalize_pose(seq);
  std::mt19937 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    int f = static_cast<int>(rng() % 10);
    int a = static_cast<int>(rng() % kNumJoints);
    int b = static_cast<int>(rng() % kNumJoints);
    double before = (seq.joint(f, a) - seq.joint(f, b)).norm();
    double after = (out.joint(f, a) - out.joint(f, b)).norm();
    CHECK(after == doctest::Approx(before).epsilon(1e-12));
  }
}

TEST_CASE("normalize_pose preserves flight height in per-sequence mode") {
  synth::SynthConfig config;
  auto sample = synth::generate_jump(0, 0, 0, config);
  auto out = normalize_pose(sample.pose);
  double max_foot_z = -1;
  for (int f = 0; f < out.frames(); ++f)
    max_foot_z = std::max(max_foot_z, out.joint(f, kJointLeftFoot).z());
  // during flight the foot rises roughly by the configured flight height
  CHECK(max_foot_z > 0.5 * config.flight_height);

  auto flattened = normalize_pose(sample.pose, ZOffsetMode::PerFrame);
  double max_lower_foot = -1;
  for (int f = 0; f < flattened.frames(); ++f)
    max_lower_foot = std::max(
        max_lower_foot, std::min(flattened.joint(f, kJointLeftFoot).z(),
                                 flattened.joint(f, kJointRightFoot).z()));
  CHECK(max_lower_foot == doctest::Approx(0.0));
}

TEST_CASE("normalized left foot matches the rig's closed-form offset") {
  synth::SynthConfig config;  // noise-free by default
  auto style = synth::style_for(config, 1);
  auto sample = synth::generate_jump(1, 0, 1, config);
  auto out = normalize_pose(sample.pose);
  const double leg = synth::leg_length(style);
  for (int f = 0; f < out.frames(); f += 7) {
    const double t = f / config.fps;
    const double theta =
        synth::lean_deg_at(config, config.lean_error_deg, t) * M_PI / 180.0;
    Vector3 foot = out.joint(f, kJointLeftFoot);
    CHECK(foot.x() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(foot.y() == doctest::Approx(leg * std::sin(theta)).epsilon(1e-9));
  }
}

TEST_CASE("downsample stride rule") {
  auto seq = random_pose(240, 240, 4);
  auto out = downsample(seq, 12);
  CHECK(out.fps == 12);
  REQUIRE(out.frames() == 12);
  for (int i = 0; i < 12; ++i)
    CHECK(out.positions.row(i) == seq.positions.row(i * 20));
}

TEST_CASE("downsample identity at equal rate") {
  auto seq = random_pose(50, 60, 5);
  auto out = downsample(seq, 60);
  CHECK(out.positions == seq.positions);
}

TEST_CASE("downsample rejects non-divisible rates") {
  auto seq = random_pose(10, 60, 6);
  CHECK_THROWS_AS(downsample(seq, 25), ValidationError);
}

TEST_CASE("downsample composes: 240->60->12 equals 240->12") {
  for (unsigned seed = 0; seed < 10; ++seed) {
    auto seq = random_pose(100 + static_cast<int>(seed) * 13, 240, seed);
    auto direct = downsample(seq, 12);
    auto staged = downsample(downsample(seq, 60), 12);
    CHECK(direct.positions == staged.positions);
    CHECK(direct.fps == staged.fps);
  }
}

TEST_CASE("build_features CamPos12 dimensions from a 51-frame 60 fps crop") {
  JumpSample sample;
  sample.sample_id = "s";
  sample.source = SampleSource::Camera;
  sample.pose = random_pose(51, 60, 7);
  auto fv = build_features(sample, FeatureConfig::CamPos12);
  // ceil(51/5) = 11 frames x 51 values
  CHECK(fv.values.size() == 11 * kPoseDims);
  CHECK(fv.values.size() == 561);

  // brute-force index enumeration against the layout
  auto norm = downsample(normalize_pose(sample.pose), 12);
  int idx = 0;
  for (int f = 0; f < norm.frames(); ++f)
    for (int c = 0; c < kPoseDims; ++c, ++idx)
      CHECK(fv.values(idx) == norm.positions(f, c));
}

TEST_CASE("IMU-only config on a camera sample is a source error") {
  JumpSample sample;
  sample.sample_id = "s";
  sample.source = SampleSource::Camera;
  sample.pose = random_pose(51, 60, 8);
  CHECK_THROWS_WITH_AS(build_features(sample, FeatureConfig::ImuAng60),
                       doctest::Contains("source unavailable"), ValidationError);
}

TEST_CASE("combined config length is the sum of its parts") {
  JumpSample sample;
  sample.sample_id = "s";
  sample.source = SampleSource::Imu;
  sample.pose = random_pose(60, 60, 9);
  SkateAngleSequence ang;
  ang.fps = 60;
  ang.angles = Matrix::Random(60, 3);
  sample.angles = ang;

  auto pos = build_features(sample, FeatureConfig::ImuPos60);
  auto angles = build_features(sample, FeatureConfig::ImuAng60);
  auto both = build_features(sample, FeatureConfig::ImuPos60Ang60);
  CHECK(both.values.size() == pos.values.size() + angles.values.size());
  CHECK(both.values.head(pos.values.size()) == pos.values);
  CHECK(both.values.tail(angles.values.size()) == angles.values);
}

TEST_CASE("feature vectors are bit-identical for identical inputs") {
  JumpSample sample;
  sample.sample_id = "s";
  sample.source = SampleSource::Camera;
  sample.pose = random_pose(51, 60, 10);
  auto a = build_features(sample, FeatureConfig::CamPos60);
  auto b = build_features(sample, FeatureConfig::CamPos60);
  CHECK(a.values == b.values);
  CHECK(a.layout == b.layout);
}

TEST_CASE("layout names and groups") {
  FeatureLayout layout;
  layout.parts.push_back({FeaturePart::Kind::Pose, 2, 12});
  layout.parts.push_back({FeaturePart::Kind::Angle, 3, 60});
  CHECK(layout.size() == 2 * kPoseDims + 9);
  CHECK(layout.entry_name(0) == "pos_f0_Hip_x");
  CHECK(layout.entry_name(kPoseDims) == "pos_f1_Hip_x");
  CHECK(layout.group_of(kJointLeftFoot * 3 + 1) == "LFoot");
  CHECK(layout.entry_name(2 * kPoseDims) == "ang_f0_roll");
  CHECK(layout.group_of(2 * kPoseDims + 4) == "ang_pitch");
}
