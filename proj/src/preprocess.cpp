#include "edgejudge/preprocess.hpp"

#include "edgejudge/ingest.hpp"

#include <cmath>
#include <ostream>

namespace edgejudge::preprocess {

const std::vector<FeatureConfig>& all_feature_configs() {
  static const std::vector<FeatureConfig> configs = {
      FeatureConfig::CamPos12,      FeatureConfig::CamPos60,
      FeatureConfig::ImuPos12,      FeatureConfig::ImuPos60,
      FeatureConfig::ImuAng12,      FeatureConfig::ImuAng60,
      FeatureConfig::ImuPos12Ang12, FeatureConfig::ImuPos12Ang60,
      FeatureConfig::ImuPos60Ang12, FeatureConfig::ImuPos60Ang60,
  };
  return configs;
}

std::string to_string(FeatureConfig config) {
  switch (config) {
    case FeatureConfig::CamPos12: return "cam-pos-12";
    case FeatureConfig::CamPos60: return "cam-pos-60";
    case FeatureConfig::ImuPos12: return "imu-pos-12";
    case FeatureConfig::ImuPos60: return "imu-pos-60";
    case FeatureConfig::ImuAng12: return "imu-ang-12";
    case FeatureConfig::ImuAng60: return "imu-ang-60";
    case FeatureConfig::ImuPos12Ang12: return "imu-pos12-ang12";
    case FeatureConfig::ImuPos12Ang60: return "imu-pos12-ang60";
    case FeatureConfig::ImuPos60Ang12: return "imu-pos60-ang12";
    case FeatureConfig::ImuPos60Ang60: return "imu-pos60-ang60";
  }
  throw ValidationError("unknown feature config");
}

FeatureConfig feature_config_from_string(const std::string& name) {
  for (auto c : all_feature_configs())
    if (to_string(c) == name) return c;
  throw ValidationError("unknown feature config: " + name);
}

ConfigSpec config_spec(FeatureConfig config) {
  switch (config) {
    case FeatureConfig::CamPos12: return {SampleSource::Camera, 12, 0};
    case FeatureConfig::CamPos60: return {SampleSource::Camera, 60, 0};
    case FeatureConfig::ImuPos12: return {SampleSource::Imu, 12, 0};
    case FeatureConfig::ImuPos60: return {SampleSource::Imu, 60, 0};
    case FeatureConfig::ImuAng12: return {SampleSource::Imu, 0, 12};
    case FeatureConfig::ImuAng60: return {SampleSource::Imu, 0, 60};
    case FeatureConfig::ImuPos12Ang12: return {SampleSource::Imu, 12, 12};
    case FeatureConfig::ImuPos12Ang60: return {SampleSource::Imu, 12, 60};
    case FeatureConfig::ImuPos60Ang12: return {SampleSource::Imu, 60, 12};
    case FeatureConfig::ImuPos60Ang60: return {SampleSource::Imu, 60, 60};
  }
  throw ValidationError("unknown feature config");
}

int FeatureLayout::size() const {
  int total = 0;
  for (const auto& p : parts) total += p.size();
  return total;
}

namespace {

const char* kAngleAxisNames[3] = {"roll", "pitch", "yaw"};

struct EntryLoc {
  const FeaturePart* part;
  int frame;
  int channel;  // joint*3+axis for pose, axis for angles
};

EntryLoc locate(const FeatureLayout& layout, int index) {
  for (const auto& p : layout.parts) {
    if (index < p.size())
      return {&p, index / p.dims(), index % p.dims()};
    index -= p.size();
  }
  throw ValidationError("feature index out of range");
}

}  // namespace

std::string FeatureLayout::entry_name(int index) const {
  auto loc = locate(*this, index);
  if (loc.part->kind == FeaturePart::Kind::Pose) {
    const char* axes = "xyz";
    return "pos_f" + std::to_string(loc.frame) + "_" +
           joint_names()[loc.channel / 3] + "_" + axes[loc.channel % 3];
  }
  return "ang_f" + std::to_string(loc.frame) + "_" + kAngleAxisNames[loc.channel];
}

std::string FeatureLayout::group_of(int index) const {
  auto loc = locate(*this, index);
  if (loc.part->kind == FeaturePart::Kind::Pose)
    return joint_names()[loc.channel / 3];
  return std::string("ang_") + kAngleAxisNames[loc.channel];
}

std::vector<std::string> FeatureLayout::groups() const {
  std::vector<std::string> out;
  for (const auto& p : parts) {
    if (p.kind == FeaturePart::Kind::Pose) {
      for (const auto& j : joint_names()) out.push_back(j);
    } else {
      for (const auto* a : kAngleAxisNames) out.push_back(std::string("ang_") + a);
    }
  }
  return out;
}

PoseSequence normalize_pose(const PoseSequence& seq, ZOffsetMode mode) {
  PoseSequence out = seq;
  const int n = out.frames();

  for (int t = 0; t < n; ++t) {
    const double hx = out.positions(t, kJointHip * 3 + 0);
    const double hy = out.positions(t, kJointHip * 3 + 1);
    for (int j = 0; j < kNumJoints; ++j) {
      out.positions(t, j * 3 + 0) -= hx;
      out.positions(t, j * 3 + 1) -= hy;
    }
  }

  auto lower_foot_z = [&](int t) {
    return std::min(out.positions(t, kJointLeftFoot * 3 + 2),
                    out.positions(t, kJointRightFoot * 3 + 2));
  };
  if (mode == ZOffsetMode::PerSequence) {
    double ground = lower_foot_z(0);
    for (int t = 1; t < n; ++t) ground = std::min(ground, lower_foot_z(t));
    for (int t = 0; t < n; ++t)
      for (int j = 0; j < kNumJoints; ++j) out.positions(t, j * 3 + 2) -= ground;
  } else {
    for (int t = 0; t < n; ++t) {
      const double ground = lower_foot_z(t);
      for (int j = 0; j < kNumJoints; ++j) out.positions(t, j * 3 + 2) -= ground;
    }
  }
  return out;
}

namespace {

Matrix decimate(const Matrix& m, double fps, double target_fps) {
  if (!(target_fps > 0)) throw ValidationError("target fps must be positive");
  const double ratio = fps / target_fps;
  const int k = static_cast<int>(std::lround(ratio));
  if (k < 1 || std::abs(ratio - k) > 1e-9)
    throw ValidationError("fps " + ingest::format_real(fps) +
                          " not divisible by target " +
                          ingest::format_real(target_fps));
  const int n = static_cast<int>(m.rows());
  const int kept = (n + k - 1) / k;
  Matrix out(kept, m.cols());
  for (int i = 0; i < kept; ++i) out.row(i) = m.row(i * k);
  return out;
}

}  // namespace

PoseSequence downsample(const PoseSequence& seq, double target_fps) {
  PoseSequence out;
  out.fps = target_fps;
  out.positions = decimate(seq.positions, seq.fps, target_fps);
  return out;
}

SkateAngleSequence downsample(const SkateAngleSequence& seq, double target_fps) {
  SkateAngleSequence out;
  out.fps = target_fps;
  out.angles = decimate(seq.angles, seq.fps, target_fps);
  return out;
}

FeatureVector build_features(const JumpSample& sample, FeatureConfig config,
                             ZOffsetMode z_mode) {
  const ConfigSpec spec = config_spec(config);
  if (sample.source != spec.source)
    throw ValidationError("source unavailable: config " + to_string(config) +
                          " requires " + edgejudge::to_string(spec.source) +
                          " samples, sample '" + sample.sample_id + "' is " +
                          edgejudge::to_string(sample.source));
  if (spec.angle_fps > 0 && !sample.angles)
    throw ValidationError("source unavailable: config " + to_string(config) +
                          " requires skate angles, sample '" + sample.sample_id +
                          "' has none");

  FeatureVector fv;
  fv.config = config;

  std::vector<Vector> blocks;
  if (spec.pose_fps > 0) {
    PoseSequence pose = downsample(normalize_pose(sample.pose, z_mode), spec.pose_fps);
    FeaturePart part{FeaturePart::Kind::Pose, pose.frames(), pose.fps};
    fv.layout.parts.push_back(part);
    Matrix t = pose.positions.transpose();  // row-major flattening
    blocks.emplace_back(Eigen::Map<const Vector>(t.data(), t.size()));
  }
  if (spec.angle_fps > 0) {
    SkateAngleSequence ang = downsample(*sample.angles, spec.angle_fps);
    FeaturePart part{FeaturePart::Kind::Angle, ang.frames(), ang.fps};
    fv.layout.parts.push_back(part);
    Matrix t = ang.angles.transpose();  // row-major flattening
    blocks.emplace_back(Eigen::Map<const Vector>(t.data(), t.size()));
  }

  fv.values.resize(fv.layout.size());
  int offset = 0;
  for (const auto& b : blocks) {
    fv.values.segment(offset, b.size()) = b;
    offset += static_cast<int>(b.size());
  }
  return fv;
}

FeatureMatrix build_feature_matrix(const std::vector<JumpSample>& samples,
                                   FeatureConfig config, ZOffsetMode z_mode) {
  if (samples.empty()) throw ValidationError("no samples to featurize");
  FeatureMatrix fm;
  fm.config = config;
  fm.labels.resize(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    FeatureVector fv = build_features(samples[i], config, z_mode);
    if (i == 0) {
      fm.layout = fv.layout;
      fm.rows.resize(samples.size(), fv.values.size());
    } else if (!(fv.layout == fm.layout)) {
      throw ValidationError("sample '" + samples[i].sample_id +
                            "' has a different feature layout (unequal crop "
                            "lengths?)");
    }
    fm.rows.row(i) = fv.values.transpose();
    fm.sample_ids.push_back(samples[i].sample_id);
    fm.labels(i) = samples[i].label;
  }
  return fm;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& features) {
  out << "sample_id,label";
  for (int c = 0; c < features.layout.size(); ++c)
    out << ',' << features.layout.entry_name(c);
  out << '\n';
  for (int r = 0; r < features.rows.rows(); ++r) {
    out << features.sample_ids[r] << ',' << features.labels(r);
    for (int c = 0; c < features.rows.cols(); ++c)
      out << ',' << ingest::format_real(features.rows(r, c));
    out << '\n';
  }
}

}  // namespace edgejudge::preprocess
