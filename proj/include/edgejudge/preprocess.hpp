#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "edgejudge/types.hpp"

namespace edgejudge::preprocess {

/// The ten input-feature recipes. Cam* use camera pose, Imu* use IMU pose
/// and/or left-skate angles; the number is the target fps of each part.
enum class FeatureConfig {
  CamPos12,
  CamPos60,
  ImuPos12,
  ImuPos60,
  ImuAng12,
  ImuAng60,
  ImuPos12Ang12,
  ImuPos12Ang60,
  ImuPos60Ang12,
  ImuPos60Ang60,
};

const std::vector<FeatureConfig>& all_feature_configs();
std::string to_string(FeatureConfig config);
FeatureConfig feature_config_from_string(const std::string& name);

/// Source/fps requirements of a config. pose_fps or angle_fps is 0 when the
/// config has no such part.
struct ConfigSpec {
  SampleSource source;
  double pose_fps = 0;
  double angle_fps = 0;
};
ConfigSpec config_spec(FeatureConfig config);

struct FeaturePart {
  enum class Kind { Pose, Angle };
  Kind kind;
  int frames;
  double fps;

  int dims() const { return kind == Kind::Pose ? kPoseDims : 3; }
  int size() const { return frames * dims(); }

  bool operator==(const FeaturePart&) const = default;
};

/// Deterministic flat layout: parts in order, each flattened frame-major
/// then joint-major then axis.
struct FeatureLayout {
  std::vector<FeaturePart> parts;

  int size() const;
  /// Per-entry column name, e.g. "pos_f3_LFoot_z" or "ang_f3_roll".
  std::string entry_name(int index) const;
  /// Grouping key for importance: joint name for pose entries, axis name
  /// ("ang_roll", ...) for angle entries.
  std::string group_of(int index) const;
  std::vector<std::string> groups() const;

  bool operator==(const FeatureLayout&) const = default;
};

struct FeatureVector {
  FeatureConfig config;
  FeatureLayout layout;
  Vector values;
};

enum class ZOffsetMode { PerSequence, PerFrame };

/// Hip x-y to zero per frame; z shifted so the ground (the lower of the two
/// feet, minimized over frames in PerSequence mode) sits at zero. PerFrame
/// zeroes the lower foot in each frame instead, which flattens flight
/// height.
PoseSequence normalize_pose(const PoseSequence& seq,
                            ZOffsetMode mode = ZOffsetMode::PerSequence);

/// Stride decimation keeping frames 0, k, 2k, ... with k = fps/target_fps.
/// Requires an integer rate ratio.
PoseSequence downsample(const PoseSequence& seq, double target_fps);
SkateAngleSequence downsample(const SkateAngleSequence& seq, double target_fps);

FeatureVector build_features(const JumpSample& sample, FeatureConfig config,
                             ZOffsetMode z_mode = ZOffsetMode::PerSequence);

/// Stacks per-sample feature vectors into rows; all samples must share the
/// config's layout (equal cropped lengths).
struct FeatureMatrix {
  FeatureConfig config;
  FeatureLayout layout;
  Matrix rows;                // n x d
  std::vector<std::string> sample_ids;
  Eigen::VectorXi labels;
};
FeatureMatrix build_feature_matrix(const std::vector<JumpSample>& samples,
                                   FeatureConfig config,
                                   ZOffsetMode z_mode = ZOffsetMode::PerSequence);

void write_feature_csv(std::ostream& out, const FeatureMatrix& features);

}  // namespace edgejudge::preprocess
