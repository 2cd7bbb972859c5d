#pragma once

#include <Eigen/Dense>

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace edgejudge {

using Scalar = double;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Vector3 = Eigen::Vector3d;

/// Thrown on malformed input files (bad syntax, wrong field count).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when parsed data violates a domain invariant.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown on dataset/manifest level problems (missing files, duplicate ids).
struct ManifestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kNumJoints = 17;
inline constexpr int kPoseDims = kNumJoints * 3;

/// Human3.6M-style joint ordering. Index constants for the joints the
/// pipeline treats specially.
inline constexpr int kJointHip = 0;
inline constexpr int kJointRightFoot = 3;
inline constexpr int kJointLeftFoot = 6;

const std::array<std::string, kNumJoints>& joint_names();
int joint_index(const std::string& name);

/// One detector output box. Pixel coordinates, image y pointing down.
struct DetectionRecord {
  int frame_idx = 0;
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double confidence = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double center_x() const { return 0.5 * (x1 + x2); }
  double center_y() const { return 0.5 * (y1 + y2); }
  double area() const { return width() * height(); }
};

/// Time-major 3D pose track: `positions` is T x 51, each row the 17 joints
/// flattened joint-major as (x, y, z) triples. Axes: x, y horizontal,
/// z vertical up.
struct PoseSequence {
  double fps = 0;
  Matrix positions;  // T x 51

  int frames() const { return static_cast<int>(positions.rows()); }

  Vector3 joint(int frame, int joint_idx) const {
    return positions.block<1, 3>(frame, joint_idx * 3).transpose();
  }
  void set_joint(int frame, int joint_idx, const Vector3& p) {
    positions.block<1, 3>(frame, joint_idx * 3) = p.transpose();
  }
};

/// Left-skate Euler angles in degrees, T x 3 (roll, pitch, yaw).
/// Positive roll = inside-edge lean, negative = outside-edge lean.
struct SkateAngleSequence {
  double fps = 0;
  Matrix angles;  // T x 3

  int frames() const { return static_cast<int>(angles.rows()); }
};

enum class SampleSource { Camera, Imu };

std::string to_string(SampleSource source);
SampleSource sample_source_from_string(const std::string& s);

/// One labeled jump attempt. label: 1 = edge error, 0 = correct edge.
struct JumpSample {
  std::string sample_id;
  std::string skater_id;
  SampleSource source = SampleSource::Camera;
  PoseSequence pose;
  std::optional<SkateAngleSequence> angles;
  int label = 0;
};

struct Dataset {
  std::vector<JumpSample> samples;
  int n_error = 0;
  int n_correct = 0;
  std::map<std::string, std::vector<std::string>> skater_index;

  void rebuild_index();
};

}  // namespace edgejudge
