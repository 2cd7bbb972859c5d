#include "edgejudge/types.hpp"

#include <algorithm>

namespace edgejudge {

const std::array<std::string, kNumJoints>& joint_names() {
  static const std::array<std::string, kNumJoints> names = {
      "Hip",       "RHip",      "RKnee",  "RFoot",  "LHip",   "LKnee",
      "LFoot",     "Spine",     "Thorax", "Neck",   "Head",   "LShoulder",
      "LElbow",    "LWrist",    "RShoulder", "RElbow", "RWrist"};
  return names;
}

int joint_index(const std::string& name) {
  const auto& names = joint_names();
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ValidationError("unknown joint name: " + name);
  return static_cast<int>(it - names.begin());
}

std::string to_string(SampleSource source) {
  return source == SampleSource::Camera ? "camera" : "imu";
}

SampleSource sample_source_from_string(const std::string& s) {
  if (s == "camera") return SampleSource::Camera;
  if (s == "imu") return SampleSource::Imu;
  throw ValidationError("unknown sample source: " + s);
}

void Dataset::rebuild_index() {
  n_error = 0;
  n_correct = 0;
  skater_index.clear();
  for (const auto& s : samples) {
    (s.label == 1 ? n_error : n_correct)++;
    skater_index[s.skater_id].push_back(s.sample_id);
  }
}

}  // namespace edgejudge
