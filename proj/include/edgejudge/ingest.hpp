#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "edgejudge/types.hpp"

namespace edgejudge::ingest {

/// Detection files are line-delimited JSON records:
///   {"frame_idx":0,"bbox":[x1,y1,x2,y2],"confidence":0.9}
/// Records are returned sorted by frame_idx. Malformed lines and inverted
/// boxes raise errors carrying the 1-based line number.
std::vector<DetectionRecord> parse_detections(std::istream& stream);
std::vector<DetectionRecord> load_detections(const std::filesystem::path& path);
void write_detections(std::ostream& out, const std::vector<DetectionRecord>& records);

/// Pose files: two header lines (`fps <value>`, `joints <17 names>`)
/// followed by T lines of 51 reals. With allow_missing, the token `nan`
/// marks a missing coordinate to be filled by validate_sample; otherwise
/// any non-finite value is a validation error naming frame and joint.
PoseSequence parse_pose_sequence(std::istream& stream, bool allow_missing = false);
PoseSequence load_pose_sequence(const std::filesystem::path& path, bool allow_missing = false);
void write_pose_sequence(std::ostream& out, const PoseSequence& seq);
void save_pose_sequence(const std::filesystem::path& path, const PoseSequence& seq);

/// Angle files: one header line (`fps <value>`) then T lines of 3 reals (deg).
SkateAngleSequence parse_angle_sequence(std::istream& stream, bool allow_missing = false);
SkateAngleSequence load_angle_sequence(const std::filesystem::path& path, bool allow_missing = false);
void write_angle_sequence(std::ostream& out, const SkateAngleSequence& seq);
void save_angle_sequence(const std::filesystem::path& path, const SkateAngleSequence& seq);

/// Fills non-finite runs of length <= max_gap by linear interpolation from
/// the finite neighbors, independently per joint coordinate (and per angle
/// axis when angles are present). Longer runs and runs touching a sequence
/// boundary reject the sample.
struct ValidationResult {
  bool accepted = false;
  std::string reason;  // set when rejected
};
ValidationResult validate_sample(JumpSample& sample, int max_gap = 5);

struct LoadOptions {
  int max_gap = 5;
  /// When true, rejected samples are dropped (reasons collected); when
  /// false a rejection aborts the load.
  bool skip_rejected = false;
};

struct LoadReport {
  std::vector<std::string> rejected;  // "sample_id: reason"
};

/// Manifest: one sample per line,
///   sample_id skater_id source pose_path angle_path|- label
/// `#` starts a comment. Relative paths resolve against the manifest
/// directory.
Dataset load_dataset(const std::filesystem::path& manifest_path,
                     const LoadOptions& options = {}, LoadReport* report = nullptr);

void write_manifest_line(std::ostream& out, const std::string& sample_id,
                         const std::string& skater_id, SampleSource source,
                         const std::string& pose_path,
                         const std::optional<std::string>& angle_path, int label);

/// Round-trip exact formatting for all numeric file formats.
std::string format_real(double v);

}  // namespace edgejudge::ingest
