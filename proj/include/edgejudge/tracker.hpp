#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "edgejudge/types.hpp"

namespace edgejudge::tracker {

/// Thrown when no track shows a jump or no apex can be located.
struct TrackingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrackerConfig {
  double iou_min = 0.3;
  int max_age = 30;
  int min_hits = 3;
};

struct CropConfig {
  int window_len = 204;
  int aligned_index = 100;   // index of the take-off frame in the crop
  int takeoff_offset = 60;   // frames between take-off and apex

  /// Defaults scaled so that at 60 fps the window is 51 frames with the
  /// take-off at index 25 and an apex 0.25 s after take-off.
  static CropConfig for_fps(double fps);
};

struct JumpWindow {
  int track_id = -1;
  int apex_frame = 0;
  int takeoff_frame = 0;
  int start = 0;
  int end = 0;
};

void write_jump_window(std::ostream& out, const JumpWindow& window);
JumpWindow parse_jump_window(std::istream& in);

struct Box {
  double x1, y1, x2, y2;
};

double iou(const Box& a, const Box& b);

struct Association {
  std::vector<std::pair<int, int>> matches;  // (track index, detection index)
  std::vector<int> unmatched_tracks;
  std::vector<int> unmatched_detections;
};

/// One-to-one assignment maximizing total IoU (Hungarian algorithm); pairs
/// below iou_min end up unmatched.
Association associate(const std::vector<Box>& track_boxes,
                      const std::vector<Box>& detection_boxes, double iou_min);

/// Constant-velocity Kalman filter on (center_x, center_y, scale) with a
/// constant aspect ratio, as in SORT. State is
/// [cx, cy, s, r, vcx, vcy, vs] with s = area, r = width/height.
class KalmanBoxTracker {
 public:
  KalmanBoxTracker(int id, const Box& initial);

  Box predict();
  void update(const Box& measurement);

  Box bbox() const;
  int id() const { return id_; }
  int hits() const { return hits_; }
  int hit_streak() const { return hit_streak_; }
  int time_since_update() const { return time_since_update_; }
  const Eigen::Matrix<double, 7, 1>& state() const { return x_; }

 private:
  int id_;
  int hits_ = 1;
  int hit_streak_ = 1;
  int time_since_update_ = 0;
  Eigen::Matrix<double, 7, 1> x_;
  Eigen::Matrix<double, 7, 7> covariance_;
};

/// Per-track bbox center history at video frame rate.
struct TrackHistory {
  int track_id = -1;
  int first_frame = 0;
  std::vector<double> center_x;
  std::vector<double> center_y;
  int hits = 0;

  int frames() const { return static_cast<int>(center_y.size()); }
};

/// Sequential SORT-style tracker over one detection stream.
class SortTracker {
 public:
  explicit SortTracker(const TrackerConfig& config = {});

  /// Advances one frame. Detections must all carry the same frame_idx.
  void step(const std::vector<DetectionRecord>& frame_detections);

  /// Feeds a whole stream (sorted by frame_idx, possibly with empty frames).
  void run(const std::vector<DetectionRecord>& detections);

  /// Histories of all tracks (live and dead) with at least min_hits hits.
  std::vector<TrackHistory> histories() const;

 private:
  struct Slot {
    KalmanBoxTracker filter;
    TrackHistory history;
  };

  TrackerConfig config_;
  std::vector<Slot> live_;
  std::vector<TrackHistory> finished_;
  int next_id_ = 0;
  int frame_ = 0;
};

/// Centered-moving-average smoothed central-difference vertical velocity of
/// the bbox center, in px/frame (image y down).
std::vector<double> smoothed_vertical_velocity(const std::vector<double>& center_y,
                                               int smoothing_window);

/// Picks the track whose smoothed vertical velocity spans the largest range,
/// provided that range exceeds v_change_min. Throws "no jump detected"
/// otherwise.
int select_skater(const std::vector<TrackHistory>& tracks, double v_change_min,
                  int smoothing_window = 9);

/// First upward-to-downward sign change of the smoothed vertical velocity,
/// refined by linear interpolation and rounded to the nearest frame.
/// Returned index is in video frame numbers.
int detect_apex(const TrackHistory& track, int smoothing_window = 9);

/// Crops a window of config.window_len frames with the take-off frame
/// (apex - takeoff_offset) landing at config.aligned_index.
std::pair<PoseSequence, JumpWindow> crop_window(const PoseSequence& sequence,
                                                int apex_frame,
                                                const CropConfig& config);

}  // namespace edgejudge::tracker
