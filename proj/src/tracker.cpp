#include "edgejudge/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace edgejudge::tracker {

CropConfig CropConfig::for_fps(double fps) {
  CropConfig c;
  const double scale = fps / 60.0;
  c.window_len = static_cast<int>(std::lround(51 * scale));
  c.aligned_index = static_cast<int>(std::lround(25 * scale));
  c.takeoff_offset = static_cast<int>(std::lround(0.25 * fps));
  return c;
}

void write_jump_window(std::ostream& out, const JumpWindow& w) {
  out << "track_id " << w.track_id << '\n'
      << "apex_frame " << w.apex_frame << '\n'
      << "takeoff_frame " << w.takeoff_frame << '\n'
      << "start " << w.start << '\n'
      << "end " << w.end << '\n';
}

JumpWindow parse_jump_window(std::istream& in) {
  JumpWindow w;
  std::string key;
  int value;
  bool any = false;
  while (in >> key >> value) {
    any = true;
    if (key == "track_id") w.track_id = value;
    else if (key == "apex_frame") w.apex_frame = value;
    else if (key == "takeoff_frame") w.takeoff_frame = value;
    else if (key == "start") w.start = value;
    else if (key == "end") w.end = value;
    else throw ParseError("jump window: unknown key '" + key + "'");
  }
  if (!any) throw ParseError("jump window: empty record");
  return w;
}

double iou(const Box& a, const Box& b) {
  const double ix1 = std::max(a.x1, b.x1);
  const double iy1 = std::max(a.y1, b.y1);
  const double ix2 = std::min(a.x2, b.x2);
  const double iy2 = std::min(a.y2, b.y2);
  const double iw = std::max(0.0, ix2 - ix1);
  const double ih = std::max(0.0, iy2 - iy1);
  const double inter = iw * ih;
  const double area_a = (a.x2 - a.x1) * (a.y2 - a.y1);
  const double area_b = (b.x2 - b.x1) * (b.y2 - b.y1);
  const double uni = area_a + area_b - inter;
  return uni > 0 ? inter / uni : 0.0;
}

namespace {

// Min-cost assignment with potentials, O(n^3). cost is square;
// returns row -> column.
std::vector<int> hungarian(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      int i0 = p[j0], j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

}  // namespace

Association associate(const std::vector<Box>& track_boxes,
                      const std::vector<Box>& detection_boxes, double iou_min) {
  Association result;
  const int nt = static_cast<int>(track_boxes.size());
  const int nd = static_cast<int>(detection_boxes.size());
  if (nt == 0 || nd == 0) {
    for (int i = 0; i < nt; ++i) result.unmatched_tracks.push_back(i);
    for (int j = 0; j < nd; ++j) result.unmatched_detections.push_back(j);
    return result;
  }

  // Pad to square; padding entries cost 0 (IoU 0) and are discarded below.
  const int n = std::max(nt, nd);
  Matrix cost = Matrix::Zero(n, n);
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < nd; ++j)
      cost(i, j) = -iou(track_boxes[i], detection_boxes[j]);

  auto assignment = hungarian(cost);
  std::vector<char> det_matched(nd, false);
  for (int i = 0; i < nt; ++i) {
    int j = assignment[i];
    if (j >= 0 && j < nd && iou(track_boxes[i], detection_boxes[j]) >= iou_min) {
      result.matches.emplace_back(i, j);
      det_matched[j] = true;
    } else {
      result.unmatched_tracks.push_back(i);
    }
  }
  for (int j = 0; j < nd; ++j)
    if (!det_matched[j]) result.unmatched_detections.push_back(j);
  return result;
}

namespace {

Eigen::Vector4d box_to_measurement(const Box& b) {
  const double w = b.x2 - b.x1;
  const double h = b.y2 - b.y1;
  return {b.x1 + w / 2, b.y1 + h / 2, w * h, w / h};
}

Box state_to_box(const Eigen::Matrix<double, 7, 1>& x) {
  const double w = std::sqrt(std::max(x(2) * x(3), 0.0));
  const double h = w > 0 ? x(2) / w : 0.0;
  return {x(0) - w / 2, x(1) - h / 2, x(0) + w / 2, x(1) + h / 2};
}

using Mat7 = Eigen::Matrix<double, 7, 7>;
using Mat47 = Eigen::Matrix<double, 4, 7>;

Mat7 transition() {
  Mat7 f = Mat7::Identity();
  f(0, 4) = f(1, 5) = f(2, 6) = 1;
  return f;
}

Mat47 observation() {
  Mat47 h = Mat47::Zero();
  h(0, 0) = h(1, 1) = h(2, 2) = h(3, 3) = 1;
  return h;
}

Mat7 process_noise() {
  Mat7 q = Mat7::Identity();
  q(4, 4) = q(5, 5) = 0.01;
  q(6, 6) = 1e-4;
  return q;
}

Eigen::Matrix4d measurement_noise() {
  Eigen::Vector4d d{1, 1, 10, 10};
  return d.asDiagonal();
}

}  // namespace

KalmanBoxTracker::KalmanBoxTracker(int id, const Box& initial) : id_(id) {
  x_.setZero();
  x_.head<4>() = box_to_measurement(initial);
  Eigen::Matrix<double, 7, 1> p0;
  p0 << 10, 10, 10, 10, 1e4, 1e4, 1e4;
  covariance_ = p0.asDiagonal();
}

Box KalmanBoxTracker::predict() {
  if (x_(6) + x_(2) <= 0) x_(6) = 0;  // keep scale positive
  const Mat7 f = transition();
  x_ = f * x_;
  covariance_ = f * covariance_ * f.transpose() + process_noise();
  covariance_ = ((covariance_ + covariance_.transpose()) / 2).eval();
  if (time_since_update_ > 0) hit_streak_ = 0;
  ++time_since_update_;
  return state_to_box(x_);
}

void KalmanBoxTracker::update(const Box& measurement) {
  const Mat47 h = observation();
  const Eigen::Vector4d residual = box_to_measurement(measurement) - h * x_;
  const Eigen::Matrix4d innovation =
      h * covariance_ * h.transpose() + measurement_noise();
  const Eigen::Matrix<double, 7, 4> gain =
      covariance_ * h.transpose() * innovation.inverse();
  x_ += gain * residual;
  covariance_ = (Mat7::Identity() - gain * h) * covariance_;
  covariance_ = ((covariance_ + covariance_.transpose()) / 2).eval();
  time_since_update_ = 0;
  ++hits_;
  ++hit_streak_;
}

Box KalmanBoxTracker::bbox() const { return state_to_box(x_); }

SortTracker::SortTracker(const TrackerConfig& config) : config_(config) {}

void SortTracker::step(const std::vector<DetectionRecord>& frame_detections) {
  std::vector<Box> predicted;
  predicted.reserve(live_.size());
  for (auto& slot : live_) predicted.push_back(slot.filter.predict());

  std::vector<Box> det_boxes;
  det_boxes.reserve(frame_detections.size());
  for (const auto& d : frame_detections)
    det_boxes.push_back({d.x1, d.y1, d.x2, d.y2});

  auto assoc = associate(predicted, det_boxes, config_.iou_min);

  for (const auto& [ti, di] : assoc.matches)
    live_[ti].filter.update(det_boxes[di]);

  // Record post-step centers for every live track, matched or coasting.
  for (auto& slot : live_) {
    Box b = slot.filter.bbox();
    slot.history.center_x.push_back((b.x1 + b.x2) / 2);
    slot.history.center_y.push_back((b.y1 + b.y2) / 2);
    slot.history.hits = slot.filter.hits();
  }

  for (int di : assoc.unmatched_detections) {
    Slot slot{KalmanBoxTracker(next_id_++, det_boxes[di]), {}};
    slot.history.track_id = slot.filter.id();
    slot.history.first_frame = frame_;
    Box b = slot.filter.bbox();
    slot.history.center_x.push_back((b.x1 + b.x2) / 2);
    slot.history.center_y.push_back((b.y1 + b.y2) / 2);
    slot.history.hits = 1;
    live_.push_back(std::move(slot));
  }

  for (auto it = live_.begin(); it != live_.end();) {
    if (it->filter.time_since_update() > config_.max_age) {
      finished_.push_back(std::move(it->history));
      it = live_.erase(it);
    } else {
      ++it;
    }
  }
  ++frame_;
}

void SortTracker::run(const std::vector<DetectionRecord>& detections) {
  if (detections.empty()) return;
  int last_frame = detections.back().frame_idx;
  size_t idx = 0;
  for (int f = frame_; f <= last_frame; ++f) {
    std::vector<DetectionRecord> current;
    while (idx < detections.size() && detections[idx].frame_idx == f)
      current.push_back(detections[idx++]);
    step(current);
  }
}

std::vector<TrackHistory> SortTracker::histories() const {
  std::vector<TrackHistory> out;
  for (const auto& h : finished_)
    if (h.hits >= config_.min_hits) out.push_back(h);
  for (const auto& slot : live_)
    if (slot.history.hits >= config_.min_hits) out.push_back(slot.history);
  std::sort(out.begin(), out.end(),
            [](const TrackHistory& a, const TrackHistory& b) {
              return a.track_id < b.track_id;
            });
  return out;
}

std::vector<double> smoothed_vertical_velocity(const std::vector<double>& center_y,
                                               int smoothing_window) {
  const int n = static_cast<int>(center_y.size());
  std::vector<double> velocity(n, 0.0);
  if (n < 2) return velocity;
  for (int i = 0; i < n; ++i) {
    if (i == 0)
      velocity[i] = center_y[1] - center_y[0];
    else if (i == n - 1)
      velocity[i] = center_y[n - 1] - center_y[n - 2];
    else
      velocity[i] = (center_y[i + 1] - center_y[i - 1]) / 2;
  }
  const int half = smoothing_window / 2;
  std::vector<double> smoothed(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + half);
    double sum = 0;
    for (int k = lo; k <= hi; ++k) sum += velocity[k];
    smoothed[i] = sum / (hi - lo + 1);
  }
  return smoothed;
}

int select_skater(const std::vector<TrackHistory>& tracks, double v_change_min,
                  int smoothing_window) {
  int best_id = -1;
  double best_range = v_change_min;
  for (const auto& track : tracks) {
    if (track.frames() < smoothing_window) continue;
    auto v = smoothed_vertical_velocity(track.center_y, smoothing_window);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double range = *hi - *lo;
    if (range > best_range) {
      best_range = range;
      best_id = track.track_id;
    }
  }
  if (best_id < 0) throw TrackingError("no jump detected");
  return best_id;
}

int detect_apex(const TrackHistory& track, int smoothing_window) {
  if (track.frames() < smoothing_window)
    throw TrackingError("track too short for apex detection");
  auto v = smoothed_vertical_velocity(track.center_y, smoothing_window);
  const int n = static_cast<int>(v.size());

  // Image y points down: upward flight is negative velocity, so the apex is
  // the negative-to-nonnegative crossing. Under noise the velocity wiggles
  // around zero during flat glide phases, so anchor the search at the
  // trajectory's highest point (minimum smoothed center_y) and take the
  // sign change nearest to it; the half-window margins are skipped because
  // one-sided differences and truncated averaging amplify noise there.
  const int half = smoothing_window / 2;
  std::vector<double> y(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + half);
    double sum = 0;
    for (int k = lo; k <= hi; ++k) sum += track.center_y[k];
    y[i] = sum / (hi - lo + 1);
  }
  const int margin = std::min(half, (n - 1) / 2);
  const int highest = static_cast<int>(
      std::min_element(y.begin() + margin, y.end() - margin) - y.begin());

  auto crossing_at = [&](int i) { return i >= 0 && i + 1 < n && v[i] < 0 && v[i + 1] >= 0; };
  for (int d = 0; d < n; ++d) {
    for (int i : {highest - d, highest + d}) {
      if (!crossing_at(i)) continue;
      const double t = static_cast<double>(i) + (-v[i]) / (v[i + 1] - v[i]);
      return track.first_frame + static_cast<int>(std::lround(t));
    }
  }
  throw TrackingError("no apex found");
}

std::pair<PoseSequence, JumpWindow> crop_window(const PoseSequence& sequence,
                                                int apex_frame,
                                                const CropConfig& config) {
  if (config.window_len < 1 || config.aligned_index < 0 ||
      config.aligned_index >= config.window_len || config.takeoff_offset < 0)
    throw ValidationError("invalid crop configuration");
  if (apex_frame < 0 || apex_frame >= sequence.frames())
    throw ValidationError("apex frame outside sequence");

  JumpWindow w;
  w.apex_frame = apex_frame;
  w.takeoff_frame = apex_frame - config.takeoff_offset;
  w.start = w.takeoff_frame - config.aligned_index;
  w.end = w.start + config.window_len - 1;
  if (w.start < 0 || w.end >= sequence.frames() || w.takeoff_frame > apex_frame ||
      apex_frame > w.end || w.takeoff_frame < w.start)
    throw ValidationError("insufficient context around apex");

  PoseSequence cropped;
  cropped.fps = sequence.fps;
  cropped.positions = sequence.positions.middleRows(w.start, config.window_len);
  return {std::move(cropped), w};
}

}  // namespace edgejudge::tracker
