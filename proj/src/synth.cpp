#include "edgejudge/synth.hpp"

#include "edgejudge/ingest.hpp"
#include "edgejudge/tracker.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace edgejudge::synth {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLeanRampSeconds = 0.3;
constexpr double kDefaultConfidence = 0.95;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t sample_seed(std::uint64_t seed, int skater_idx, int jump_idx) {
  return splitmix64(splitmix64(seed ^ (0x5EEDULL + skater_idx)) + jump_idx);
}

}  // namespace

SkaterStyle style_for(const SynthConfig& config, int skater_idx) {
  SkaterStyle style;
  style.limb_scale = 0.9 + 0.04 * skater_idx;
  style.curvature = 0.02 * (skater_idx - (config.n_skaters - 1) / 2.0);
  return style;
}

std::string skater_id(int skater_idx) {
  if (skater_idx < 26) return std::string(1, static_cast<char>('A' + skater_idx));
  return "S" + std::to_string(skater_idx);
}

// Gravity chosen so the flight lasts 0.5 s at the configured flight height:
// h = g * (0.25)^2 / 2  =>  g = 32 h.
double gravity(const SynthConfig& config) { return 32.0 * config.flight_height; }
double takeoff_time(const SynthConfig&) { return 0.75; }
double apex_time(const SynthConfig& config) { return takeoff_time(config) + 0.25; }
double landing_time(const SynthConfig& config) { return takeoff_time(config) + 0.5; }

double leg_length(const SkaterStyle& style) { return 0.9 * style.limb_scale; }

double lean_deg_at(const SynthConfig& config, double full_lean_deg, double t) {
  const double t0 = takeoff_time(config);
  const double t_land = landing_time(config);
  if (t < t0 - kLeanRampSeconds || t > t_land + kLeanRampSeconds) return 0.0;
  if (t < t0) return full_lean_deg * (t - (t0 - kLeanRampSeconds)) / kLeanRampSeconds;
  if (t <= t_land) return full_lean_deg;
  return full_lean_deg * (1.0 - (t - t_land) / kLeanRampSeconds);
}

namespace {

double flight_z(const SynthConfig& config, double t) {
  const double t0 = takeoff_time(config);
  if (t < t0 || t > landing_time(config)) return 0.0;
  const double g = gravity(config);
  const double v0 = g * 0.25;
  const double dt = t - t0;
  return v0 * dt - 0.5 * g * dt * dt;
}

// Static offsets from the hip in the skater frame (travel = +x, z up),
// multiplied by limb_scale. The left leg is handled separately.
const double kRigOffsets[kNumJoints][3] = {
    {0.00, 0.00, 0.00},    // Hip
    {0.00, -0.12, 0.00},   // RHip
    {0.02, -0.13, -0.45},  // RKnee
    {-0.05, -0.15, -0.85}, // RFoot
    {0.00, 0.12, 0.00},    // LHip
    {0.02, 0.13, -0.45},   // LKnee
    {0.00, 0.00, 0.00},    // LFoot (replaced by the leaned leg below)
    {0.00, 0.00, 0.25},    // Spine
    {0.00, 0.00, 0.50},    // Thorax
    {0.00, 0.00, 0.60},    // Neck
    {0.00, 0.00, 0.72},    // Head
    {0.00, 0.20, 0.55},    // LShoulder
    {0.04, 0.26, 0.35},    // LElbow
    {0.08, 0.30, 0.18},    // LWrist
    {0.00, -0.20, 0.55},   // RShoulder
    {0.04, -0.26, 0.35},   // RElbow
    {0.08, -0.30, 0.18},   // RWrist
};

// Full-length uncropped pose for one actor. lean_deg = 0 and jumps = false
// gives a gliding bystander.
PoseSequence make_pose(const SynthConfig& config, const SkaterStyle& style,
                       double full_lean_deg, bool jumps, double speed_factor,
                       double x_offset, double y_offset) {
  const int n_frames = static_cast<int>(std::lround(config.duration * config.fps));
  const double leg = leg_length(style);

  PoseSequence seq;
  seq.fps = config.fps;
  seq.positions.resize(n_frames, kPoseDims);

  for (int f = 0; f < n_frames; ++f) {
    const double t = f / config.fps;
    // Hip rides one leg length above the ice, so the zero-lean left foot
    // grazes z = 0.
    Vector3 hip{config.approach_speed * speed_factor * t + x_offset,
                style.curvature * t * t + y_offset,
                leg + (jumps ? flight_z(config, t) : 0.0)};

    for (int j = 0; j < kNumJoints; ++j) {
      Vector3 p = hip + style.limb_scale * Vector3(kRigOffsets[j][0],
                                                   kRigOffsets[j][1],
                                                   kRigOffsets[j][2]);
      seq.set_joint(f, j, p);
    }
    // Left foot: nominal offset (0, 0, -leg) rotated by the lean angle
    // about the travel axis, so lateral deviation = leg * sin(lean).
    const double theta = (jumps ? lean_deg_at(config, full_lean_deg, t) : 0.0) *
                         kPi / 180.0;
    seq.set_joint(f, kJointLeftFoot,
                  hip + Vector3(0.0, leg * std::sin(theta), -leg * std::cos(theta)));
  }
  return seq;
}

void add_noise(Matrix& m, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0) return;
  std::normal_distribution<double> noise(0.0, sigma);
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) m(r, c) += noise(rng);
}

}  // namespace

JumpSample generate_jump(int skater_idx, int jump_idx, int label,
                         const SynthConfig& config) {
  const SkaterStyle style = style_for(config, skater_idx);
  const double lean = label == 1 ? config.lean_error_deg : config.lean_correct_deg;

  JumpSample sample;
  sample.sample_id = skater_id(skater_idx) + "_j" + std::to_string(jump_idx);
  sample.skater_id = skater_id(skater_idx);
  sample.source = config.source;
  sample.label = label;
  sample.pose = make_pose(config, style, lean, /*jumps=*/true, 1.0, 0.0, 0.0);

  std::mt19937_64 rng(sample_seed(config.seed, skater_idx, jump_idx));
  add_noise(sample.pose.positions, config.noise_sigma, rng);

  if (config.source == SampleSource::Imu) {
    SkateAngleSequence angles;
    angles.fps = config.fps;
    const int n_frames = sample.pose.frames();
    angles.angles = Matrix::Zero(n_frames, 3);
    for (int f = 0; f < n_frames; ++f)
      angles.angles(f, 0) = lean_deg_at(config, lean, f / config.fps);
    add_noise(angles.angles, config.angle_noise_deg, rng);
    sample.angles = std::move(angles);
  }
  return sample;
}

SynthScene generate_scene(const SynthConfig& config, int skater_idx, int jump_idx,
                          int label, int n_bystanders) {
  SynthScene scene;
  scene.fps = config.fps;
  const SkaterStyle style = style_for(config, skater_idx);
  const double lean = label == 1 ? config.lean_error_deg : config.lean_correct_deg;

  PoseSequence jumper = make_pose(config, style, lean, true, 1.0, 0.0, 0.0);
  std::mt19937_64 rng(sample_seed(config.seed, skater_idx, jump_idx));
  add_noise(jumper.positions, config.noise_sigma, rng);
  scene.actors.push_back(std::move(jumper));
  scene.jumper_index = 0;

  for (int b = 0; b < n_bystanders; ++b) {
    const double speed = b % 2 == 0 ? 0.7 : -0.5;
    const double x0 = b % 2 == 0 ? -1.0 : 4.5;
    const double y0 = (b / 2 + 1) * 1.5 * (b % 2 == 0 ? 1 : -1);
    scene.actors.push_back(make_pose(config, style, 0.0, false, speed, x0, y0));
  }
  return scene;
}

std::vector<DetectionRecord> generate_detections(const SynthScene& scene) {
  std::vector<DetectionRecord> records;
  for (int f = 0; f < scene.actors.front().frames(); ++f) {
    for (const auto& actor : scene.actors) {
      double min_x = 1e30, max_x = -1e30, min_z = 1e30, max_z = -1e30;
      for (int j = 0; j < kNumJoints; ++j) {
        Vector3 p = actor.joint(f, j);
        min_x = std::min(min_x, p.x());
        max_x = std::max(max_x, p.x());
        min_z = std::min(min_z, p.z());
        max_z = std::max(max_z, p.z());
      }
      DetectionRecord rec;
      rec.frame_idx = f;
      rec.x1 = 400 + scene.px_per_unit * min_x - scene.pad_px;
      rec.x2 = 400 + scene.px_per_unit * max_x + scene.pad_px;
      // Image y points down: high z projects to small y.
      rec.y1 = scene.image_height - scene.px_per_unit * max_z - scene.pad_px;
      rec.y2 = scene.image_height - scene.px_per_unit * min_z + scene.pad_px;
      rec.confidence = kDefaultConfidence;
      records.push_back(rec);
    }
  }
  return records;
}

namespace {

int labels_for(const SynthConfig& config, int skater_idx) {
  double ef = config.error_fraction;
  if (skater_idx < static_cast<int>(config.per_skater_error_fraction.size()))
    ef = config.per_skater_error_fraction[skater_idx];
  return static_cast<int>(std::lround(ef * config.jumps_per_skater));
}

}  // namespace

Dataset generate_dataset(const SynthConfig& config, const fs::path& out_dir,
                         SegmentMode mode) {
  fs::create_directories(out_dir / "poses");
  const bool imu = config.source == SampleSource::Imu;
  if (imu) fs::create_directories(out_dir / "angles");

  const auto crop_config = tracker::CropConfig::for_fps(config.fps);
  const int analytic_apex =
      static_cast<int>(std::lround(apex_time(config) * config.fps));
  const bool use_tracker = mode == SegmentMode::Tracker && !imu;

  Dataset dataset;
  std::ostringstream manifest;
  for (int s = 0; s < config.n_skaters; ++s) {
    const int n_error = labels_for(config, s);
    for (int j = 0; j < config.jumps_per_skater; ++j) {
      const int label = j < n_error ? 1 : 0;
      JumpSample full = generate_jump(s, j, label, config);

      int apex = analytic_apex;
      if (use_tracker) {
        auto scene = generate_scene(config, s, j, label, 2);
        auto detections = generate_detections(scene);
        tracker::SortTracker sort_tracker;
        sort_tracker.run(detections);
        auto tracks = sort_tracker.histories();
        const int jumper = tracker::select_skater(tracks, 1.5);
        for (const auto& t : tracks)
          if (t.track_id == jumper) apex = tracker::detect_apex(t);
      }

      auto [cropped, window] = tracker::crop_window(full.pose, apex, crop_config);
      JumpSample sample = full;
      sample.pose = std::move(cropped);
      if (sample.angles)
        sample.angles->angles =
            sample.angles->angles.middleRows(window.start, crop_config.window_len)
                .eval();

      const std::string pose_rel = "poses/" + sample.sample_id + ".pose";
      ingest::save_pose_sequence(out_dir / pose_rel, sample.pose);
      std::optional<std::string> angle_rel;
      if (sample.angles) {
        angle_rel = "angles/" + sample.sample_id + ".ang";
        ingest::save_angle_sequence(out_dir / *angle_rel, *sample.angles);
      }
      ingest::write_manifest_line(manifest, sample.sample_id, sample.skater_id,
                                  sample.source, pose_rel, angle_rel, label);
      dataset.samples.push_back(std::move(sample));
    }
  }

  std::ofstream mf(out_dir / "manifest.txt");
  if (!mf) throw ManifestError("cannot write manifest under " + out_dir.string());
  mf << manifest.str();
  dataset.rebuild_index();
  return dataset;
}

std::string describe(const SynthConfig& config) {
  std::ostringstream out;
  out << "skaters " << config.n_skaters << ", jumps/skater "
      << config.jumps_per_skater << ", seed " << config.seed << '\n';
  out << "source " << to_string(config.source) << ", fps " << config.fps
      << ", duration " << config.duration << " s\n";
  out << "lean error/correct " << config.lean_error_deg << " / "
      << config.lean_correct_deg << " deg, ramp " << kLeanRampSeconds << " s\n";
  out << "approach speed " << config.approach_speed << " units/s, flight height "
      << config.flight_height << " units, gravity " << gravity(config)
      << " units/s^2\n";
  out << "takeoff " << takeoff_time(config) << " s, apex " << apex_time(config)
      << " s, landing " << landing_time(config) << " s\n";
  out << "noise sigma " << config.noise_sigma << " units, angle noise "
      << config.angle_noise_deg << " deg\n";
  for (int s = 0; s < config.n_skaters; ++s) {
    auto style = style_for(config, s);
    out << "skater " << skater_id(s) << ": limb scale " << style.limb_scale
        << ", curvature " << style.curvature << ", leg length "
        << leg_length(style) << ", error jumps " << labels_for(config, s) << '\n';
  }
  return out.str();
}

}  // namespace edgejudge::synth
