#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "edgejudge/types.hpp"

namespace edgejudge::synth {

struct SynthConfig {
  int n_skaters = 6;
  int jumps_per_skater = 40;
  /// Fraction of each skater's jumps labeled as edge errors; overridable
  /// per skater to reproduce all-error skaters.
  double error_fraction = 0.5;
  std::vector<double> per_skater_error_fraction;

  double lean_error_deg = 15;     // > 0, inside edge
  double lean_correct_deg = -15;  // < 0, outside edge
  double approach_speed = 2.0;    // units/s along travel axis
  double flight_height = 0.45;    // units
  double noise_sigma = 0.0;       // units, on every pose coordinate
  double angle_noise_deg = 0.0;   // degrees, on every skate angle
  double fps = 240;               // 240 (camera) or 60 (IMU)
  SampleSource source = SampleSource::Camera;
  std::uint64_t seed = 0;
  double duration = 2.0;  // seconds
};

struct SkaterStyle {
  double limb_scale;
  double curvature;  // lateral drift of the approach path, units/s^2
};

SkaterStyle style_for(const SynthConfig& config, int skater_idx);
std::string skater_id(int skater_idx);

/// Closed-form constants of the rig, exposed so tests can check generated
/// geometry analytically.
double gravity(const SynthConfig& config);        // 32 * flight_height, units/s^2
double takeoff_time(const SynthConfig& config);   // 0.75 s
double apex_time(const SynthConfig& config);      // takeoff + 0.25 s
double landing_time(const SynthConfig& config);   // takeoff + 0.5 s
double leg_length(const SkaterStyle& style);

/// Lean angle profile in degrees: ramps up over 0.3 s before take-off,
/// holds through flight, ramps back down after landing.
double lean_deg_at(const SynthConfig& config, double full_lean_deg, double t);

/// One synthetic jump. Deterministic given (config.seed, skater, jump).
/// IMU-source configs attach a SkateAngleSequence whose roll equals the
/// lean profile. label = 1 <=> positive (inside) lean.
JumpSample generate_jump(int skater_idx, int jump_idx, int label,
                         const SynthConfig& config);

struct SynthScene {
  std::vector<PoseSequence> actors;  // actors[jumper_index] is the jumper
  int jumper_index = 0;
  double fps = 240;
  double px_per_unit = 200;
  double image_width = 1920;
  double image_height = 1080;
  double pad_px = 10;
};

SynthScene generate_scene(const SynthConfig& config, int skater_idx, int jump_idx,
                          int label, int n_bystanders);

/// Projects every actor to a padded bbox per frame, image y down.
std::vector<DetectionRecord> generate_detections(const SynthScene& scene);

enum class SegmentMode {
  Analytic,  // crop around the known analytic apex frame
  Tracker,   // run detection -> tracking -> apex -> crop (camera only)
};

/// Writes pose/angle files and a manifest under out_dir (ingest formats)
/// and returns the loaded dataset. Samples are cropped take-off-aligned.
Dataset generate_dataset(const SynthConfig& config,
                         const std::filesystem::path& out_dir,
                         SegmentMode mode = SegmentMode::Tracker);

/// Human-readable dump of the closed-form parameters in effect.
std::string describe(const SynthConfig& config);

}  // namespace edgejudge::synth
