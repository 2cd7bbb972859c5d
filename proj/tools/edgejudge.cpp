#include <CLI11.hpp>

#include "edgejudge/classifier.hpp"
#include "edgejudge/eval.hpp"
#include "edgejudge/ingest.hpp"
#include "edgejudge/preprocess.hpp"
#include "edgejudge/synth.hpp"
#include "edgejudge/tracker.hpp"
#include "edgejudge/types.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace edgejudge;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitEval = 3;

// Temp-and-rename so readers never observe a half-written report.
void write_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ManifestError("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string maybe_stamp(bool stamp) {
  if (!stamp) return {};
  const auto now = std::chrono::system_clock::now();
  return "# generated "
         + std::to_string(std::chrono::duration_cast<std::chrono::seconds>(
                              now.time_since_epoch())
                              .count())
         + "\n";
}

struct EvalFlags {
  std::string manifest;
  std::string config_name = "cam-pos-12";
  bool all_configs = false;
  std::string out_dir = "out";
  classifier::Hyperparams hyper;
  bool raw_features = false;
  bool per_frame_z = false;
  int jobs = 1;
  bool stamp = false;

  preprocess::ZOffsetMode z_mode() const {
    return per_frame_z ? preprocess::ZOffsetMode::PerFrame
                       : preprocess::ZOffsetMode::PerSequence;
  }
};

void add_eval_flags(CLI::App* cmd, EvalFlags& flags) {
  cmd->add_option("--manifest", flags.manifest, "dataset manifest")->required();
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--lambda", flags.hyper.lambda, "L2 strength");
  cmd->add_option("--learning-rate", flags.hyper.learning_rate, "initial step size");
  cmd->add_option("--tolerance", flags.hyper.tolerance, "gradient stop tolerance");
  cmd->add_option("--max-iters", flags.hyper.max_iters, "iteration cap");
  cmd->add_flag("--raw-features", flags.raw_features, "skip standardization");
  cmd->add_flag("--per-frame-z", flags.per_frame_z,
                "zero the lower foot per frame instead of per sequence");
  cmd->add_option("--jobs", flags.jobs, "parallel fold workers");
  cmd->add_flag("--stamp", flags.stamp, "embed a timestamp in outputs");
}

int run_synth(const CLI::App& cmd, synth::SynthConfig& config,
              const std::string& out_dir, const std::string& source,
              const std::string& segment_mode, bool describe_only) {
  config.source = sample_source_from_string(source);
  if (config.source == SampleSource::Imu && config.fps == 240) config.fps = 60;
  if (describe_only) {
    std::cout << synth::describe(config);
    return 0;
  }
  auto mode = segment_mode == "analytic" ? synth::SegmentMode::Analytic
                                         : synth::SegmentMode::Tracker;
  auto dataset = synth::generate_dataset(config, out_dir, mode);
  std::cout << "wrote " << dataset.samples.size() << " samples ("
            << dataset.n_error << " error / " << dataset.n_correct
            << " correct) under " << out_dir << "\n";
  (void)cmd;
  return 0;
}

int run_segment(const std::string& detections_path, const std::string& pose_path,
                const std::string& out_dir, const tracker::TrackerConfig& tcfg,
                double v_change_min, int smoothing, tracker::CropConfig crop,
                bool crop_defaults_from_fps) {
  auto detections = ingest::load_detections(detections_path);
  auto pose = ingest::load_pose_sequence(pose_path);
  if (crop_defaults_from_fps) crop = tracker::CropConfig::for_fps(pose.fps);

  tracker::SortTracker sort_tracker(tcfg);
  sort_tracker.run(detections);
  auto tracks = sort_tracker.histories();
  const int jumper = tracker::select_skater(tracks, v_change_min, smoothing);
  int apex = -1;
  for (const auto& t : tracks)
    if (t.track_id == jumper) apex = tracker::detect_apex(t, smoothing);

  auto [cropped, window] = tracker::crop_window(pose, apex, crop);
  window.track_id = jumper;

  std::ostringstream pose_out;
  ingest::write_pose_sequence(pose_out, cropped);
  write_atomic(fs::path(out_dir) / "cropped.pose", pose_out.str());
  std::ostringstream window_out;
  tracker::write_jump_window(window_out, window);
  write_atomic(fs::path(out_dir) / "window.txt", window_out.str());
  std::cout << "track " << jumper << " apex " << window.apex_frame << " crop ["
            << window.start << ", " << window.end << "]\n";
  return 0;
}

int run_evaluate(const EvalFlags& flags) {
  auto dataset = ingest::load_dataset(flags.manifest);
  classifier::Hyperparams hyper = flags.hyper;
  hyper.standardize = !flags.raw_features;

  std::vector<preprocess::FeatureConfig> configs;
  if (flags.all_configs)
    configs = preprocess::all_feature_configs();
  else
    configs.push_back(preprocess::feature_config_from_string(flags.config_name));

  std::vector<eval::CVReport> reports;
  for (auto config : configs) {
    try {
      auto report = eval::loso_cv(dataset, config, hyper, flags.z_mode(), flags.jobs);
      std::ostringstream csv;
      csv << maybe_stamp(flags.stamp);
      eval::write_cv_csv(csv, report);
      write_atomic(fs::path(flags.out_dir) /
                       ("cv_" + preprocess::to_string(config) + ".csv"),
                   csv.str());
      std::cout << preprocess::to_string(config) << ": accuracy "
                << eval::format_pct(report.mean_accuracy, report.std_accuracy)
                << "  f " << eval::format_pct(report.mean_f, report.std_f) << "\n";
      reports.push_back(std::move(report));
    } catch (const std::exception& e) {
      if (!flags.all_configs) throw;
      std::cout << preprocess::to_string(config) << ": skipped (" << e.what()
                << ")\n";
    }
  }
  if (flags.all_configs) {
    std::ostringstream csv;
    csv << maybe_stamp(flags.stamp);
    eval::write_cv_summary_csv(csv, reports);
    write_atomic(fs::path(flags.out_dir) / "cv_summary.csv", csv.str());
  }
  return 0;
}

int run_analyze(const EvalFlags& flags, const std::string& joint_name) {
  auto dataset = ingest::load_dataset(flags.manifest);
  auto config = preprocess::feature_config_from_string(flags.config_name);
  classifier::Hyperparams hyper = flags.hyper;
  hyper.standardize = !flags.raw_features;
  const int joint = joint_index(joint_name);

  auto features = preprocess::build_feature_matrix(dataset.samples, config,
                                                   flags.z_mode());
  auto model = classifier::train(features, hyper);

  std::ostringstream importance_csv;
  importance_csv << maybe_stamp(flags.stamp);
  eval::write_importance_csv(importance_csv, eval::feature_importance(model));
  write_atomic(fs::path(flags.out_dir) / "importance.csv", importance_csv.str());

  std::vector<eval::TrajectoryDistance> distances;
  for (const auto& [skater, _] : dataset.skater_index) {
    try {
      distances.push_back(
          eval::trajectory_distance(dataset, skater, joint, flags.z_mode()));
    } catch (const eval::EvalError&) {
      // single-class skaters have no defined distance
    }
  }
  std::ostringstream distance_csv;
  distance_csv << maybe_stamp(flags.stamp);
  eval::write_trajectory_csv(distance_csv, distances);
  write_atomic(fs::path(flags.out_dir) / "trajectory_distance.csv",
               distance_csv.str());

  // Plot-ready per-sample curves: joint trajectory and skate roll angle.
  std::ostringstream curves;
  curves << maybe_stamp(flags.stamp)
         << "sample_id,skater,label,frame,x,y,z\n";
  for (const auto& s : dataset.samples) {
    auto norm = preprocess::normalize_pose(s.pose, flags.z_mode());
    for (int f = 0; f < norm.frames(); ++f) {
      Vector3 p = norm.joint(f, joint);
      curves << s.sample_id << ',' << s.skater_id << ',' << s.label << ',' << f
             << ',' << ingest::format_real(p.x()) << ','
             << ingest::format_real(p.y()) << ',' << ingest::format_real(p.z())
             << '\n';
    }
  }
  write_atomic(fs::path(flags.out_dir) / "trajectory_curves.csv", curves.str());

  std::ostringstream angles;
  angles << maybe_stamp(flags.stamp)
         << "sample_id,skater,label,frame,roll,pitch,yaw\n";
  for (const auto& s : dataset.samples) {
    if (!s.angles) continue;
    for (int f = 0; f < s.angles->frames(); ++f)
      angles << s.sample_id << ',' << s.skater_id << ',' << s.label << ',' << f
             << ',' << ingest::format_real(s.angles->angles(f, 0)) << ','
             << ingest::format_real(s.angles->angles(f, 1)) << ','
             << ingest::format_real(s.angles->angles(f, 2)) << '\n';
  }
  write_atomic(fs::path(flags.out_dir) / "angle_curves.csv", angles.str());
  std::cout << "analysis written under " << flags.out_dir << "\n";
  return 0;
}

int run_judge(const EvalFlags& flags, const std::string& judge_manifest) {
  auto train_set = ingest::load_dataset(flags.manifest);
  auto judge_set = ingest::load_dataset(judge_manifest);
  auto config = preprocess::feature_config_from_string(flags.config_name);
  classifier::Hyperparams hyper = flags.hyper;
  hyper.standardize = !flags.raw_features;

  auto features = preprocess::build_feature_matrix(train_set.samples, config,
                                                   flags.z_mode());
  auto model = classifier::train(features, hyper);

  std::ostringstream model_out;
  classifier::write_model(model_out, model);
  write_atomic(fs::path(flags.out_dir) / "model.txt", model_out.str());

  std::ostringstream csv;
  csv << maybe_stamp(flags.stamp) << "sample_id,probability,label\n";
  for (const auto& s : judge_set.samples) {
    auto fv = preprocess::build_features(s, config, flags.z_mode());
    auto pred = classifier::predict(model, fv);
    csv << s.sample_id << ',' << ingest::format_real(pred.probability) << ','
        << pred.label << '\n';
  }
  write_atomic(fs::path(flags.out_dir) / "judgments.csv", csv.str());
  std::cout << "judged " << judge_set.samples.size() << " samples, outputs under "
            << flags.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lutz edge-error judgment pipeline"};
  app.require_subcommand(1);
  app.set_config("--config-file");

  // synth
  synth::SynthConfig synth_config;
  std::string synth_out = "out/synth";
  std::string synth_source = "camera";
  std::string synth_segment = "tracker";
  bool synth_describe = false;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  synth_cmd->add_option("--skaters", synth_config.n_skaters);
  synth_cmd->add_option("--jumps", synth_config.jumps_per_skater);
  synth_cmd->add_option("--error-fraction", synth_config.error_fraction);
  synth_cmd->add_option("--skater-error-fractions",
                        synth_config.per_skater_error_fraction);
  synth_cmd->add_option("--lean-error", synth_config.lean_error_deg);
  synth_cmd->add_option("--lean-correct", synth_config.lean_correct_deg);
  synth_cmd->add_option("--flight-height", synth_config.flight_height);
  synth_cmd->add_option("--noise", synth_config.noise_sigma);
  synth_cmd->add_option("--angle-noise", synth_config.angle_noise_deg);
  synth_cmd->add_option("--fps", synth_config.fps);
  synth_cmd->add_option("--seed", synth_config.seed);
  synth_cmd->add_option("--source", synth_source)
      ->check(CLI::IsMember({"camera", "imu"}));
  synth_cmd->add_option("--segment-mode", synth_segment)
      ->check(CLI::IsMember({"tracker", "analytic"}));
  synth_cmd->add_option("--out", synth_out);
  synth_cmd->add_flag("--describe", synth_describe,
                      "print closed-form parameters and exit");

  // segment
  std::string seg_detections, seg_pose, seg_out = "out/segment";
  tracker::TrackerConfig tracker_config;
  tracker::CropConfig crop_config;
  double v_change_min = 1.5;
  int smoothing = 9;
  auto* segment_cmd =
      app.add_subcommand("segment", "locate and crop the jump from detections");
  segment_cmd->add_option("--detections", seg_detections)->required();
  segment_cmd->add_option("--pose", seg_pose)->required();
  segment_cmd->add_option("--out", seg_out);
  segment_cmd->add_option("--iou-min", tracker_config.iou_min);
  segment_cmd->add_option("--max-age", tracker_config.max_age);
  segment_cmd->add_option("--min-hits", tracker_config.min_hits);
  segment_cmd->add_option("--v-change-min", v_change_min);
  segment_cmd->add_option("--smoothing", smoothing);
  auto* wl = segment_cmd->add_option("--window-len", crop_config.window_len);
  segment_cmd->add_option("--aligned-index", crop_config.aligned_index);
  segment_cmd->add_option("--takeoff-offset", crop_config.takeoff_offset);

  // evaluate
  EvalFlags eval_flags;
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "leave-one-skater-out cross-validation");
  add_eval_flags(evaluate_cmd, eval_flags);
  evaluate_cmd->add_option("--config", eval_flags.config_name);
  evaluate_cmd->add_flag("--all-configs", eval_flags.all_configs,
                         "run all ten feature configurations");

  // analyze
  EvalFlags analyze_flags;
  std::string analyze_joint = "LFoot";
  auto* analyze_cmd = app.add_subcommand(
      "analyze", "feature importance and trajectory analytics");
  add_eval_flags(analyze_cmd, analyze_flags);
  analyze_cmd->add_option("--config", analyze_flags.config_name);
  analyze_cmd->add_option("--joint", analyze_joint);

  // judge
  EvalFlags judge_flags;
  std::string judge_manifest;
  auto* judge_cmd =
      app.add_subcommand("judge", "train on one manifest and judge another");
  add_eval_flags(judge_cmd, judge_flags);
  judge_cmd->add_option("--config", judge_flags.config_name);
  judge_cmd->add_option("--judge-manifest", judge_manifest)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth_cmd->parsed())
      return run_synth(*synth_cmd, synth_config, synth_out, synth_source,
                       synth_segment, synth_describe);
    if (segment_cmd->parsed())
      return run_segment(seg_detections, seg_pose, seg_out, tracker_config,
                         v_change_min, smoothing, crop_config, wl->count() == 0);
    if (evaluate_cmd->parsed()) return run_evaluate(eval_flags);
    if (analyze_cmd->parsed()) return run_analyze(analyze_flags, analyze_joint);
    if (judge_cmd->parsed()) return run_judge(judge_flags, judge_manifest);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ManifestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEval;
  }
  return kExitUsage;
}
