#include "edgejudge/ingest.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace edgejudge::ingest {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ifstream open_or_throw(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open file: " + path.string());
  return in;
}

void save_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ManifestError("cannot write file: " + path.string());
  out << text;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) tokens.push_back(tok);
  return tokens;
}

double parse_real(const std::string& tok, const std::string& where) {
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw ParseError("bad numeric token '" + tok + "' " + where);
  return v;
}

// Shared body parser for pose and angle matrices.
Matrix parse_matrix(std::istream& stream, int cols, int header_lines_consumed,
                    bool allow_missing, const char* what) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = header_lines_consumed;
  while (std::getline(stream, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    auto tokens = split_ws(line);
    if (static_cast<int>(tokens.size()) != cols)
      throw ParseError(std::string(what) + ": expected " + std::to_string(cols) +
                       " values, got " + std::to_string(tokens.size()) +
                       " at line " + std::to_string(lineno));
    std::vector<double> row(cols);
    for (int c = 0; c < cols; ++c) {
      double v = parse_real(tokens[c], "at line " + std::to_string(lineno));
      if (!std::isfinite(v) && !allow_missing) {
        int frame = static_cast<int>(rows.size());
        std::string loc = cols == kPoseDims
                              ? "frame " + std::to_string(frame) + ", joint " +
                                    joint_names()[c / 3]
                              : "frame " + std::to_string(frame) + ", axis " +
                                    std::to_string(c);
        throw ValidationError(std::string(what) + ": non-finite value at " + loc);
      }
      row[c] = v;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(std::string(what) + ": no data rows");
  Matrix m(rows.size(), cols);
  for (size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rows[r][c];
  return m;
}

}  // namespace

std::vector<DetectionRecord> parse_detections(std::istream& stream) {
  std::vector<DetectionRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(stream, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("malformed detection at line " + std::to_string(lineno) +
                       ": " + e.what());
    }
    DetectionRecord rec;
    try {
      rec.frame_idx = j.at("frame_idx").get<int>();
      auto bbox = j.at("bbox");
      if (!bbox.is_array() || bbox.size() != 4)
        throw ParseError("bbox must have 4 entries at line " + std::to_string(lineno));
      rec.x1 = bbox[0].get<double>();
      rec.y1 = bbox[1].get<double>();
      rec.x2 = bbox[2].get<double>();
      rec.y2 = bbox[3].get<double>();
      rec.confidence = j.at("confidence").get<double>();
    } catch (const json::exception& e) {
      throw ParseError("malformed detection at line " + std::to_string(lineno) +
                       ": " + e.what());
    }
    if (rec.frame_idx < 0)
      throw ValidationError("negative frame_idx at line " + std::to_string(lineno));
    if (!(rec.x1 < rec.x2))
      throw ValidationError("x1 < x2 violated at line " + std::to_string(lineno));
    if (!(rec.y1 < rec.y2))
      throw ValidationError("y1 < y2 violated at line " + std::to_string(lineno));
    if (!(rec.confidence >= 0 && rec.confidence <= 1))
      throw ValidationError("confidence outside [0,1] at line " + std::to_string(lineno));
    records.push_back(rec);
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const DetectionRecord& a, const DetectionRecord& b) {
                     return a.frame_idx < b.frame_idx;
                   });
  return records;
}

std::vector<DetectionRecord> load_detections(const fs::path& path) {
  auto in = open_or_throw(path);
  return parse_detections(in);
}

void write_detections(std::ostream& out, const std::vector<DetectionRecord>& records) {
  for (const auto& r : records) {
    json j;
    j["frame_idx"] = r.frame_idx;
    j["bbox"] = {r.x1, r.y1, r.x2, r.y2};
    j["confidence"] = r.confidence;
    out << j.dump() << '\n';
  }
}

PoseSequence parse_pose_sequence(std::istream& stream, bool allow_missing) {
  std::string line;
  if (!std::getline(stream, line)) throw ParseError("pose file: empty");
  auto fps_tokens = split_ws(line);
  if (fps_tokens.size() != 2 || fps_tokens[0] != "fps")
    throw ParseError("pose file: expected 'fps <value>' header");
  double fps = parse_real(fps_tokens[1], "in fps header");
  if (!(fps > 0)) throw ValidationError("pose file: fps must be positive");

  if (!std::getline(stream, line)) throw ParseError("pose file: missing joints header");
  auto jt = split_ws(line);
  if (jt.empty() || jt[0] != "joints")
    throw ParseError("pose file: expected 'joints <names>' header");
  if (static_cast<int>(jt.size()) - 1 != kNumJoints)
    throw ParseError("pose file: expected " + std::to_string(kNumJoints) +
                     " joints, got " + std::to_string(jt.size() - 1));
  for (int i = 0; i < kNumJoints; ++i)
    if (jt[i + 1] != joint_names()[i])
      throw ParseError("pose file: joint " + std::to_string(i) + " is '" +
                       jt[i + 1] + "', expected '" + joint_names()[i] + "'");

  PoseSequence seq;
  seq.fps = fps;
  seq.positions = parse_matrix(stream, kPoseDims, 2, allow_missing, "pose file");
  return seq;
}

PoseSequence load_pose_sequence(const fs::path& path, bool allow_missing) {
  auto in = open_or_throw(path);
  return parse_pose_sequence(in, allow_missing);
}

void write_pose_sequence(std::ostream& out, const PoseSequence& seq) {
  out << "fps " << format_real(seq.fps) << "\njoints";
  for (const auto& name : joint_names()) out << ' ' << name;
  out << '\n';
  for (int r = 0; r < seq.frames(); ++r) {
    for (int c = 0; c < kPoseDims; ++c) {
      if (c) out << ' ';
      out << format_real(seq.positions(r, c));
    }
    out << '\n';
  }
}

void save_pose_sequence(const fs::path& path, const PoseSequence& seq) {
  std::ostringstream oss;
  write_pose_sequence(oss, seq);
  save_text(path, oss.str());
}

SkateAngleSequence parse_angle_sequence(std::istream& stream, bool allow_missing) {
  std::string line;
  if (!std::getline(stream, line)) throw ParseError("angle file: empty");
  auto fps_tokens = split_ws(line);
  if (fps_tokens.size() != 2 || fps_tokens[0] != "fps")
    throw ParseError("angle file: expected 'fps <value>' header");
  double fps = parse_real(fps_tokens[1], "in fps header");
  if (!(fps > 0)) throw ValidationError("angle file: fps must be positive");

  SkateAngleSequence seq;
  seq.fps = fps;
  seq.angles = parse_matrix(stream, 3, 1, allow_missing, "angle file");
  for (int r = 0; r < seq.frames(); ++r)
    for (int c = 0; c < 3; ++c)
      if (std::isfinite(seq.angles(r, c)) && std::abs(seq.angles(r, c)) >= 180.0)
        throw ValidationError("angle file: |angle| >= 180 at frame " +
                              std::to_string(r));
  return seq;
}

SkateAngleSequence load_angle_sequence(const fs::path& path, bool allow_missing) {
  auto in = open_or_throw(path);
  return parse_angle_sequence(in, allow_missing);
}

void write_angle_sequence(std::ostream& out, const SkateAngleSequence& seq) {
  out << "fps " << format_real(seq.fps) << '\n';
  for (int r = 0; r < seq.frames(); ++r) {
    for (int c = 0; c < 3; ++c) {
      if (c) out << ' ';
      out << format_real(seq.angles(r, c));
    }
    out << '\n';
  }
}

void save_angle_sequence(const fs::path& path, const SkateAngleSequence& seq) {
  std::ostringstream oss;
  write_angle_sequence(oss, seq);
  save_text(path, oss.str());
}

namespace {

// Interpolate non-finite runs in one column. Returns an error string on
// rejection, empty on success.
std::string fill_gaps_column(Matrix& m, int col, int max_gap) {
  const int n = static_cast<int>(m.rows());
  int run_start = -1;
  for (int r = 0; r <= n; ++r) {
    bool missing = r < n && !std::isfinite(m(r, col));
    if (missing && run_start < 0) run_start = r;
    if (!missing && run_start >= 0) {
      int run_len = r - run_start;
      if (run_start == 0 || r == n)
        return "gap at sequence boundary (frames " + std::to_string(run_start) +
               ".." + std::to_string(r - 1) + ")";
      if (run_len > max_gap)
        return "occlusion gap " + std::to_string(run_len) + " > " +
               std::to_string(max_gap);
      double lo = m(run_start - 1, col);
      double hi = m(r, col);
      for (int k = 0; k < run_len; ++k) {
        double t = static_cast<double>(k + 1) / (run_len + 1);
        m(run_start + k, col) = lo + t * (hi - lo);
      }
      run_start = -1;
    }
  }
  return {};
}

std::string fill_gaps(Matrix& m, int max_gap) {
  for (int c = 0; c < m.cols(); ++c)
    if (auto err = fill_gaps_column(m, static_cast<int>(c), max_gap); !err.empty())
      return err;
  return {};
}

}  // namespace

ValidationResult validate_sample(JumpSample& sample, int max_gap) {
  Matrix pose = sample.pose.positions;
  if (auto err = fill_gaps(pose, max_gap); !err.empty())
    return {false, "pose: " + err};
  std::optional<Matrix> angles;
  if (sample.angles) {
    angles = sample.angles->angles;
    if (auto err = fill_gaps(*angles, max_gap); !err.empty())
      return {false, "angles: " + err};
  }
  sample.pose.positions = std::move(pose);
  if (angles) sample.angles->angles = std::move(*angles);
  return {true, {}};
}

void write_manifest_line(std::ostream& out, const std::string& sample_id,
                         const std::string& skater_id, SampleSource source,
                         const std::string& pose_path,
                         const std::optional<std::string>& angle_path, int label) {
  out << sample_id << ' ' << skater_id << ' ' << to_string(source) << ' '
      << pose_path << ' ' << (angle_path ? *angle_path : "-") << ' ' << label
      << '\n';
}

Dataset load_dataset(const fs::path& manifest_path, const LoadOptions& options,
                     LoadReport* report) {
  auto in = open_or_throw(manifest_path);
  const fs::path base = manifest_path.parent_path();

  Dataset dataset;
  std::vector<std::string> seen_ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto tokens = split_ws(line);
    if (tokens.size() != 6)
      throw ManifestError("manifest line " + std::to_string(lineno) +
                          ": expected 6 fields, got " + std::to_string(tokens.size()));
    JumpSample sample;
    sample.sample_id = tokens[0];
    sample.skater_id = tokens[1];
    sample.source = sample_source_from_string(tokens[2]);
    if (std::find(seen_ids.begin(), seen_ids.end(), sample.sample_id) != seen_ids.end())
      throw ManifestError("duplicate sample_id '" + sample.sample_id +
                          "' at manifest line " + std::to_string(lineno));
    seen_ids.push_back(sample.sample_id);

    if (tokens[5] != "0" && tokens[5] != "1")
      throw ManifestError("label must be 0 or 1 at manifest line " +
                          std::to_string(lineno));
    sample.label = tokens[5] == "1" ? 1 : 0;

    fs::path pose_path = fs::path(tokens[3]);
    if (!pose_path.is_absolute()) pose_path = base / pose_path;
    sample.pose = load_pose_sequence(pose_path, /*allow_missing=*/true);

    if (tokens[4] != "-") {
      if (sample.source == SampleSource::Camera)
        throw ManifestError("camera sample '" + sample.sample_id +
                            "' must not carry skate angles");
      fs::path angle_path = fs::path(tokens[4]);
      if (!angle_path.is_absolute()) angle_path = base / angle_path;
      sample.angles = load_angle_sequence(angle_path, /*allow_missing=*/true);
      double pose_dur = sample.pose.frames() / sample.pose.fps;
      double angle_dur = sample.angles->frames() / sample.angles->fps;
      double tol = 1.0 / std::min(sample.pose.fps, sample.angles->fps);
      if (std::abs(pose_dur - angle_dur) > tol + 1e-9)
        throw ValidationError("sample '" + sample.sample_id +
                              "': angle duration differs from pose duration by more "
                              "than one frame");
    }

    auto result = validate_sample(sample, options.max_gap);
    if (!result.accepted) {
      if (!options.skip_rejected)
        throw ValidationError("sample '" + sample.sample_id + "' rejected: " +
                              result.reason);
      if (report) report->rejected.push_back(sample.sample_id + ": " + result.reason);
      continue;
    }
    dataset.samples.push_back(std::move(sample));
  }
  dataset.rebuild_index();
  return dataset;
}

}  // namespace edgejudge::ingest
