#include "lo/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "lo/error.hpp"

namespace lo::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Numbers

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), end);
}

namespace {

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_int(std::string_view s, long long& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw RuntimeError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw RuntimeError("cannot open '" + path.string() + "' for reading");
  return in;
}

// ---------------------------------------------------------------------------
// Little-endian primitives

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xFFu));
  buf.push_back(static_cast<char>((v >> 8) & 0xFFu));
}

void put_f32(std::string& buf, float f) { put_u32(buf, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

constexpr std::size_t kHeaderBytes = 16;
constexpr std::size_t kRecordBytes = 20;

}  // namespace

// ---------------------------------------------------------------------------
// Scans

void write_scan(const fs::path& path, const LidarScan& scan) {
  std::string buf;
  buf.reserve(kHeaderBytes + kRecordBytes * scan.size());
  buf.append("LSCN", 4);
  put_u32(buf, kScanVersion);
  put_u32(buf, static_cast<std::uint32_t>(scan.size()));
  put_f32(buf, 0.0f);
  for (const Point& p : scan.points()) {
    put_f32(buf, static_cast<float>(p.position.x()));
    put_f32(buf, static_cast<float>(p.position.y()));
    put_f32(buf, static_cast<float>(p.position.z()));
    put_f32(buf, static_cast<float>(p.time_offset));
    put_u16(buf, static_cast<std::uint16_t>(p.scanline));
    put_u16(buf, 0);
  }
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw RuntimeError("failed writing '" + path.string() + "'");
}

LidarScan read_scan(const fs::path& path, double stamp, double period, int num_scanlines) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  const std::string file = path.string();
  if (data.size() < kHeaderBytes) throw ParseError(file, 0, "header", "file shorter than header");
  if (std::memcmp(bytes, "LSCN", 4) != 0) throw ParseError(file, 0, "magic", "expected LSCN");
  const std::uint32_t version = get_u32(bytes + 4);
  if (version != kScanVersion) {
    throw ParseError(file, 0, "version", "unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = get_u32(bytes + 8);
  if (data.size() != kHeaderBytes + kRecordBytes * static_cast<std::size_t>(count)) {
    throw ParseError(file, 0, "point_count",
                     "header declares " + std::to_string(count) + " points but file holds " +
                         std::to_string((data.size() - kHeaderBytes) / kRecordBytes));
  }
  std::vector<Point> points;
  points.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const unsigned char* r = bytes + kHeaderBytes + kRecordBytes * i;
    const Vec3 p(get_f32(r), get_f32(r + 4), get_f32(r + 8));
    points.emplace_back(p, static_cast<double>(get_f32(r + 12)), get_u16(r + 16));
  }
  try {
    return LidarScan(stamp, period, num_scanlines, std::move(points));
  } catch (const ConfigError& e) {
    throw ParseError(file, 0, "records", e.what());
  }
}

std::string scan_filename(double stamp) {
  const long long ns = std::llround(stamp * 1e9);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%019lld.bin", ns);
  return buf;
}

std::optional<double> stamp_from_filename(const fs::path& path) {
  if (path.extension() != ".bin") return std::nullopt;
  long long ns = 0;
  if (!parse_int(path.stem().string(), ns)) return std::nullopt;
  return static_cast<double>(ns) / 1e9;
}

// ---------------------------------------------------------------------------
// Trajectories

std::string format_trajectory_line(const StampedPose& s) {
  char stamp[64];
  std::snprintf(stamp, sizeof stamp, "%.9f", s.stamp);
  const Vec3& t = s.pose.translation();
  const Eigen::Quaterniond& q = s.pose.rotation();
  std::string line = stamp;
  for (double v : {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()}) {
    line += ' ';
    line += format_double(v);
  }
  return line;
}

void write_trajectory(const Trajectory& traj, const fs::path& path) {
  auto out = open_out(path);
  out << "# stamp tx ty tz qx qy qz qw\n";
  for (const StampedPose& s : traj) out << format_trajectory_line(s) << '\n';
}

Trajectory read_trajectory(const fs::path& path) {
  auto in = open_in(path);
  static const char* names[] = {"stamp", "tx", "ty", "tz", "qx", "qy", "qz", "qw"};
  Trajectory traj;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream ss(t);
    std::array<double, 8> v{};
    std::string tok;
    std::size_t n = 0;
    while (ss >> tok) {
      if (n >= 8) throw ParseError(path.string(), lineno, "record", "more than 8 fields");
      if (!parse_double(tok, v[n])) {
        throw ParseError(path.string(), lineno, names[n], "not a number: '" + tok + "'");
      }
      ++n;
    }
    if (n != 8) throw ParseError(path.string(), lineno, names[n], "missing field");
    if (!traj.empty() && !(v[0] > traj.back().stamp)) {
      throw ParseError(path.string(), lineno, "stamp", "stamps must strictly increase");
    }
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (!(q.norm() > 0.5)) {
      throw ParseError(path.string(), lineno, "qw", "quaternion is not unit length");
    }
    traj.push_back({v[0], Pose(q, Vec3(v[1], v[2], v[3]))});
  }
  return traj;
}

// ---------------------------------------------------------------------------
// CSV

std::string quote_csv_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

namespace {

// Reads numeric CSV rows with a fixed header; returns the parsed values per row.
std::vector<std::vector<double>> read_numeric_csv(const fs::path& path,
                                                  const std::vector<std::string>& columns) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::vector<double>> rows;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split_csv_record(t);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() != columns.size()) {
        throw ParseError(path.string(), lineno, "header", "expected " + std::to_string(columns.size()) +
                                                              " columns");
      }
      for (std::size_t i = 0; i < columns.size(); ++i) {
        if (trim(fields[i]) != columns[i]) {
          throw ParseError(path.string(), lineno, columns[i], "unexpected header '" + fields[i] + "'");
        }
      }
      continue;
    }
    if (fields.size() != columns.size()) {
      throw ParseError(path.string(), lineno, "record",
                       "expected " + std::to_string(columns.size()) + " fields, got " +
                           std::to_string(fields.size()));
    }
    std::vector<double> v(columns.size());
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (!parse_double(trim(fields[i]), v[i])) {
        throw ParseError(path.string(), lineno, columns[i], "not a number: '" + fields[i] + "'");
      }
    }
    if (!rows.empty() && !(v[0] > rows.back()[0])) {
      throw ParseError(path.string(), lineno, columns[0], "stamps must strictly increase");
    }
    rows.push_back(std::move(v));
  }
  return rows;
}

const std::vector<std::string> kImuColumns = {"stamp", "wx", "wy", "wz", "ax", "ay", "az"};
const std::vector<std::string> kStateColumns = {"stamp", "vx",  "vy",  "vz",  "bgx",
                                                "bgy",   "bgz", "bax", "bay", "baz"};

}  // namespace

void write_imu_csv(std::span<const ImuMeasurement> imu, const fs::path& path) {
  auto out = open_out(path);
  out << "stamp,wx,wy,wz,ax,ay,az\n";
  for (const ImuMeasurement& m : imu) {
    out << format_double(m.stamp);
    for (int i = 0; i < 3; ++i) out << ',' << format_double(m.angular_velocity[i]);
    for (int i = 0; i < 3; ++i) out << ',' << format_double(m.linear_acceleration[i]);
    out << '\n';
  }
}

std::vector<ImuMeasurement> read_imu_csv(const fs::path& path) {
  std::vector<ImuMeasurement> out;
  for (const auto& v : read_numeric_csv(path, kImuColumns)) {
    out.push_back({v[0], Vec3(v[1], v[2], v[3]), Vec3(v[4], v[5], v[6])});
  }
  return out;
}

void write_states_csv(std::span<const synth::VelocityBiasSample> states, const fs::path& path) {
  auto out = open_out(path);
  out << "stamp,vx,vy,vz,bgx,bgy,bgz,bax,bay,baz\n";
  for (const auto& s : states) {
    out << format_double(s.stamp);
    for (const Vec3* v : {&s.velocity, &s.gyro_bias, &s.accel_bias}) {
      for (int i = 0; i < 3; ++i) out << ',' << format_double((*v)[i]);
    }
    out << '\n';
  }
}

std::vector<synth::VelocityBiasSample> read_states_csv(const fs::path& path) {
  std::vector<synth::VelocityBiasSample> out;
  for (const auto& v : read_numeric_csv(path, kStateColumns)) {
    out.push_back({v[0], Vec3(v[1], v[2], v[3]), Vec3(v[4], v[5], v[6]), Vec3(v[7], v[8], v[9])});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

std::string_view to_string(StampConvention c) {
  switch (c) {
    case StampConvention::Start: return "start";
    case StampConvention::Mid: return "mid";
    case StampConvention::End: return "end";
  }
  return "start";
}

StampConvention parse_stamp_convention(std::string_view s) {
  if (s == "start") return StampConvention::Start;
  if (s == "mid") return StampConvention::Mid;
  if (s == "end") return StampConvention::End;
  throw ConfigError("stamp_convention must be one of start|mid|end, got '" + std::string(s) + "'");
}

namespace {

Vec3 vec3_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(what + ": expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() ? p : base / p;
}

fs::path relative_to(const fs::path& p, const fs::path& dir) {
  std::error_code ec;
  const auto rel = fs::relative(p, dir, ec);
  return ec || rel.empty() ? p : rel;
}

}  // namespace

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("manifest '" + path.string() + "': " + e.what());
  }
  fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (const char* root = std::getenv(kDatasetRootEnv); root != nullptr && *root != '\0') {
    base = root;
  }

  DatasetManifest m;
  try {
    m.name = j.at("name").get<std::string>();
    m.sequence = j.value("sequence", m.name);
    m.scan_dir = resolve(base, j.at("scan_dir").get<std::string>());
    m.gt_path = resolve(base, j.at("gt_path").get<std::string>());
    if (j.contains("imu_path") && !j["imu_path"].is_null()) {
      m.imu_path = resolve(base, j["imu_path"].get<std::string>());
    }
    if (j.contains("imu_states_path") && !j["imu_states_path"].is_null()) {
      m.imu_states_path = resolve(base, j["imu_states_path"].get<std::string>());
    }
    const json& lidar = j.at("lidar");
    m.num_scanlines = lidar.at("num_scanlines").get<int>();
    m.period = lidar.at("period").get<double>();
    m.stamp_convention = parse_stamp_convention(lidar.value("stamp_convention", "start"));
    if (j.contains("imu")) {
      const json& imu = j["imu"];
      m.imu_rate = imu.value("rate", 0.0);
      if (imu.contains("gravity")) m.gravity = vec3_from(imu["gravity"], "imu.gravity");
      if (imu.contains("lidar_to_imu")) {
        const json& e = imu["lidar_to_imu"];
        const Vec3 t = vec3_from(e.at("translation"), "imu.lidar_to_imu.translation");
        const json& q = e.at("rotation_xyzw");
        if (!q.is_array() || q.size() != 4) {
          throw ConfigError("imu.lidar_to_imu.rotation_xyzw: expected 4 numbers");
        }
        m.lidar_to_imu = Pose(Eigen::Quaterniond(q[3].get<double>(), q[0].get<double>(),
                                                 q[1].get<double>(), q[2].get<double>()),
                              t);
      }
    }
    m.units = j.value("units", "SI");
  } catch (const json::exception& e) {
    throw ConfigError("manifest '" + path.string() + "': " + e.what());
  }
  if (m.units != "SI") throw ConfigError("manifest: only SI units are supported");
  if (m.num_scanlines < 1 || !(m.period > 0.0)) {
    throw ConfigError("manifest: lidar.num_scanlines and lidar.period must be positive");
  }
  auto require = [&](const fs::path& p, const char* what) {
    if (!fs::exists(p)) {
      throw ConfigError("manifest '" + path.string() + "': " + what + " '" + p.string() +
                        "' does not exist");
    }
  };
  require(m.scan_dir, "scan_dir");
  require(m.gt_path, "gt_path");
  if (m.imu_path) require(*m.imu_path, "imu_path");
  if (m.imu_states_path) require(*m.imu_states_path, "imu_states_path");
  return m;
}

void write_manifest(const DatasetManifest& m, const fs::path& path) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  json j;
  j["name"] = m.name;
  j["sequence"] = m.sequence;
  j["scan_dir"] = relative_to(m.scan_dir, dir).generic_string();
  j["gt_path"] = relative_to(m.gt_path, dir).generic_string();
  j["imu_path"] = m.imu_path ? json(relative_to(*m.imu_path, dir).generic_string()) : json(nullptr);
  j["imu_states_path"] =
      m.imu_states_path ? json(relative_to(*m.imu_states_path, dir).generic_string()) : json(nullptr);
  j["lidar"] = {{"num_scanlines", m.num_scanlines},
                {"period", m.period},
                {"stamp_convention", std::string(to_string(m.stamp_convention))}};
  const Eigen::Quaterniond& q = m.lidar_to_imu.rotation();
  const Vec3& t = m.lidar_to_imu.translation();
  j["imu"] = {{"rate", m.imu_rate},
              {"gravity", {m.gravity.x(), m.gravity.y(), m.gravity.z()}},
              {"gravity_convention", "world-frame gravity vector; accelerometers report specific force"},
              {"velocity_frame", "world"},
              {"lidar_to_imu",
               {{"translation", {t.x(), t.y(), t.z()}},
                {"rotation_xyzw", {q.x(), q.y(), q.z(), q.w()}}}}};
  j["units"] = m.units;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Datasets

ScanStream::ScanStream(std::vector<std::pair<double, fs::path>> files, double period,
                       int num_scanlines)
    : files_(std::move(files)), period_(period), num_scanlines_(num_scanlines) {}

LidarScan ScanStream::load(std::size_t i) const {
  return read_scan(files_.at(i).second, files_[i].first, period_, num_scanlines_);
}

Dataset load_dataset(const fs::path& manifest_path) {
  Dataset d;
  d.manifest = read_manifest(manifest_path);
  std::vector<std::pair<double, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(d.manifest.scan_dir)) {
    if (!entry.is_regular_file()) continue;
    if (auto stamp = stamp_from_filename(entry.path())) files.emplace_back(*stamp, entry.path());
  }
  std::sort(files.begin(), files.end());
  d.scans = ScanStream(std::move(files), d.manifest.period, d.manifest.num_scanlines);
  d.gt = read_trajectory(d.manifest.gt_path);
  if (d.manifest.imu_path) d.imu = read_imu_csv(*d.manifest.imu_path);
  if (d.manifest.imu_states_path) d.imu_states = read_states_csv(*d.manifest.imu_states_path);
  return d;
}

fs::path write_synthetic_dataset(const synth::SyntheticSequence& seq, const fs::path& dir,
                                 const std::string& name, const std::string& sequence,
                                 double imu_rate) {
  fs::create_directories(dir / "scans");
  for (const LidarScan& s : seq.scans) write_scan(dir / "scans" / scan_filename(s.stamp()), s);
  write_trajectory(seq.gt, dir / "gt.txt");

  DatasetManifest m;
  m.name = name;
  m.sequence = sequence;
  m.scan_dir = dir / "scans";
  m.gt_path = dir / "gt.txt";
  m.num_scanlines = seq.scans.empty() ? 1 : seq.scans.front().num_scanlines();
  m.period = seq.scans.empty() ? 0.1 : seq.scans.front().period();
  if (!seq.imu.empty()) {
    write_imu_csv(seq.imu, dir / "imu.csv");
    write_states_csv(seq.states, dir / "imu_states.csv");
    m.imu_path = dir / "imu.csv";
    m.imu_states_path = dir / "imu_states.csv";
    m.imu_rate = imu_rate;
  }
  const fs::path manifest = dir / "manifest.json";
  write_manifest(m, manifest);
  return manifest;
}

// ---------------------------------------------------------------------------
// Results

std::string ResultRow::cell_key() const {
  std::string key;
  for (const std::string& f : {dataset, sequence, dewarp, init, features, residual,
                               format_double(epsilon), curvature, format_double(window_s)}) {
    key += quote_csv_field(f);
    key += ',';
  }
  return key;
}

std::string format_result_row(const ResultRow& r) {
  std::string line;
  auto text = [&](const std::string& s) {
    line += quote_csv_field(s);
    line += ',';
  };
  auto num = [&](double v) {
    line += format_double(v);
    line += ',';
  };
  text(r.dataset);
  text(r.sequence);
  text(r.dewarp);
  text(r.init);
  text(r.features);
  text(r.residual);
  num(r.epsilon);
  text(r.curvature);
  num(r.window_s);
  line += std::to_string(r.window_j);
  line += ',';
  for (double v : {r.ate_t, r.rte_t, r.wrte_t, r.ate_r, r.rte_r, r.wrte_r, r.runtime_ms}) num(v);
  line += format_double(r.iterations_mean);
  return line;
}

void write_results_csv(std::span<const ResultRow> rows, const fs::path& path) {
  auto out = open_out(path);
  out << kResultsHeader << '\n';
  for (const ResultRow& r : rows) out << format_result_row(r) << '\n';
}

void append_result_row(const ResultRow& row, const fs::path& path) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  auto out = open_out(path, std::ios::out | std::ios::app);
  if (fresh) out << kResultsHeader << '\n';
  out << format_result_row(row) << '\n';
  out.flush();
}

std::vector<ResultRow> read_results_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  std::vector<ResultRow> rows;
  const auto header = split_csv_record(kResultsHeader);
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv_record(line);
    if (lineno == 1) {
      if (f != header) throw ParseError(path.string(), lineno, "header", "unexpected header");
      continue;
    }
    if (f.size() != header.size()) {
      throw ParseError(path.string(), lineno, "record",
                       "expected " + std::to_string(header.size()) + " fields");
    }
    auto number = [&](std::size_t i) {
      double v = 0.0;
      if (!parse_double(f[i], v)) {
        throw ParseError(path.string(), lineno, header[i], "not a number: '" + f[i] + "'");
      }
      return v;
    };
    ResultRow r;
    r.dataset = f[0];
    r.sequence = f[1];
    r.dewarp = f[2];
    r.init = f[3];
    r.features = f[4];
    r.residual = f[5];
    r.epsilon = number(6);
    r.curvature = f[7];
    r.window_s = number(8);
    r.window_j = static_cast<int>(number(9));
    r.ate_t = number(10);
    r.rte_t = number(11);
    r.wrte_t = number(12);
    r.ate_r = number(13);
    r.rte_r = number(14);
    r.wrte_r = number(15);
    r.runtime_ms = number(16);
    r.iterations_mean = number(17);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace lo::io
