#include "wdsel/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wdsel/error.hpp"

namespace wdsel::io {

namespace {

const std::vector<std::string> kSignalHeader = {"t", "ax", "ay", "az", "gx", "gy", "gz"};
const std::vector<std::string> kTrajectoryHeader = {"t", "px", "py", "pz", "qw", "qx", "qy", "qz"};
const std::vector<std::string> kLabelHeader = {"window_id", "dyaw", "dpitch", "droll",
                                               "dx", "dy", "dz"};

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                     : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i];
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view context) {
  text = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    fail(ErrorKind::input, std::string(context) + ": not a number '" + std::string(text) + "'");
  if (!std::isfinite(v)) fail(ErrorKind::input, std::string(context) + ": non-finite value");
  return v;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) ensure_directory(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable read_csv(const fs::path& path, const std::vector<std::string>& expected_header) {
  const std::string text = read_text(path);
  CsvTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (table.header.empty()) {
      for (auto f : fields) table.header.emplace_back(trim(f));
      if (table.header != expected_header)
        fail(ErrorKind::input, where + ": expected header '" + join(expected_header) + "'");
      continue;
    }
    if (fields.size() != expected_header.size())
      fail(ErrorKind::input, where + ": expected " + std::to_string(expected_header.size()) +
                                 " fields, got " + std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(parse_double(f, where));
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) fail(ErrorKind::input, path.string() + ": empty file");
  return table;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::string text = join(header) + '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) text += ',';
      text += format_double(row[i]);
    }
    text += '\n';
  }
  write_text(path, text);
}

void write_cells_csv(const fs::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  std::string text = join(header) + '\n';
  for (const auto& row : rows) text += join(row) + '\n';
  write_text(path, text);
}

void write_signal_csv(const fs::path& path, const Signal& signal, double t0) {
  signal.validate_imu();
  std::vector<std::vector<double>> rows(signal.length());
  for (std::size_t k = 0; k < signal.length(); ++k) {
    rows[k].push_back(t0 + static_cast<double>(k) / signal.sample_rate);
    for (std::size_t c = 0; c < kImuChannels; ++c) rows[k].push_back(signal.channels[c][k]);
  }
  write_csv(path, kSignalHeader, rows);
}

namespace {

double rate_from_times(const std::vector<std::vector<double>>& rows, const fs::path& path) {
  if (rows.size() < 2) fail(ErrorKind::input, path.string() + ": need at least 2 samples");
  const double span = rows.back()[0] - rows.front()[0];
  if (!(span > 0.0)) fail(ErrorKind::input, path.string() + ": time column must increase");
  const double dt = span / static_cast<double>(rows.size() - 1);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double step = rows[k][0] - rows[k - 1][0];
    if (std::abs(step - dt) > 1e-6 * dt + 1e-12)
      fail(ErrorKind::input, path.string() + ": non-uniform sampling at row " + std::to_string(k));
  }
  // Time stamps are written as k / rate, so integer rates come back within a
  // few ulps; snap those so the rate round-trips exactly.
  const double rate = 1.0 / dt;
  const double nearest = std::round(rate);
  return std::abs(rate - nearest) <= 1e-9 * nearest ? nearest : rate;
}

}  // namespace

Signal read_signal_csv(const fs::path& path) {
  const CsvTable table = read_csv(path, kSignalHeader);
  Signal s = Signal::zeros(kImuChannels, table.rows.size(), rate_from_times(table.rows, path));
  for (std::size_t k = 0; k < table.rows.size(); ++k)
    for (std::size_t c = 0; c < kImuChannels; ++c) s.channels[c][k] = table.rows[k][c + 1];
  return s;
}

void write_poses_csv(const fs::path& path, const std::vector<double>& t,
                     const std::vector<Eigen::Vector3d>& positions,
                     const std::vector<Eigen::Quaterniond>& orientations) {
  if (t.size() != positions.size() || t.size() != orientations.size())
    fail(ErrorKind::input, "trajectory columns differ in length");
  std::vector<std::vector<double>> rows(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    const auto& p = positions[k];
    const auto& q = orientations[k];
    rows[k] = {t[k], p.x(), p.y(), p.z(), q.w(), q.x(), q.y(), q.z()};
  }
  write_csv(path, kTrajectoryHeader, rows);
}

void write_trajectory_csv(const fs::path& path, const GroundTruth& truth) {
  write_poses_csv(path, truth.t, truth.positions, truth.orientations);
}

GroundTruth read_trajectory_csv(const fs::path& path) {
  const CsvTable table = read_csv(path, kTrajectoryHeader);
  GroundTruth gt;
  gt.sample_rate = rate_from_times(table.rows, path);
  for (const auto& r : table.rows) {
    gt.t.push_back(r[0]);
    gt.positions.emplace_back(r[1], r[2], r[3]);
    Eigen::Quaterniond q(r[4], r[5], r[6], r[7]);
    if (std::abs(q.norm() - 1.0) > 1e-6)
      fail(ErrorKind::input, path.string() + ": quaternion is not unit length");
    gt.orientations.push_back(q);
  }
  return gt;
}

void write_labels_csv(const fs::path& path, const std::vector<LabelRow>& rows) {
  std::vector<std::vector<double>> out;
  for (const auto& r : rows) {
    std::vector<double> row{static_cast<double>(r.window_id)};
    row.insert(row.end(), r.label.begin(), r.label.end());
    out.push_back(std::move(row));
  }
  write_csv(path, kLabelHeader, out);
}

std::vector<LabelRow> read_labels_csv(const fs::path& path) {
  const CsvTable table = read_csv(path, kLabelHeader);
  std::vector<LabelRow> out;
  for (const auto& r : table.rows) {
    if (r[0] < 0 || r[0] != std::floor(r[0]))
      fail(ErrorKind::input, path.string() + ": window_id must be a non-negative integer");
    LabelRow row;
    row.window_id = static_cast<std::size_t>(r[0]);
    for (std::size_t i = 0; i < 6; ++i) row.label[i] = r[i + 1];
    out.push_back(row);
  }
  return out;
}

}  // namespace wdsel::io
