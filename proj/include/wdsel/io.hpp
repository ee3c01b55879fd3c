#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "wdsel/imu_sim.hpp"
#include "wdsel/metrics.hpp"
#include "wdsel/signal.hpp"

namespace wdsel::io {

namespace fs = std::filesystem;

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text, std::string_view context);

/// Comma-separated table with a fixed header. Missing files are io errors,
/// malformed content is an input error naming file and line.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const fs::path& path, const std::vector<std::string>& expected_header);
void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Rows of preformatted cells (for tables that mix names and numbers).
void write_cells_csv(const fs::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);
void ensure_directory(const fs::path& dir);

/// `t,ax,ay,az,gx,gy,gz`; t starts at t0.
void write_signal_csv(const fs::path& path, const Signal& signal, double t0 = 0.0);
/// Rate is recovered from the time column, which must be uniform.
Signal read_signal_csv(const fs::path& path);

/// `t,px,py,pz,qw,qx,qy,qz`.
void write_trajectory_csv(const fs::path& path, const GroundTruth& truth);
GroundTruth read_trajectory_csv(const fs::path& path);
/// Positions only, with time stamps (used for reconstructions).
void write_poses_csv(const fs::path& path, const std::vector<double>& t,
                     const std::vector<Eigen::Vector3d>& positions,
                     const std::vector<Eigen::Quaterniond>& orientations);

struct LabelRow {
  std::size_t window_id = 0;
  GuidanceVector label{};  // dyaw, dpitch, droll, dx, dy, dz
};

void write_labels_csv(const fs::path& path, const std::vector<LabelRow>& rows);
std::vector<LabelRow> read_labels_csv(const fs::path& path);

}  // namespace wdsel::io
