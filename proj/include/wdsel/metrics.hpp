#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Geometry>

namespace wdsel {

using PointSequence = std::vector<Eigen::Vector3d>;

double discrete_frechet(const PointSequence& p, const PointSequence& q);

/// `count` points equally spaced in arclength along the polyline.
PointSequence resample_arclength(const PointSequence& points, std::size_t count);

double path_length(const PointSequence& points);

struct TrajectoryScore {
  double frechet = 0.0;
  double path_length = 0.0;
  double normalized = 0.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

/// Resamples both curves, rigidly aligns the reconstruction onto the truth
/// (least squares, no scaling) and scores the aligned discrete Frechet
/// distance, normalized by the truth path length.
TrajectoryScore align_then_score(const PointSequence& reconstructed, const PointSequence& truth,
                                 std::size_t resample_points = 200);

/// Guidance vectors are (dyaw, dpitch, droll, dx, dy, dz).
using GuidanceVector = std::array<double, 6>;

struct GuidanceErrors {
  double attitude_mae_deg = 0.0;
  double position_mae_m = 0.0;
  std::array<double, 3> attitude_axis_deg{};
  std::array<double, 3> position_axis_m{};
};

GuidanceErrors guidance_errors(const std::vector<GuidanceVector>& predictions,
                               const std::vector<GuidanceVector>& labels);

struct SilhouetteResult {
  std::optional<double> score;  // empty when fewer than two usable classes
  std::vector<std::size_t> excluded_classes;
};

SilhouetteResult silhouette_score(const std::vector<std::vector<double>>& features,
                                  const std::vector<std::size_t>& labels);

}  // namespace wdsel
