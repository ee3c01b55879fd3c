#include "wdsel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "wdsel/error.hpp"
#include "wdsel/imu_sim.hpp"

namespace wdsel {

double discrete_frechet(const PointSequence& p, const PointSequence& q) {
  if (p.empty() || q.empty()) fail(ErrorKind::input, "discrete Frechet needs non-empty sequences");
  const std::size_t n = p.size(), m = q.size();
  std::vector<double> prev(m), cur(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = (p[i] - q[j]).norm();
      double reach;
      if (i == 0 && j == 0)
        reach = d;
      else if (i == 0)
        reach = std::max(cur[j - 1], d);
      else if (j == 0)
        reach = std::max(prev[0], d);
      else
        reach = std::max(std::min({prev[j], prev[j - 1], cur[j - 1]}), d);
      cur[j] = reach;
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

double path_length(const PointSequence& points) {
  double len = 0.0;
  for (std::size_t k = 1; k < points.size(); ++k) len += (points[k] - points[k - 1]).norm();
  return len;
}

PointSequence resample_arclength(const PointSequence& points, std::size_t count) {
  if (points.empty()) fail(ErrorKind::input, "cannot resample an empty trajectory");
  if (count < 2) fail(ErrorKind::config, "resampling needs at least 2 points");
  std::vector<double> cumulative(points.size(), 0.0);
  for (std::size_t k = 1; k < points.size(); ++k)
    cumulative[k] = cumulative[k - 1] + (points[k] - points[k - 1]).norm();
  const double total = cumulative.back();
  PointSequence out(count, points.front());
  if (total == 0.0) return out;
  std::size_t seg = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double s = total * static_cast<double>(i) / static_cast<double>(count - 1);
    while (seg + 2 < points.size() && cumulative[seg + 1] < s) ++seg;
    const double span = cumulative[seg + 1] - cumulative[seg];
    const double u = span > 0.0 ? std::clamp((s - cumulative[seg]) / span, 0.0, 1.0) : 0.0;
    out[i] = points[seg] + u * (points[seg + 1] - points[seg]);
  }
  return out;
}

TrajectoryScore align_then_score(const PointSequence& reconstructed, const PointSequence& truth,
                                 std::size_t resample_points) {
  if (truth.size() < 3) fail(ErrorKind::alignment, "alignment needs at least 3 truth points");
  if (reconstructed.empty()) fail(ErrorKind::input, "reconstructed trajectory is empty");
  const PointSequence t = resample_arclength(truth, resample_points);
  const PointSequence r = resample_arclength(reconstructed, resample_points);

  const auto n = static_cast<Eigen::Index>(resample_points);
  Eigen::Matrix3Xd src(3, n), dst(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    src.col(i) = r[static_cast<std::size_t>(i)];
    dst.col(i) = t[static_cast<std::size_t>(i)];
  }
  Eigen::Matrix3Xd centered = dst.colwise() - dst.rowwise().mean();
  Eigen::JacobiSVD<Eigen::Matrix3Xd> svd(centered);
  const auto sv = svd.singularValues();
  if (!(sv[0] > 1e-12) || sv[1] <= 1e-9 * sv[0])
    fail(ErrorKind::alignment, "truth trajectory is collinear or coincident; rotation is not determined");

  const Eigen::Matrix4d transform = Eigen::umeyama(src, dst, false);
  TrajectoryScore score;
  score.rotation = transform.topLeftCorner<3, 3>();
  score.translation = transform.topRightCorner<3, 1>();
  PointSequence aligned(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) aligned[i] = score.rotation * r[i] + score.translation;
  score.frechet = discrete_frechet(aligned, t);
  score.path_length = path_length(truth);
  score.normalized = score.path_length > 0.0 ? score.frechet / score.path_length : 0.0;
  return score;
}

GuidanceErrors guidance_errors(const std::vector<GuidanceVector>& predictions,
                               const std::vector<GuidanceVector>& labels) {
  if (predictions.size() != labels.size())
    fail(ErrorKind::input, "guidance_errors: " + std::to_string(predictions.size()) +
                               " predictions vs " + std::to_string(labels.size()) + " labels");
  GuidanceErrors out;
  if (predictions.empty()) return out;
  const double n = static_cast<double>(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      const double da = wrap_angle(predictions[i][a] - labels[i][a]);
      out.attitude_axis_deg[a] += std::abs(da) * 180.0 / std::numbers::pi / n;
      out.position_axis_m[a] += std::abs(predictions[i][3 + a] - labels[i][3 + a]) / n;
    }
  }
  for (int a = 0; a < 3; ++a) {
    out.attitude_mae_deg += out.attitude_axis_deg[a] / 3.0;
    out.position_mae_m += out.position_axis_m[a] / 3.0;
  }
  return out;
}

SilhouetteResult silhouette_score(const std::vector<std::vector<double>>& features,
                                  const std::vector<std::size_t>& labels) {
  if (features.size() != labels.size())
    fail(ErrorKind::input, "silhouette: features and labels differ in length");
  SilhouetteResult out;
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  std::vector<std::size_t> classes;
  for (const auto& [label, idx] : members) {
    if (idx.size() >= 2)
      classes.push_back(label);
    else
      out.excluded_classes.push_back(label);
  }
  if (classes.size() < 2) return out;

  auto dist = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t k = 0; k < features[a].size(); ++k) {
      const double d = features[a][k] - features[b][k];
      s += d * d;
    }
    return std::sqrt(s);
  };
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t own : classes) {
    for (std::size_t i : members[own]) {
      double a = 0.0, b = std::numeric_limits<double>::infinity();
      for (std::size_t other : classes) {
        double mean = 0.0;
        for (std::size_t j : members[other])
          if (j != i) mean += dist(i, j);
        if (other == own) {
          a = mean / static_cast<double>(members[other].size() - 1);
        } else {
          b = std::min(b, mean / static_cast<double>(members[other].size()));
        }
      }
      const double denom = std::max(a, b);
      total += denom > 0.0 ? (b - a) / denom : 0.0;
      ++counted;
    }
  }
  out.score = total / static_cast<double>(counted);
  return out;
}

}  // namespace wdsel
