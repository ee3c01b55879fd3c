#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "doctest.h"
#include "wdsel/error.hpp"
#include "wdsel/metrics.hpp"

using namespace wdsel;

namespace {

PointSequence random_walk(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  PointSequence p(n);
  Eigen::Vector3d cur = Eigen::Vector3d::Zero();
  for (auto& v : p) {
    cur += Eigen::Vector3d(d(rng), d(rng), d(rng));
    v = cur;
  }
  return p;
}

// Minimum over every monotone coupling of the maximum coupled distance.
double brute_force_frechet(const PointSequence& p, const PointSequence& q) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double worst) {
    worst = std::max(worst, (p[i] - q[j]).norm());
    if (worst >= best) return;
    if (i + 1 == p.size() && j + 1 == q.size()) {
      best = worst;
      return;
    }
    if (i + 1 < p.size()) walk(i + 1, j, worst);
    if (j + 1 < q.size()) walk(i, j + 1, worst);
    if (i + 1 < p.size() && j + 1 < q.size()) walk(i + 1, j + 1, worst);
  };
  walk(0, 0, 0.0);
  return best;
}

PointSequence helix(std::size_t n) {
  PointSequence p(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(n - 1);
    p[k] = {std::cos(3.0 * s), std::sin(3.0 * s), 0.5 * s};
  }
  return p;
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Eigen::Quaterniond q(d(rng), d(rng), d(rng), d(rng));
  return q.normalized().toRotationMatrix();
}

}  // namespace

TEST_CASE("discrete frechet examples") {
  std::mt19937_64 rng(1);
  const auto p = random_walk(30, rng);
  CHECK(discrete_frechet(p, p) == 0.0);

  PointSequence a, b;
  for (int k = 0; k < 20; ++k) {
    a.emplace_back(0.1 * k, 0.0, 0.0);
    b.emplace_back(0.1 * k, 1.0, 0.0);
  }
  CHECK(discrete_frechet(a, b) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(discrete_frechet({}, a), Error);
}

TEST_CASE("discrete frechet matches brute force on truncations") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const auto p = random_walk(50, rng);
    const auto q = random_walk(50, rng);
    const PointSequence pt(p.begin(), p.begin() + 8), qt(q.begin(), q.begin() + 8);
    CHECK(std::abs(discrete_frechet(pt, qt) - brute_force_frechet(pt, qt)) < 1e-12);
    const PointSequence pu(p.begin(), p.begin() + 5), qu(q.begin(), q.begin() + 8);
    CHECK(std::abs(discrete_frechet(pu, qu) - brute_force_frechet(pu, qu)) < 1e-12);
  }
}

TEST_CASE("discrete frechet properties") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const auto p = random_walk(7 + seed % 5, rng);
    const auto q = random_walk(4 + seed % 7, rng);
    const double d = discrete_frechet(p, q);
    CHECK(d == discrete_frechet(q, p));
    CHECK(d >= 0.0);
    // every coupling pairs the first points and the last points
    CHECK(d >= (p.front() - q.front()).norm());
    CHECK(d >= (p.back() - q.back()).norm());
  }
  // repeated points still couple perfectly
  PointSequence p = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  PointSequence q = {{0, 0, 0}, {1, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  CHECK(discrete_frechet(p, q) == 0.0);
}

TEST_CASE("arclength resampling") {
  PointSequence line = {{0, 0, 0}, {1, 0, 0}, {3, 0, 0}};
  const auto r = resample_arclength(line, 4);
  CHECK(r[1].x() == doctest::Approx(1.0));
  CHECK(r[2].x() == doctest::Approx(2.0));
  CHECK(r[3].x() == doctest::Approx(3.0));
}

TEST_CASE("align_then_score") {
  const auto truth = helix(300);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Matrix3d rot = random_rotation(rng);
    const Eigen::Vector3d shift(1.0 * trial, -2.0, 0.5);
    PointSequence moved(truth.size());
    for (std::size_t k = 0; k < truth.size(); ++k) moved[k] = rot * truth[k] + shift;
    const auto score = align_then_score(moved, truth);
    CHECK(score.normalized < 1e-9);
    CHECK(score.rotation.determinant() == doctest::Approx(1.0));
  }

  // a 1 m arc offset by 5 cm orthogonally to its plane
  PointSequence arc(200), offset(200);
  for (std::size_t k = 0; k < arc.size(); ++k) {
    const double a = static_cast<double>(k) / 199.0;  // radius 1, 1 rad => 1 m
    arc[k] = {std::cos(a), std::sin(a), 0.0};
    offset[k] = arc[k] + Eigen::Vector3d(0, 0, 0.05);
  }
  CHECK(path_length(arc) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(align_then_score(offset, arc).normalized < 1e-9);

  PointSequence line(50);
  for (std::size_t k = 0; k < line.size(); ++k) line[k] = {0.1 * static_cast<double>(k), 0, 0};
  try {
    align_then_score(line, line);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::alignment);
  }
}

TEST_CASE("align_then_score is invariant to rigid motion of the reconstruction") {
  const auto truth = helix(250);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 0.02);
  PointSequence recon = truth;
  for (auto& p : recon) p += Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
  const double base = align_then_score(recon, truth).normalized;
  CHECK(base > 0.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Matrix3d rot = random_rotation(rng);
    PointSequence moved(recon.size());
    for (std::size_t k = 0; k < recon.size(); ++k) moved[k] = rot * recon[k] + Eigen::Vector3d(3, -1, 2);
    CHECK(std::abs(align_then_score(moved, truth).normalized - base) < 1e-9);
  }
}

TEST_CASE("guidance errors") {
  const GuidanceVector v{0.1, -0.2, 0.3, 1.0, 2.0, -1.0};
  const auto same = guidance_errors({v, v}, {v, v});
  CHECK(same.attitude_mae_deg == 0.0);
  CHECK(same.position_mae_m == 0.0);

  GuidanceVector off = v;
  off[0] += std::numbers::pi;
  const auto half_turn = guidance_errors({off}, {v});
  CHECK(half_turn.attitude_axis_deg[0] == doctest::Approx(180.0));
  CHECK(half_turn.attitude_mae_deg == doctest::Approx(60.0));

  const double deg = std::numbers::pi / 180.0;
  GuidanceVector p{179 * deg, 0, 0, 0, 0, 0}, l{-179 * deg, 0, 0, 0, 0, 0};
  CHECK(guidance_errors({p}, {l}).attitude_axis_deg[0] == doctest::Approx(2.0));

  CHECK_THROWS_AS(guidance_errors({v}, {v, v}), Error);
}

TEST_CASE("silhouette score") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(0.0, 0.05);
  std::vector<std::vector<double>> features;
  std::vector<std::size_t> labels;
  for (int i = 0; i < 40; ++i) {
    const double centre = i < 20 ? 0.0 : 10.0;
    features.push_back({centre + d(rng), d(rng), d(rng)});
    labels.push_back(i < 20 ? 0 : 1);
  }
  const auto tight = silhouette_score(features, labels);
  REQUIRE(tight.score.has_value());
  CHECK(*tight.score > 0.9);

  double null_mean = 0.0;
  for (int shuffle = 0; shuffle < 10; ++shuffle) {
    auto shuffled = labels;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    null_mean += *silhouette_score(features, shuffled).score / 10.0;
  }
  CHECK(std::abs(null_mean) < 0.1);

  auto scaled = features;
  for (auto& f : scaled)
    for (auto& v : f) v *= 7.0;
  CHECK(std::abs(*silhouette_score(scaled, labels).score - *tight.score) < 1e-12);

  auto with_single = labels;
  with_single[0] = 7;
  const auto partial = silhouette_score(features, with_single);
  CHECK(partial.excluded_classes == std::vector<std::size_t>{7});
  CHECK(partial.score.has_value());

  std::vector<std::size_t> one_class(40, 0);
  CHECK_FALSE(silhouette_score(features, one_class).score.has_value());
}
