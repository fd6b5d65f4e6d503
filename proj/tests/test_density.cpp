#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "postsel/density.hpp"
#include "postsel/errors.hpp"
#include "postsel/rng.hpp"

using namespace postsel;
using Eigen::VectorXd;

namespace {

// Build a density directly on the grid from a positive shape function,
// normalized by the trapezoid rule, bypassing the KDE.
DensitySample shaped_density(int m, const std::function<double(double)>& f) {
  DensitySample d;
  d.grid.resize(m);
  d.values.resize(m);
  for (int k = 0; k < m; ++k) {
    d.grid[k] = static_cast<double>(k) / (m - 1);
    d.values[k] = f(d.grid[k]);
  }
  d.values /= trapezoid_integral(d.grid, d.values);
  return d;
}

std::vector<double> gaussian_draws(int n, double mu, double sd,
                                   std::uint64_t seed) {
  Rng r(seed);
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = mu + sd * r.normal();
  return x;
}

}  // namespace

TEST_CASE("trapezoid rule is exact for linear integrands") {
  const int m = 101;
  VectorXd grid(m), vals(m);
  for (int k = 0; k < m; ++k) {
    grid[k] = static_cast<double>(k) / (m - 1);
    vals[k] = 3.0 * grid[k] + 1.0;
  }
  CHECK(trapezoid_integral(grid, vals) == doctest::Approx(2.5).epsilon(1e-12));
  const VectorXd w = trapezoid_weights(m);
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w[0] == doctest::Approx(0.5 / (m - 1)));
}

TEST_CASE("kde densities integrate to one above the floor") {
  const auto data = gaussian_draws(400, 0.0, 1.0, 8);
  const DensitySample f = make_density(data, 257, 0.0, 1e-8);
  CHECK(trapezoid_integral(f.grid, f.values) ==
        doctest::Approx(1.0).epsilon(1e-10));
  CHECK(f.values.minCoeff() >= 1e-8);
  // raw samples are affine-rescaled internally, so any location works
  const auto shifted = gaussian_draws(400, 250.0, 10.0, 8);
  const DensitySample g = make_density(shifted, 257, 0.0, 1e-8);
  CHECK(trapezoid_integral(g.grid, g.values) ==
        doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(make_density({1.0, 1.0, 1.0, 1.0, 1.0}, 64),
                  ValidationError);
  CHECK_THROWS_AS(make_density({1.0, 2.0}, 64), ValidationError);
}

TEST_CASE("dense uniform samples give a near-flat density") {
  std::vector<double> data;
  const int n = 20000;
  Rng r(77);
  for (int i = 0; i < n; ++i) data.push_back(r.uniform());
  data.push_back(0.0);
  data.push_back(1.0);  // pin the rescale so the domain is the full interval
  const DensitySample f = make_density(data, 401);
  CHECK((f.values.array() - 1.0).abs().maxCoeff() < 0.08);
}

TEST_CASE("srt and its inverse are exact round trips") {
  const DensitySample f = shaped_density(512, [](double x) {
    return 0.3 + std::pow(x - 0.4, 2.0) + 0.2 * std::sin(9.0 * x);
  });
  const SrtPoint h = srt(f);
  // unit sphere: ||h|| = 1 under the trapezoid inner product
  CHECK(sphere_inner(h, h) == doctest::Approx(1.0).epsilon(1e-12));
  const DensitySample back = inv_srt(h);
  CHECK((back.values - f.values).cwiseAbs().maxCoeff() < 1e-8);

  // flat density maps to the constant SRT point
  const DensitySample flat = shaped_density(512, [](double) { return 1.0; });
  const SrtPoint h1 = srt(flat);
  CHECK((h1.h.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("geodesic distance matches a high-resolution quadrature oracle") {
  // Smooth periodic-style shapes on [0,1]; the oracle evaluates the Fisher-
  // Rao angle with a 2^17-point trapezoid rule on the analytic functions.
  auto f1 = [](double x) { return 1.0 + 0.45 * std::sin(2.0 * std::numbers::pi * x); };
  auto f2 = [](double x) { return 1.0 + 0.45 * std::cos(2.0 * std::numbers::pi * x); };
  auto normalize = [](auto fn) {
    const int m = (1 << 17) + 1;
    long double total = 0.0;
    for (int k = 0; k + 1 < m; ++k) {
      const double a = static_cast<double>(k) / (m - 1);
      const double b = static_cast<double>(k + 1) / (m - 1);
      total += 0.5L * (fn(a) + fn(b)) * (b - a);
    }
    return static_cast<double>(total);
  };
  const double z1 = normalize(f1), z2 = normalize(f2);
  const int m = (1 << 17) + 1;
  long double inner = 0.0;
  for (int k = 0; k + 1 < m; ++k) {
    const double a = static_cast<double>(k) / (m - 1);
    const double b = static_cast<double>(k + 1) / (m - 1);
    const auto g = [&](double x) {
      return std::sqrt(f1(x) / z1) * std::sqrt(f2(x) / z2);
    };
    inner += 0.5L * (g(a) + g(b)) * (b - a);
  }
  const double oracle = std::acos(std::min(1.0, static_cast<double>(inner)));

  const DensitySample d1 = shaped_density(1025, f1);
  const DensitySample d2 = shaped_density(1025, f2);
  const double got = geodesic_distance(srt(d1), srt(d2));
  CHECK(got == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(geodesic_distance(srt(d1), srt(d1)) == doctest::Approx(0.0));
}

TEST_CASE("exp and inverse exp maps invert each other on the sphere") {
  const DensitySample base = shaped_density(512, [](double x) {
    return 0.5 + x * (1.0 - x);
  });
  const DensitySample other = shaped_density(512, [](double x) {
    return 0.4 + std::exp(-8.0 * (x - 0.7) * (x - 0.7));
  });
  const SrtPoint h1 = srt(base), h2 = srt(other);

  const VectorXd v = inv_exp_map(h1, h2);
  // tangency at h1
  SrtPoint vt = h1;
  vt.h = v;
  CHECK(std::abs(sphere_inner(h1, vt)) < 1e-8);
  // norm equals the geodesic distance
  const double theta = geodesic_distance(h1, h2);
  CHECK(std::sqrt(sphere_inner(vt, vt)) == doctest::Approx(theta).epsilon(1e-10));
  // round trip back to h2
  const SrtPoint back = exp_map(h1, v);
  CHECK((back.h - h2.h).cwiseAbs().maxCoeff() < 1e-8);
  // and the distance along the geodesic equals ||v||
  CHECK(geodesic_distance(h1, back) == doctest::Approx(theta).epsilon(1e-8));

  // zero tangent is the identity
  const SrtPoint same = exp_map(h1, VectorXd::Zero(v.size()));
  CHECK((same.h - h1.h).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("karcher mean of identical points returns immediately") {
  const DensitySample f = shaped_density(256, [](double x) {
    return 1.0 + 0.3 * std::sin(5.0 * x);
  });
  const std::vector<SrtPoint> pts = {srt(f), srt(f), srt(f)};
  const KarcherResult kr = karcher_mean(pts);
  REQUIRE(kr.converged);
  CHECK(kr.iterations <= 1);
  CHECK((kr.mean.h - pts[0].h).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-point karcher mean is the geodesic midpoint") {
  const DensitySample f1 = shaped_density(512, [](double x) {
    return 0.4 + std::exp(-14.0 * (x - 0.3) * (x - 0.3));
  });
  const DensitySample f2 = shaped_density(512, [](double x) {
    return 0.4 + std::exp(-14.0 * (x - 0.65) * (x - 0.65));
  });
  const std::vector<SrtPoint> pts = {srt(f1), srt(f2)};
  const KarcherResult kr = karcher_mean(pts);
  REQUIRE(kr.converged);
  const double d1 = geodesic_distance(kr.mean, pts[0]);
  const double d2 = geodesic_distance(kr.mean, pts[1]);
  CHECK(std::abs(d1 - d2) < 1e-6);
  // the karcher variance is nonincreasing along the iteration trace
  for (std::size_t i = 1; i < kr.variance_trace.size(); ++i)
    CHECK(kr.variance_trace[i] <= kr.variance_trace[i - 1] + 1e-12);
  // and the mean beats both endpoints as a variance minimizer
  auto variance_at = [&](const SrtPoint& c) {
    double acc = 0.0;
    for (const auto& p : pts) {
      const double d = geodesic_distance(c, p);
      acc += d * d;
    }
    return acc / pts.size();
  };
  CHECK(variance_at(kr.mean) <= variance_at(pts[0]) + 1e-12);
  CHECK(variance_at(kr.mean) <= variance_at(pts[1]) + 1e-12);
}

TEST_CASE("density pca separates two clusters and reconstructs at full rank") {
  // two clusters of bump densities at distinct locations
  std::vector<SrtPoint> pts;
  Rng r(19);
  for (int i = 0; i < 5; ++i) {
    const double c = 0.3 + 0.01 * r.normal();
    pts.push_back(srt(shaped_density(384, [c](double x) {
      return 0.4 + std::exp(-16.0 * (x - c) * (x - c));
    })));
  }
  for (int i = 0; i < 5; ++i) {
    const double c = 0.7 + 0.01 * r.normal();
    pts.push_back(srt(shaped_density(384, [c](double x) {
      return 0.4 + std::exp(-16.0 * (x - c) * (x - c));
    })));
  }

  const DensityPcaResult pca = density_pca(pts, 0.9);
  REQUIRE(pca.n_components >= 1);
  // first component splits the clusters by sign
  for (int i = 0; i < 5; ++i)
    CHECK(pca.scores(i, 0) * pca.scores(5, 0) < 0.0);
  for (int i = 5; i < 10; ++i)
    CHECK(pca.scores(i, 0) * pca.scores(0, 0) < 0.0);
  // eigenvalues descend and the variance fractions are sane
  for (int k = 1; k < pca.eigenvalues.size(); ++k)
    CHECK(pca.eigenvalues[k] <= pca.eigenvalues[k - 1] + 1e-12);

  // retaining every direction reproduces each density
  const DensityPcaResult full = density_pca(pts, 1.0);
  for (int i = 0; i < 10; ++i) {
    const SrtPoint recon = reconstruct_point(full, i);
    CHECK(geodesic_distance(recon, pts[i]) < 1e-6);
  }
  // a 0.9 threshold keeps fewer components than full rank on 10 points
  CHECK(pca.n_components <= full.n_components);

  // identical densities: zero variance, all scores zero
  std::vector<SrtPoint> same(4, pts[0]);
  const DensityPcaResult none = density_pca(same, 0.9);
  CHECK(none.scores.cwiseAbs().maxCoeff() < 1e-10);
}
