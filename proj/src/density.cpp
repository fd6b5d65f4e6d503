#include "postsel/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "postsel/errors.hpp"

namespace postsel {

Eigen::VectorXd trapezoid_weights(int m) {
  if (m < 2) throw ValidationError("grid needs at least two points");
  const double h = 1.0 / (m - 1);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(m, h);
  w[0] = w[m - 1] = 0.5 * h;
  return w;
}

double trapezoid_integral(const Eigen::VectorXd& grid,
                          const Eigen::VectorXd& values) {
  if (grid.size() != values.size() || grid.size() < 2)
    throw ValidationError("trapezoid_integral: bad shapes");
  double total = 0.0;
  for (int k = 0; k + 1 < grid.size(); ++k)
    total += 0.5 * (grid[k + 1] - grid[k]) * (values[k] + values[k + 1]);
  return total;
}

static Eigen::VectorXd uniform_grid(int m) {
  Eigen::VectorXd g(m);
  for (int k = 0; k < m; ++k) g[k] = static_cast<double>(k) / (m - 1);
  return g;
}

DensitySample make_density(const std::vector<double>& data, int grid_size,
                           double bandwidth, double floor, double range_lo,
                           double range_hi) {
  if (data.size() < 5) throw ValidationError("make_density: need >= 5 points");
  if (floor <= 0) throw ValidationError("make_density: floor must be > 0");
  for (const double x : data)
    if (!std::isfinite(x))
      throw ValidationError("make_density: non-finite sample");
  const auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
  double lo = *lo_it, hi = *hi_it;
  if (std::isfinite(range_lo) || std::isfinite(range_hi)) {
    if (!(std::isfinite(range_lo) && std::isfinite(range_hi) &&
          range_hi > range_lo))
      throw ValidationError("make_density: invalid pinned range");
    if (lo < range_lo || hi > range_hi)
      throw ValidationError("make_density: sample outside pinned range");
    lo = range_lo;
    hi = range_hi;
  }
  if (!(hi > lo))
    throw ValidationError("make_density: constant input has zero spread");
  // Affine rescale onto the shared unit-interval domain.
  std::vector<double> scaled(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    scaled[i] = (data[i] - lo) / (hi - lo);
  const auto& samples = scaled;

  const int n = static_cast<int>(samples.size());
  double h = bandwidth;
  if (h <= 0) {
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    double mean = 0.0;
    for (const double x : sorted) mean += x;
    mean /= n;
    double ss = 0.0;
    for (const double x : sorted) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1));
    const double q1 = sorted[static_cast<int>(0.25 * (n - 1))];
    const double q3 = sorted[static_cast<int>(0.75 * (n - 1))];
    const double iqr = q3 - q1;
    double spread = sd;
    if (iqr > 0) spread = std::min(spread, iqr / 1.34);
    h = 0.9 * spread * std::pow(n, -0.2);
    if (!(h > 1e-4)) h = 1e-4;  // degenerate samples
  }

  DensitySample f;
  f.grid = uniform_grid(grid_size);
  f.values.setZero(grid_size);
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
  auto kernel = [&](double d) { return std::exp(-0.5 * d * d / (h * h)); };
  for (int k = 0; k < grid_size; ++k) {
    const double x = f.grid[k];
    double acc = 0.0;
    for (const double xi : samples)
      acc += kernel(x - xi) + kernel(x + xi) + kernel(2.0 - x - xi);
    f.values[k] = norm * acc;
  }

  for (int pass = 0; pass < 10; ++pass) {
    f.values = f.values.cwiseMax(2.0 * floor);
    const double total = trapezoid_integral(f.grid, f.values);
    if (!(total > 0)) throw NumericalError("make_density: zero mass");
    f.values /= total;
    if (f.values.minCoeff() >= floor &&
        std::abs(trapezoid_integral(f.grid, f.values) - 1.0) < 1e-12)
      return f;
  }
  throw NumericalError("make_density: normalization did not settle");
}

SrtPoint srt(const DensitySample& f) {
  const double total = trapezoid_integral(f.grid, f.values);
  if (std::abs(total - 1.0) > 1e-8)
    throw ValidationError("srt: density does not integrate to one");
  if ((f.values.array() < 0).any())
    throw ValidationError("srt: negative density value");
  SrtPoint p;
  p.grid = f.grid;
  p.h = f.values.cwiseSqrt();
  return p;
}

DensitySample inv_srt(const SrtPoint& p) {
  DensitySample f;
  f.grid = p.grid;
  f.values = p.h.cwiseAbs2();
  return f;
}

double sphere_inner(const SrtPoint& a, const SrtPoint& b) {
  if (a.grid.size() != b.grid.size())
    throw ValidationError("sphere_inner: grid mismatch");
  return trapezoid_integral(a.grid, a.h.cwiseProduct(b.h));
}

double geodesic_distance(const SrtPoint& a, const SrtPoint& b) {
  return std::acos(std::clamp(sphere_inner(a, b), -1.0, 1.0));
}

static double quad_norm(const SrtPoint& base, const Eigen::VectorXd& v) {
  return std::sqrt(std::max(
      0.0, trapezoid_integral(base.grid, v.cwiseProduct(v))));
}

SrtPoint exp_map(const SrtPoint& h, const Eigen::VectorXd& v) {
  if (v.size() != h.h.size()) throw ValidationError("exp_map: size mismatch");
  const double theta = quad_norm(h, v);
  SrtPoint out;
  out.grid = h.grid;
  const double sinc =
      theta < 1e-8 ? 1.0 - theta * theta / 6.0 : std::sin(theta) / theta;
  out.h = std::cos(theta) * h.h + sinc * v;
  return out;
}

Eigen::VectorXd inv_exp_map(const SrtPoint& h1, const SrtPoint& h2) {
  const double c = std::clamp(sphere_inner(h1, h2), -1.0, 1.0);
  const double theta = std::acos(c);
  const double fac =
      theta < 1e-8 ? 1.0 + theta * theta / 6.0 : theta / std::sin(theta);
  return fac * (h2.h - c * h1.h);
}

KarcherResult karcher_mean(const std::vector<SrtPoint>& points,
                           double grad_tol, double step, int max_iter) {
  if (points.empty()) throw ValidationError("karcher_mean: no points");
  const int m = static_cast<int>(points.front().h.size());
  for (const auto& p : points)
    if (p.h.size() != m) throw ValidationError("karcher_mean: grid mismatch");
  const int n = static_cast<int>(points.size());

  KarcherResult out;
  out.mean.grid = points.front().grid;
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(m);
  for (const auto& p : points) avg += p.h;
  avg /= n;
  const double avg_norm = quad_norm(points.front(), avg);
  if (!(avg_norm > 1e-12))
    throw NumericalError("karcher_mean: extrinsic average vanishes");
  out.mean.h = avg / avg_norm;

  auto variance = [&](const SrtPoint& c) {
    double v = 0.0;
    for (const auto& p : points) {
      const double d = geodesic_distance(c, p);
      v += d * d;
    }
    return v / n;
  };

  double cur_var = variance(out.mean);
  out.variance_trace.push_back(cur_var);
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    Eigen::VectorXd vbar = Eigen::VectorXd::Zero(m);
    for (const auto& p : points) vbar += inv_exp_map(out.mean, p);
    vbar /= n;
    if (quad_norm(out.mean, vbar) < grad_tol) {
      out.converged = true;
      break;
    }
    const SrtPoint cand = exp_map(out.mean, step * vbar);
    const double cand_var = variance(cand);
    if (cand_var > cur_var) {
      step *= 0.5;
      continue;
    }
    out.mean = cand;
    const double norm = quad_norm(out.mean, out.mean.h);
    if (norm > 0) out.mean.h /= norm;
    cur_var = cand_var;
    out.variance_trace.push_back(cur_var);
  }
  return out;
}

DensityPcaResult density_pca(const std::vector<SrtPoint>& points,
                             double threshold) {
  if (points.size() < 2) throw ValidationError("density_pca: need >= 2 points");
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw ValidationError("density_pca: threshold outside (0,1]");
  const int n = static_cast<int>(points.size());
  const int m = static_cast<int>(points.front().h.size());

  DensityPcaResult out;
  out.karcher = karcher_mean(points);
  out.mean = out.karcher.mean;

  out.tangents.resize(n, m);
  for (int i = 0; i < n; ++i)
    out.tangents.row(i) = inv_exp_map(out.mean, points[i]);

  const Eigen::MatrixXd K =
      out.tangents.transpose() * out.tangents / (n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
  if (eig.info() != Eigen::Success)
    throw NumericalError("density_pca: eigendecomposition failed");

  // Ascending from the solver; emit descending, clamped at zero.
  const int total = static_cast<int>(eig.eigenvalues().size());
  out.eigenvalues.resize(total);
  Eigen::MatrixXd vectors(m, total);
  for (int k = 0; k < total; ++k) {
    out.eigenvalues[k] = std::max(0.0, eig.eigenvalues()[total - 1 - k]);
    vectors.col(k) = eig.eigenvectors().col(total - 1 - k);
  }
  const double mass = out.eigenvalues.sum();
  out.variance_fraction =
      mass > 0 ? (out.eigenvalues / mass).eval() : out.eigenvalues;

  int keep = 0;
  double cum = 0.0;
  for (int k = 0; k < total; ++k) {
    cum += out.variance_fraction[k];
    keep = k + 1;
    if (cum >= threshold - 1e-12) break;
  }
  out.n_components = keep;

  out.loadings = vectors.leftCols(keep);
  for (int k = 0; k < keep; ++k) {
    for (int j = 0; j < m; ++j) {
      if (std::abs(out.loadings(j, k)) > 1e-12) {
        if (out.loadings(j, k) < 0) out.loadings.col(k) *= -1.0;
        break;
      }
    }
  }
  out.scores = out.tangents * out.loadings;
  return out;
}

SrtPoint reconstruct_point(const DensityPcaResult& pca, int index) {
  if (index < 0 || index >= pca.tangents.rows())
    throw ValidationError("reconstruct_point: index out of range");
  const Eigen::VectorXd v = pca.tangents.row(index);
  const Eigen::VectorXd proj =
      pca.loadings * (pca.loadings.transpose() * v);
  return exp_map(pca.mean, proj);
}

}  // namespace postsel
