#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

namespace postsel {

// Density on a uniform grid over [0,1]; values are strictly positive and
// integrate to one under the trapezoid rule.
struct DensitySample {
  Eigen::VectorXd grid;
  Eigen::VectorXd values;
};

// Trapezoid weights for a uniform grid with m points.
Eigen::VectorXd trapezoid_weights(int m);
double trapezoid_integral(const Eigen::VectorXd& grid,
                          const Eigen::VectorXd& values);

// Gaussian KDE with reflection at both boundaries, floored away from zero
// and renormalized.  Samples are mapped onto [0,1] by an affine rescale;
// passing a finite (lo, hi) range pins that map so a family of densities can
// share one domain.  bandwidth <= 0 selects the Silverman rule.
DensitySample make_density(const std::vector<double>& data, int grid_size = 512,
                           double bandwidth = 0.0, double floor = 1e-8,
                           double range_lo = std::numeric_limits<double>::quiet_NaN(),
                           double range_hi = std::numeric_limits<double>::quiet_NaN());

// Square-root transform: a density becomes a point on the unit Hilbert
// sphere under the trapezoid inner product.
struct SrtPoint {
  Eigen::VectorXd grid;
  Eigen::VectorXd h;
};

SrtPoint srt(const DensitySample& f);
DensitySample inv_srt(const SrtPoint& p);

double sphere_inner(const SrtPoint& a, const SrtPoint& b);
double geodesic_distance(const SrtPoint& a, const SrtPoint& b);

// exp_h(v) = cos(|v|) h + sin(|v|) v / |v|, |.| the quadrature norm.
SrtPoint exp_map(const SrtPoint& h, const Eigen::VectorXd& v);
// inverse: (theta/sin theta)(h2 - h1 cos theta), theta -> 0 limit h2 - h1.
Eigen::VectorXd inv_exp_map(const SrtPoint& h1, const SrtPoint& h2);

struct KarcherResult {
  SrtPoint mean;
  std::vector<double> variance_trace;  // accepted Frechet variances
  int iterations = 0;
  bool converged = false;
};

// Gradient descent on the sphere from the normalized extrinsic average; the
// step is halved whenever it would increase the Frechet variance.
KarcherResult karcher_mean(const std::vector<SrtPoint>& points,
                           double grad_tol = 1e-6, double step = 0.5,
                           int max_iter = 200);

struct DensityPcaResult {
  SrtPoint mean;
  Eigen::MatrixXd tangents;      // n x m, row i = inv_exp_mean(point i)
  Eigen::MatrixXd loadings;      // m x k, sign-fixed eigenvectors
  Eigen::MatrixXd scores;        // n x k
  Eigen::VectorXd eigenvalues;   // all, descending
  Eigen::VectorXd variance_fraction;
  int n_components = 0;
  KarcherResult karcher;
};

// Tangent-space PCA at the Karcher mean; keeps the smallest component count
// whose cumulative variance fraction reaches `threshold`.
DensityPcaResult density_pca(const std::vector<SrtPoint>& points,
                             double threshold = 0.9);

// Project point i onto the retained components and map back to the sphere.
SrtPoint reconstruct_point(const DensityPcaResult& pca, int index);

}  // namespace postsel
