#pragma once

#include <Eigen/Dense>

#include "postsel/geometry.hpp"

namespace postsel {

// Smooth approximation of the selection-event indicator in w-space:
//   C(w) = sum_j log(1 + a_j / (s_j w_j)),  finite iff s_j w_j > 0.
struct BarrierPenalty {
  Eigen::VectorXd scales;  // a_j
  Eigen::VectorXd signs;   // s_j
};

BarrierPenalty make_barrier(const PosteriorGeometry& geo);

bool barrier_feasible(const Eigen::VectorXd& w, const BarrierPenalty& pen);
double barrier_value(const Eigen::VectorXd& w, const BarrierPenalty& pen);
Eigen::VectorXd barrier_gradient(const Eigen::VectorXd& w,
                                 const BarrierPenalty& pen);
// The barrier is separable, so both curvature orders are diagonal.
Eigen::VectorXd barrier_hessian_diag(const Eigen::VectorXd& w,
                                     const BarrierPenalty& pen);
Eigen::VectorXd barrier_third_diag(const Eigen::VectorXd& w,
                                   const BarrierPenalty& pen);

// Prior over the inference coefficients.  The Laplace density is smoothed by
// a pseudo-Huber bend of width `smoothing` so the log posterior stays twice
// differentiable at zero; value and gradient use the same smoothed form.
struct PriorSpec {
  enum class Kind { laplace, flat };
  Kind kind = Kind::laplace;
  double scale = 1.0;
  double smoothing = 1e-4;

  static PriorSpec laplace_prior(double scale);
  static PriorSpec flat_prior();

  double log_value(const Eigen::VectorXd& b) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& b) const;
};

struct WStarSolution {
  Eigen::VectorXd w_star;
  Eigen::VectorXd hessian_diag;  // barrier curvature at w_star
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// argmin over the sign orthant of
//   (w - P z - o)' QtQ (w - P z - o) / (2 eta^2) + C(w),
// damped Newton with a feasibility-preserving line search.
WStarSolution solve_w_star(const PosteriorGeometry& geo,
                           const BarrierPenalty& pen,
                           const Eigen::VectorXd& zeta,
                           const Eigen::VectorXd* warm_start = nullptr,
                           double tol = 1e-10, int max_iter = 50);

// The mean-adjustment map psi and its Jacobian.
Eigen::VectorXd psi(const PosteriorGeometry& geo, const BarrierPenalty& pen,
                    const Eigen::VectorXd& zeta);

struct JacobianResult {
  Eigen::MatrixXd J;
  double log_det = 0.0;
  Eigen::MatrixXd D;  // dw*/dzeta, |E| x |ebar|
};

JacobianResult jacobian(const PosteriorGeometry& geo,
                        const BarrierPenalty& pen,
                        const Eigen::VectorXd& zeta,
                        const WStarSolution& wsol);

// One full evaluation of the reparameterized log posterior.
struct ReparamEvaluation {
  Eigen::VectorXd zeta;
  Eigen::VectorXd beta;      // psi(zeta)
  double log_post = 0.0;
  Eigen::VectorXd grad;      // empty unless requested
  double log_det_jacobian = 0.0;
  WStarSolution wstar;
  bool ok = false;
};

ReparamEvaluation evaluate_zeta(const PosteriorGeometry& geo,
                                const BarrierPenalty& pen,
                                const PriorSpec& prior,
                                const Eigen::VectorXd& zeta,
                                bool want_grad = true,
                                const Eigen::VectorXd* warm_start = nullptr);

double log_posterior_zeta(const PosteriorGeometry& geo,
                          const BarrierPenalty& pen, const PriorSpec& prior,
                          const Eigen::VectorXd& zeta);

Eigen::VectorXd grad_log_posterior_zeta(const PosteriorGeometry& geo,
                                        const BarrierPenalty& pen,
                                        const PriorSpec& prior,
                                        const Eigen::VectorXd& zeta);

// Direct coordinates: log posterior at beta with the selection correction
//   inf_{b,w} { (b-beta)' Sigma^-1 (b-beta)/2 + quadratic(w,b) + C(w) }
// solved by a joint Newton iteration.
struct BetaLogPosterior {
  double value = 0.0;
  double inner_infimum = 0.0;
  Eigen::VectorXd inner_b;
  Eigen::VectorXd inner_w;
  int iterations = 0;
  bool converged = false;
};

BetaLogPosterior log_posterior_beta(const PosteriorGeometry& geo,
                                    const BarrierPenalty& pen,
                                    const PriorSpec& prior,
                                    const Eigen::VectorXd& beta,
                                    double tol = 1e-10, int max_iter = 100);

}  // namespace postsel
