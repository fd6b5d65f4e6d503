#include "postsel/posterior.hpp"

#include <cmath>
#include <limits>

#include "postsel/errors.hpp"

namespace postsel {

static constexpr double kInf = std::numeric_limits<double>::infinity();

BarrierPenalty make_barrier(const PosteriorGeometry& geo) {
  BarrierPenalty pen;
  // Barrier width = randomization sd of w_j, so the argument of log1p is the
  // boundary margin in noise units; penalty decays once w_j clears the
  // boundary by a few sd and hardens to the exact truncation as eta -> 0.
  pen.scales = std::sqrt(geo.eta_sq) * geo.sqrt_diag.cwiseInverse();
  pen.signs = geo.signs;
  if ((pen.scales.array() <= 0).any())
    throw NumericalError("barrier scales must be positive");
  return pen;
}

bool barrier_feasible(const Eigen::VectorXd& w, const BarrierPenalty& pen) {
  return (w.cwiseProduct(pen.signs).array() > 0).all();
}

double barrier_value(const Eigen::VectorXd& w, const BarrierPenalty& pen) {
  double total = 0.0;
  for (int j = 0; j < w.size(); ++j) {
    const double u = pen.signs[j] * w[j];
    if (u <= 0) return kInf;
    total += std::log1p(pen.scales[j] / u);
  }
  return total;
}

Eigen::VectorXd barrier_gradient(const Eigen::VectorXd& w,
                                 const BarrierPenalty& pen) {
  Eigen::VectorXd g(w.size());
  for (int j = 0; j < w.size(); ++j) {
    const double u = pen.signs[j] * w[j];
    g[j] = pen.signs[j] * (1.0 / (u + pen.scales[j]) - 1.0 / u);
  }
  return g;
}

Eigen::VectorXd barrier_hessian_diag(const Eigen::VectorXd& w,
                                     const BarrierPenalty& pen) {
  Eigen::VectorXd h(w.size());
  for (int j = 0; j < w.size(); ++j) {
    const double u = pen.signs[j] * w[j];
    const double ua = u + pen.scales[j];
    h[j] = 1.0 / (u * u) - 1.0 / (ua * ua);
  }
  return h;
}

Eigen::VectorXd barrier_third_diag(const Eigen::VectorXd& w,
                                   const BarrierPenalty& pen) {
  Eigen::VectorXd t(w.size());
  for (int j = 0; j < w.size(); ++j) {
    const double u = pen.signs[j] * w[j];
    const double ua = u + pen.scales[j];
    t[j] = 2.0 * pen.signs[j] * (1.0 / (ua * ua * ua) - 1.0 / (u * u * u));
  }
  return t;
}

PriorSpec PriorSpec::laplace_prior(double scale) {
  if (scale <= 0) throw ValidationError("prior scale must be positive");
  PriorSpec p;
  p.kind = Kind::laplace;
  p.scale = scale;
  p.smoothing = 1e-4 * scale;
  return p;
}

PriorSpec PriorSpec::flat_prior() {
  PriorSpec p;
  p.kind = Kind::flat;
  return p;
}

double PriorSpec::log_value(const Eigen::VectorXd& b) const {
  if (kind == Kind::flat) return 0.0;
  double total = 0.0;
  for (int j = 0; j < b.size(); ++j)
    total += std::sqrt(smoothing * smoothing + b[j] * b[j]) - smoothing;
  return -total / scale;
}

Eigen::VectorXd PriorSpec::grad(const Eigen::VectorXd& b) const {
  if (kind == Kind::flat) return Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd g(b.size());
  for (int j = 0; j < b.size(); ++j)
    g[j] = -b[j] / (scale * std::sqrt(smoothing * smoothing + b[j] * b[j]));
  return g;
}

WStarSolution solve_w_star(const PosteriorGeometry& geo,
                           const BarrierPenalty& pen,
                           const Eigen::VectorXd& zeta,
                           const Eigen::VectorXd* warm_start, double tol,
                           int max_iter) {
  if (zeta.size() != geo.dim_inference())
    throw ValidationError("solve_w_star: zeta dimension mismatch");
  const Eigen::VectorXd p = geo.P * zeta + geo.o;
  const double inv_eta = 1.0 / geo.eta_sq;

  Eigen::VectorXd w = (warm_start && warm_start->size() == geo.dim_active() &&
                       barrier_feasible(*warm_start, pen))
                          ? *warm_start
                          : geo.beta_lasso;
  if (!barrier_feasible(w, pen))
    throw NumericalError("solve_w_star: infeasible starting point");

  auto objective = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd d = x - p;
    return 0.5 * inv_eta * d.dot(geo.QtQ * d) + barrier_value(x, pen);
  };

  auto gradient = [&](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(inv_eta * (geo.QtQ * (x - p)) +
                           barrier_gradient(x, pen));
  };

  // Newton with Armijo damping.  Once the tolerance is met we keep taking
  // full steps while they still shrink the gradient: psi and the Jacobian
  // depend on w* to first order, so the solve is pushed to the roundoff
  // floor rather than stopping at tol.  Near the optimum the objective
  // decrease sinks below roundoff before the gradient does, so a stalled
  // line search falls back to accepting any feasible gradient reduction.
  WStarSolution sol;
  double fw = objective(w);
  for (sol.iterations = 0; sol.iterations < max_iter; ++sol.iterations) {
    const Eigen::VectorXd grad = gradient(w);
    sol.grad_norm = grad.norm();
    if (sol.grad_norm < tol) sol.converged = true;
    if (sol.grad_norm == 0.0) break;
    Eigen::MatrixXd N = inv_eta * geo.QtQ;
    N.diagonal() += barrier_hessian_diag(w, pen);
    Eigen::LLT<Eigen::MatrixXd> llt(N);
    if (llt.info() != Eigen::Success)
      throw NumericalError("solve_w_star: curvature not positive definite");
    const Eigen::VectorXd step = -llt.solve(grad);
    const double slope = grad.dot(step);

    double t = 1.0;
    bool moved = false;
    for (int back = 0; back < 70; ++back) {
      const Eigen::VectorXd cand = w + t * step;
      if (barrier_feasible(cand, pen)) {
        const double fc = objective(cand);
        // strict decrease required: accepting fc == fw would loop on no-op
        // steps at the roundoff floor and block the polishing fallback
        if (fc <= fw + 0.25 * t * slope && fc < fw) {
          w = cand;
          fw = fc;
          moved = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!moved) {
      const Eigen::VectorXd cand = w + step;
      if (barrier_feasible(cand, pen) &&
          gradient(cand).norm() < sol.grad_norm) {
        w = cand;
        fw = objective(cand);
        moved = true;
      }
    }
    if (!moved) break;
  }
  sol.grad_norm = gradient(w).norm();
  if (sol.grad_norm < tol) sol.converged = true;
  sol.w_star = w;
  sol.hessian_diag = barrier_hessian_diag(w, pen);
  return sol;
}

Eigen::VectorXd psi(const PosteriorGeometry& geo, const BarrierPenalty& pen,
                    const Eigen::VectorXd& zeta) {
  const WStarSolution wsol = solve_w_star(geo, pen, zeta);
  return geo.Apsi * zeta + geo.SPt * (geo.o - wsol.w_star);
}

static double log_abs_det_with_sign(const Eigen::MatrixXd& A, double* sign) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  double log_det = 0.0;
  double s = lu.permutationP().determinant();  // +-1
  const auto& diag = lu.matrixLU().diagonal();
  for (int i = 0; i < diag.size(); ++i) {
    if (diag[i] == 0.0) {
      if (sign) *sign = 0.0;
      return -kInf;
    }
    log_det += std::log(std::abs(diag[i]));
    if (diag[i] < 0) s = -s;
  }
  if (sign) *sign = s;
  return log_det;
}

JacobianResult jacobian(const PosteriorGeometry& geo,
                        const BarrierPenalty& pen,
                        const Eigen::VectorXd& zeta,
                        const WStarSolution& wsol) {
  (void)zeta;
  Eigen::MatrixXd N = geo.QtQ / geo.eta_sq;
  N.diagonal() += wsol.hessian_diag;
  Eigen::LLT<Eigen::MatrixXd> llt(N);
  if (llt.info() != Eigen::Success)
    throw NumericalError("jacobian: curvature not positive definite");
  (void)pen;
  JacobianResult out;
  out.D = llt.solve(geo.QtQP) / geo.eta_sq;
  out.J = geo.Apsi - geo.SPt * out.D;
  double sign = 0.0;
  out.log_det = log_abs_det_with_sign(out.J, &sign);
  if (!(sign > 0))
    throw NumericalError("jacobian: non-positive determinant");
  return out;
}

ReparamEvaluation evaluate_zeta(const PosteriorGeometry& geo,
                                const BarrierPenalty& pen,
                                const PriorSpec& prior,
                                const Eigen::VectorXd& zeta, bool want_grad,
                                const Eigen::VectorXd* warm_start) {
  ReparamEvaluation ev;
  ev.zeta = zeta;
  ev.wstar = solve_w_star(geo, pen, zeta, warm_start);
  const Eigen::VectorXd& w = ev.wstar.w_star;

  const JacobianResult jac = jacobian(geo, pen, zeta, ev.wstar);
  ev.log_det_jacobian = jac.log_det;
  ev.beta = geo.Apsi * zeta + geo.SPt * (geo.o - w);

  const Eigen::VectorXd resid = w - geo.P * zeta - geo.o;
  const Eigen::VectorXd sigma_inv_beta = geo.Sigma_inv * ev.beta;
  ev.log_post = prior.log_value(ev.beta) + jac.log_det +
                geo.beta_hat.dot(sigma_inv_beta) - zeta.dot(sigma_inv_beta) +
                0.5 * zeta.dot(geo.Sigma_inv * zeta) +
                0.5 * resid.dot(geo.QtQ * resid) / geo.eta_sq +
                barrier_value(w, pen);

  if (want_grad) {
    const Eigen::VectorXd score =
        prior.grad(ev.beta) + geo.Sigma_inv * (geo.beta_hat - zeta);
    // d/dzeta log|det J| contracts the third barrier derivative against
    // D J^-1 Sigma D'.
    const Eigen::MatrixXd K =
        jac.J.partialPivLu().solve(geo.Sigma * jac.D.transpose());
    const Eigen::VectorXd third = barrier_third_diag(w, pen);
    Eigen::VectorXd weights(jac.D.rows());
    for (int l = 0; l < jac.D.rows(); ++l)
      weights[l] = jac.D.row(l).dot(K.col(l)) * third[l];
    ev.grad = jac.J.transpose() * score + jac.D.transpose() * weights;
  }
  ev.ok = std::isfinite(ev.log_post);
  return ev;
}

double log_posterior_zeta(const PosteriorGeometry& geo,
                          const BarrierPenalty& pen, const PriorSpec& prior,
                          const Eigen::VectorXd& zeta) {
  return evaluate_zeta(geo, pen, prior, zeta, false).log_post;
}

Eigen::VectorXd grad_log_posterior_zeta(const PosteriorGeometry& geo,
                                        const BarrierPenalty& pen,
                                        const PriorSpec& prior,
                                        const Eigen::VectorXd& zeta) {
  return evaluate_zeta(geo, pen, prior, zeta, true).grad;
}

BetaLogPosterior log_posterior_beta(const PosteriorGeometry& geo,
                                    const BarrierPenalty& pen,
                                    const PriorSpec& prior,
                                    const Eigen::VectorXd& beta, double tol,
                                    int max_iter) {
  const int nb = geo.dim_inference();
  const int ne = geo.dim_active();
  if (beta.size() != nb)
    throw ValidationError("log_posterior_beta: beta dimension mismatch");
  const double inv_eta = 1.0 / geo.eta_sq;

  Eigen::VectorXd b = beta;
  Eigen::VectorXd w = geo.beta_lasso;

  auto objective = [&](const Eigen::VectorXd& bb, const Eigen::VectorXd& ww) {
    const Eigen::VectorXd db = bb - beta;
    const Eigen::VectorXd dw = ww - geo.P * bb - geo.o;
    return 0.5 * db.dot(geo.Sigma_inv * db) +
           0.5 * inv_eta * dw.dot(geo.QtQ * dw) + barrier_value(ww, pen);
  };

  auto gradient = [&](const Eigen::VectorXd& bb, const Eigen::VectorXd& ww) {
    const Eigen::VectorXd qdw = inv_eta * (geo.QtQ * (ww - geo.P * bb - geo.o));
    Eigen::VectorXd g(nb + ne);
    g.head(nb) = geo.Sigma_inv * (bb - beta) - geo.P.transpose() * qdw;
    g.tail(ne) = qdw + barrier_gradient(ww, pen);
    return g;
  };

  // Same polishing policy as solve_w_star: run past tol while full Newton
  // steps still shrink the gradient, with a gradient-decrease fallback once
  // objective differences drop under the roundoff floor.
  BetaLogPosterior out;
  double f = objective(b, w);
  double gnorm = 0.0;
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    const Eigen::VectorXd grad = gradient(b, w);
    gnorm = grad.norm();
    if (gnorm < tol) out.converged = true;
    if (gnorm == 0.0) break;
    Eigen::MatrixXd H(nb + ne, nb + ne);
    H.topLeftCorner(nb, nb) =
        geo.Sigma_inv + geo.P.transpose() * (inv_eta * geo.QtQ) * geo.P;
    H.topRightCorner(nb, ne) = -(inv_eta * geo.QtQP).transpose();
    H.bottomLeftCorner(ne, nb) = inv_eta * geo.QtQP;
    H.bottomLeftCorner(ne, nb) *= -1.0;
    H.bottomRightCorner(ne, ne) = inv_eta * geo.QtQ;
    H.bottomRightCorner(ne, ne).diagonal() += barrier_hessian_diag(w, pen);
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success)
      throw NumericalError("log_posterior_beta: Hessian not positive definite");
    const Eigen::VectorXd step = -llt.solve(grad);
    const double slope = grad.dot(step);

    double t = 1.0;
    bool moved = false;
    for (int back = 0; back < 70; ++back) {
      const Eigen::VectorXd bc = b + t * step.head(nb);
      const Eigen::VectorXd wc = w + t * step.tail(ne);
      if (barrier_feasible(wc, pen)) {
        const double fc = objective(bc, wc);
        if (fc <= f + 0.25 * t * slope && fc < f) {
          b = bc;
          w = wc;
          f = fc;
          moved = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!moved) {
      const Eigen::VectorXd bc = b + step.head(nb);
      const Eigen::VectorXd wc = w + step.tail(ne);
      if (barrier_feasible(wc, pen) && gradient(bc, wc).norm() < gnorm) {
        b = bc;
        w = wc;
        f = objective(bc, wc);
        moved = true;
      }
    }
    if (!moved) break;
  }
  if (gradient(b, w).norm() < tol) out.converged = true;

  out.inner_b = b;
  out.inner_w = w;
  out.inner_infimum = f;
  const Eigen::VectorXd dbh = geo.beta_hat - beta;
  out.value =
      prior.log_value(beta) - 0.5 * dbh.dot(geo.Sigma_inv * dbh) + f;
  return out;
}

}  // namespace postsel
