#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "postsel/errors.hpp"
#include "postsel/geometry.hpp"
#include "postsel/lasso.hpp"
#include "postsel/posterior.hpp"
#include "postsel/rng.hpp"

using namespace postsel;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Fixture {
  MatrixXd X;
  VectorXd y;
  SelectionRecord rec;
  PosteriorGeometry geo;
  BarrierPenalty pen;
};

// Solve a randomized lasso whose selection is nonempty and build the
// conditional geometry around it.
Fixture make_fixture(std::uint64_t seed, int n = 45, int q = 6,
                     double lam = 6.5, double eps = 0.8, double eta_sq = 2.0) {
  Rng r(seed);
  Fixture f;
  for (;;) {
    f.X.resize(n, q);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < q; ++j) f.X(i, j) = r.normal();
    VectorXd beta_true = VectorXd::Zero(q);
    beta_true[0] = 3.0;
    beta_true[q / 2] = -2.4;
    f.y = f.X * beta_true;
    for (int i = 0; i < n; ++i) f.y[i] += r.normal();
    const RandomizationSpec rand =
        draw_randomization(q, eta_sq, seed * 13 + 5);
    f.rec = solve_randomized_lasso(f.y, f.X, VectorXd::Constant(q, lam), eps,
                                   rand);
    if (f.rec.converged && !f.rec.active.empty()) break;
    seed += 1;  // extremely rare with the planted signal
  }
  const double sig = estimate_sigma(f.y, f.X(Eigen::all, f.rec.ebar));
  f.geo = build_geometry(f.rec, f.X, sig, eta_sq);
  f.pen = make_barrier(f.geo);
  return f;
}

VectorXd feasible_w(const Fixture& f, Rng& r, double spread = 0.5) {
  VectorXd w(f.pen.signs.size());
  for (int j = 0; j < w.size(); ++j)
    w[j] = f.pen.signs[j] * (0.3 + spread * r.uniform());
  return w;
}

}  // namespace

TEST_CASE("barrier value matches the closed form and its limits") {
  BarrierPenalty pen;
  pen.scales = VectorXd::Constant(1, 1.0);
  pen.signs = VectorXd::Constant(1, 1.0);
  VectorXd w = VectorXd::Constant(1, 1.0);
  CHECK(barrier_value(w, pen) == doctest::Approx(std::log(2.0)));
  // decays to zero monotonically as s_j w_j grows
  double prev = barrier_value(w, pen);
  for (double v = 2.0; v < 1e6; v *= 10.0) {
    w[0] = v;
    const double cur = barrier_value(w, pen);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(prev < 1e-5);
  // infeasible points are flagged and carry an infinite penalty
  w[0] = -1.0;
  CHECK(!barrier_feasible(w, pen));
  CHECK(std::isinf(barrier_value(w, pen)));
}

TEST_CASE("barrier derivatives match central finite differences") {
  const Fixture f = make_fixture(21);
  Rng r(99);
  const double h = 1e-6;
  for (int rep = 0; rep < 100; ++rep) {
    const VectorXd w = feasible_w(f, r, 2.0);
    const VectorXd g = barrier_gradient(w, f.pen);
    const VectorXd hd = barrier_hessian_diag(w, f.pen);
    const VectorXd td = barrier_third_diag(w, f.pen);
    for (int j = 0; j < w.size(); ++j) {
      VectorXd wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      const double fd1 =
          (barrier_value(wp, f.pen) - barrier_value(wm, f.pen)) / (2 * h);
      const double fd2 = (barrier_gradient(wp, f.pen)[j] -
                          barrier_gradient(wm, f.pen)[j]) /
                         (2 * h);
      const double fd3 = (barrier_hessian_diag(wp, f.pen)[j] -
                          barrier_hessian_diag(wm, f.pen)[j]) /
                         (2 * h);
      CHECK(std::abs(g[j] - fd1) / std::max(std::abs(g[j]), 1e-3) < 1e-5);
      CHECK(std::abs(hd[j] - fd2) / std::max(std::abs(hd[j]), 1e-3) < 1e-5);
      CHECK(std::abs(td[j] - fd3) / std::max(std::abs(td[j]), 1e-3) < 1e-4);
    }
  }
}

TEST_CASE("pseudo-huber prior matches the laplace law away from zero") {
  const PriorSpec prior = PriorSpec::laplace_prior(1.5);
  VectorXd b(2);
  b << 2.0, -3.0;
  // for |b| >> smoothing the smoothed log density is -|b|/scale + O(delta)
  CHECK(prior.log_value(b) ==
        doctest::Approx(-(2.0 + 3.0) / 1.5).epsilon(1e-3));
  const VectorXd g = prior.grad(b);
  CHECK(g[0] == doctest::Approx(-1.0 / 1.5).epsilon(1e-6));
  CHECK(g[1] == doctest::Approx(1.0 / 1.5).epsilon(1e-6));
  // smooth and symmetric at the origin
  VectorXd z = VectorXd::Zero(2);
  CHECK(prior.grad(z).cwiseAbs().maxCoeff() == 0.0);
  const PriorSpec flat = PriorSpec::flat_prior();
  CHECK(flat.log_value(b) == 0.0);
  CHECK(flat.grad(b).isZero(0.0));
}

TEST_CASE("prior gradient matches finite differences through the bend") {
  const PriorSpec prior = PriorSpec::laplace_prior(0.8);
  Rng r(17);
  const double h = 1e-7;
  for (int rep = 0; rep < 50; ++rep) {
    VectorXd b(3);
    // cover the smoothing region near zero as well as the linear tails
    b << 1e-4 * (r.uniform() - 0.5), r.normal(), 5.0 * r.normal();
    const VectorXd g = prior.grad(b);
    for (int j = 0; j < 3; ++j) {
      VectorXd bp = b, bm = b;
      bp[j] += h;
      bm[j] -= h;
      const double fd = (prior.log_value(bp) - prior.log_value(bm)) / (2 * h);
      CHECK(std::abs(g[j] - fd) < 2e-5);
    }
  }
}

TEST_CASE("the inner optimizer satisfies its first-order condition") {
  const Fixture f = make_fixture(33);
  Rng r(4);
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd zeta = f.geo.beta_hat;
    for (int j = 0; j < zeta.size(); ++j) zeta[j] += 0.4 * r.normal();
    const WStarSolution ws = solve_w_star(f.geo, f.pen, zeta);
    REQUIRE(ws.converged);
    CHECK(barrier_feasible(ws.w_star, f.pen));
    // gradient of the objective: QtQ (w - Pz - o)/eta^2 + C'(w)
    const VectorXd resid = ws.w_star - f.geo.P * zeta - f.geo.o;
    const VectorXd g =
        f.geo.QtQ * resid / f.geo.eta_sq + barrier_gradient(ws.w_star, f.pen);
    CHECK(g.norm() < 1e-8);
    // curvature snapshot matches the barrier hessian at the optimum
    CHECK((ws.hessian_diag - barrier_hessian_diag(ws.w_star, f.pen))
              .cwiseAbs()
              .maxCoeff() < 1e-12);

    // random feasible competitors never beat the optimum
    auto objective = [&](const VectorXd& w) {
      const VectorXd d = w - f.geo.P * zeta - f.geo.o;
      return 0.5 * d.dot(f.geo.QtQ * d) / f.geo.eta_sq +
             barrier_value(w, f.pen);
    };
    const double at_opt = objective(ws.w_star);
    for (int c = 0; c < 10; ++c) {
      const VectorXd w = feasible_w(f, r, 3.0);
      CHECK(objective(w) >= at_opt - 1e-10);
    }
  }
}

TEST_CASE("warm starts reproduce the cold-start optimum") {
  const Fixture f = make_fixture(44);
  Rng r(5);
  VectorXd zeta = f.geo.beta_hat;
  const WStarSolution cold = solve_w_star(f.geo, f.pen, zeta);
  VectorXd hint = cold.w_star;
  for (int j = 0; j < hint.size(); ++j)
    hint[j] += 0.05 * f.pen.signs[j] * r.uniform();
  const WStarSolution warm = solve_w_star(f.geo, f.pen, zeta, &hint);
  REQUIRE(warm.converged);
  CHECK((warm.w_star - cold.w_star).cwiseAbs().maxCoeff() < 1e-8);
  // floor-polish steps add a little jitter to the counts, so the bound on a
  // nearby start is loose; a hint at the optimum itself must be near-instant
  CHECK(warm.iterations <= cold.iterations + 3);
  const WStarSolution exact = solve_w_star(f.geo, f.pen, zeta, &cold.w_star);
  REQUIRE(exact.converged);
  CHECK(exact.iterations <= 3);
  CHECK((exact.w_star - cold.w_star).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("jacobian of the mean adjustment matches finite differences") {
  const Fixture f = make_fixture(55);
  Rng r(6);
  const double h = 1e-6;
  for (int rep = 0; rep < 10; ++rep) {
    VectorXd zeta = f.geo.beta_hat;
    for (int j = 0; j < zeta.size(); ++j) zeta[j] += 0.3 * r.normal();
    const WStarSolution ws = solve_w_star(f.geo, f.pen, zeta);
    REQUIRE(ws.converged);
    const JacobianResult jac = jacobian(f.geo, f.pen, zeta, ws);
    const double scale = jac.J.cwiseAbs().maxCoeff();
    for (int j = 0; j < zeta.size(); ++j) {
      VectorXd zp = zeta, zm = zeta;
      zp[j] += h;
      zm[j] -= h;
      const VectorXd col =
          (psi(f.geo, f.pen, zp) - psi(f.geo, f.pen, zm)) / (2 * h);
      for (int i = 0; i < col.size(); ++i) {
        const double denom = std::max(std::abs(jac.J(i, j)),
                                      std::max(0.01 * scale, 1e-8));
        CHECK(std::abs(jac.J(i, j) - col[i]) / denom < 1e-5);
      }
    }
    // log determinant agrees with a direct dense evaluation
    const double direct = std::log(std::abs(jac.J.determinant()));
    CHECK(jac.log_det == doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("posterior gradient in zeta matches finite differences") {
  for (std::uint64_t seed : {66u, 67u}) {
    const Fixture f = make_fixture(seed);
    const PriorSpec prior = PriorSpec::laplace_prior(1.0);
    Rng r(7);
    const double h = 1e-6;
    for (int rep = 0; rep < 10; ++rep) {
      VectorXd zeta = f.geo.beta_hat;
      for (int j = 0; j < zeta.size(); ++j) zeta[j] += 0.25 * r.normal();
      const VectorXd g = grad_log_posterior_zeta(f.geo, f.pen, prior, zeta);
      const double gmax = g.cwiseAbs().maxCoeff();
      for (int j = 0; j < zeta.size(); ++j) {
        VectorXd zp = zeta, zm = zeta;
        zp[j] += h;
        zm[j] -= h;
        const double fd = (log_posterior_zeta(f.geo, f.pen, prior, zp) -
                           log_posterior_zeta(f.geo, f.pen, prior, zm)) /
                          (2 * h);
        const double denom =
            std::max(std::abs(g[j]), std::max(1e-3 * gmax, 1e-10));
        CHECK(std::abs(g[j] - fd) / denom < 1e-5);
      }
    }
  }
}

TEST_CASE("direct and reparameterized posteriors differ by a constant") {
  const Fixture f = make_fixture(88);
  const PriorSpec prior = PriorSpec::laplace_prior(1.0);
  Rng r(8);
  double c0 = 0.0;
  double lo = 0.0, hi = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd zeta = f.geo.beta_hat;
    for (int j = 0; j < zeta.size(); ++j) zeta[j] += 0.3 * r.normal();
    const ReparamEvaluation ev =
        evaluate_zeta(f.geo, f.pen, prior, zeta, false);
    REQUIRE(ev.ok);
    const BetaLogPosterior direct =
        log_posterior_beta(f.geo, f.pen, prior, ev.beta);
    REQUIRE(direct.converged);
    const double c =
        direct.value + ev.log_det_jacobian - ev.log_post;
    if (rep == 0) {
      c0 = c;
      lo = hi = c;
    } else {
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    // the inner block optimum of the direct form sits at b = zeta
    CHECK((direct.inner_b - zeta).cwiseAbs().maxCoeff() < 1e-6);
  }
  CHECK(hi - lo < 1e-6);
  CHECK(std::isfinite(c0));
}

TEST_CASE("vanishing barrier collapses the posterior to the gaussian term") {
  const Fixture f = make_fixture(111);
  BarrierPenalty tiny = f.pen;
  tiny.scales = VectorXd::Constant(f.pen.scales.size(), 1e-12);
  const PriorSpec flat = PriorSpec::flat_prior();
  Rng r(9);
  for (int rep = 0; rep < 5; ++rep) {
    // stay near the observed selection so w = P z + o is interior
    VectorXd zeta = f.geo.beta_hat;
    for (int j = 0; j < zeta.size(); ++j) zeta[j] += 0.05 * r.normal();
    const VectorXd w0 = f.geo.P * zeta + f.geo.o;
    if (!barrier_feasible(w0, tiny)) continue;
    const ReparamEvaluation ev = evaluate_zeta(f.geo, tiny, flat, zeta, false);
    REQUIRE(ev.ok);
    // psi degenerates to the identity and the jacobian to I
    CHECK((ev.beta - zeta).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(ev.log_det_jacobian) < 1e-6);
    const double gaussian = f.geo.beta_hat.dot(f.geo.Sigma_inv * zeta) -
                            0.5 * zeta.dot(f.geo.Sigma_inv * zeta);
    CHECK(ev.log_post == doctest::Approx(gaussian).epsilon(1e-5));
  }
}
