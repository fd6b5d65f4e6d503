#include "postsel/lasso.hpp"

#include <algorithm>
#include <cmath>

#include "postsel/errors.hpp"
#include "postsel/rng.hpp"

namespace postsel {

static double soft_threshold(double u, double t) {
  if (u > t) return u - t;
  if (u < -t) return u + t;
  return 0.0;
}

static void validate_problem(const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y,
                             const Eigen::VectorXd& lambda) {
  if (y.size() != X.rows()) throw ValidationError("y length != rows of X");
  if (lambda.size() != X.cols())
    throw ValidationError("lambda length != cols of X");
  if ((lambda.array() < 0).any())
    throw ValidationError("negative penalty weight");
}

// Shared coordinate descent core; epsilon = 0 and R = 0 give the plain lasso.
static void descend(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& lambda, double epsilon,
                    const Eigen::VectorXd* R, double tol, int max_sweeps,
                    Eigen::VectorXd& beta, int& sweeps, bool& converged) {
  const int q = static_cast<int>(X.cols());
  const Eigen::VectorXd col_sq = X.colwise().squaredNorm();
  if ((col_sq.array() <= 0).any())
    throw ValidationError("design has an identically zero column");
  Eigen::VectorXd res = y - X * beta;
  converged = false;
  for (sweeps = 0; sweeps < max_sweeps && !converged; ++sweeps) {
    double max_delta = 0.0;
    for (int j = 0; j < q; ++j) {
      const double old = beta[j];
      double u = X.col(j).dot(res) + col_sq[j] * old;
      if (R) u += (*R)[j];
      const double bnew = soft_threshold(u, lambda[j]) / (col_sq[j] + epsilon);
      if (bnew != old) {
        res.noalias() += X.col(j) * (old - bnew);
        beta[j] = bnew;
        max_delta = std::max(max_delta, std::abs(bnew - old));
      }
    }
    if (max_delta < tol) converged = true;
  }
}

LassoSolution solve_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& lambda, double tol,
                          int max_sweeps) {
  validate_problem(X, y, lambda);
  LassoSolution sol;
  sol.beta = Eigen::VectorXd::Zero(X.cols());
  descend(X, y, lambda, 0.0, nullptr, tol, max_sweeps, sol.beta, sol.sweeps,
          sol.converged);
  for (int j = 0; j < X.cols(); ++j)
    if (sol.beta[j] != 0.0) sol.active.push_back(j);
  sol.signs.resize(static_cast<int>(sol.active.size()));
  for (std::size_t k = 0; k < sol.active.size(); ++k)
    sol.signs[static_cast<int>(k)] = sol.beta[sol.active[k]] > 0 ? 1.0 : -1.0;
  return sol;
}

RandomizationSpec draw_randomization(int dim, double eta_sq,
                                     std::uint64_t seed) {
  if (eta_sq <= 0) throw ValidationError("eta_sq must be positive");
  RandomizationSpec spec;
  spec.eta_sq = eta_sq;
  spec.seed = seed;
  spec.realized.resize(dim);
  Rng rng(seed);
  const double sd = std::sqrt(eta_sq);
  for (int j = 0; j < dim; ++j) spec.realized[j] = sd * rng.normal();
  return spec;
}

// Least squares refit of y on the ebar columns; fills beta_hat and beta_perp.
static void refresh_refit(SelectionRecord& rec, const Eigen::VectorXd& y,
                          const Eigen::MatrixXd& G) {
  const Eigen::MatrixXd Xf = G(Eigen::all, rec.fbar);
  if (rec.ebar.empty()) {
    rec.beta_hat.resize(0);
    rec.beta_perp = Xf.transpose() * y;
    return;
  }
  const Eigen::MatrixXd Ge = G(Eigen::all, rec.ebar);
  Eigen::LLT<Eigen::MatrixXd> llt(Ge.transpose() * Ge);
  if (llt.info() != Eigen::Success)
    throw NumericalError("inference design G_ebar is rank deficient");
  rec.beta_hat = llt.solve(Ge.transpose() * y);
  rec.beta_perp = Xf.transpose() * (y - Ge * rec.beta_hat);
}

SelectionRecord solve_randomized_lasso(const Eigen::VectorXd& y,
                                       const Eigen::MatrixXd& X,
                                       const Eigen::VectorXd& lambda,
                                       double epsilon,
                                       const RandomizationSpec& rand,
                                       double tol, int max_sweeps) {
  validate_problem(X, y, lambda);
  if (rand.realized.size() != X.cols())
    throw ValidationError("randomization length != cols of X");
  if (epsilon <= 0) throw ValidationError("epsilon must be positive");
  if ((lambda.array() <= 0).any())
    throw ValidationError("randomized solve needs strictly positive weights");

  const int q = static_cast<int>(X.cols());
  const Eigen::VectorXd& R = rand.realized;

  SelectionRecord rec;
  rec.fbar.resize(q);
  for (int j = 0; j < q; ++j) rec.fbar[j] = j;
  rec.lambda = lambda;
  rec.epsilon = epsilon;
  rec.randomization = rand;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  descend(X, y, lambda, epsilon, &R, tol, max_sweeps, beta, rec.sweeps,
          rec.converged);

  for (int j = 0; j < q; ++j)
    if (beta[j] != 0.0) rec.active.push_back(j);
  const int ne = static_cast<int>(rec.active.size());
  rec.signs.resize(ne);
  for (int k = 0; k < ne; ++k)
    rec.signs[k] = beta[rec.active[k]] > 0 ? 1.0 : -1.0;

  // Solve the active-block stationarity system exactly:
  //   (X_E' X_E + eps I) b = X_E' y + R_E - Lambda_E s_E.
  rec.beta_lasso.resize(ne);
  Eigen::MatrixXd Xe;
  if (ne > 0) {
    Xe = X(Eigen::all, rec.active);
    Eigen::MatrixXd M = Xe.transpose() * Xe;
    M.diagonal().array() += epsilon;
    Eigen::VectorXd rhs = Xe.transpose() * y;
    for (int k = 0; k < ne; ++k)
      rhs[k] += R[rec.active[k]] - lambda[rec.active[k]] * rec.signs[k];
    const Eigen::VectorXd polished = Eigen::LLT<Eigen::MatrixXd>(M).solve(rhs);
    bool same_signs = true;
    for (int k = 0; k < ne; ++k)
      if (polished[k] * rec.signs[k] <= 0) same_signs = false;
    if (same_signs) {
      rec.beta_lasso = polished;
    } else {
      // The descent stopped with a coordinate straddling zero.  Keep its
      // values; verify_kkt will show the larger residual.
      for (int k = 0; k < ne; ++k) rec.beta_lasso[k] = beta[rec.active[k]];
      rec.converged = false;
    }
  }

  // Inactive subgradient from the stationarity system.
  const std::vector<int> inact = rec.inactive();
  rec.subgradient.resize(static_cast<int>(inact.size()));
  Eigen::VectorXd fitted = Eigen::VectorXd::Zero(X.rows());
  if (ne > 0) fitted = Xe * rec.beta_lasso;
  for (std::size_t m = 0; m < inact.size(); ++m) {
    const int j = inact[m];
    rec.subgradient[static_cast<int>(m)] =
        (R[j] + X.col(j).dot(y) - X.col(j).dot(fitted)) / lambda[j];
  }
  if (rec.subgradient.size() > 0 &&
      rec.subgradient.cwiseAbs().maxCoeff() >= 1.0)
    rec.converged = false;

  rec.ebar.assign(rec.active.begin(), rec.active.end());
  refresh_refit(rec, y, X);
  return rec;
}

double verify_kkt(const SelectionRecord& rec, const Eigen::VectorXd& y,
                  const Eigen::MatrixXd& X, const Eigen::VectorXd& R) {
  const int q = static_cast<int>(rec.fbar.size());
  if (X.cols() != q || R.size() != q)
    throw ValidationError("verify_kkt: shape mismatch with record");
  Eigen::VectorXd fitted = Eigen::VectorXd::Zero(X.rows());
  if (!rec.active.empty())
    fitted = X(Eigen::all, rec.active) * rec.beta_lasso;
  const Eigen::VectorXd Xt_res = X.transpose() * (y - fitted);

  Eigen::VectorXd resid(q);
  int k = 0, m = 0;
  for (int j = 0; j < q; ++j) {
    if (k < static_cast<int>(rec.active.size()) && rec.active[k] == j) {
      resid[j] = R[j] + Xt_res[j] - rec.lambda[j] * rec.signs[k] -
                 rec.epsilon * rec.beta_lasso[k];
      ++k;
    } else {
      resid[j] = R[j] + Xt_res[j] - rec.lambda[j] * rec.subgradient[m];
      ++m;
    }
  }
  return resid.size() ? resid.cwiseAbs().maxCoeff() : 0.0;
}

void apply_augmentation(SelectionRecord& rec, const Eigen::VectorXd& y,
                        const Eigen::MatrixXd& G,
                        const std::vector<int>& user_set) {
  std::vector<int> ebar;
  for (const int pos : rec.active) ebar.push_back(rec.fbar[pos]);
  for (const int j : user_set) {
    if (j < 0 || j >= G.cols())
      throw ValidationError("augmentation index out of range");
    ebar.push_back(j);
  }
  std::sort(ebar.begin(), ebar.end());
  ebar.erase(std::unique(ebar.begin(), ebar.end()), ebar.end());
  rec.ebar = std::move(ebar);
  refresh_refit(rec, y, G);
}

}  // namespace postsel
