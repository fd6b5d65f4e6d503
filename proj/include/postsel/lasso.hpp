#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace postsel {

struct LassoSolution {
  Eigen::VectorXd beta;        // full length, exact zeros off the active set
  std::vector<int> active;     // ascending column indices with beta != 0
  Eigen::VectorXd signs;       // +-1 per active entry
  int sweeps = 0;
  bool converged = false;
};

// Weighted lasso  0.5*||y - X b||^2 + sum_j lambda_j |b_j|  by cyclic
// coordinate descent with soft thresholding and a running residual.
LassoSolution solve_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& lambda, double tol = 1e-11,
                          int max_sweeps = 100000);

struct RandomizationSpec {
  double eta_sq = 0.0;
  std::uint64_t seed = 0;
  Eigen::VectorXd realized;
};

// R ~ N(0, eta_sq * I_dim) from its own stream.
RandomizationSpec draw_randomization(int dim, double eta_sq,
                                     std::uint64_t seed);

// Everything the downstream inference needs to reconstruct the selection
// event: the solved randomized program plus the refit against the inference
// set ebar (defaults to the active set, optionally augmented by the user).
struct SelectionRecord {
  std::vector<int> fbar;        // global column ids of the candidate set
  std::vector<int> active;      // positions within fbar, ascending
  std::vector<int> ebar;        // global column ids used for inference
  Eigen::VectorXd signs;        // per active position
  Eigen::VectorXd beta_lasso;   // solved coefficients on the active set
  Eigen::VectorXd subgradient;  // inactive subgradient z, inactive order
  Eigen::VectorXd beta_hat;     // least squares refit on ebar
  Eigen::VectorXd beta_perp;    // X' (y - X_ebar beta_hat), fbar order
  Eigen::VectorXd lambda;       // penalty weights over fbar
  double epsilon = 0.0;
  RandomizationSpec randomization;
  int sweeps = 0;
  bool converged = false;

  std::vector<int> inactive() const {
    std::vector<int> out;
    int k = 0;
    for (int j = 0; j < static_cast<int>(fbar.size()); ++j) {
      if (k < static_cast<int>(active.size()) && active[k] == j) ++k;
      else out.push_back(j);
    }
    return out;
  }
};

// Randomized ridge-stabilized lasso
//   0.5*||y - X b||^2 + sum_j lambda_j |b_j| + 0.5*epsilon*||b||^2 - R' b.
// Coordinate descent, then the active-set stationarity system is re-solved
// exactly so the recorded coefficients and subgradient satisfy the KKT
// equations to factorization accuracy.
SelectionRecord solve_randomized_lasso(const Eigen::VectorXd& y,
                                       const Eigen::MatrixXd& X,
                                       const Eigen::VectorXd& lambda,
                                       double epsilon,
                                       const RandomizationSpec& rand,
                                       double tol = 1e-11,
                                       int max_sweeps = 100000);

// Max-norm of the stationarity residual of the stored solution, recomputed
// from scratch against (y, X, R).
double verify_kkt(const SelectionRecord& rec, const Eigen::VectorXd& y,
                  const Eigen::MatrixXd& X, const Eigen::VectorXd& R);

// Replace the inference set by active ∪ user_set (global ids into G) and
// refresh the refit quantities.  G must hold every column named by fbar/ebar.
void apply_augmentation(SelectionRecord& rec, const Eigen::VectorXd& y,
                        const Eigen::MatrixXd& G,
                        const std::vector<int>& user_set);

}  // namespace postsel
