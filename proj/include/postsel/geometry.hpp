#pragma once

#include <Eigen/Dense>
#include <vector>

#include "postsel/lasso.hpp"

namespace postsel {

// Selection event {U b_hat + V r + W b_perp - t > 0} in the coordinates
// (active block first, then inactive).  `order` maps those coordinates back
// to natural candidate-set positions, so callers pass r and b_perp unsorted.
struct SelectionPolytope {
  Eigen::MatrixXd U;   // rows x |ebar|
  Eigen::MatrixXd V;   // rows x |fbar|, applied to reordered r
  Eigen::MatrixXd W;   // rows x |fbar|, applied to reordered b_perp
  Eigen::VectorXd t;
  std::vector<int> order;  // reordered position i holds natural position order[i]
};

SelectionPolytope build_polytope(const Eigen::MatrixXd& X_fbar,
                                 const Eigen::MatrixXd& G_ebar,
                                 const std::vector<int>& active,
                                 const Eigen::VectorXd& signs,
                                 const Eigen::VectorXd& lambda,
                                 double epsilon);

// Strict inequalities; a tie counts as outside.
bool event_contains(const SelectionPolytope& poly,
                    const Eigen::VectorXd& beta_hat,
                    const Eigen::VectorXd& r,
                    const Eigen::VectorXd& beta_perp);

// Residual variance of the least squares fit of y on X, df = n - cols.
double estimate_sigma(const Eigen::VectorXd& y, const Eigen::MatrixXd& X);

// Fixed matrices of the conditional posterior.  Rows of Q and friends use
// the reordered (active first) candidate coordinates throughout.
struct PosteriorGeometry {
  Eigen::MatrixXd Q;          // |fbar| x |E|
  Eigen::MatrixXd QtQ;        // |E| x |E|
  Eigen::VectorXd sqrt_diag;  // diag of the symmetric sqrt of QtQ
  Eigen::MatrixXd P;          // |E| x |ebar|
  Eigen::VectorXd o;          // |E|
  Eigen::MatrixXd Sigma;      // |ebar| x |ebar|
  Eigen::MatrixXd Sigma_inv;
  Eigen::VectorXd beta_hat;   // |ebar|
  Eigen::VectorXd signs;      // |E|
  Eigen::VectorXd beta_lasso; // |E|, feasible start for the inner solver
  double sigma_sq = 0.0;
  double eta_sq = 0.0;
  // Cached products used by every posterior evaluation.
  Eigen::MatrixXd SPt;        // eta^-2 Sigma P' QtQ          (|ebar| x |E|)
  Eigen::MatrixXd Apsi;       // I + SPt P                    (|ebar| x |ebar|)
  Eigen::MatrixXd QtQP;       // QtQ P                        (|E| x |ebar|)

  int dim_inference() const { return static_cast<int>(beta_hat.size()); }
  int dim_active() const { return static_cast<int>(signs.size()); }
};

PosteriorGeometry build_geometry(const SelectionRecord& rec,
                                 const Eigen::MatrixXd& G, double sigma_sq,
                                 double eta_sq);

}  // namespace postsel
