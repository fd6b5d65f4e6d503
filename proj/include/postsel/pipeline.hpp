#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "postsel/lasso.hpp"

namespace postsel {

struct Dataset {
  Eigen::VectorXd y;   // outcome, length n
  Eigen::MatrixXd G;   // gene design, n x p
  Eigen::MatrixXd I;   // intermediate query outcomes, n x L (0 cols if none)
  std::vector<std::string> gene_labels;
  std::vector<std::string> query_labels;
};

struct FirstStageResult {
  std::vector<std::vector<int>> query_sets;  // per-query active gene ids
  std::vector<char> query_converged;
  std::vector<int> union_set;                // ascending gene ids
  std::vector<int> multiplicity;             // parallel to union_set
};

// One lasso of each intermediate outcome I_l on G.
FirstStageResult run_first_stage(const Eigen::MatrixXd& G,
                                 const Eigen::MatrixXd& I,
                                 const Eigen::VectorXd& lambdas);

// kappa * median over `draws` of ||X' xi||_inf with xi ~ N(0, sd^2 I).
double mc_sup_lambda(const Eigen::MatrixXd& X, double sd, double kappa,
                     std::uint64_t seed, int draws = 50);

// Second-stage weights lambda_j = c * L / m_j for multiplicities m_j.
Eigen::VectorXd compute_penalty_weights(const std::vector<int>& multiplicity,
                                        int n_queries, double c);

// active ∪ user, sorted, validated against [0, p).
std::vector<int> augment_selection(const std::vector<int>& active,
                                   const std::vector<int>& user_set, int p);

}  // namespace postsel
