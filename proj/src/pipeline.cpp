#include "postsel/pipeline.hpp"

#include <algorithm>
#include <map>

#include "postsel/errors.hpp"
#include "postsel/rng.hpp"

namespace postsel {

FirstStageResult run_first_stage(const Eigen::MatrixXd& G,
                                 const Eigen::MatrixXd& I,
                                 const Eigen::VectorXd& lambdas) {
  if (I.rows() != G.rows())
    throw ValidationError("first stage: I and G row counts differ");
  const int L = static_cast<int>(I.cols());
  if (lambdas.size() != L)
    throw ValidationError("first stage: one lambda per query required");
  FirstStageResult out;
  std::map<int, int> mult;
  for (int l = 0; l < L; ++l) {
    const Eigen::VectorXd lam =
        Eigen::VectorXd::Constant(G.cols(), lambdas[l]);
    const LassoSolution sol = solve_lasso(G, I.col(l), lam);
    out.query_sets.push_back(sol.active);
    out.query_converged.push_back(sol.converged ? 1 : 0);
    for (const int j : sol.active) ++mult[j];
  }
  for (const auto& [j, m] : mult) {
    out.union_set.push_back(j);
    out.multiplicity.push_back(m);
  }
  return out;
}

double mc_sup_lambda(const Eigen::MatrixXd& X, double sd, double kappa,
                     std::uint64_t seed, int draws) {
  if (sd <= 0) throw ValidationError("mc_sup_lambda: sd must be positive");
  if (draws < 2) throw ValidationError("mc_sup_lambda: need >= 2 draws");
  Rng rng(seed);
  std::vector<double> sup(draws);
  Eigen::VectorXd xi(X.rows());
  for (int t = 0; t < draws; ++t) {
    for (int i = 0; i < xi.size(); ++i) xi[i] = sd * rng.normal();
    sup[t] = (X.transpose() * xi).cwiseAbs().maxCoeff();
  }
  std::sort(sup.begin(), sup.end());
  const int d = draws;
  const double median =
      d % 2 ? sup[d / 2] : 0.5 * (sup[d / 2 - 1] + sup[d / 2]);
  return kappa * median;
}

Eigen::VectorXd compute_penalty_weights(const std::vector<int>& multiplicity,
                                        int n_queries, double c) {
  if (c <= 0) throw ValidationError("penalty scale must be positive");
  Eigen::VectorXd w(static_cast<int>(multiplicity.size()));
  for (std::size_t j = 0; j < multiplicity.size(); ++j) {
    if (multiplicity[j] < 1 || multiplicity[j] > n_queries)
      throw ValidationError("multiplicity outside [1, n_queries]");
    w[static_cast<int>(j)] = c * n_queries / multiplicity[j];
  }
  return w;
}

std::vector<int> augment_selection(const std::vector<int>& active,
                                   const std::vector<int>& user_set, int p) {
  std::vector<int> out = active;
  out.insert(out.end(), user_set.begin(), user_set.end());
  for (const int j : out)
    if (j < 0 || j >= p) throw ValidationError("selection index out of range");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace postsel
