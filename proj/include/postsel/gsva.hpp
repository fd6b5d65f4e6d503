#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace postsel {

struct ExpressionMatrix {
  Eigen::MatrixXd values;  // genes x samples
  std::vector<std::string> gene_labels;
  std::vector<std::string> sample_labels;
};

struct GeneSetCollection {
  std::vector<std::string> names;
  std::vector<std::vector<int>> members;  // row indices into the expression
};

// Per-sample pathway enrichment: Gaussian-kernel CDF statistics, descending
// dense ranks (ties averaged, walk order broken by gene index), centered rank
// weights |p/2 - r|^tau, and the two-sided KS-like range statistic.
Eigen::MatrixXd gsva_scores(const ExpressionMatrix& expr,
                            const GeneSetCollection& sets, double tau = 1.0,
                            double bandwidth_divisor = 4.0);

}  // namespace postsel
