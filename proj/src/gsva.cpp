#include "postsel/gsva.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "postsel/errors.hpp"

namespace postsel {

static double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

Eigen::MatrixXd gsva_scores(const ExpressionMatrix& expr,
                            const GeneSetCollection& sets, double tau,
                            double bandwidth_divisor) {
  const int p = static_cast<int>(expr.values.rows());
  const int n = static_cast<int>(expr.values.cols());
  if (p < 2 || n < 2)
    throw ValidationError("gsva: need at least two genes and two samples");
  if (tau < 0) throw ValidationError("gsva: tau must be >= 0");
  if (bandwidth_divisor <= 0)
    throw ValidationError("gsva: bandwidth divisor must be positive");
  if (sets.names.size() != sets.members.size())
    throw ValidationError("gsva: set names and members differ in length");

  std::vector<std::vector<char>> in_set(sets.members.size(),
                                        std::vector<char>(p, 0));
  for (std::size_t k = 0; k < sets.members.size(); ++k) {
    if (sets.members[k].empty())
      throw ValidationError("gsva: empty gene set '" + sets.names[k] + "'");
    int unique = 0;
    for (const int g : sets.members[k]) {
      if (g < 0 || g >= p)
        throw ValidationError("gsva: gene index out of range in set '" +
                              sets.names[k] + "'");
      if (!in_set[k][g]) {
        in_set[k][g] = 1;
        ++unique;
      }
    }
    if (unique >= p)
      throw ValidationError("gsva: set '" + sets.names[k] +
                            "' covers every gene");
  }

  // Gene-level kernel CDF statistics.
  Eigen::MatrixXd cdf(p, n);
  for (int i = 0; i < p; ++i) {
    const Eigen::VectorXd row = expr.values.row(i);
    const double mean = row.mean();
    const double sd =
        std::sqrt((row.array() - mean).square().sum() / (n - 1));
    const double s = sd > 0 ? sd / bandwidth_divisor : 1.0;
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int r = 0; r < n; ++r) acc += normal_cdf((row[j] - row[r]) / s);
      cdf(i, j) = acc / n;
    }
  }

  Eigen::MatrixXd scores(static_cast<int>(sets.members.size()), n);
  std::vector<int> order(p);
  std::vector<double> rank(p), weight(p);
  for (int j = 0; j < n; ++j) {
    // Descending statistic; ties keep input gene order for the walk and get
    // the average of the ranks they span.
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return cdf(a, j) > cdf(b, j);
    });
    for (int start = 0; start < p;) {
      int stop = start + 1;
      while (stop < p && cdf(order[stop], j) == cdf(order[start], j)) ++stop;
      const double avg = 0.5 * (start + 1 + stop);  // mean of ranks start+1..stop
      for (int k = start; k < stop; ++k) rank[order[k]] = avg;
      start = stop;
    }
    for (int i = 0; i < p; ++i)
      weight[i] = std::pow(std::abs(0.5 * p - rank[i]), tau);

    for (std::size_t k = 0; k < sets.members.size(); ++k) {
      double in_total = 0.0;
      int set_size = 0;
      for (int i = 0; i < p; ++i)
        if (in_set[k][i]) {
          in_total += weight[i];
          ++set_size;
        }
      const double out_denom = p - set_size;
      double in_acc = 0.0, out_acc = 0.0;
      double peak = 0.0, trough = 0.0;
      for (int l = 0; l < p; ++l) {
        const int gene = order[l];
        if (in_set[k][gene]) {
          if (in_total > 0) in_acc += weight[gene] / in_total;
        } else {
          out_acc += 1.0 / out_denom;
        }
        const double eta = in_acc - out_acc;
        peak = std::max(peak, eta);
        trough = std::min(trough, eta);
      }
      scores(static_cast<int>(k), j) = peak - trough;
    }
  }
  return scores;
}

}  // namespace postsel
