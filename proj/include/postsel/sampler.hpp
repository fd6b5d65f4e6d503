#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "postsel/posterior.hpp"

namespace postsel {

struct SamplerConfig {
  int n_samples = 5000;
  int burn_in = 1000;
  double step_size = 0.5;          // initial; adapted during burn-in
  double target_acceptance = 0.574;
  int n_chains = 1;
  std::uint64_t seed = 1;
};

struct LogDensityEval {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::VectorXd mapped;  // coordinates the intervals are formed in
  bool ok = false;
};

using LogDensity = std::function<LogDensityEval(const Eigen::VectorXd&)>;

struct ChainDiagnostics {
  double acceptance_rate = 0.0;
  double final_step = 0.0;
};

struct PosteriorSamples {
  Eigen::MatrixXd draws;        // retained raw chain states, stacked chains
  Eigen::MatrixXd mapped_draws; // mapped coordinates, row-aligned with draws
  double acceptance_rate = 0.0;
  Eigen::VectorXd ess;          // per mapped coordinate
  double max_split_rhat = 0.0;
  std::vector<ChainDiagnostics> chains;
};

// Metropolis-adjusted Langevin with an isotropic proposal.  The step size is
// tuned by Robbins-Monro toward the target acceptance during burn-in and
// frozen afterwards.
PosteriorSamples sample_mala(const LogDensity& target,
                             const SamplerConfig& cfg,
                             const Eigen::VectorXd& init);

struct CredibleIntervals {
  std::vector<double> levels;
  Eigen::MatrixXd lower;   // levels x coefficients
  Eigen::MatrixXd upper;
  Eigen::VectorXd median;
};

// Equal-tailed intervals from sample columns; quantile rule: sorted
// ascending, rank ceil(alpha*m) clamped to [1, m].
CredibleIntervals credible_intervals(const Eigen::MatrixXd& samples,
                                     const std::vector<double>& levels);

double sample_quantile(std::vector<double> values, double alpha);

struct InferenceResult {
  PosteriorSamples samples;
  CredibleIntervals intervals;
};

// Posterior over the reparameterized selective density; intervals are formed
// on the mapped (mean-adjusted) draws.
InferenceResult selective_infer(const PosteriorGeometry& geo,
                                const PriorSpec& prior,
                                const SamplerConfig& cfg,
                                const std::vector<double>& levels);

// Same machinery without the selection correction.
InferenceResult naive_infer(const PosteriorGeometry& geo,
                            const PriorSpec& prior, const SamplerConfig& cfg,
                            const std::vector<double>& levels);

struct SplitResult {
  std::vector<int> selected;     // global column ids picked on the fit half
  std::vector<int> infer_rows;   // holdout rows used for inference
  CredibleIntervals intervals;
  PosteriorSamples samples;
  double sigma_sq = 0.0;
  bool degenerate = false;
  std::string reason;
};

// Sample splitting baseline: select on ceil(fraction*n) rows with a plain
// lasso, then run the uncorrected posterior on the holdout.
SplitResult split_infer(const Eigen::VectorXd& y, const Eigen::MatrixXd& G,
                        double fraction, double kappa, const PriorSpec& prior,
                        const SamplerConfig& cfg,
                        const std::vector<double>& levels, std::uint64_t seed);

}  // namespace postsel
