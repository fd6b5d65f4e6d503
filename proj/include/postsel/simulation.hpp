#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "postsel/sampler.hpp"

namespace postsel {

struct SimulationConfig {
  int n = 100;
  int r = 50;
  double pi = 0.95;            // spike weight
  double spike_scale = 0.10;
  std::vector<double> s_list{0.2, 1.0, 2.0, 4.0};  // slab scales (regimes)
  double rho = 0.70;
  // Noise sd large enough to dominate the dense spike background
  // (var ~ r*pi*2*spike_scale^2 ~ 0.9); otherwise selection luck is mostly
  // leakage from correlated unmodeled spikes rather than noise at the
  // boundary, and no method's conditioning matches the mechanism.
  double sigma = 3.0;
  std::string eta_rule = "noise";  // "noise" -> eta^2 = sigma_hat^2
  double eta_value = 0.0;          // used when eta_rule = "value"
  double lambda_kappa = 1.0;
  int n_reps = 300;
  double level = 0.9;
  std::vector<double> split_fractions{0.5, 0.9};
  int n_samples = 5000;
  int burn_in = 1000;
  double step_size = 0.5;
  std::uint64_t seed = 20240817;
  int threads = 1;
  std::optional<Eigen::MatrixXd> design;  // fixed design override
};

// Spike-and-slab Laplace mixture; returns coefficients and slab indicators.
std::pair<Eigen::VectorXd, std::vector<char>> draw_signals(
    int r, double pi, double slab_scale, double spike_scale,
    std::uint64_t seed);

// Rows are independent AR(1) strings: x_1 = xi_1,
// x_j = rho x_{j-1} + sqrt(1-rho^2) xi_j.
Eigen::MatrixXd synth_design(int n, int r, double rho, std::uint64_t seed);

// Least squares projection of the mean response onto the selected columns.
Eigen::VectorXd projection_target(const Eigen::MatrixXd& G_sel,
                                  const Eigen::MatrixXd& G_all,
                                  const Eigen::VectorXd& beta_true);

struct MethodOutcome {
  bool evaluated = false;   // produced intervals
  bool degenerate = false;
  std::string reason;
  int covered = 0;
  int n_coef = 0;
  double length_sum = 0.0;
  int screening = 0;        // selected coefficients that are slab signals
};

struct ReplicationRecord {
  double slab_scale = 0.0;
  int rep = 0;
  int n_selected = 0;
  std::map<std::string, MethodOutcome> methods;
};

ReplicationRecord run_replication(const SimulationConfig& cfg,
                                  int regime_index, int rep);

struct SummaryRow {
  double slab_scale = 0.0;
  std::string method;
  std::string metric;
  double value = 0.0;
  int n_used = 0;
};

struct SimulationReport {
  std::vector<ReplicationRecord> replications;
  std::vector<SummaryRow> summary;
};

std::vector<SummaryRow> aggregate(
    const std::vector<ReplicationRecord>& records, double slab_scale);

// All regimes, replications fanned out over cfg.threads workers; results are
// identical for any worker count.
SimulationReport run_sweep(const SimulationConfig& cfg);

std::vector<std::string> method_names(const SimulationConfig& cfg);

}  // namespace postsel
