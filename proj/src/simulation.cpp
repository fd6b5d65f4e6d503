#include "postsel/simulation.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "postsel/csv.hpp"
#include "postsel/errors.hpp"
#include "postsel/geometry.hpp"
#include "postsel/pipeline.hpp"
#include "postsel/rng.hpp"

namespace postsel {

std::pair<Eigen::VectorXd, std::vector<char>> draw_signals(
    int r, double pi, double slab_scale, double spike_scale,
    std::uint64_t seed) {
  if (!(pi >= 0.0 && pi <= 1.0))
    throw ValidationError("spike weight outside [0,1]");
  Rng rng(seed);
  Eigen::VectorXd beta(r);
  std::vector<char> slab(r, 0);
  for (int j = 0; j < r; ++j) {
    const bool is_slab = rng.uniform() >= pi;
    slab[j] = is_slab ? 1 : 0;
    beta[j] = rng.laplace(is_slab ? slab_scale : spike_scale);
  }
  return {beta, slab};
}

Eigen::MatrixXd synth_design(int n, int r, double rho, std::uint64_t seed) {
  if (!(rho > -1.0 && rho < 1.0))
    throw ValidationError("AR(1) correlation outside (-1,1)");
  Rng rng(seed);
  Eigen::MatrixXd G(n, r);
  const double innov = std::sqrt(1.0 - rho * rho);
  for (int i = 0; i < n; ++i) {
    G(i, 0) = rng.normal();
    for (int j = 1; j < r; ++j)
      G(i, j) = rho * G(i, j - 1) + innov * rng.normal();
  }
  return G;
}

Eigen::VectorXd projection_target(const Eigen::MatrixXd& G_sel,
                                  const Eigen::MatrixXd& G_all,
                                  const Eigen::VectorXd& beta_true) {
  if (G_all.cols() != beta_true.size())
    throw ValidationError("projection_target: shape mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(G_sel.transpose() * G_sel);
  if (llt.info() != Eigen::Success)
    throw NumericalError("projection_target: rank deficient selection");
  return llt.solve(G_sel.transpose() * (G_all * beta_true));
}

std::vector<std::string> method_names(const SimulationConfig& cfg) {
  std::vector<std::string> names{"proposed", "naive"};
  for (const double f : cfg.split_fractions)
    names.push_back("split_" + format_double(f));
  return names;
}

namespace {

// Child stream tags within one replication.
enum StreamTag : std::uint64_t {
  kSignals = 0,
  kDesign = 1,
  kNoise = 2,
  kRandomization = 3,
  kLambda = 4,
  kMala = 5,
  kNaive = 6,
  kSplitBase = 16,
};

void score_intervals(const CredibleIntervals& ci,
                     const Eigen::VectorXd& target, MethodOutcome& out) {
  out.evaluated = true;
  out.n_coef = static_cast<int>(target.size());
  for (int j = 0; j < target.size(); ++j) {
    if (target[j] >= ci.lower(0, j) && target[j] <= ci.upper(0, j))
      ++out.covered;
    out.length_sum += ci.upper(0, j) - ci.lower(0, j);
  }
}

int count_screening(const std::vector<int>& selected,
                    const std::vector<char>& slab) {
  int hits = 0;
  for (const int j : selected)
    if (slab[j]) ++hits;
  return hits;
}

}  // namespace

ReplicationRecord run_replication(const SimulationConfig& cfg,
                                  int regime_index, int rep) {
  if (regime_index < 0 ||
      regime_index >= static_cast<int>(cfg.s_list.size()))
    throw ValidationError("regime index out of range");
  const double s = cfg.s_list[regime_index];
  const std::uint64_t rep_seed =
      derive_seed(derive_seed(cfg.seed, regime_index), rep);

  ReplicationRecord record;
  record.slab_scale = s;
  record.rep = rep;

  auto [beta_true, slab] =
      draw_signals(cfg.r, cfg.pi, s, cfg.spike_scale,
                   derive_seed(rep_seed, kSignals));
  Eigen::MatrixXd G;
  if (cfg.design) {
    G = *cfg.design;
    if (G.rows() != cfg.n || G.cols() != cfg.r)
      throw ValidationError("injected design has the wrong shape");
  } else {
    G = synth_design(cfg.n, cfg.r, cfg.rho, derive_seed(rep_seed, kDesign));
  }

  Eigen::VectorXd y = G * beta_true;
  {
    Rng noise(derive_seed(rep_seed, kNoise));
    for (int i = 0; i < cfg.n; ++i) y[i] += cfg.sigma * noise.normal();
  }

  const double sigma_hat = estimate_sigma(y, G);
  double eta_sq = 0.0;
  if (cfg.eta_rule == "noise") eta_sq = sigma_hat;
  else if (cfg.eta_rule == "value") eta_sq = cfg.eta_value;
  else throw ValidationError("unknown eta rule '" + cfg.eta_rule + "'");
  if (!(eta_sq > 0)) throw ValidationError("eta^2 must be positive");

  // Penalty calibrated to the residual noise level: kappa times the Monte
  // Carlo sup of |G^T e| under e ~ N(0, sigma_hat^2 I), so the boundary sits
  // where noise alone would just fail to enter.
  const double lam = mc_sup_lambda(G, std::sqrt(sigma_hat), cfg.lambda_kappa,
                                   derive_seed(rep_seed, kLambda));
  const double epsilon = 1e-3 * (G.colwise().squaredNorm().mean());
  const RandomizationSpec rand = draw_randomization(
      cfg.r, eta_sq, derive_seed(rep_seed, kRandomization));

  SelectionRecord rec = solve_randomized_lasso(
      y, G, Eigen::VectorXd::Constant(cfg.r, lam), epsilon, rand);
  record.n_selected = static_cast<int>(rec.active.size());

  const std::vector<double> levels{cfg.level};
  SamplerConfig base_cfg;
  base_cfg.n_samples = cfg.n_samples;
  base_cfg.burn_in = cfg.burn_in;
  base_cfg.step_size = cfg.step_size;

  // Weakly informative shrinkage anchored to the observable outcome spread;
  // a fixed unit scale would drag strong-signal posteriors toward zero.
  const double sd_y =
      std::sqrt((y.array() - y.mean()).square().sum() / (cfg.n - 1));
  PriorSpec prior = PriorSpec::laplace_prior(sd_y);

  MethodOutcome proposed, naive;
  proposed.screening = naive.screening = count_screening(rec.ebar, slab);
  if (rec.active.empty()) {
    proposed.degenerate = naive.degenerate = true;
    proposed.reason = naive.reason = "empty selection";
  } else {
    const PosteriorGeometry geo = build_geometry(rec, G, sigma_hat, eta_sq);
    const Eigen::VectorXd target =
        projection_target(G(Eigen::all, rec.ebar), G, beta_true);

    SamplerConfig sel_cfg = base_cfg;
    sel_cfg.seed = derive_seed(rep_seed, kMala);
    score_intervals(selective_infer(geo, prior, sel_cfg, levels).intervals,
                    target, proposed);

    SamplerConfig nai_cfg = base_cfg;
    nai_cfg.seed = derive_seed(rep_seed, kNaive);
    score_intervals(naive_infer(geo, prior, nai_cfg, levels).intervals,
                    target, naive);
  }
  record.methods["proposed"] = proposed;
  record.methods["naive"] = naive;

  for (std::size_t i = 0; i < cfg.split_fractions.size(); ++i) {
    const double f = cfg.split_fractions[i];
    MethodOutcome mo;
    SamplerConfig split_cfg = base_cfg;
    const SplitResult sr =
        split_infer(y, G, f, cfg.lambda_kappa, prior, split_cfg, levels,
                    derive_seed(rep_seed, kSplitBase + i));
    mo.screening = count_screening(sr.selected, slab);
    if (sr.degenerate) {
      mo.degenerate = true;
      mo.reason = sr.reason;
    } else {
      const Eigen::MatrixXd G2 = G(sr.infer_rows, Eigen::all);
      const Eigen::VectorXd target = projection_target(
          G2(Eigen::all, sr.selected), G2, beta_true);
      score_intervals(sr.intervals, target, mo);
    }
    record.methods["split_" + format_double(f)] = mo;
  }
  return record;
}

std::vector<SummaryRow> aggregate(
    const std::vector<ReplicationRecord>& records, double slab_scale) {
  std::vector<SummaryRow> rows;
  if (records.empty()) return rows;
  std::vector<std::string> methods;
  for (const auto& [name, mo] : records.front().methods)
    methods.push_back(name);

  for (const auto& name : methods) {
    double cov_sum = 0.0, len_sum = 0.0, screen_sum = 0.0;
    int used = 0, degenerate = 0;
    for (const auto& rec : records) {
      const MethodOutcome& mo = rec.methods.at(name);
      screen_sum += mo.screening;
      if (mo.degenerate || !mo.evaluated || mo.n_coef == 0) {
        ++degenerate;
        continue;
      }
      cov_sum += static_cast<double>(mo.covered) / mo.n_coef;
      len_sum += mo.length_sum / mo.n_coef;
      ++used;
    }
    auto push = [&](const std::string& metric, double value, int n_used) {
      rows.push_back({slab_scale, name, metric, value, n_used});
    };
    const int total = static_cast<int>(records.size());
    push("coverage", used ? cov_sum / used : 0.0, used);
    push("avg_length", used ? len_sum / used : 0.0, used);
    push("screening", screen_sum / total, total);
    push("degenerate", degenerate, total);
  }
  return rows;
}

SimulationReport run_sweep(const SimulationConfig& cfg) {
  if (cfg.n_reps < 1) throw ValidationError("n_reps must be >= 1");
  SimulationReport report;
  for (int g = 0; g < static_cast<int>(cfg.s_list.size()); ++g) {
    std::vector<ReplicationRecord> records(cfg.n_reps);
    const int workers =
        std::max(1, std::min(cfg.threads, cfg.n_reps));
    if (workers == 1) {
      for (int rep = 0; rep < cfg.n_reps; ++rep)
        records[rep] = run_replication(cfg, g, rep);
    } else {
      std::atomic<int> next{0};
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(workers);
      for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
          try {
            for (;;) {
              const int rep = next.fetch_add(1);
              if (rep >= cfg.n_reps) break;
              records[rep] = run_replication(cfg, g, rep);
            }
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    }
    const auto rows = aggregate(records, cfg.s_list[g]);
    report.summary.insert(report.summary.end(), rows.begin(), rows.end());
    report.replications.insert(report.replications.end(),
                               std::make_move_iterator(records.begin()),
                               std::make_move_iterator(records.end()));
  }
  return report;
}

}  // namespace postsel
