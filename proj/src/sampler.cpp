#include "postsel/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "postsel/errors.hpp"
#include "postsel/pipeline.hpp"
#include "postsel/rng.hpp"

namespace postsel {

namespace {

// Effective sample size by the initial monotone positive sequence estimator.
double ess_column(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  if (n < 4) return static_cast<double>(n);
  const double mean = x.mean();
  const Eigen::VectorXd c = x.array() - mean;
  const double var = c.squaredNorm() / n;
  if (var <= 0) return static_cast<double>(n);
  auto rho = [&](int t) {
    double s = 0.0;
    for (int i = 0; i + t < n; ++i) s += c[i] * c[i + t];
    return s / (n * var);
  };
  double tau = 1.0;
  double prev = std::numeric_limits<double>::max();
  for (int k = 0;; ++k) {
    const int t1 = 2 * k + 1, t2 = 2 * k + 2;
    if (t2 >= n) break;
    double gamma = rho(t1) + rho(t2);
    if (gamma <= 0) break;
    gamma = std::min(gamma, prev);
    prev = gamma;
    tau += 2.0 * gamma;
  }
  return std::min(static_cast<double>(n), n / tau);
}

double max_split_rhat(const Eigen::MatrixXd& draws, int n_chains) {
  const int total = static_cast<int>(draws.rows());
  const int per_chain = total / std::max(1, n_chains);
  const int half = per_chain / 2;
  if (half < 2) return 1.0;
  std::vector<std::pair<int, int>> segments;
  for (int c = 0; c < n_chains; ++c) {
    segments.emplace_back(c * per_chain, half);
    segments.emplace_back(c * per_chain + half, half);
  }
  const int m = static_cast<int>(segments.size());
  double worst = 0.0;
  for (int j = 0; j < draws.cols(); ++j) {
    std::vector<double> means(m), vars(m);
    for (int s = 0; s < m; ++s) {
      const auto seg = draws.col(j).segment(segments[s].first, half);
      means[s] = seg.mean();
      vars[s] = (seg.array() - means[s]).square().sum() / (half - 1);
    }
    const double grand =
        std::accumulate(means.begin(), means.end(), 0.0) / m;
    double between = 0.0;
    for (const double mu : means) between += (mu - grand) * (mu - grand);
    between *= static_cast<double>(half) / (m - 1);
    const double within =
        std::accumulate(vars.begin(), vars.end(), 0.0) / m;
    if (within <= 0) continue;
    const double var_plus =
        (half - 1.0) / half * within + between / half;
    worst = std::max(worst, std::sqrt(var_plus / within));
  }
  return worst;
}

}  // namespace

PosteriorSamples sample_mala(const LogDensity& target,
                             const SamplerConfig& cfg,
                             const Eigen::VectorXd& init) {
  if (cfg.n_samples < 1 || cfg.burn_in < 0)
    throw ValidationError("sampler: bad draw counts");
  if (cfg.n_chains < 1) throw ValidationError("sampler: need >= 1 chain");
  const int dim = static_cast<int>(init.size());

  PosteriorSamples out;
  int mapped_dim = -1;

  for (int chain = 0; chain < cfg.n_chains; ++chain) {
    Rng rng(derive_seed(cfg.seed, chain));
    Eigen::VectorXd x = init;
    LogDensityEval cur = target(x);
    for (int k = 0; k < 20 && !(cur.ok && std::isfinite(cur.value)); ++k) {
      // Walk uphill until the density is finite; only needed for extreme
      // starting points.
      if (cur.grad.size() != dim) break;
      const double gn = cur.grad.norm();
      if (!(gn > 0) || !std::isfinite(gn)) break;
      x += cfg.step_size * cur.grad / gn;
      cur = target(x);
    }
    if (!(cur.ok && std::isfinite(cur.value)))
      throw NumericalError("sampler: could not find a finite starting point");

    if (mapped_dim < 0) {
      mapped_dim = static_cast<int>(cur.mapped.size());
      out.draws.resize(cfg.n_chains * cfg.n_samples, dim);
      out.mapped_draws.resize(cfg.n_chains * cfg.n_samples, mapped_dim);
    }

    double log_h = std::log(cfg.step_size);
    int accepted_kept = 0;
    const int total = cfg.burn_in + cfg.n_samples;
    for (int it = 0; it < total; ++it) {
      const double h = std::exp(log_h);
      const double h2 = h * h;
      Eigen::VectorXd noise(dim);
      for (int j = 0; j < dim; ++j) noise[j] = rng.normal();
      const Eigen::VectorXd mu_fwd = x + 0.5 * h2 * cur.grad;
      const Eigen::VectorXd prop = mu_fwd + h * noise;
      const LogDensityEval cand = target(prop);
      const double u = rng.uniform();

      double log_alpha = -std::numeric_limits<double>::infinity();
      if (cand.ok && std::isfinite(cand.value)) {
        const Eigen::VectorXd mu_rev = prop + 0.5 * h2 * cand.grad;
        const double fwd = (prop - mu_fwd).squaredNorm();
        const double rev = (x - mu_rev).squaredNorm();
        log_alpha = cand.value - cur.value + (fwd - rev) / (2.0 * h2);
      }
      const bool accept = std::log(u) < log_alpha;
      if (accept) {
        x = prop;
        cur = cand;
      }
      if (it < cfg.burn_in) {
        const double alpha =
            std::isfinite(log_alpha) ? std::min(1.0, std::exp(log_alpha))
                                     : 0.0;
        const double gain = std::pow(it + 1.0, -0.66);
        log_h += gain * (alpha - cfg.target_acceptance);
        log_h = std::clamp(log_h, std::log(1e-8), std::log(1e3));
      } else {
        const int row = chain * cfg.n_samples + (it - cfg.burn_in);
        out.draws.row(row) = x;
        out.mapped_draws.row(row) = cur.mapped;
        if (accept) ++accepted_kept;
      }
    }
    ChainDiagnostics diag;
    diag.acceptance_rate =
        static_cast<double>(accepted_kept) / cfg.n_samples;
    diag.final_step = std::exp(log_h);
    out.chains.push_back(diag);
  }

  double acc = 0.0;
  for (const auto& d : out.chains) acc += d.acceptance_rate;
  out.acceptance_rate = acc / cfg.n_chains;
  out.ess.resize(out.mapped_draws.cols());
  for (int j = 0; j < out.mapped_draws.cols(); ++j)
    out.ess[j] = ess_column(out.mapped_draws.col(j));
  out.max_split_rhat = max_split_rhat(out.mapped_draws, cfg.n_chains);
  return out;
}

double sample_quantile(std::vector<double> values, double alpha) {
  if (values.empty()) throw ValidationError("quantile of empty sample");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("quantile level outside (0,1)");
  std::sort(values.begin(), values.end());
  const int m = static_cast<int>(values.size());
  // The 1e-9 nudge keeps ceil from overshooting when alpha*m is integral up
  // to floating point error.
  int rank = static_cast<int>(std::ceil(alpha * m - 1e-9));
  rank = std::clamp(rank, 1, m);
  return values[rank - 1];
}

CredibleIntervals credible_intervals(const Eigen::MatrixXd& samples,
                                     const std::vector<double>& levels) {
  if (samples.rows() < 2) throw ValidationError("too few samples");
  for (const double lv : levels)
    if (!(lv > 0.0 && lv < 1.0))
      throw ValidationError("interval level outside (0,1)");
  const int ncoef = static_cast<int>(samples.cols());
  const int nlev = static_cast<int>(levels.size());
  CredibleIntervals ci;
  ci.levels = levels;
  ci.lower.resize(nlev, ncoef);
  ci.upper.resize(nlev, ncoef);
  ci.median.resize(ncoef);
  for (int j = 0; j < ncoef; ++j) {
    std::vector<double> col(samples.rows());
    for (int i = 0; i < samples.rows(); ++i) col[i] = samples(i, j);
    std::sort(col.begin(), col.end());
    const int m = static_cast<int>(col.size());
    auto pick = [&](double alpha) {
      int rank = static_cast<int>(std::ceil(alpha * m - 1e-9));
      rank = std::clamp(rank, 1, m);
      return col[rank - 1];
    };
    ci.median[j] = pick(0.5);
    for (int l = 0; l < nlev; ++l) {
      ci.lower(l, j) = pick((1.0 - levels[l]) / 2.0);
      ci.upper(l, j) = pick((1.0 + levels[l]) / 2.0);
    }
  }
  return ci;
}

InferenceResult selective_infer(const PosteriorGeometry& geo,
                                const PriorSpec& prior,
                                const SamplerConfig& cfg,
                                const std::vector<double>& levels) {
  const BarrierPenalty pen = make_barrier(geo);
  auto warm = std::make_shared<Eigen::VectorXd>();
  LogDensity target = [&geo, pen, prior, warm](const Eigen::VectorXd& z) {
    const Eigen::VectorXd* hint = warm->size() ? warm.get() : nullptr;
    const ReparamEvaluation ev =
        evaluate_zeta(geo, pen, prior, z, true, hint);
    *warm = ev.wstar.w_star;
    LogDensityEval out;
    out.value = ev.log_post;
    out.grad = ev.grad;
    out.mapped = ev.beta;
    out.ok = ev.ok && (ev.wstar.converged || ev.wstar.grad_norm < 1e-6);
    return out;
  };
  InferenceResult res;
  res.samples = sample_mala(target, cfg, geo.beta_hat);
  res.intervals = credible_intervals(res.samples.mapped_draws, levels);
  return res;
}

InferenceResult naive_infer(const PosteriorGeometry& geo,
                            const PriorSpec& prior, const SamplerConfig& cfg,
                            const std::vector<double>& levels) {
  LogDensity target = [&geo, prior](const Eigen::VectorXd& b) {
    LogDensityEval out;
    const Eigen::VectorXd d = b - geo.beta_hat;
    out.value = prior.log_value(b) - 0.5 * d.dot(geo.Sigma_inv * d);
    out.grad = prior.grad(b) - geo.Sigma_inv * d;
    out.mapped = b;
    out.ok = std::isfinite(out.value);
    return out;
  };
  InferenceResult res;
  res.samples = sample_mala(target, cfg, geo.beta_hat);
  res.intervals = credible_intervals(res.samples.mapped_draws, levels);
  return res;
}

SplitResult split_infer(const Eigen::VectorXd& y, const Eigen::MatrixXd& G,
                        double fraction, double kappa, const PriorSpec& prior,
                        const SamplerConfig& cfg,
                        const std::vector<double>& levels,
                        std::uint64_t seed) {
  const int n = static_cast<int>(y.size());
  if (G.rows() != n) throw ValidationError("split_infer: shape mismatch");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ValidationError("split fraction outside (0,1)");

  SplitResult out;
  const int n1 = static_cast<int>(std::ceil(fraction * n));
  const int n2 = n - n1;
  if (n1 < 2 || n2 < 3) {
    out.degenerate = true;
    out.reason = "split leaves too few rows";
    return out;
  }

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng shuffle_rng(derive_seed(seed, 0));
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(shuffle_rng.below(i + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<int> rows1(perm.begin(), perm.begin() + n1);
  std::vector<int> rows2(perm.begin() + n1, perm.end());
  std::sort(rows1.begin(), rows1.end());
  std::sort(rows2.begin(), rows2.end());
  out.infer_rows = rows2;

  const Eigen::VectorXd y1 = y(rows1);
  const Eigen::MatrixXd G1 = G(rows1, Eigen::all);
  const double sd1 =
      std::sqrt((y1.array() - y1.mean()).square().sum() / (n1 - 1));
  if (!(sd1 > 0)) {
    out.degenerate = true;
    out.reason = "constant outcome on the selection half";
    return out;
  }
  const double lam = mc_sup_lambda(G1, sd1, kappa, derive_seed(seed, 1));
  const LassoSolution sol =
      solve_lasso(G1, y1, Eigen::VectorXd::Constant(G.cols(), lam));
  out.selected = sol.active;
  if (sol.active.empty()) {
    out.degenerate = true;
    out.reason = "empty selection";
    return out;
  }
  if (n2 - static_cast<int>(sol.active.size()) < 2) {
    out.degenerate = true;
    out.reason = "holdout too small for the selected set";
    return out;
  }

  const Eigen::VectorXd y2 = y(rows2);
  const Eigen::MatrixXd G2 = G(rows2, sol.active);
  double sigma_sq = 0.0;
  Eigen::VectorXd beta_hat;
  Eigen::MatrixXd sigma_inv;
  try {
    sigma_sq = estimate_sigma(y2, G2);
    Eigen::LLT<Eigen::MatrixXd> llt(G2.transpose() * G2);
    beta_hat = llt.solve(G2.transpose() * y2);
    sigma_inv = (G2.transpose() * G2) / sigma_sq;
  } catch (const NumericalError&) {
    out.degenerate = true;
    out.reason = "holdout design rank deficient";
    return out;
  }
  if (!(sigma_sq > 0)) {
    out.degenerate = true;
    out.reason = "zero holdout residual variance";
    return out;
  }
  out.sigma_sq = sigma_sq;

  LogDensity target = [beta_hat, sigma_inv, prior](const Eigen::VectorXd& b) {
    LogDensityEval ev;
    const Eigen::VectorXd d = b - beta_hat;
    ev.value = prior.log_value(b) - 0.5 * d.dot(sigma_inv * d);
    ev.grad = prior.grad(b) - sigma_inv * d;
    ev.mapped = b;
    ev.ok = std::isfinite(ev.value);
    return ev;
  };
  SamplerConfig chain_cfg = cfg;
  chain_cfg.seed = derive_seed(seed, 2);
  out.samples = sample_mala(target, chain_cfg, beta_hat);
  out.intervals = credible_intervals(out.samples.mapped_draws, levels);
  return out;
}

}  // namespace postsel
