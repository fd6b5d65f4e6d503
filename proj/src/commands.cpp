#include "postsel/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <iostream>

#include "postsel/csv.hpp"
#include "postsel/density.hpp"
#include "postsel/errors.hpp"
#include "postsel/geometry.hpp"
#include "postsel/gsva.hpp"
#include "postsel/pipeline.hpp"
#include "postsel/rng.hpp"
#include "postsel/serialize.hpp"
#include "postsel/simulation.hpp"

namespace postsel {

namespace {

std::string out_path(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

double sample_sd(const Eigen::VectorXd& v) {
  if (v.size() < 2) throw ValidationError("need >= 2 values for a sd");
  return std::sqrt((v.array() - v.mean()).square().sum() / (v.size() - 1));
}

// Entries are either column labels or plain indices.
std::vector<int> parse_column_refs(const std::vector<std::string>& refs,
                                   const std::vector<std::string>& labels) {
  std::vector<int> out;
  for (const auto& ref : refs) {
    const auto it = std::find(labels.begin(), labels.end(), ref);
    if (it != labels.end()) {
      out.push_back(static_cast<int>(it - labels.begin()));
      continue;
    }
    try {
      std::size_t pos = 0;
      const int idx = std::stoi(ref, &pos);
      if (pos == ref.size()) {
        out.push_back(idx);
        continue;
      }
    } catch (const std::exception&) {
    }
    throw ValidationError("unknown column reference '" + ref + "'");
  }
  return out;
}

std::vector<double> default_levels() { return {0.5, 0.8, 0.95}; }

}  // namespace

int cmd_select(ConfigMap& cfg) {
  const std::string y_csv = cfg.require_string("y_csv");
  const std::string g_csv = cfg.require_string("g_csv");
  const std::string i_csv = cfg.get_string("i_csv", "");
  const std::uint64_t seed = cfg.get_u64("seed", 20240817);
  const std::string out_dir = cfg.get_string("out_dir", ".");
  const double kappa = cfg.get_double("lambda_kappa", 1.0);
  const double lambda_scale = cfg.get_double("lambda_scale", 0.0);
  const double epsilon_cfg = cfg.get_double("epsilon", 0.0);
  const double eta_cfg = cfg.get_double("eta_sq", 0.0);
  const double sigma_cfg = cfg.get_double("sigma_sq", 0.0);
  const auto user_refs = cfg.get_string_list("user_set", {});
  cfg.check_consumed();

  const Eigen::VectorXd y = read_vector_csv(y_csv);
  LabeledMatrix g = read_matrix_csv(g_csv);
  const int n = static_cast<int>(g.values.rows());
  const int p = static_cast<int>(g.values.cols());
  if (y.size() != n)
    throw ValidationError("outcome and design row counts differ");

  std::vector<int> fbar_global;
  std::vector<int> multiplicity;
  int n_queries = 1;
  Json first_stage;
  if (!i_csv.empty()) {
    const LabeledMatrix im = read_matrix_csv(i_csv);
    if (im.values.rows() != n)
      throw ValidationError("intermediate outcomes row count differs");
    n_queries = static_cast<int>(im.values.cols());
    Eigen::VectorXd lams(n_queries);
    for (int l = 0; l < n_queries; ++l)
      lams[l] = mc_sup_lambda(g.values, sample_sd(im.values.col(l)), kappa,
                              derive_seed(seed, 1000 + l));
    const FirstStageResult fs = run_first_stage(g.values, im.values, lams);
    if (fs.union_set.empty())
      throw ValidationError("first stage selected no columns");
    fbar_global = fs.union_set;
    multiplicity = fs.multiplicity;
    first_stage["ran"] = true;
    first_stage["n_queries"] = n_queries;
    first_stage["lambdas"] = vector_to_json(lams);
    Json sets = Json::array();
    for (const auto& s : fs.query_sets) {
      Json one = Json::array();
      for (const int j : s) one.push_back(j);
      sets.push_back(std::move(one));
    }
    first_stage["query_sets"] = std::move(sets);
    Json mult = Json::array();
    for (const int m : fs.multiplicity) mult.push_back(m);
    first_stage["multiplicity"] = std::move(mult);
  } else {
    fbar_global.resize(p);
    for (int j = 0; j < p; ++j) fbar_global[j] = j;
    multiplicity.assign(p, 1);
    first_stage["ran"] = false;
  }

  const Eigen::MatrixXd X = g.values(Eigen::all, fbar_global);
  const int q = static_cast<int>(X.cols());

  double sigma_sq = sigma_cfg;
  if (!(sigma_sq > 0)) {
    if (n - q >= 1) sigma_sq = estimate_sigma(y, X);
    else sigma_sq = sample_sd(y) * sample_sd(y);
  }
  // Base penalty calibrated to the residual noise level on the candidate
  // set, so the boundary sits where noise alone would just fail to enter.
  const double c = lambda_scale > 0
                       ? lambda_scale
                       : mc_sup_lambda(X, std::sqrt(sigma_sq), kappa,
                                       derive_seed(seed, 1));
  const Eigen::VectorXd weights =
      compute_penalty_weights(multiplicity, n_queries, c);
  const double epsilon =
      epsilon_cfg > 0 ? epsilon_cfg : 1e-3 * X.colwise().squaredNorm().mean();
  const double eta_sq = eta_cfg > 0 ? eta_cfg : sigma_sq;

  const RandomizationSpec rand =
      draw_randomization(q, eta_sq, derive_seed(seed, 2));
  SelectionRecord rec =
      solve_randomized_lasso(y, X, weights, epsilon, rand);
  const double kkt = verify_kkt(rec, y, X, rand.realized);

  rec.fbar = fbar_global;  // lift local candidate positions to column ids
  const std::vector<int> user_ids =
      parse_column_refs(user_refs, g.col_labels);
  apply_augmentation(rec, y, g.values, user_ids);

  // Compact the referenced columns into the artifact design.
  std::vector<int> cols = rec.fbar;
  cols.insert(cols.end(), rec.ebar.begin(), rec.ebar.end());
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  auto position_of = [&cols](int id) {
    return static_cast<int>(
        std::lower_bound(cols.begin(), cols.end(), id) - cols.begin());
  };
  SelectionArtifact art;
  art.record = rec;
  for (auto& j : art.record.fbar) j = position_of(j);
  for (auto& j : art.record.ebar) j = position_of(j);
  art.design = g.values(Eigen::all, cols);
  art.column_ids = cols;
  for (const int j : cols) art.column_labels.push_back(g.col_labels[j]);
  art.sigma_sq = sigma_sq;
  art.eta_sq = eta_sq;
  art.kkt_residual = kkt;
  art.first_stage = first_stage;
  art.provenance = provenance_json(cfg.resolved());
  write_json_file(out_path(out_dir, "selection.json"), artifact_to_json(art));

  Json report;
  report["kind"] = "select_report";
  report["provenance"] = art.provenance;
  report["n"] = n;
  report["p"] = p;
  report["candidate_size"] = q;
  report["active_size"] = static_cast<int>(rec.active.size());
  report["inference_size"] = static_cast<int>(rec.ebar.size());
  report["penalty_scale"] = c;
  report["epsilon"] = epsilon;
  report["sigma_sq"] = sigma_sq;
  report["eta_sq"] = eta_sq;
  report["kkt_residual"] = kkt;
  report["solver_converged"] = rec.converged;
  Json sel = Json::array();
  for (const int j : rec.ebar) sel.push_back(g.col_labels[j]);
  report["selected_labels"] = std::move(sel);
  write_json_file(out_path(out_dir, "report.json"), report);

  if (!rec.converged || !(kkt < 1e-8)) {
    std::cerr << "selection solve degraded: kkt residual " << kkt << "\n";
    return 3;
  }
  return 0;
}

int cmd_infer(ConfigMap& cfg) {
  const std::string selection_json = cfg.require_string("selection_json");
  const std::uint64_t seed = cfg.get_u64("seed", 20240817);
  const std::string out_dir = cfg.get_string("out_dir", ".");
  const std::vector<double> levels =
      cfg.get_double_list("levels", default_levels());
  SamplerConfig scfg;
  scfg.n_samples = static_cast<int>(cfg.get_int("n_samples", 5000));
  scfg.burn_in = static_cast<int>(cfg.get_int("burn_in", 1000));
  scfg.step_size = cfg.get_double("step_size", 0.5);
  scfg.target_acceptance = cfg.get_double("target_acceptance", 0.574);
  scfg.n_chains = static_cast<int>(cfg.get_int("n_chains", 1));
  const std::string prior_kind = cfg.get_string("prior", "laplace");
  const double prior_scale = cfg.get_double("prior_scale", 1.0);
  const bool with_naive = cfg.get_bool("naive", false);
  cfg.check_consumed();

  const SelectionArtifact art =
      artifact_from_json(read_json_file(selection_json));
  if (art.record.active.empty())
    throw ValidationError("selection is empty; nothing to infer");

  PriorSpec prior;
  if (prior_kind == "laplace") prior = PriorSpec::laplace_prior(prior_scale);
  else if (prior_kind == "flat") prior = PriorSpec::flat_prior();
  else throw ValidationError("unknown prior '" + prior_kind + "'");

  const PosteriorGeometry geo =
      build_geometry(art.record, art.design, art.sigma_sq, art.eta_sq);

  SamplerConfig sel_cfg = scfg;
  sel_cfg.seed = derive_seed(seed, 0);
  const InferenceResult res = selective_infer(geo, prior, sel_cfg, levels);

  std::vector<std::string> labels;
  for (const int j : art.record.ebar)
    labels.push_back(art.column_labels[j]);

  CredibleIntervals naive_ci;
  const CredibleIntervals* naive_ptr = nullptr;
  Json naive_diag;
  if (with_naive) {
    SamplerConfig nai_cfg = scfg;
    nai_cfg.seed = derive_seed(seed, 1);
    const InferenceResult nres = naive_infer(geo, prior, nai_cfg, levels);
    naive_ci = nres.intervals;
    naive_ptr = &naive_ci;
    naive_diag["acceptance_rate"] = nres.samples.acceptance_rate;
    naive_diag["max_split_rhat"] = nres.samples.max_split_rhat;
  }

  write_intervals_csv(out_path(out_dir, "intervals.csv"), labels,
                      res.intervals, naive_ptr);

  Json diag;
  diag["kind"] = "diagnostics";
  diag["acceptance_rate"] = res.samples.acceptance_rate;
  diag["max_split_rhat"] = res.samples.max_split_rhat;
  diag["ess"] = vector_to_json(res.samples.ess);
  Json chains = Json::array();
  for (const auto& ch : res.samples.chains) {
    Json c;
    c["acceptance_rate"] = ch.acceptance_rate;
    c["final_step"] = ch.final_step;
    chains.push_back(std::move(c));
  }
  diag["chains"] = std::move(chains);
  if (with_naive) diag["naive"] = std::move(naive_diag);
  write_json_file(out_path(out_dir, "diagnostics.json"), diag);

  Json report;
  report["kind"] = "infer_report";
  report["provenance"] = provenance_json(cfg.resolved());
  report["selection_provenance"] = art.provenance;
  report["coefficients"] = labels;
  report["median"] = vector_to_json(res.intervals.median);
  report["acceptance_rate"] = res.samples.acceptance_rate;
  write_json_file(out_path(out_dir, "report.json"), report);
  return 0;
}

int cmd_simulate(ConfigMap& cfg) {
  SimulationConfig sim;
  sim.n = static_cast<int>(cfg.get_int("n", sim.n));
  sim.r = static_cast<int>(cfg.get_int("r", sim.r));
  sim.pi = cfg.get_double("pi", sim.pi);
  sim.spike_scale = cfg.get_double("spike_scale", sim.spike_scale);
  sim.s_list = cfg.get_double_list("s_list", sim.s_list);
  sim.rho = cfg.get_double("rho", sim.rho);
  sim.sigma = cfg.get_double("sigma", sim.sigma);
  sim.eta_rule = cfg.get_string("eta_rule", sim.eta_rule);
  sim.eta_value = cfg.get_double("eta_value", sim.eta_value);
  sim.lambda_kappa = cfg.get_double("lambda_kappa", sim.lambda_kappa);
  sim.n_reps = static_cast<int>(cfg.get_int("n_reps", sim.n_reps));
  sim.level = cfg.get_double("level", sim.level);
  sim.split_fractions =
      cfg.get_double_list("split_fractions", sim.split_fractions);
  sim.n_samples = static_cast<int>(cfg.get_int("n_samples", sim.n_samples));
  sim.burn_in = static_cast<int>(cfg.get_int("burn_in", sim.burn_in));
  sim.step_size = cfg.get_double("step_size", sim.step_size);
  sim.seed = cfg.get_u64("seed", sim.seed);
  sim.threads = static_cast<int>(cfg.get_int("threads", sim.threads));
  const std::string design_csv = cfg.get_string("design_csv", "");
  const std::string out_dir = cfg.get_string("out_dir", ".");
  cfg.check_consumed();

  if (!design_csv.empty()) {
    const LabeledMatrix dm = read_matrix_csv(design_csv);
    sim.design = dm.values;
    sim.n = static_cast<int>(dm.values.rows());
    sim.r = static_cast<int>(dm.values.cols());
  }

  const SimulationReport report = run_sweep(sim);
  write_replications_csv(out_path(out_dir, "replications.csv"),
                         report.replications);
  write_summary_csv(out_path(out_dir, "summary.csv"), report.summary);

  Json j;
  j["kind"] = "simulate_report";
  j["provenance"] = provenance_json(cfg.resolved());
  Json rows = Json::array();
  for (const auto& r : report.summary) {
    Json row;
    row["slab_scale"] = r.slab_scale;
    row["method"] = r.method;
    row["metric"] = r.metric;
    row["value"] = r.value;
    row["n_used"] = r.n_used;
    rows.push_back(std::move(row));
  }
  j["summary"] = std::move(rows);
  write_json_file(out_path(out_dir, "report.json"), j);
  return 0;
}

static int features_gsva(ConfigMap& cfg) {
  const std::string expression_csv = cfg.require_string("expression_csv");
  const std::string genesets_csv = cfg.require_string("genesets_csv");
  const double tau = cfg.get_double("tau", 1.0);
  const double divisor = cfg.get_double("bandwidth_divisor", 4.0);
  const std::string out_dir = cfg.get_string("out_dir", ".");
  cfg.check_consumed();

  const LabeledMatrix em = read_matrix_csv(expression_csv);
  if (em.row_labels.empty())
    throw ValidationError("expression matrix needs gene row labels");
  ExpressionMatrix expr;
  expr.values = em.values;
  expr.gene_labels = em.row_labels;
  expr.sample_labels = em.col_labels;

  const CsvTable gs = read_csv(genesets_csv);
  if (gs.ncol() != 2)
    throw ValidationError("gene set file must have columns set,gene");
  GeneSetCollection sets;
  for (const auto& row : gs.rows) {
    const std::string& name = row[0];
    const int gene = parse_column_refs({row[1]}, expr.gene_labels)[0];
    auto it = std::find(sets.names.begin(), sets.names.end(), name);
    if (it == sets.names.end()) {
      sets.names.push_back(name);
      sets.members.push_back({gene});
    } else {
      sets.members[it - sets.names.begin()].push_back(gene);
    }
  }

  const Eigen::MatrixXd scores = gsva_scores(expr, sets, tau, divisor);
  CsvTable t;
  t.header = {"set"};
  for (const auto& s : expr.sample_labels) t.header.push_back(s);
  for (std::size_t k = 0; k < sets.names.size(); ++k) {
    std::vector<std::string> row{sets.names[k]};
    for (int j = 0; j < scores.cols(); ++j)
      row.push_back(format_double(scores(static_cast<int>(k), j)));
    t.rows.push_back(std::move(row));
  }
  write_csv(out_path(out_dir, "scores.csv"), t);

  Json report;
  report["kind"] = "features_report";
  report["mode"] = "gsva";
  report["provenance"] = provenance_json(cfg.resolved());
  report["n_sets"] = static_cast<int>(sets.names.size());
  report["n_samples"] = static_cast<int>(expr.values.cols());
  write_json_file(out_path(out_dir, "report.json"), report);
  return 0;
}

static int features_density_pca(ConfigMap& cfg) {
  const std::string samples_csv = cfg.require_string("samples_csv");
  const int grid_size = static_cast<int>(cfg.get_int("grid_size", 512));
  const double bandwidth = cfg.get_double("bandwidth", 0.0);
  const double threshold = cfg.get_double("variance_threshold", 0.9);
  const double floor = cfg.get_double("density_floor", 1e-8);
  const std::string out_dir = cfg.get_string("out_dir", ".");
  cfg.check_consumed();

  const CsvTable table = read_csv(samples_csv);
  std::vector<std::vector<double>> columns(table.ncol());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < table.ncol(); ++j) {
    for (const auto& row : table.rows)
      if (!row[j].empty()) columns[j].push_back(parse_double(row[j]));
    if (columns[j].size() < 5)
      throw ValidationError("replicate '" + table.header[j] +
                            "' has fewer than five observations");
    for (const double x : columns[j]) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (!(hi > lo))
    throw ValidationError("all replicates are a single constant value");
  // All replicates share one affine map so densities live on a common domain.
  std::vector<SrtPoint> points;
  for (int j = 0; j < table.ncol(); ++j)
    points.push_back(
        srt(make_density(columns[j], grid_size, bandwidth, floor, lo, hi)));

  const DensityPcaResult pca = density_pca(points, threshold);

  CsvTable t;
  t.header = {"replicate"};
  for (int k = 0; k < pca.n_components; ++k)
    t.header.push_back("component_" + std::to_string(k + 1));
  for (int i = 0; i < pca.scores.rows(); ++i) {
    std::vector<std::string> row{table.header[i]};
    for (int k = 0; k < pca.n_components; ++k)
      row.push_back(format_double(pca.scores(i, k)));
    t.rows.push_back(std::move(row));
  }
  write_csv(out_path(out_dir, "scores.csv"), t);

  CsvTable md;
  md.header = {"x", "density"};
  const DensitySample mean_density = inv_srt(pca.mean);
  for (int k = 0; k < mean_density.grid.size(); ++k)
    md.rows.push_back({format_double(mean_density.grid[k]),
                       format_double(mean_density.values[k])});
  write_csv(out_path(out_dir, "mean_density.csv"), md);

  Json report;
  report["kind"] = "features_report";
  report["mode"] = "density_pca";
  report["provenance"] = provenance_json(cfg.resolved());
  report["n_replicates"] = static_cast<int>(points.size());
  report["n_components"] = pca.n_components;
  report["eigenvalues"] = vector_to_json(pca.eigenvalues);
  report["variance_fraction"] = vector_to_json(pca.variance_fraction);
  Json karcher;
  karcher["iterations"] = pca.karcher.iterations;
  karcher["converged"] = pca.karcher.converged;
  Json trace = Json::array();
  for (const double v : pca.karcher.variance_trace) trace.push_back(v);
  karcher["variance_trace"] = std::move(trace);
  report["karcher"] = std::move(karcher);
  write_json_file(out_path(out_dir, "report.json"), report);
  return pca.karcher.converged ? 0 : 3;
}

int cmd_features(ConfigMap& cfg) {
  const std::string mode = cfg.require_string("mode");
  if (mode == "gsva") return features_gsva(cfg);
  if (mode == "density_pca") return features_density_pca(cfg);
  throw ValidationError("unknown features mode '" + mode + "'");
}

int run_command(const std::string& name, ConfigMap& cfg) {
  try {
    if (name == "select") return cmd_select(cfg);
    if (name == "infer") return cmd_infer(cfg);
    if (name == "simulate") return cmd_simulate(cfg);
    if (name == "features") return cmd_features(cfg);
    throw ValidationError("unknown command '" + name + "'");
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace postsel
