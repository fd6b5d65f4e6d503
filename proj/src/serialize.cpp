#include "postsel/serialize.hpp"

#include <fstream>

#include "postsel/config.hpp"
#include "postsel/csv.hpp"
#include "postsel/errors.hpp"
#include "postsel/version.hpp"

namespace postsel {

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  if (!j.is_array()) throw ValidationError("expected a JSON array");
  Eigen::VectorXd v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty())
    throw ValidationError("expected a non-empty JSON matrix");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols)
      throw ValidationError("ragged JSON matrix");
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

static Json intvec_to_json(const std::vector<int>& v) {
  Json out = Json::array();
  for (const int x : v) out.push_back(x);
  return out;
}

static std::vector<int> intvec_from_json(const Json& j) {
  std::vector<int> out;
  for (const auto& x : j) out.push_back(x.get<int>());
  return out;
}

Json artifact_to_json(const SelectionArtifact& art) {
  Json j;
  j["kind"] = "selection";
  j["version"] = kVersion;
  j["provenance"] = art.provenance;
  j["sigma_sq"] = art.sigma_sq;
  j["eta_sq"] = art.eta_sq;
  j["kkt_residual"] = art.kkt_residual;
  j["first_stage"] = art.first_stage;
  j["column_ids"] = intvec_to_json(art.column_ids);
  j["column_labels"] = art.column_labels;
  j["design"] = matrix_to_json(art.design);

  const SelectionRecord& r = art.record;
  Json rec;
  rec["fbar"] = intvec_to_json(r.fbar);
  rec["active"] = intvec_to_json(r.active);
  rec["ebar"] = intvec_to_json(r.ebar);
  rec["signs"] = vector_to_json(r.signs);
  rec["beta_lasso"] = vector_to_json(r.beta_lasso);
  rec["subgradient"] = vector_to_json(r.subgradient);
  rec["beta_hat"] = vector_to_json(r.beta_hat);
  rec["beta_perp"] = vector_to_json(r.beta_perp);
  rec["lambda"] = vector_to_json(r.lambda);
  rec["epsilon"] = r.epsilon;
  rec["rand_eta_sq"] = r.randomization.eta_sq;
  rec["rand_seed"] = r.randomization.seed;
  rec["rand_realized"] = vector_to_json(r.randomization.realized);
  rec["sweeps"] = r.sweeps;
  rec["converged"] = r.converged;
  j["record"] = std::move(rec);
  return j;
}

SelectionArtifact artifact_from_json(const Json& j) {
  if (!j.contains("kind") || j["kind"] != "selection")
    throw ValidationError("not a selection artifact");
  SelectionArtifact art;
  art.provenance = j.value("provenance", Json());
  art.sigma_sq = j.at("sigma_sq").get<double>();
  art.eta_sq = j.at("eta_sq").get<double>();
  art.kkt_residual = j.value("kkt_residual", 0.0);
  art.first_stage = j.value("first_stage", Json());
  art.column_ids = intvec_from_json(j.at("column_ids"));
  art.column_labels =
      j.at("column_labels").get<std::vector<std::string>>();
  art.design = matrix_from_json(j.at("design"));

  const Json& rec = j.at("record");
  SelectionRecord& r = art.record;
  r.fbar = intvec_from_json(rec.at("fbar"));
  r.active = intvec_from_json(rec.at("active"));
  r.ebar = intvec_from_json(rec.at("ebar"));
  r.signs = vector_from_json(rec.at("signs"));
  r.beta_lasso = vector_from_json(rec.at("beta_lasso"));
  r.subgradient = vector_from_json(rec.at("subgradient"));
  r.beta_hat = vector_from_json(rec.at("beta_hat"));
  r.beta_perp = vector_from_json(rec.at("beta_perp"));
  r.lambda = vector_from_json(rec.at("lambda"));
  r.epsilon = rec.at("epsilon").get<double>();
  r.randomization.eta_sq = rec.at("rand_eta_sq").get<double>();
  r.randomization.seed = rec.at("rand_seed").get<std::uint64_t>();
  r.randomization.realized = vector_from_json(rec.at("rand_realized"));
  r.sweeps = rec.at("sweeps").get<int>();
  r.converged = rec.at("converged").get<bool>();
  return art;
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw ValidationError("write failed: " + path);
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError(path + ": invalid JSON: " + e.what());
  }
  return j;
}

Json provenance_json(const std::map<std::string, std::string>& resolved) {
  Json j;
  j["version"] = kVersion;
  Json cfg;
  for (const auto& [k, v] : resolved) cfg[k] = v;
  j["config"] = std::move(cfg);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(config_hash(resolved)));
  j["config_hash"] = std::string(buf);
  return j;
}

void write_intervals_csv(const std::string& path,
                         const std::vector<std::string>& labels,
                         const CredibleIntervals& ci,
                         const CredibleIntervals* naive) {
  CsvTable t;
  t.header = {"coefficient", "median"};
  for (const double lv : ci.levels) {
    t.header.push_back("lower_" + format_double(lv));
    t.header.push_back("upper_" + format_double(lv));
  }
  if (naive) {
    t.header.push_back("naive_median");
    for (const double lv : naive->levels) {
      t.header.push_back("naive_lower_" + format_double(lv));
      t.header.push_back("naive_upper_" + format_double(lv));
    }
  }
  const int ncoef = static_cast<int>(ci.median.size());
  for (int j = 0; j < ncoef; ++j) {
    std::vector<std::string> row{labels[j], format_double(ci.median[j])};
    for (std::size_t l = 0; l < ci.levels.size(); ++l) {
      row.push_back(format_double(ci.lower(static_cast<int>(l), j)));
      row.push_back(format_double(ci.upper(static_cast<int>(l), j)));
    }
    if (naive) {
      row.push_back(format_double(naive->median[j]));
      for (std::size_t l = 0; l < naive->levels.size(); ++l) {
        row.push_back(format_double(naive->lower(static_cast<int>(l), j)));
        row.push_back(format_double(naive->upper(static_cast<int>(l), j)));
      }
    }
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& rows) {
  CsvTable t;
  t.header = {"slab_scale", "method", "metric", "value", "n_used"};
  for (const auto& r : rows)
    t.rows.push_back({format_double(r.slab_scale), r.method, r.metric,
                      format_double(r.value), std::to_string(r.n_used)});
  write_csv(path, t);
}

void write_replications_csv(const std::string& path,
                            const std::vector<ReplicationRecord>& recs) {
  CsvTable t;
  t.header = {"slab_scale", "rep",      "method",     "degenerate",
              "reason",     "covered",  "n_coef",     "mean_length",
              "screening",  "n_selected"};
  for (const auto& rec : recs) {
    for (const auto& [name, mo] : rec.methods) {
      const double mean_len =
          mo.n_coef > 0 ? mo.length_sum / mo.n_coef : 0.0;
      t.rows.push_back({format_double(rec.slab_scale),
                        std::to_string(rec.rep), name,
                        mo.degenerate ? "1" : "0", mo.reason,
                        std::to_string(mo.covered),
                        std::to_string(mo.n_coef),
                        format_double(mean_len),
                        std::to_string(mo.screening),
                        std::to_string(rec.n_selected)});
    }
  }
  write_csv(path, t);
}

}  // namespace postsel
