#pragma once

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

#include "postsel/lasso.hpp"
#include "postsel/sampler.hpp"
#include "postsel/simulation.hpp"

namespace postsel {

using Json = nlohmann::ordered_json;

Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);
Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

// A selection artifact bundles the solved record with the design columns it
// references, so inference can run without the original dataset.
struct SelectionArtifact {
  SelectionRecord record;      // indices into `design` columns
  Eigen::MatrixXd design;      // n x k, the referenced columns only
  std::vector<int> column_ids; // original column ids, design order
  std::vector<std::string> column_labels;
  double sigma_sq = 0.0;
  double eta_sq = 0.0;
  double kkt_residual = 0.0;
  Json first_stage;            // optional summary, may be null
  Json provenance;             // config echo, seed, hash
};

Json artifact_to_json(const SelectionArtifact& art);
SelectionArtifact artifact_from_json(const Json& j);

void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

// Provenance block shared by every report: resolved config, seed and hash.
Json provenance_json(const std::map<std::string, std::string>& resolved);

void write_intervals_csv(const std::string& path,
                         const std::vector<std::string>& labels,
                         const CredibleIntervals& ci,
                         const CredibleIntervals* naive);

void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& rows);
void write_replications_csv(const std::string& path,
                            const std::vector<ReplicationRecord>& recs);

}  // namespace postsel
