#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <string>

#include "postsel/commands.hpp"
#include "postsel/version.hpp"

namespace {

struct CommonOpts {
  std::string config;
  std::string seed;
  std::string out_dir;
  std::string levels;
  std::string threads;
};

void attach_common(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config, "key = value configuration file");
  sub->add_option("--seed", opts.seed, "master seed (overrides config)");
  sub->add_option("--out-dir", opts.out_dir, "output directory");
  sub->add_option("--levels", opts.levels,
                  "comma separated credible levels (overrides config)");
  sub->add_option("--threads", opts.threads,
                  "worker threads (overrides config)");
}

postsel::ConfigMap assemble(const CommonOpts& opts) {
  postsel::ConfigMap cfg;
  if (!opts.config.empty())
    cfg = postsel::ConfigMap::from_file(opts.config);
  if (!opts.seed.empty()) cfg.set("seed", opts.seed);
  if (!opts.out_dir.empty()) cfg.set("out_dir", opts.out_dir);
  if (!opts.levels.empty()) cfg.set("levels", opts.levels);
  if (!opts.threads.empty()) cfg.set("threads", opts.threads);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selection-aware Bayesian inference after randomized lasso "
               "screening"};
  app.set_version_flag("--version", postsel::kVersion);
  app.require_subcommand(1);

  CommonOpts select_opts, infer_opts, simulate_opts, features_opts;
  attach_common(app.add_subcommand(
                    "select", "run the randomized selection pipeline"),
                select_opts);
  attach_common(app.add_subcommand(
                    "infer", "sample the selective posterior of a selection"),
                infer_opts);
  attach_common(
      app.add_subcommand("simulate", "coverage/length benchmark sweep"),
      simulate_opts);
  attach_common(app.add_subcommand(
                    "features", "pathway scores and density PCA utilities"),
                features_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  CommonOpts* opts = &select_opts;
  if (name == "infer") opts = &infer_opts;
  else if (name == "simulate") opts = &simulate_opts;
  else if (name == "features") opts = &features_opts;

  postsel::ConfigMap cfg = assemble(*opts);
  const auto start = std::chrono::steady_clock::now();
  const int code = postsel::run_command(name, cfg);
  const std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - start;
  std::cerr << name << " finished in " << elapsed.count() << " s\n";
  return code;
}
