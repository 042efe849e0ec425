#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "wurl/wurl.hpp"

using wurl::Config;

int main(int argc, char** argv) {
  CLI::App app{"Wasserstein policy diversity laboratory"};
  app.set_version_flag("--version", wurl::kVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir, mode, parent;
  std::uint64_t seed = 0;
  int policies = 0, projections = 0;

  CLI::App* sub_estimate = app.add_subcommand("estimate", "estimator comparison study");
  CLI::App* sub_train = app.add_subcommand("train", "multi-policy diversity training");
  CLI::App* sub_incr = app.add_subcommand("incremental", "add policies against a frozen run");
  CLI::App* sub_eval = app.add_subcommand("eval", "diversity report for a finished run");
  CLI::App* sub_hier = app.add_subcommand("hierarchy", "meta-policy over trained sub-policies");
  CLI::App* sub_grad = app.add_subcommand("gradcheck", "finite-difference gradient suite");

  for (CLI::App* sub : {sub_estimate, sub_train, sub_incr, sub_eval, sub_hier, sub_grad}) {
    sub->add_option("--config", config_path, "key=value config file");
    sub->add_option("--seed", seed, "master seed (default 4)");
    sub->add_option("--out", out_dir, "run directory");
    sub->add_option("--policies", policies, "number of policies");
    sub->add_option("--mode", mode, "reward mode")
        ->check(CLI::IsMember({"tf1", "tf2", "pwd", "apwd"}));
    sub->add_option("--projections", projections, "random projections K");
  }
  for (CLI::App* sub : {sub_incr, sub_eval, sub_hier})
    sub->add_option("--parent", parent, "parent run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // keep CLI11's 0 for --help/--version
  }
  CLI::App* sub = app.get_subcommands().front();
  const std::string kind = sub->get_name();

  try {
    Config cfg;
    if (sub->count("--config")) cfg = Config::parse_file(config_path);
    auto applied = cfg.apply_env_overrides("WURL_");
    for (const auto& [k, v] : applied)
      std::fprintf(stderr, "env override %s=%s\n", k.c_str(), v.c_str());
    if (sub->count("--seed")) cfg.set("seed", std::to_string(seed));
    if (sub->count("--policies")) cfg.set("train.policies", std::to_string(policies));
    if (sub->count("--mode")) cfg.set("train.mode", mode);
    if (sub->count("--projections")) cfg.set("wd.projections", std::to_string(projections));
    if (sub->count("--out")) cfg.set("out", out_dir);
    const CLI::Option* po = sub->get_option_no_throw("--parent");
    if (po && po->count()) cfg.set(kind + ".parent", parent);

    std::uint64_t seed_v = cfg.get_u64("seed", wurl::kDefaultSeed);
    std::string out_v = cfg.get("out", "runs/" + kind + "_seed" + std::to_string(seed_v));

    if (kind == "estimate") {
      std::string report = wurl::cmd_estimate(cfg, seed_v, out_v);
      std::fputs(report.c_str(), stdout);
    } else if (kind == "train") {
      std::printf("run %s\n", wurl::cmd_train(cfg, seed_v, out_v).c_str());
    } else if (kind == "incremental") {
      std::printf("run %s\n", wurl::cmd_incremental(cfg, seed_v, out_v).c_str());
    } else if (kind == "eval") {
      std::printf("run %s\n", wurl::cmd_eval(cfg, seed_v, out_v).c_str());
    } else if (kind == "hierarchy") {
      std::printf("run %s\n", wurl::cmd_hierarchy(cfg, seed_v, out_v).c_str());
    } else {  // gradcheck
      if (!wurl::cmd_gradcheck(sub->count("--out") || cfg.has("out") ? out_v : "")) return 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
