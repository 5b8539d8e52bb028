// SPDX-License-Identifier: MIT
//
// Command-line driver. Every subcommand takes --config/--set; the price
// subcommand adds direct flags that translate to config overrides. Exit
// codes: 0 success, 2 invalid input (including parse errors), 3 numerical
// abort.
#include <cmath>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "meshvmc/common.hpp"
#include "meshvmc/config.hpp"
#include "meshvmc/experiments.hpp"
#include "meshvmc/io.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config; defaults apply when omitted");
  cmd->add_option("--set", args.sets, "override a config key, e.g. --set evolution.batch=256");
}

meshvmc::ExperimentConfig load(const CommonArgs& args) {
  return meshvmc::load_config(args.config_path, args.sets);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mesh-based variational Monte Carlo PDE solver"};
  app.require_subcommand(1);

  CommonArgs pre_args, base_args, evo_args, t1_args, abl_args, price_args, suite_args;

  CLI::App* c_pre = app.add_subcommand("pretrain", "fit the scaled ansatz to the initial state");
  add_common(c_pre, pre_args);

  CLI::App* c_base = app.add_subcommand("baseline", "dense explicit reference run");
  add_common(c_base, base_args);

  CLI::App* c_evo = app.add_subcommand("evolve", "variational evolution with error report");
  add_common(c_evo, evo_args);

  CLI::App* c_t1 = app.add_subcommand("table1", "benchmark cell over several seeds");
  add_common(c_t1, t1_args);
  std::vector<std::uint64_t> t1_seeds{0, 1, 2};
  c_t1->add_option("--seeds", t1_seeds, "seed list (default 0 1 2)");

  CLI::App* c_abl = app.add_subcommand("ablation", "error vs. sample batch size");
  add_common(c_abl, abl_args);
  std::vector<int> abl_batches{128, 1024};
  std::vector<std::uint64_t> abl_seeds{0, 1, 2};
  c_abl->add_option("--batches", abl_batches, "batch sizes (default 128 1024)");
  c_abl->add_option("--seeds", abl_seeds, "seed list (default 0 1 2)");

  CLI::App* c_price = app.add_subcommand("price", "option price with oracle comparison");
  add_common(c_price, price_args);
  std::string method = "vmc";
  c_price->add_option("--method", method, "vmc | euler | analytic | mc")
      ->check(CLI::IsMember({"vmc", "euler", "analytic", "mc"}));
  std::string opt_kind;
  double opt_strike = 0.0, opt_rate = 0.0, opt_rho = 0.0, opt_expiry = 0.0, opt_dt = 0.0;
  std::vector<double> opt_sigma;
  int opt_d = 0, opt_n = 0, opt_batch = 0;
  std::int64_t opt_steps = 0;
  std::uint64_t opt_seed = 0;
  CLI::Option* f_kind = c_price->add_option("--option", opt_kind, "payoff kind")
                            ->check(CLI::IsMember({"call_1d", "basket_call", "basket_put",
                                                   "rainbow_max_call", "spread_put"}));
  CLI::Option* f_strike = c_price->add_option("--K", opt_strike, "strike");
  CLI::Option* f_rate = c_price->add_option("--r", opt_rate, "riskless rate");
  CLI::Option* f_sigma = c_price->add_option("--sigma", opt_sigma, "per-asset volatility");
  CLI::Option* f_rho = c_price->add_option("--rho", opt_rho, "off-diagonal correlation");
  CLI::Option* f_expiry = c_price->add_option("--T", opt_expiry, "expiry");
  CLI::Option* f_d = c_price->add_option("--d", opt_d, "number of assets");
  CLI::Option* f_n = c_price->add_option("--n", opt_n, "total grid bits (grid is 2^n points)");
  CLI::Option* f_batch = c_price->add_option("--B", opt_batch, "evolution sample batch");
  CLI::Option* f_dt = c_price->add_option("--dt", opt_dt, "evolution step (vmc; sets steps)");
  CLI::Option* f_steps = c_price->add_option("--steps", opt_steps, "evolution step count (vmc)");
  CLI::Option* f_seed = c_price->add_option("--seed", opt_seed, "run seed");

  CLI::App* c_suite = app.add_subcommand("pricing-suite", "the full pricing comparison table");
  add_common(c_suite, suite_args);

  app.add_subcommand("selftest", "built-in oracle and property checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_pre->parsed()) return meshvmc::cmd_pretrain(load(pre_args));
    if (c_base->parsed()) return meshvmc::cmd_baseline(load(base_args));
    if (c_evo->parsed()) return meshvmc::cmd_evolve(load(evo_args));
    if (c_t1->parsed()) return meshvmc::cmd_table1(load(t1_args), t1_seeds);
    if (c_abl->parsed()) return meshvmc::cmd_ablation(load(abl_args), abl_batches, abl_seeds);
    if (c_price->parsed()) {
      // Direct flags become overrides applied after --set, so they win.
      std::vector<std::string> sets = price_args.sets;
      auto push = [&sets](const std::string& key, const std::string& value) {
        sets.push_back(key + "=" + value);
      };
      if (*f_kind) push("option.kind", opt_kind);
      if (*f_strike) push("option.strike", meshvmc::format_double(opt_strike));
      if (*f_rate) push("option.rate", meshvmc::format_double(opt_rate));
      if (*f_sigma) push("option.sigma", nlohmann::json(opt_sigma).dump());
      if (*f_rho) push("option.rho_offdiag", meshvmc::format_double(opt_rho));
      if (*f_expiry) push("option.expiry", meshvmc::format_double(opt_expiry));
      if (*f_d) push("option.d", std::to_string(opt_d));
      if (*f_n) push("mesh.n", std::to_string(opt_n));
      if (*f_batch) push("evolution.batch", std::to_string(opt_batch));
      if (*f_steps) push("evolution.steps", std::to_string(opt_steps));
      if (*f_seed) push("seed", std::to_string(opt_seed));
      meshvmc::ExperimentConfig cfg = meshvmc::load_config(price_args.config_path, sets);
      cfg.has_option = true;
      if (*f_dt) {
        meshvmc::require(!*f_steps, "price: give --dt or --steps, not both");
        meshvmc::require(opt_dt > 0.0, "price: --dt must be > 0");
        cfg.evolution.steps =
            static_cast<std::int64_t>(std::ceil(cfg.expiry / opt_dt));
      }
      return meshvmc::cmd_price(cfg, method);
    }
    if (c_suite->parsed()) return meshvmc::cmd_pricing_suite(load(suite_args));
    return meshvmc::cmd_selftest();
  } catch (const meshvmc::numerical_error& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
