// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meshvmc/config.hpp"

namespace meshvmc {

// Diffusion benchmark for one seed: pretrain, dense reference, variational
// run, snapshot-mean relative error.
struct BenchmarkOutcome {
  double error = 0.0;
  double pretrain_fit = 0.0;
  std::int64_t zero_direction_steps = 0;
  bool aborted = false;
  std::string abort_reason;
};

BenchmarkOutcome benchmark_cell(const ExperimentConfig& cfg, std::uint64_t seed);

// Variational price of one option at the reporting spot.
struct VmcPriceOutcome {
  double price = 0.0;
  double pretrain_fit = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

VmcPriceOutcome vmc_price(const OptionSpec& spec, int n, const ExperimentConfig& cfg,
                          double spot);

// Dense reference price; the step count comes from an explicit-stability
// bound, landing exactly on the expiry.
double euler_price(const OptionSpec& spec, int n, double spot);

// Per-step wall costs for the scaling comparison (best of a few repeats).
double vmc_step_seconds(int d, int n, int batch, const std::vector<int>& hidden);
double euler_step_seconds(int d, int n);

// Subcommand bodies; each writes its artifacts under cfg.output_dir and
// returns a process exit code (0 ok, 3 numerical abort).
int cmd_pretrain(const ExperimentConfig& cfg);
int cmd_baseline(const ExperimentConfig& cfg);
int cmd_evolve(const ExperimentConfig& cfg);
int cmd_table1(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds);
int cmd_ablation(const ExperimentConfig& cfg, const std::vector<int>& batches,
                 const std::vector<std::uint64_t>& seeds);
int cmd_price(const ExperimentConfig& cfg, const std::string& method);
int cmd_pricing_suite(const ExperimentConfig& cfg);
int cmd_selftest();

}  // namespace meshvmc
