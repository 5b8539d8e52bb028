// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "meshvmc/ansatz.hpp"
#include "meshvmc/black_scholes.hpp"
#include "meshvmc/evolution.hpp"
#include "meshvmc/pretrain.hpp"
#include "meshvmc/stencil.hpp"

namespace meshvmc {

using json = nlohmann::json;

// One experiment, fully resolved: every knob explicit so the dumped form
// documents unstated defaults and hashes stably.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  // mesh section
  int d = 1;
  int n = 4;
  std::vector<std::array<double, 2>> bounds;  // empty: unit-spacing lattice

  // operator section
  double diffusion = 0.1;  // scalar shorthand, coeff = diffusion * I
  Eigen::MatrixXd coeff;   // full matrix when given; overrides the scalar
  BoundaryKind bc = BoundaryKind::dirichlet;

  // network section
  std::vector<int> hidden = {64, 64};
  double prob_clamp = 1e-7;

  // initial section (diffusion benchmark start state)
  double init_width = 3.0;
  bool init_centered = true;

  PretrainConfig pretrain;
  EvolutionConfig evolution;

  // option section (pricing only)
  bool has_option = false;
  OptionKind option_kind = OptionKind::call_1d;
  int option_d = 1;
  double strike = 1.25;
  double rate = 0.03;
  double expiry = 1.0;
  std::vector<double> sigma = {0.3};
  double rho_offdiag = 0.0;
  std::vector<double> weights;  // empty: uniform
  double spot = 1.25;
  std::int64_t mc_paths = 1000000;

  // suite section (benchmark table knobs)
  int suite_vmc_n_1d = 8;
  int suite_vmc_n_2d = 10;
  int suite_euler_n_1d = 12;
  int suite_euler_n_2d = 12;
};

// Strict parse: unknown keys and malformed values are rejected.
ExperimentConfig config_from_json(const json& j);

// Canonical resolved dump; parsing it back yields the same config.
json config_to_json(const ExperimentConfig& cfg);

// Dotted-path assignments "section.key=value"; values parse as JSON with a
// string fallback.
void apply_overrides(json& j, const std::vector<std::string>& sets);

// Config file (optional) plus overrides; empty path starts from defaults.
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& sets);

// FNV-1a over the canonical dump, as fixed-width hex.
std::string config_hash_hex(const ExperimentConfig& cfg);

MeshSpec mesh_from_config(const ExperimentConfig& cfg);
OperatorSpec operator_from_config(const ExperimentConfig& cfg, const MeshSpec& mesh);
NetworkSpec network_from_config(const ExperimentConfig& cfg);
NetworkSpec network_from_config(const ExperimentConfig& cfg, int n_override);
OptionSpec option_from_config(const ExperimentConfig& cfg);
GridFunction initial_from_config(const ExperimentConfig& cfg, const MeshSpec& mesh);

}  // namespace meshvmc
