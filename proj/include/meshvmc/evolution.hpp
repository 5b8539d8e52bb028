// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "meshvmc/baseline.hpp"
#include "meshvmc/geometry.hpp"

namespace meshvmc {

struct EvolutionConfig {
  double dt = 5e-5;
  std::int64_t steps = 20000;
  int batch = 1024;
  double svd_eps = 1e-12;
  std::uint64_t seed = 0;
  std::int64_t record_stride = 2000;  // 0 disables snapshots
  bool exact_geometry = false;        // enumerate the mesh instead of sampling
  bool collect_trace = false;         // per-step solver diagnostics
};

struct SolveResult {
  Eigen::VectorXd dtheta;      // update, already scaled by dt
  int rank = 0;                // retained spectral directions
  double cond = 0.0;           // largest / smallest retained value
  bool zero_direction = false; // everything fell below the threshold
};

// Regularized least-squares step for M dtheta = V dt. Values below svd_eps
// are discarded (absolute threshold). Works from the low-rank factor when
// the estimate carries one, otherwise from the dense matrix.
SolveResult solve_direction(const GeometryEstimate& est, double dt, double svd_eps);

struct TraceRow {
  std::int64_t step = 0;
  int rank = 0;
  double cond = 0.0;
  double v_norm = 0.0;
};

struct EvolutionRun {
  std::vector<double> times;             // snapshot times, strictly increasing
  std::vector<AnsatzState> checkpoints;  // parameters at snapshot times
  std::vector<GridFunction> snapshots;   // dense states, filled when n <= 16
  AnsatzState final_state;
  double final_time = 0.0;
  std::int64_t zero_direction_steps = 0;
  bool aborted = false;
  std::string abort_reason;
  std::vector<TraceRow> trace;
};

// Explicit parameter-space Euler loop: sample, estimate, solve, update.
// Fresh batch every step keyed by (seed, step). Aborts on non-finite
// parameters or estimates, keeping the last good state.
EvolutionRun evolve(MaskedNet& net, const AnsatzState& state0, const Problem& problem,
                    const EvolutionConfig& cfg, double t0 = 0.0);

// Mean over snapshots of |u_ref - u_run| / |u_ref| (mesh 2-norms). Times
// must line up and the run must carry dense snapshots.
double relative_error(const std::vector<GridFunction>& run_snapshots,
                      const std::vector<GridFunction>& ref_snapshots);
double relative_error(const EvolutionRun& run, const BaselineRun& ref);

}  // namespace meshvmc
