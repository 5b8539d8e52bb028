// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meshvmc/geometry.hpp"
#include "meshvmc/mesh.hpp"

namespace meshvmc {

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct PretrainConfig {
  std::int64_t iters = 50000;
  int batch = 128;
  AdamParams adam;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::int64_t trace_stride = 100;  // 0 disables the trace
};

// Piecewise schedule: linear ramp from zero over the first tenth of the run,
// then base, base/10 from 3/7 of the run, base/100 from 5/7.
double lr_at(const PretrainConfig& cfg, std::int64_t iter);

struct PretrainTraceRow {
  std::int64_t iter = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct PretrainResult {
  AnsatzState state;
  std::vector<PretrainTraceRow> trace;
  double fit_rel_error = -1.0;  // filled for n <= 16, else stays negative
  bool aborted = false;
  std::string abort_reason;
};

// Mean squared residual of alpha psi against the target over a set of mesh
// indices (per-point mean, not the full-grid sum).
double pretrain_loss(MaskedNet& net, const AnsatzState& state, const GridFunction& target,
                     const std::vector<std::uint64_t>& batch_keys);

// Fits alpha psi to the target with Adam over uniformly drawn mesh points.
// Scale and network weights train jointly; a non-finite loss aborts the run
// and keeps the last good parameters.
PretrainResult pretrain(MaskedNet& net, const GridFunction& target, const PretrainConfig& cfg);

}  // namespace meshvmc
