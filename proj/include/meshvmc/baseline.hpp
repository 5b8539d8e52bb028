// SPDX-License-Identifier: MIT
//
// Dense forward-Euler reference integrator and the discrete-Gaussian initial
// condition built from modified Bessel functions. Cost per step is
// O(2^n d^2), so this is the ground truth for small n and the scaling foil
// for the variational solver.
#pragma once

#include <cstdint>
#include <vector>

#include "meshvmc/mesh.hpp"
#include "meshvmc/stencil.hpp"

namespace meshvmc {

// Modified Bessel function I_x(t) of integer order, t >= 0. Power series for
// small |x|, else a downward (Miller) recurrence normalized through
// I_0 + 2 sum_{v>=1} I_v = e^t.
double bessel_i(std::int64_t x, double t);

// u0(x) = prod_i e^-t I_{x_i}(t) with x_i the integer axis digit, shifted by
// half the axis when centered so the peak sits mid-grid. Total mass over the
// infinite lattice is 1 per axis; the tail outside the grid is what's missing.
GridFunction bessel_gaussian(const MeshSpec& mesh, double t, bool centered = true);

struct BaselineRun {
  std::vector<double> times;           // snapshot times, multiples of stride * dt
  std::vector<GridFunction> snapshots;
  GridFunction final_state;
  double final_time = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

// u <- u + dt (L u + f), faces pinned to the prescribed data when the source
// carries it. Warns to stderr when dt 2 tr(A) / dx^2 > 1 and aborts with a
// numerical_error once the sup norm grows by 1e6 over the initial state.
// Snapshots are recorded after every `stride` steps; stride == 0 records only
// the final state.
BaselineRun euler_run(const OperatorSpec& op, const MeshSpec& mesh, const SourceFn* src,
                      const GridFunction& u0, double dt, std::int64_t steps, std::int64_t stride,
                      double t0 = 0.0);

}  // namespace meshvmc
