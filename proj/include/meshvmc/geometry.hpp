// SPDX-License-Identifier: MIT
//
// Tangent-space geometry of the scaled ansatz u = alpha psi_beta with
// parameters theta = (log alpha, beta). The evolution step solves
// M dtheta = V dt where
//   M_ij = <du/dtheta_i, du/dtheta_j>,   V_i = <du/dtheta_i, L u + f>.
// With sigma = d log psi / d beta and the local energy
//   l(x) = (L psi)(x) / psi(x) + f(t, x) / (alpha psi(x)),
// every block reduces to expectations under the sampling density psi^2:
//   M = alpha^2 E[(1, sigma)(1, sigma)^T],   V = alpha^2 E[l (1, sigma)].
// The sampled estimate replaces E by counter-weighted batch means; because M
// is then a sum of weighted outer products it ships as a factor G with
// M = G G^T, which the solver exploits. The enumerated versions sum over the
// whole grid and serve as oracles.
#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "meshvmc/ansatz.hpp"
#include "meshvmc/mesh.hpp"
#include "meshvmc/stencil.hpp"

namespace meshvmc {

struct AnsatzState {
  double log_alpha = 0.0;
  Eigen::VectorXd beta;
};

// What one evolution run works against: mesh, generator, optional source.
struct Problem {
  MeshSpec mesh;
  OperatorSpec op;
  SourceFn src;       // value == nullptr means no inhomogeneity
  bool has_source() const { return static_cast<bool>(src.value); }
  bool pinned_faces() const { return has_source() && src.pins_faces; }
};

struct GeometryDiagnostics {
  std::int64_t unique_count = 0;
  std::int64_t b_total = 0;
  double min_local_energy = 0.0;
  double max_local_energy = 0.0;
};

struct GeometryEstimate {
  double alpha_sq = 1.0;
  Eigen::MatrixXd factor;   // (p+1) x U with M = factor factor^T; may be empty
  Eigen::MatrixXd m_dense;  // set when assembled densely; may be empty
  Eigen::VectorXd v;        // p + 1
  GeometryDiagnostics diag;

  Eigen::MatrixXd dense_m() const;  // materializes from the factor if needed
};

// Local energy at one grid point. Rows follow the problem's boundary mode
// (see problem_row); psi ratios go through log psi differences.
double local_energy(MaskedNet& net, const AnsatzState& state, const Problem& problem,
                    double t, std::uint64_t k);

// Counter-weighted sampled estimate over a batch. Aborts on non-finite local
// energies.
GeometryEstimate estimate_mv(MaskedNet& net, const AnsatzState& state,
                             const Problem& problem, double t, const SampleBatch& batch);

// Enumerated (exact) assembly over all 2^n points; n <= 16.
GeometryEstimate exact_mv(MaskedNet& net, const AnsatzState& state, const Problem& problem,
                          double t);

// Enumerated assembly for a linear family u = basis * theta (columns are the
// basis functions). M is the basis Gram matrix and V = basis^T (L u + f).
GeometryEstimate exact_mv_linear(const Eigen::MatrixXd& basis, const Eigen::VectorXd& theta,
                                 const Problem& problem, double t);

// alpha psi over the whole grid; n <= 16.
GridFunction dense_state(MaskedNet& net, const AnsatzState& state);

}  // namespace meshvmc
