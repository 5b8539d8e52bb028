// SPDX-License-Identifier: MIT
//
// Second-order central-difference discretization of the generator
//   L = sum_ij A_ij d_i d_j,   A symmetric,
// as sparse rows over the mesh. Per row: the diagonal carries
// -2 tr(A) / dx^2, the two axis neighbors along axis i carry A_ii / dx^2, and
// for each pair i != j the four diagonal neighbors carry +-A_ij / (2 dx^2)
// (positive when both steps share a sign). A row has at most 2 d^2 + 1
// entries; exactly 2 d + 1 in the interior when A is diagonal.
//
// Boundary handling. Rows are always the raw clipped/wrapped stencil:
// Dirichlet drops off-grid columns (the layer just outside the grid is an
// implicit zero), Periodic wraps them. Prescribed face data never edits raw
// rows; it enters through a source function built by dirichlet_source, and
// the composed dynamics then use interior-projected rows (see problem_row).
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "meshvmc/mesh.hpp"

namespace meshvmc {

enum class BoundaryKind { dirichlet, periodic };

struct OperatorSpec {
  Eigen::MatrixXd coeff;  // d x d, symmetric
  BoundaryKind bc = BoundaryKind::dirichlet;
};

OperatorSpec make_operator(Eigen::MatrixXd coeff, BoundaryKind bc, const MeshSpec& mesh);

// Isotropic diffusion, coeff = diffusion * I.
OperatorSpec make_diffusion(double diffusion, BoundaryKind bc, const MeshSpec& mesh);

struct StencilEntry {
  std::uint64_t col;
  double w;
};

using StencilRow = std::vector<StencilEntry>;

// Row k of the operator, sorted by column, duplicate columns merged (wrapping
// on tiny axes can alias neighbors), exact zero weights dropped. Allocation
// free when `out` has capacity.
void row(const OperatorSpec& op, const MeshSpec& mesh, std::uint64_t k, StencilRow& out);
StencilRow row(const OperatorSpec& op, const MeshSpec& mesh, std::uint64_t k);

// (L u)_k for every k; dense grids only (n <= 26).
GridFunction apply(const OperatorSpec& op, const MeshSpec& mesh, const GridFunction& u);

// Inhomogeneity f(t, k). When built from prescribed face data the flag is set
// and `face_value` holds the raw data g; composed dynamics then pin faces
// (dense reference) or let f drive them (variational run).
struct SourceFn {
  std::function<double(double, std::uint64_t)> value;  // f(t, k)
  bool pins_faces = false;
  std::function<double(double, std::uint64_t)> face_value;  // g(t, k), faces only
  std::vector<std::uint64_t> support;  // sorted indices where f can be nonzero
};

// Face data g enters as f = g(t, x) on the faces plus the compensating
// stencil weight times g at interior points adjacent to a face, so interior
// rows see the prescribed values once face columns are projected out.
// Requires n <= 26 (precomputes the support).
SourceFn dirichlet_source(const OperatorSpec& op, const MeshSpec& mesh,
                          std::function<double(double, std::uint64_t)> g);

// Row as the composed dynamics see it: raw when no face data is pinned;
// otherwise faces are projected out (face rows empty, face columns dropped).
void problem_row(const OperatorSpec& op, const MeshSpec& mesh, bool pinned_faces, std::uint64_t k,
                 StencilRow& out);

// Compressed rows over the whole grid for the dense integrators (n <= 26).
struct CompiledOperator {
  std::vector<std::int64_t> offsets;  // size 2^n + 1
  std::vector<std::uint64_t> cols;
  std::vector<double> w;

  void apply(const GridFunction& u, GridFunction& out) const;
};

CompiledOperator compile(const OperatorSpec& op, const MeshSpec& mesh, bool pinned_faces);

}  // namespace meshvmc
