// SPDX-License-Identifier: MIT
#include "meshvmc/stencil.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace meshvmc {

OperatorSpec make_operator(Eigen::MatrixXd coeff, BoundaryKind bc, const MeshSpec& mesh) {
  require(coeff.rows() == mesh.d && coeff.cols() == mesh.d,
          "operator: coefficient matrix must be " + std::to_string(mesh.d) + "x" +
              std::to_string(mesh.d));
  for (int i = 0; i < mesh.d; ++i)
    for (int j = i + 1; j < mesh.d; ++j)
      require(std::abs(coeff(i, j) - coeff(j, i)) <=
                  1e-12 * std::max(1.0, std::abs(coeff(i, j))),
              "operator: coefficient matrix must be symmetric");
  OperatorSpec op;
  op.coeff = std::move(coeff);
  op.bc = bc;
  return op;
}

OperatorSpec make_diffusion(double diffusion, BoundaryKind bc, const MeshSpec& mesh) {
  require(diffusion > 0.0, "operator: diffusion coefficient must be positive");
  return make_operator(Eigen::MatrixXd::Identity(mesh.d, mesh.d) * diffusion, bc, mesh);
}

namespace {

// Step along two axes (which may coincide with steps summing) honoring the
// boundary kind. Returns false when Dirichlet clips the move.
bool stepped(const OperatorSpec& op, const MeshSpec& mesh, std::uint64_t k, int axis_a, int step_a,
             int axis_b, int step_b, std::uint64_t& out) {
  std::uint64_t cur = k;
  if (op.bc == BoundaryKind::periodic) {
    cur = neighbor_wrapped(mesh, cur, axis_a, step_a);
    if (axis_b >= 0) cur = neighbor_wrapped(mesh, cur, axis_b, step_b);
    out = cur;
    return true;
  }
  if (!neighbor(mesh, cur, axis_a, step_a, cur)) return false;
  if (axis_b >= 0 && !neighbor(mesh, cur, axis_b, step_b, cur)) return false;
  out = cur;
  return true;
}

void sort_merge(StencilRow& out) {
  std::sort(out.begin(), out.end(),
            [](const StencilEntry& a, const StencilEntry& b) { return a.col < b.col; });
  std::size_t w = 0;
  for (std::size_t r = 0; r < out.size(); ++r) {
    if (w > 0 && out[w - 1].col == out[r].col) {
      out[w - 1].w += out[r].w;
    } else {
      out[w++] = out[r];
    }
  }
  out.resize(w);
  out.erase(std::remove_if(out.begin(), out.end(),
                           [](const StencilEntry& e) { return e.w == 0.0; }),
            out.end());
}

}  // namespace

void row(const OperatorSpec& op, const MeshSpec& mesh, std::uint64_t k, StencilRow& out) {
  out.clear();
  const double inv_dx2 = 1.0 / (mesh.dx() * mesh.dx());
  const int d = mesh.d;

  double trace = 0.0;
  for (int i = 0; i < d; ++i) trace += op.coeff(i, i);
  out.push_back({k, -2.0 * trace * inv_dx2});

  std::uint64_t col = 0;
  for (int i = 0; i < d; ++i) {
    const double wi = op.coeff(i, i) * inv_dx2;
    for (int s : {+1, -1}) {
      if (stepped(op, mesh, k, i, s, -1, 0, col)) out.push_back({col, wi});
    }
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double wij = op.coeff(i, j);
      if (wij == 0.0) continue;
      const double wc = wij * 0.5 * inv_dx2;  // 2 A_ij / (4 dx^2)
      for (int si : {+1, -1}) {
        for (int sj : {+1, -1}) {
          if (stepped(op, mesh, k, i, si, j, sj, col))
            out.push_back({col, (si == sj) ? wc : -wc});
        }
      }
    }
  }
  sort_merge(out);
}

StencilRow row(const OperatorSpec& op, const MeshSpec& mesh, std::uint64_t k) {
  StencilRow out;
  row(op, mesh, k, out);
  return out;
}

GridFunction apply(const OperatorSpec& op, const MeshSpec& mesh, const GridFunction& u) {
  require(mesh.n <= 26, "operator: dense apply limited to n <= 26");
  require(u.size() == static_cast<Eigen::Index>(mesh.size()), "operator: state size mismatch");
  GridFunction out(u.size());
  StencilRow r;
  r.reserve(2 * mesh.d * mesh.d + 1);
  for (std::uint64_t k = 0; k < mesh.size(); ++k) {
    row(op, mesh, k, r);
    double acc = 0.0;
    for (const StencilEntry& e : r) acc += e.w * u[static_cast<Eigen::Index>(e.col)];
    out[static_cast<Eigen::Index>(k)] = acc;
  }
  return out;
}

SourceFn dirichlet_source(const OperatorSpec& op, const MeshSpec& mesh,
                          std::function<double(double, std::uint64_t)> g) {
  require(op.bc == BoundaryKind::dirichlet, "source: face data requires Dirichlet boundaries");
  require(mesh.n <= 26, "source: support precomputation limited to n <= 26");

  // Interior points adjacent to a face, with the stencil weight into each
  // face column they touch.
  struct Compensation {
    std::uint64_t k;
    std::vector<StencilEntry> faces;
  };
  auto comp = std::make_shared<std::vector<Compensation>>();
  auto faces = std::make_shared<std::vector<std::uint64_t>>();

  StencilRow r;
  for (std::uint64_t k = 0; k < mesh.size(); ++k) {
    if (on_face(mesh, k)) {
      faces->push_back(k);
      continue;
    }
    row(op, mesh, k, r);
    Compensation c{k, {}};
    for (const StencilEntry& e : r) {
      if (e.col != k && on_face(mesh, e.col)) c.faces.push_back(e);
    }
    if (!c.faces.empty()) comp->push_back(std::move(c));
  }

  auto gfn = std::make_shared<std::function<double(double, std::uint64_t)>>(std::move(g));

  SourceFn src;
  src.pins_faces = true;
  src.face_value = [gfn](double t, std::uint64_t k) { return (*gfn)(t, k); };
  src.value = [gfn, comp, faces, mesh](double t, std::uint64_t k) -> double {
    if (on_face(mesh, k)) return (*gfn)(t, k);
    auto it = std::lower_bound(comp->begin(), comp->end(), k,
                               [](const Compensation& c, std::uint64_t key) { return c.k < key; });
    if (it == comp->end() || it->k != k) return 0.0;
    double acc = 0.0;
    for (const StencilEntry& e : it->faces) acc += e.w * (*gfn)(t, e.col);
    return acc;
  };
  src.support = *faces;
  for (const Compensation& c : *comp) src.support.push_back(c.k);
  std::sort(src.support.begin(), src.support.end());
  return src;
}

void problem_row(const OperatorSpec& op, const MeshSpec& mesh, bool pinned_faces, std::uint64_t k,
                 StencilRow& out) {
  if (!pinned_faces) {
    row(op, mesh, k, out);
    return;
  }
  if (on_face(mesh, k)) {
    out.clear();
    return;
  }
  row(op, mesh, k, out);
  out.erase(std::remove_if(out.begin(), out.end(),
                           [&](const StencilEntry& e) { return on_face(mesh, e.col); }),
            out.end());
}

void CompiledOperator::apply(const GridFunction& u, GridFunction& out) const {
  const std::int64_t rows = static_cast<std::int64_t>(offsets.size()) - 1;
  for (std::int64_t k = 0; k < rows; ++k) {
    double acc = 0.0;
    for (std::int64_t idx = offsets[k]; idx < offsets[k + 1]; ++idx)
      acc += w[idx] * u[static_cast<Eigen::Index>(cols[idx])];
    out[k] = acc;
  }
}

CompiledOperator compile(const OperatorSpec& op, const MeshSpec& mesh, bool pinned_faces) {
  require(mesh.n <= 26, "operator: compile limited to n <= 26");
  CompiledOperator c;
  c.offsets.resize(mesh.size() + 1);
  c.offsets[0] = 0;
  StencilRow r;
  r.reserve(2 * mesh.d * mesh.d + 1);
  for (std::uint64_t k = 0; k < mesh.size(); ++k) {
    problem_row(op, mesh, pinned_faces, k, r);
    for (const StencilEntry& e : r) {
      c.cols.push_back(e.col);
      c.w.push_back(e.w);
    }
    c.offsets[k + 1] = static_cast<std::int64_t>(c.cols.size());
  }
  return c;
}

}  // namespace meshvmc
