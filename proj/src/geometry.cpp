// SPDX-License-Identifier: MIT
#include "meshvmc/geometry.hpp"

#include <cmath>
#include <string>

namespace meshvmc {

namespace {

constexpr std::uint64_t kChunk = 4096;

// f evaluation points: a source with an empty support list is evaluated
// everywhere.
void add_source(const SourceFn& src, double t, const MeshSpec& mesh, GridFunction& rhs) {
  if (!src.value) return;
  if (src.support.empty()) {
    for (std::uint64_t k = 0; k < mesh.size(); ++k)
      rhs[static_cast<Eigen::Index>(k)] += src.value(t, k);
  } else {
    for (std::uint64_t k : src.support) rhs[static_cast<Eigen::Index>(k)] += src.value(t, k);
  }
}

// Pinned-face derivative target: the projected flow holds a face at its
// prescribed data by matching the data's time derivative, not its value.
double face_rate(const SourceFn& src, double t, std::uint64_t k) {
  if (!src.face_value) return 0.0;
  const double h = 1e-6;
  return (src.face_value(t + h, k) - src.face_value(t, k)) / h;
}

// Overwrites rhs at face sites with the prescribed-data rate.
void pin_face_rates(const SourceFn& src, double t, const MeshSpec& mesh, GridFunction& rhs) {
  if (!src.pins_faces) return;
  auto set = [&](std::uint64_t k) {
    if (on_face(mesh, k)) rhs[static_cast<Eigen::Index>(k)] = face_rate(src, t, k);
  };
  if (src.support.empty()) {
    for (std::uint64_t k = 0; k < mesh.size(); ++k) set(k);
  } else {
    for (std::uint64_t k : src.support) set(k);
  }
}

}  // namespace

Eigen::MatrixXd GeometryEstimate::dense_m() const {
  if (m_dense.size() > 0) return m_dense;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(factor.rows(), factor.rows());
  m.selfadjointView<Eigen::Lower>().rankUpdate(factor);
  return m.selfadjointView<Eigen::Lower>();
}

double local_energy(MaskedNet& net, const AnsatzState& state, const Problem& problem,
                    double t, std::uint64_t k) {
  net.set_params(state.beta);

  StencilRow r;
  problem_row(problem.op, problem.mesh, problem.pinned_faces(), k, r);
  const double lp_k = net.log_psi(k);
  double acc = 0.0;
  for (const StencilEntry& e : r) {
    if (e.col == k) {
      acc += e.w;
    } else {
      acc += e.w * std::exp(net.log_psi(e.col) - lp_k);
    }
  }
  if (problem.has_source()) {
    const double alpha = std::exp(state.log_alpha);
    const double num = (problem.pinned_faces() && on_face(problem.mesh, k))
                           ? face_rate(problem.src, t, k)
                           : problem.src.value(t, k);
    acc += num / (alpha * std::exp(lp_k));
  }
  return acc;
}

GeometryEstimate estimate_mv(MaskedNet& net, const AnsatzState& state,
                             const Problem& problem, double t, const SampleBatch& batch) {
  net.set_params(state.beta);
  require(!batch.keys.empty(), "geometry: empty sample batch");

  const std::size_t u_count = batch.keys.size();
  const int p = net.n_params();
  const double alpha = std::exp(state.log_alpha);

  Eigen::MatrixXd scores;
  Eigen::VectorXd lp;
  net.batch_scores(batch.keys, scores, lp);

  // Stencil neighborhoods of every unique sample, evaluated in one pass.
  StencilRow r;
  std::vector<StencilRow> rows(u_count);
  std::vector<std::uint64_t> neighbor_keys;
  for (std::size_t i = 0; i < u_count; ++i) {
    problem_row(problem.op, problem.mesh, problem.pinned_faces(), batch.keys[i], rows[i]);
    for (const StencilEntry& e : rows[i])
      if (e.col != batch.keys[i]) neighbor_keys.push_back(e.col);
  }
  Eigen::VectorXd lp_neighbors;
  net.batch_log_psi(neighbor_keys, lp_neighbors);

  GeometryEstimate est;
  est.alpha_sq = alpha * alpha;
  est.diag.unique_count = static_cast<std::int64_t>(u_count);
  est.diag.b_total = batch.b_total;

  Eigen::VectorXd local(u_count);
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < u_count; ++i) {
    const std::uint64_t k = batch.keys[i];
    double acc = 0.0;
    for (const StencilEntry& e : rows[i]) {
      if (e.col == k) {
        acc += e.w;
      } else {
        acc += e.w * std::exp(lp_neighbors[static_cast<Eigen::Index>(cursor++)] - lp[i]);
      }
    }
    if (problem.has_source()) {
      const double num = (problem.pinned_faces() && on_face(problem.mesh, k))
                             ? face_rate(problem.src, t, k)
                             : problem.src.value(t, k);
      acc += num / (alpha * std::exp(lp[i]));
    }
    if (!std::isfinite(acc))
      throw numerical_error("geometry: non-finite local energy at grid index " +
                            std::to_string(k));
    local[static_cast<Eigen::Index>(i)] = acc;
  }
  est.diag.min_local_energy = local.minCoeff();
  est.diag.max_local_energy = local.maxCoeff();

  est.factor.resize(p + 1, static_cast<Eigen::Index>(u_count));
  Eigen::VectorXd h(u_count);
  const double inv_b = 1.0 / static_cast<double>(batch.b_total);
  for (std::size_t i = 0; i < u_count; ++i) {
    const double wsq = alpha * std::sqrt(static_cast<double>(batch.counts[i]) * inv_b);
    est.factor(0, static_cast<Eigen::Index>(i)) = wsq;
    est.factor.col(static_cast<Eigen::Index>(i)).tail(p) = wsq * scores.col(static_cast<Eigen::Index>(i));
    h[static_cast<Eigen::Index>(i)] = wsq * local[static_cast<Eigen::Index>(i)];
  }
  est.v.noalias() = est.factor * h;
  return est;
}

namespace {

GeometryEstimate exact_from_tangents_chunked(MaskedNet& net, const AnsatzState& state,
                                             const Problem& problem, double t) {
  const MeshSpec& mesh = problem.mesh;
  const int p = net.n_params();
  const double alpha = std::exp(state.log_alpha);

  // Dense state and right-hand side L u + f.
  std::vector<std::uint64_t> all(mesh.size());
  for (std::uint64_t k = 0; k < mesh.size(); ++k) all[k] = k;
  Eigen::VectorXd lp_all;
  net.batch_log_psi(all, lp_all);
  GridFunction u = (state.log_alpha + lp_all.array()).exp();
  const CompiledOperator compiled = compile(problem.op, mesh, problem.pinned_faces());
  GridFunction rhs(u.size());
  compiled.apply(u, rhs);
  if (problem.has_source()) {
    add_source(problem.src, t, mesh, rhs);
    pin_face_rates(problem.src, t, mesh, rhs);
  }

  GeometryEstimate est;
  est.alpha_sq = alpha * alpha;
  est.diag.unique_count = static_cast<std::int64_t>(mesh.size());
  est.diag.b_total = static_cast<std::int64_t>(mesh.size());
  est.m_dense = Eigen::MatrixXd::Zero(p + 1, p + 1);
  est.v = Eigen::VectorXd::Zero(p + 1);

  Eigen::MatrixXd scores;
  Eigen::VectorXd lp;
  Eigen::MatrixXd tangents(p + 1, kChunk);
  std::vector<std::uint64_t> chunk;
  double min_l = 0.0, max_l = 0.0;
  bool first = true;
  for (std::uint64_t begin = 0; begin < mesh.size(); begin += kChunk) {
    const std::uint64_t count = std::min<std::uint64_t>(kChunk, mesh.size() - begin);
    chunk.assign(all.begin() + begin, all.begin() + begin + count);
    net.batch_scores(chunk, scores, lp);
    tangents.resize(p + 1, static_cast<Eigen::Index>(count));
    for (std::uint64_t i = 0; i < count; ++i) {
      const double ui = u[static_cast<Eigen::Index>(begin + i)];
      tangents(0, static_cast<Eigen::Index>(i)) = ui;
      tangents.col(static_cast<Eigen::Index>(i)).tail(p) =
          ui * scores.col(static_cast<Eigen::Index>(i));
      const double li = rhs[static_cast<Eigen::Index>(begin + i)] / ui;
      if (first || li < min_l) min_l = li;
      if (first || li > max_l) max_l = li;
      first = false;
    }
    est.m_dense.selfadjointView<Eigen::Lower>().rankUpdate(tangents);
    est.v.noalias() += tangents * rhs.segment(static_cast<Eigen::Index>(begin),
                                              static_cast<Eigen::Index>(count));
  }
  est.m_dense = est.m_dense.selfadjointView<Eigen::Lower>();
  est.diag.min_local_energy = min_l;
  est.diag.max_local_energy = max_l;
  return est;
}

}  // namespace

GeometryEstimate exact_mv(MaskedNet& net, const AnsatzState& state, const Problem& problem,
                          double t) {
  require(problem.mesh.n <= 16, "geometry: enumerated assembly limited to n <= 16");
  net.set_params(state.beta);
  return exact_from_tangents_chunked(net, state, problem, t);
}

GeometryEstimate exact_mv_linear(const Eigen::MatrixXd& basis, const Eigen::VectorXd& theta,
                                 const Problem& problem, double t) {
  require(problem.mesh.n <= 16, "geometry: enumerated assembly limited to n <= 16");
  require(basis.rows() == static_cast<Eigen::Index>(problem.mesh.size()),
          "geometry: basis rows must match grid size");
  require(basis.cols() == theta.size(), "geometry: theta length must match basis columns");

  GridFunction u = basis * theta;
  const CompiledOperator compiled = compile(problem.op, problem.mesh, problem.pinned_faces());
  GridFunction rhs(u.size());
  compiled.apply(u, rhs);
  if (problem.has_source()) {
    add_source(problem.src, t, problem.mesh, rhs);
    pin_face_rates(problem.src, t, problem.mesh, rhs);
  }

  GeometryEstimate est;
  est.alpha_sq = 1.0;
  est.m_dense = basis.transpose() * basis;
  est.v = basis.transpose() * rhs;
  est.diag.unique_count = static_cast<std::int64_t>(problem.mesh.size());
  est.diag.b_total = est.diag.unique_count;
  return est;
}

GridFunction dense_state(MaskedNet& net, const AnsatzState& state) {
  require(net.spec().n <= 16, "geometry: dense state limited to n <= 16");
  net.set_params(state.beta);
  std::vector<std::uint64_t> all(std::uint64_t{1} << net.spec().n);
  for (std::uint64_t k = 0; k < all.size(); ++k) all[k] = k;
  Eigen::VectorXd lp;
  net.batch_log_psi(all, lp);
  return (state.log_alpha + lp.array()).exp();
}

}  // namespace meshvmc
