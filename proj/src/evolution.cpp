// SPDX-License-Identifier: MIT
#include "meshvmc/evolution.hpp"

#include <cmath>
#include <cstdio>

#include "meshvmc/common.hpp"
#include "meshvmc/rng.hpp"

namespace meshvmc {

namespace {

// Spectral solve on a dense symmetric PSD matrix.
SolveResult solve_dense(const Eigen::MatrixXd& m, const Eigen::VectorXd& v, double dt,
                        double eps) {
  SolveResult out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  require(eig.info() == Eigen::Success, "evolution: eigendecomposition failed");
  const Eigen::VectorXd& lam = eig.eigenvalues();
  const Eigen::MatrixXd& w = eig.eigenvectors();

  out.dtheta = Eigen::VectorXd::Zero(v.size());
  double lo = 0.0, hi = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const double s = lam[i];
    if (s < eps) continue;  // PSD up to roundoff; tiny negatives land here too
    out.dtheta += w.col(i) * (w.col(i).dot(v) / s);
    if (out.rank == 0 || s < lo) lo = s;
    if (out.rank == 0 || s > hi) hi = s;
    ++out.rank;
  }
  out.dtheta *= dt;
  if (out.rank == 0) {
    out.zero_direction = true;
  } else {
    out.cond = hi / lo;
  }
  return out;
}

// Same solve through the factor: M = G G^T shares nonzero spectrum with
// G^T G, whose size is the unique-sample count rather than p + 1.
SolveResult solve_factor(const Eigen::MatrixXd& g, const Eigen::VectorXd& v, double dt,
                         double eps) {
  SolveResult out;
  const Eigen::MatrixXd gram = g.transpose() * g;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  require(eig.info() == Eigen::Success, "evolution: eigendecomposition failed");
  const Eigen::VectorXd& lam = eig.eigenvalues();
  const Eigen::MatrixXd& q = eig.eigenvectors();

  const Eigen::VectorXd gv = g.transpose() * v;
  Eigen::VectorXd coeff = Eigen::VectorXd::Zero(gv.size());
  double lo = 0.0, hi = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const double s = lam[i];
    if (s < eps) continue;
    coeff += q.col(i) * (q.col(i).dot(gv) / (s * s));
    if (out.rank == 0 || s < lo) lo = s;
    if (out.rank == 0 || s > hi) hi = s;
    ++out.rank;
  }
  out.dtheta = g * coeff * dt;
  if (out.rank == 0) {
    out.dtheta = Eigen::VectorXd::Zero(v.size());
    out.zero_direction = true;
  } else {
    out.cond = hi / lo;
  }
  return out;
}

bool state_finite(const AnsatzState& s) {
  return std::isfinite(s.log_alpha) && s.beta.allFinite();
}

}  // namespace

SolveResult solve_direction(const GeometryEstimate& est, double dt, double svd_eps) {
  require(svd_eps > 0.0, "evolution: svd_eps must be > 0");
  require(est.v.size() > 0, "evolution: estimate carries no gradient");
  if (est.factor.size() > 0) {
    require(est.factor.rows() == est.v.size(), "evolution: factor/gradient size mismatch");
    // The factor route decomposes a matrix of the unique-sample count; fall
    // back to the dense route when that count exceeds the parameter count.
    if (est.factor.cols() < est.factor.rows()) return solve_factor(est.factor, est.v, dt, svd_eps);
    return solve_dense(est.dense_m(), est.v, dt, svd_eps);
  }
  require(est.m_dense.rows() == est.v.size() && est.m_dense.cols() == est.v.size(),
          "evolution: matrix/gradient size mismatch");
  return solve_dense(est.m_dense, est.v, dt, svd_eps);
}

EvolutionRun evolve(MaskedNet& net, const AnsatzState& state0, const Problem& problem,
                    const EvolutionConfig& cfg, double t0) {
  require(cfg.dt > 0.0, "evolution: dt must be > 0");
  require(cfg.svd_eps > 0.0, "evolution: svd_eps must be > 0");
  require(cfg.steps >= 0, "evolution: steps must be >= 0");
  require(cfg.batch > 0 || cfg.exact_geometry, "evolution: batch must be > 0");
  require(net.spec().n == problem.mesh.n, "evolution: network and mesh size differ");
  require(state0.beta.size() == static_cast<Eigen::Index>(net.n_params()),
          "evolution: parameter count mismatch");

  const bool dense_ok = problem.mesh.n <= 16;

  EvolutionRun run;
  AnsatzState state = state0;
  std::int64_t done = 0;

  for (std::int64_t s = 0; s < cfg.steps; ++s) {
    const double t = t0 + static_cast<double>(s) * cfg.dt;

    GeometryEstimate est;
    try {
      if (cfg.exact_geometry) {
        est = exact_mv(net, state, problem, t);
      } else {
        net.set_params(state.beta);
        const SampleBatch batch =
            net.sample(cfg.batch, derive_stream(cfg.seed, "evolve", static_cast<std::uint64_t>(s)));
        est = estimate_mv(net, state, problem, t, batch);
      }
    } catch (const numerical_error& e) {
      run.aborted = true;
      run.abort_reason = std::string(e.what()) + " at step " + std::to_string(s);
      break;
    }

    const SolveResult sol = solve_direction(est, cfg.dt, cfg.svd_eps);
    if (sol.zero_direction) ++run.zero_direction_steps;
    if (cfg.collect_trace) run.trace.push_back({s, sol.rank, sol.cond, est.v.norm()});

    AnsatzState next = state;
    next.log_alpha += sol.dtheta[0];
    next.beta += sol.dtheta.tail(sol.dtheta.size() - 1);
    if (!state_finite(next)) {
      run.aborted = true;
      run.abort_reason = "non-finite parameters at step " + std::to_string(s + 1);
      break;
    }
    state = next;
    done = s + 1;

    if (cfg.record_stride > 0 && (s + 1) % cfg.record_stride == 0) {
      run.times.push_back(t0 + static_cast<double>(s + 1) * cfg.dt);
      run.checkpoints.push_back(state);
      if (dense_ok) {
        net.set_params(state.beta);
        run.snapshots.push_back(dense_state(net, state));
      }
    }
  }

  if (run.zero_direction_steps > 0)
    std::fprintf(stderr, "warning: %lld steps produced no retained spectral direction\n",
                 static_cast<long long>(run.zero_direction_steps));

  run.final_state = state;
  run.final_time = t0 + static_cast<double>(done) * cfg.dt;
  return run;
}

double relative_error(const std::vector<GridFunction>& run_snapshots,
                      const std::vector<GridFunction>& ref_snapshots) {
  require(!ref_snapshots.empty(), "relative_error: no snapshots");
  require(run_snapshots.size() == ref_snapshots.size(),
          "relative_error: snapshot count mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < ref_snapshots.size(); ++i) {
    require(run_snapshots[i].size() == ref_snapshots[i].size(),
            "relative_error: snapshot size mismatch");
    const double nb = ref_snapshots[i].norm();
    require(nb > 0.0, "relative_error: reference norm is zero");
    acc += (run_snapshots[i] - ref_snapshots[i]).norm() / nb;
  }
  return acc / static_cast<double>(ref_snapshots.size());
}

double relative_error(const EvolutionRun& run, const BaselineRun& ref) {
  require(run.times.size() == ref.times.size(), "relative_error: snapshot count mismatch");
  for (std::size_t i = 0; i < run.times.size(); ++i)
    require(std::abs(run.times[i] - ref.times[i]) <= 1e-9 * std::max(1.0, std::abs(ref.times[i])),
            "relative_error: snapshot times differ");
  return relative_error(run.snapshots, ref.snapshots);
}

}  // namespace meshvmc
