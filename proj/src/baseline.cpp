// SPDX-License-Identifier: MIT
#include "meshvmc/baseline.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace meshvmc {

namespace {

double bessel_series(std::int64_t v, double t) {
  // I_v(t) = sum_j (t/2)^(2j+v) / (j! (j+v)!), v >= 0.
  const double half = 0.5 * t;
  double term = 1.0;
  for (std::int64_t j = 1; j <= v; ++j) term *= half / static_cast<double>(j);
  if (term == 0.0) return 0.0;
  double sum = term;
  const double h2 = half * half;
  for (std::int64_t j = 1; j < 400; ++j) {
    term *= h2 / (static_cast<double>(j) * static_cast<double>(j + v));
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return sum;
}

double bessel_miller(std::int64_t v, double t) {
  // Downward recurrence I_{w-1} = I_{w+1} + (2w/t) I_w from a start order
  // well above v, normalized with e^t = I_0 + 2 sum_{w>=1} I_w.
  const std::int64_t start =
      v + 20 + static_cast<std::int64_t>(std::ceil(std::sqrt(40.0 * static_cast<double>(v + 1))));
  double above = 0.0;       // I_{w+1}
  double here = 1e-300;     // I_w, arbitrary tiny seed
  double target = 0.0;      // unnormalized I_v
  double norm = 0.0;        // unnormalized I_0 + 2 sum I_w
  for (std::int64_t w = start; w >= 1; --w) {
    const double below = above + (2.0 * static_cast<double>(w) / t) * here;
    if (w - 1 == v) target = below;
    norm += 2.0 * here;
    above = here;
    here = below;
    if (here > 1e280) {  // rescale to dodge overflow
      above /= 1e280;
      here /= 1e280;
      norm /= 1e280;
      target /= 1e280;
    }
  }
  norm += here;  // I_0 term
  return target / norm * std::exp(t);
}

}  // namespace

double bessel_i(std::int64_t x, double t) {
  require(t >= 0.0, "bessel: t must be >= 0");
  const std::int64_t v = x < 0 ? -x : x;  // I_{-v} = I_v
  if (t == 0.0) return v == 0 ? 1.0 : 0.0;
  // Beyond this the result underflows double range anyway.
  if (static_cast<double>(v) * std::log(0.5 * t) - std::lgamma(static_cast<double>(v) + 1.0) <
      -745.0)
    return 0.0;
  if (v <= 30) return bessel_series(v, t);
  return bessel_miller(v, t);
}

GridFunction bessel_gaussian(const MeshSpec& mesh, double t, bool centered) {
  require(t > 0.0, "baseline: width parameter must be > 0, got " + std::to_string(t));
  require(mesh.n <= 26, "baseline: dense initial condition limited to n <= 26");
  const std::uint64_t m = mesh.points_per_axis();
  const std::int64_t offset = centered ? static_cast<std::int64_t>(m / 2) : 0;

  std::vector<double> axis(m);
  for (std::uint64_t i = 0; i < m; ++i)
    axis[i] = std::exp(-t) * bessel_i(static_cast<std::int64_t>(i) - offset, t);

  GridFunction u0(mesh.size());
  for (std::uint64_t k = 0; k < mesh.size(); ++k) {
    double p = 1.0;
    for (int a = 0; a < mesh.d; ++a) p *= axis[axis_digit(mesh, k, a)];
    u0[static_cast<Eigen::Index>(k)] = p;
  }
  return u0;
}

BaselineRun euler_run(const OperatorSpec& op, const MeshSpec& mesh, const SourceFn* src,
                      const GridFunction& u0, double dt, std::int64_t steps, std::int64_t stride,
                      double t0) {
  require(dt > 0.0 && steps >= 0, "baseline: dt must be > 0 and steps >= 0");
  require(u0.size() == static_cast<Eigen::Index>(mesh.size()), "baseline: state size mismatch");

  double trace = 0.0;
  for (int i = 0; i < mesh.d; ++i) trace += op.coeff(i, i);
  const double cfl = dt * 2.0 * trace / (mesh.dx() * mesh.dx());
  if (cfl > 1.0)
    std::fprintf(stderr, "warning: explicit step ratio dt*2*tr(A)/dx^2 = %.3g exceeds 1\n", cfl);

  const bool pinned = src != nullptr && src->pins_faces;
  const CompiledOperator compiled = compile(op, mesh, pinned);

  BaselineRun run;
  GridFunction u = u0;
  GridFunction lu(u.size());

  // Empty support means the source is defined at every grid point.
  std::vector<std::uint64_t> f_points;
  if (src != nullptr) {
    if (src->support.empty()) {
      f_points.resize(mesh.size());
      for (std::uint64_t k = 0; k < mesh.size(); ++k) f_points[k] = k;
    } else {
      f_points = src->support;
    }
  }

  std::vector<std::uint64_t> faces;
  if (pinned) {
    for (std::uint64_t k : f_points)
      if (on_face(mesh, k)) faces.push_back(k);
    for (std::uint64_t k : faces)
      u[static_cast<Eigen::Index>(k)] = src->face_value(t0, k);
  }

  // Blow-up scale: the started state together with the forcing magnitude, so
  // runs that grow from a zero state are judged against the source, not 0.
  double scale = u.cwiseAbs().maxCoeff();
  for (std::uint64_t k : f_points) scale = std::max(scale, std::abs(src->value(t0, k)));
  const double blowup = 1e6 * std::max(scale, 1e-300);

  for (std::int64_t s = 0; s < steps; ++s) {
    const double t = t0 + static_cast<double>(s) * dt;
    compiled.apply(u, lu);
    for (std::uint64_t k : f_points)
      lu[static_cast<Eigen::Index>(k)] += src->value(t, k);
    u += dt * lu;
    if (pinned) {
      const double tn = t0 + static_cast<double>(s + 1) * dt;
      for (std::uint64_t k : faces)
        u[static_cast<Eigen::Index>(k)] = src->face_value(tn, k);
    }
    const double inf = u.cwiseAbs().maxCoeff();
    if (!std::isfinite(inf) || inf > blowup) {
      run.aborted = true;
      run.abort_reason = "state norm grew past 1e6 of the initial value at step " +
                         std::to_string(s + 1) + "; explicit step ratio " + std::to_string(cfl);
      run.final_state = u;
      run.final_time = t0 + static_cast<double>(s + 1) * dt;
      return run;
    }
    if (stride > 0 && (s + 1) % stride == 0) {
      run.times.push_back(t0 + static_cast<double>(s + 1) * dt);
      run.snapshots.push_back(u);
    }
  }
  run.final_state = u;
  run.final_time = t0 + static_cast<double>(steps) * dt;
  return run;
}

}  // namespace meshvmc
