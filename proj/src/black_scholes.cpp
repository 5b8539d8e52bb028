// SPDX-License-Identifier: MIT
#include "meshvmc/black_scholes.hpp"

#include <cmath>
#include <string>

#include "meshvmc/common.hpp"
#include "meshvmc/rng.hpp"

namespace meshvmc {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// y_i = ln(s_i)/sigma_i evaluated on the grid.
double drift_phase(const OptionSpec& spec, const ReductionCoeffs& coeffs,
                   const Eigen::VectorXd& y) {
  double acc = 0.0;
  for (int i = 0; i < spec.d; ++i) acc += coeffs.a[i] * spec.sigma[i] * y[i];
  return acc;
}

Eigen::VectorXd spot_from_y(const OptionSpec& spec, const Eigen::VectorXd& y) {
  Eigen::VectorXd s(spec.d);
  for (int i = 0; i < spec.d; ++i) s[i] = std::exp(spec.sigma[i] * y[i]);
  return s;
}

}  // namespace

OptionSpec make_option(OptionKind kind, int d, double strike, double rate,
                       const Eigen::VectorXd& sigma, const Eigen::MatrixXd& rho, double expiry,
                       const Eigen::VectorXd& weights) {
  OptionSpec spec;
  spec.kind = kind;
  spec.d = d;
  spec.strike = strike;
  spec.rate = rate;
  spec.sigma = sigma;
  spec.rho = rho;
  spec.expiry = expiry;
  spec.weights = weights.size() > 0 ? weights : Eigen::VectorXd::Constant(d, 1.0 / d);

  require(d >= 1, "option: d must be >= 1");
  require(strike > 0.0, "option: strike must be > 0");
  require(expiry > 0.0, "option: expiry must be > 0");
  require(sigma.size() == d, "option: sigma must have d entries");
  for (int i = 0; i < d; ++i) require(sigma[i] > 0.0, "option: sigma entries must be > 0");
  require(rho.rows() == d && rho.cols() == d, "option: rho must be d x d");
  for (int i = 0; i < d; ++i) {
    require(std::abs(rho(i, i) - 1.0) <= 1e-12, "option: rho diagonal must be 1");
    for (int j = 0; j < d; ++j)
      require(std::abs(rho(i, j) - rho(j, i)) <= 1e-12, "option: rho must be symmetric");
  }
  require(spec.weights.size() == d, "option: weights must have d entries");
  if (kind == OptionKind::call_1d) require(d == 1, "option: 1d call requires d = 1");
  if (kind == OptionKind::spread_put) require(d == 2, "option: spread put requires d = 2");
  return spec;
}

double payoff(const OptionSpec& spec, const Eigen::VectorXd& s) {
  require(s.size() == spec.d, "payoff: price vector has wrong dimension");
  switch (spec.kind) {
    case OptionKind::call_1d:
      return std::max(s[0] - spec.strike, 0.0);
    case OptionKind::basket_call:
      return std::max(spec.weights.dot(s) - spec.strike, 0.0);
    case OptionKind::basket_put:
      return std::max(spec.strike - spec.weights.dot(s), 0.0);
    case OptionKind::rainbow_max_call:
      return std::max(s.maxCoeff() - spec.strike, 0.0);
    case OptionKind::spread_put:
      return std::max(spec.strike - (s[0] - s[1]), 0.0);
  }
  throw validation_error("payoff: unknown option kind");
}

ReductionCoeffs reduction_coeffs(const OptionSpec& spec) {
  const int d = spec.d;
  Eigen::MatrixXd bsig(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) bsig(i, j) = spec.sigma[i] * spec.sigma[j] * spec.rho(i, j);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(bsig);
  require(eig.info() == Eigen::Success, "reduction: eigendecomposition failed");
  const double lmax = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double lmin = eig.eigenvalues().cwiseAbs().minCoeff();
  if (lmin <= 1e-12 * lmax)
    throw validation_error("reduction: scaled correlation is singular, condition number above " +
                           std::to_string(lmax / std::max(lmin, 1e-300)));

  Eigen::VectorXd rhs(d);
  for (int i = 0; i < d; ++i) rhs[i] = 0.5 * spec.sigma[i] * spec.sigma[i] - spec.rate;

  ReductionCoeffs out;
  out.a = eig.eigenvectors() *
          eig.eigenvalues().cwiseInverse().asDiagonal() * (eig.eigenvectors().transpose() * rhs);

  double b = -spec.rate;
  for (int i = 0; i < d; ++i) {
    b += out.a[i] * (spec.rate - 0.5 * spec.sigma[i] * spec.sigma[i]);
    b += 0.5 * out.a[i] * out.a[i] * spec.sigma[i] * spec.sigma[i];
    for (int j = 0; j < d; ++j)
      if (j != i) b += 0.5 * spec.rho(i, j) * spec.sigma[i] * spec.sigma[j] * out.a[i] * out.a[j];
  }
  out.b = b;
  return out;
}

HeatForm to_heat(const OptionSpec& spec, int n) {
  HeatForm form;
  form.coeffs = reduction_coeffs(spec);

  const int d = spec.d;
  require(n % d == 0, "to_heat: n must be divisible by d");
  const std::uint64_t m = std::uint64_t{1} << (n / d);
  const double span = 6.0 * std::sqrt(spec.expiry);
  const double h = span / static_cast<double>(m + 1);

  std::vector<std::array<double, 2>> bounds(d);
  for (int i = 0; i < d; ++i) {
    const double lo = std::log(spec.strike) / spec.sigma[i] - 3.0 * std::sqrt(spec.expiry);
    bounds[i] = {lo + h, lo + h + static_cast<double>(m) * h};
  }
  form.mesh = make_mesh(d, n, bounds);

  form.op = make_operator(0.5 * spec.rho, BoundaryKind::dirichlet, form.mesh);

  const OptionSpec spec_copy = spec;
  const ReductionCoeffs coeffs = form.coeffs;
  const MeshSpec mesh = form.mesh;
  auto g = [spec_copy, coeffs, mesh](double tau, std::uint64_t k) {
    const Eigen::VectorXd y = to_coords(mesh, k);
    const double base = payoff(spec_copy, spot_from_y(spec_copy, y)) *
                        std::exp(-drift_phase(spec_copy, coeffs, y));
    return base * std::exp(-(spec_copy.rate + coeffs.b) * tau);
  };
  form.src = dirichlet_source(form.op, form.mesh, g);

  form.u0.resize(static_cast<Eigen::Index>(form.mesh.size()));
  for (std::uint64_t k = 0; k < form.mesh.size(); ++k)
    form.u0[static_cast<Eigen::Index>(k)] = g(0.0, k);
  return form;
}

GridFunction invert_transform(const GridFunction& u_final, const ReductionCoeffs& coeffs,
                              const OptionSpec& spec, const MeshSpec& mesh) {
  require(u_final.size() == static_cast<Eigen::Index>(mesh.size()),
          "invert_transform: size mismatch");
  GridFunction v(u_final.size());
  for (std::uint64_t k = 0; k < mesh.size(); ++k) {
    const Eigen::VectorXd y = to_coords(mesh, k);
    v[static_cast<Eigen::Index>(k)] =
        u_final[static_cast<Eigen::Index>(k)] *
        std::exp(drift_phase(spec, coeffs, y) + coeffs.b * spec.expiry);
  }
  return v;
}

GridFunction forward_transform(const GridFunction& v, const ReductionCoeffs& coeffs,
                               const OptionSpec& spec, const MeshSpec& mesh) {
  require(v.size() == static_cast<Eigen::Index>(mesh.size()), "forward_transform: size mismatch");
  GridFunction u(v.size());
  for (std::uint64_t k = 0; k < mesh.size(); ++k) {
    const Eigen::VectorXd y = to_coords(mesh, k);
    u[static_cast<Eigen::Index>(k)] =
        v[static_cast<Eigen::Index>(k)] *
        std::exp(-drift_phase(spec, coeffs, y) - coeffs.b * spec.expiry);
  }
  return u;
}

double interp_at(const GridFunction& values, const MeshSpec& mesh, const Eigen::VectorXd& y0) {
  require(values.size() == static_cast<Eigen::Index>(mesh.size()), "interp: size mismatch");
  require(y0.size() == mesh.d, "interp: point has wrong dimension");
  const std::uint64_t m = mesh.points_per_axis();
  require(m >= 2, "interp: need at least two points per axis");

  std::vector<std::uint64_t> lo(static_cast<std::size_t>(mesh.d));
  std::vector<double> frac(static_cast<std::size_t>(mesh.d));
  for (int a = 0; a < mesh.d; ++a) {
    const double lo_coord = mesh.bounds[static_cast<std::size_t>(a)][0];
    const double u = (y0[a] - lo_coord) / mesh.dx();
    require(u >= -1e-9 && u <= static_cast<double>(m - 1) + 1e-9,
            "interp: point outside the grid hull");
    double cell = std::floor(u);
    if (cell < 0.0) cell = 0.0;
    if (cell > static_cast<double>(m - 2)) cell = static_cast<double>(m - 2);
    lo[static_cast<std::size_t>(a)] = static_cast<std::uint64_t>(cell);
    frac[static_cast<std::size_t>(a)] = u - cell;
  }

  double acc = 0.0;
  MultiIndex corner(static_cast<std::size_t>(mesh.d));
  for (std::uint64_t c = 0; c < (std::uint64_t{1} << mesh.d); ++c) {
    double w = 1.0;
    for (int a = 0; a < mesh.d; ++a) {
      const int hi = bit_of(c, a);
      corner[static_cast<std::size_t>(a)] = lo[static_cast<std::size_t>(a)] + (hi ? 1 : 0);
      w *= hi ? frac[static_cast<std::size_t>(a)] : 1.0 - frac[static_cast<std::size_t>(a)];
    }
    acc += w * values[static_cast<Eigen::Index>(from_multi(mesh, corner))];
  }
  return acc;
}

double price_at_spot(const GridFunction& v0, const MeshSpec& mesh, const OptionSpec& spec,
                     const Eigen::VectorXd& s0) {
  require(s0.size() == spec.d, "price_at_spot: spot has wrong dimension");
  Eigen::VectorXd y0(spec.d);
  for (int i = 0; i < spec.d; ++i) {
    require(s0[i] > 0.0, "price_at_spot: spot must be > 0");
    y0[i] = std::log(s0[i]) / spec.sigma[i];
  }
  return interp_at(v0, mesh, y0);
}

double analytic_call(const OptionSpec& spec, double t, double s) {
  require(spec.kind == OptionKind::call_1d && spec.d == 1, "analytic_call: needs the 1d call");
  require(s > 0.0, "analytic_call: spot must be > 0");
  const double tau = spec.expiry - t;
  if (tau <= 0.0) return std::max(s - spec.strike, 0.0);
  const double sig = spec.sigma[0];
  const double sr = sig * std::sqrt(tau);
  const double dp = (std::log(s / spec.strike) + (spec.rate + 0.5 * sig * sig) * tau) / sr;
  const double dm = dp - sr;
  return norm_cdf(dp) * s - norm_cdf(dm) * spec.strike * std::exp(-spec.rate * tau);
}

Eigen::MatrixXd correlation_factor(const Eigen::MatrixXd& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rho);
  require(eig.info() == Eigen::Success, "correlation_factor: eigendecomposition failed");
  const double lmax = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  Eigen::VectorXd lam = eig.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    require(lam[i] >= -1e-12 * std::max(1.0, lmax), "correlation_factor: rho is not PSD");
    lam[i] = std::sqrt(std::max(lam[i], 0.0));
  }
  return eig.eigenvectors() * lam.asDiagonal();
}

McResult mc_expect(const OptionSpec& spec, const Eigen::VectorXd& s0, std::int64_t paths,
                   std::uint64_t seed, const std::function<double(const Eigen::VectorXd&)>& g) {
  require(s0.size() == spec.d, "mc: spot has wrong dimension");
  for (int i = 0; i < spec.d; ++i) require(s0[i] > 0.0, "mc: spot must be > 0");
  require(paths >= 1000, "mc: need at least 1000 paths");

  const Eigen::MatrixXd f = correlation_factor(spec.rho);
  const double disc = std::exp(-spec.rate * spec.expiry);
  const double rt = std::sqrt(spec.expiry);
  const std::uint64_t key = derive_stream(seed, "mc-paths");

  Eigen::VectorXd z(spec.d), st(spec.d);
  double sum = 0.0, sumsq = 0.0;
  for (std::int64_t p = 0; p < paths; ++p) {
    for (int j = 0; j < spec.d; ++j)
      z[j] = draw_normal(key, static_cast<std::uint64_t>(p) * spec.d + j);
    const Eigen::VectorXd zc = f * z;
    for (int j = 0; j < spec.d; ++j) {
      const double sig = spec.sigma[j];
      st[j] = s0[j] * std::exp((spec.rate - 0.5 * sig * sig) * spec.expiry + sig * rt * zc[j]);
    }
    const double val = disc * g(st);
    sum += val;
    sumsq += val * val;
  }
  const double np = static_cast<double>(paths);
  McResult out;
  out.value = sum / np;
  const double var = std::max(0.0, (sumsq - sum * sum / np) / (np - 1.0));
  out.std_error = std::sqrt(var / np);
  return out;
}

McResult mc_price(const OptionSpec& spec, const Eigen::VectorXd& s0, std::int64_t paths,
                  std::uint64_t seed) {
  return mc_expect(spec, s0, paths, seed,
                   [&spec](const Eigen::VectorXd& st) { return payoff(spec, st); });
}

}  // namespace meshvmc
