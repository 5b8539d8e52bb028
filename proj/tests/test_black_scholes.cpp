// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "meshvmc/baseline.hpp"
#include "meshvmc/black_scholes.hpp"
#include "meshvmc/common.hpp"
#include "meshvmc/mesh.hpp"

using namespace meshvmc;

namespace {

Eigen::VectorXd vec1(double a) {
  Eigen::VectorXd v(1);
  v << a;
  return v;
}

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

OptionSpec std_call(double sigma = 0.3) {
  return make_option(OptionKind::call_1d, 1, 1.25, 0.03, vec1(sigma),
                     Eigen::MatrixXd::Identity(1, 1), 1.0);
}

Eigen::MatrixXd corr2(double rho) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
  m(0, 1) = m(1, 0) = rho;
  return m;
}

}  // namespace

TEST_CASE("payoff closed forms") {
  const OptionSpec call = std_call();
  CHECK(payoff(call, vec1(1.25)) == 0.0);
  CHECK(payoff(call, vec1(1.45)) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(payoff(call, vec1(0.5)) == 0.0);

  const OptionSpec basket = make_option(OptionKind::basket_call, 2, 1.25, 0.03, vec2(0.3, 0.2),
                                        corr2(0.1), 1.0);
  CHECK(basket.weights[0] == 0.5);  // defaulted to 1/d
  CHECK(payoff(basket, vec2(2.0, 1.5)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(payoff(basket, vec2(1.0, 1.0)) == 0.0);

  const OptionSpec bput = make_option(OptionKind::basket_put, 2, 1.25, 0.03, vec2(0.3, 0.2),
                                      corr2(0.1), 1.0);
  CHECK(payoff(bput, vec2(0.5, 0.5)) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(payoff(bput, vec2(2.0, 2.0)) == 0.0);

  const OptionSpec rainbow = make_option(OptionKind::rainbow_max_call, 2, 1.25, 0.03,
                                         vec2(0.3, 0.2), corr2(0.1), 1.0);
  CHECK(payoff(rainbow, vec2(1.0, 1.5)) == doctest::Approx(0.25).epsilon(1e-14));

  const OptionSpec spread = make_option(OptionKind::spread_put, 2, 0.1, 0.03, vec2(0.3, 0.2),
                                        corr2(0.1), 1.0);
  CHECK(payoff(spread, vec2(1.2, 1.3)) == doctest::Approx(0.2).epsilon(1e-14));

  CHECK_THROWS_AS(payoff(call, vec2(1.0, 1.0)), validation_error);
}

TEST_CASE("option validation") {
  const Eigen::MatrixXd id1 = Eigen::MatrixXd::Identity(1, 1);
  CHECK_THROWS_AS(make_option(OptionKind::call_1d, 0, 1.25, 0.03, vec1(0.3), id1, 1.0),
                  validation_error);
  CHECK_THROWS_AS(make_option(OptionKind::call_1d, 1, 0.0, 0.03, vec1(0.3), id1, 1.0),
                  validation_error);
  CHECK_THROWS_AS(make_option(OptionKind::call_1d, 1, 1.25, 0.03, vec1(0.3), id1, 0.0),
                  validation_error);
  CHECK_THROWS_AS(make_option(OptionKind::call_1d, 1, 1.25, 0.03, vec2(0.3, 0.2), id1, 1.0),
                  validation_error);
  CHECK_THROWS_AS(make_option(OptionKind::call_1d, 1, 1.25, 0.03, vec1(0.0), id1, 1.0),
                  validation_error);
  CHECK_THROWS_AS(make_option(OptionKind::call_1d, 1, 1.25, 0.03, vec1(0.3),
                              Eigen::MatrixXd::Identity(2, 2), 1.0),
                  validation_error);

  Eigen::MatrixXd bad_diag = corr2(0.1);
  bad_diag(0, 0) = 0.9;
  CHECK_THROWS_AS(make_option(OptionKind::basket_call, 2, 1.25, 0.03, vec2(0.3, 0.2), bad_diag,
                              1.0),
                  validation_error);
  Eigen::MatrixXd asym = corr2(0.1);
  asym(0, 1) = 0.2;
  CHECK_THROWS_AS(make_option(OptionKind::basket_call, 2, 1.25, 0.03, vec2(0.3, 0.2), asym, 1.0),
                  validation_error);
  CHECK_THROWS_AS(make_option(OptionKind::basket_call, 2, 1.25, 0.03, vec2(0.3, 0.2), corr2(0.1),
                              1.0, vec1(1.0)),
                  validation_error);
  CHECK_THROWS_AS(make_option(OptionKind::call_1d, 2, 1.25, 0.03, vec2(0.3, 0.2), corr2(0.1), 1.0),
                  validation_error);
  CHECK_THROWS_AS(make_option(OptionKind::spread_put, 1, 1.25, 0.03, vec1(0.3), id1, 1.0),
                  validation_error);
}

TEST_CASE("drift-removal coefficients") {
  // sigma 0.3, r 0.03: a = 1/2 - r/sigma^2 = 1/6 and the constant works out
  // to -0.03125.
  {
    const ReductionCoeffs c = reduction_coeffs(std_call());
    CHECK(c.a[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(c.b == doctest::Approx(-0.03125).epsilon(1e-13));
  }

  // r = sigma^2 / 2 removes the drift with no tilt at all.
  {
    const OptionSpec spec = make_option(OptionKind::call_1d, 1, 1.25, 0.045, vec1(0.3),
                                        Eigen::MatrixXd::Identity(1, 1), 1.0);
    const ReductionCoeffs c = reduction_coeffs(spec);
    CHECK(std::abs(c.a[0]) <= 1e-15);
    CHECK(c.b == doctest::Approx(-0.045).epsilon(1e-14));
  }

  // Uncorrelated assets decouple into per-axis 1d coefficients.
  {
    const OptionSpec spec = make_option(OptionKind::basket_call, 2, 1.25, 0.03, vec2(0.3, 0.2),
                                        corr2(0.0), 1.0);
    const ReductionCoeffs c = reduction_coeffs(spec);
    CHECK(c.a[0] == doctest::Approx(0.5 - 0.03 / 0.09).epsilon(1e-13));
    CHECK(c.a[1] == doctest::Approx(0.5 - 0.03 / 0.04).epsilon(1e-13));
  }

  // The tilt solves (sigma_i sigma_j rho_ij) a = sigma_i^2/2 - r and the
  // constant matches an independent evaluation of the same quadratic.
  {
    Eigen::VectorXd sigma(3);
    sigma << 0.2, 0.35, 0.15;
    Eigen::MatrixXd rho = Eigen::MatrixXd::Identity(3, 3);
    rho(0, 1) = rho(1, 0) = 0.3;
    rho(0, 2) = rho(2, 0) = -0.2;
    rho(1, 2) = rho(2, 1) = 0.45;
    const OptionSpec spec = make_option(OptionKind::basket_call, 3, 1.0, 0.05, sigma, rho, 2.0);
    const ReductionCoeffs c = reduction_coeffs(spec);

    Eigen::MatrixXd bsig(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) bsig(i, j) = sigma[i] * sigma[j] * rho(i, j);
    Eigen::VectorXd rhs(3);
    for (int i = 0; i < 3; ++i) rhs[i] = 0.5 * sigma[i] * sigma[i] - spec.rate;
    CHECK((bsig * c.a - rhs).cwiseAbs().maxCoeff() <= 1e-12);

    double b = -spec.rate;
    for (int i = 0; i < 3; ++i) b += c.a[i] * (spec.rate - 0.5 * sigma[i] * sigma[i]);
    b += 0.5 * c.a.dot(bsig * c.a);
    CHECK(c.b == doctest::Approx(b).epsilon(1e-12));
  }

  // Perfectly correlated twins make the scaled correlation singular.
  {
    const OptionSpec spec = make_option(OptionKind::basket_call, 2, 1.25, 0.03, vec2(0.3, 0.3),
                                        corr2(1.0), 1.0);
    CHECK_THROWS_AS(reduction_coeffs(spec), validation_error);
  }
}

TEST_CASE("heat-form geometry") {
  const OptionSpec spec = std_call();
  const HeatForm form = to_heat(spec, 10);

  CHECK(form.mesh.d == 1);
  CHECK(form.mesh.n == 10);
  const double h = 6.0 / 1025.0;
  CHECK(form.mesh.dx() == doctest::Approx(h).epsilon(1e-14));
  const double lo = std::log(1.25) / 0.3 - 3.0;
  CHECK(to_coords(form.mesh, 0)[0] == doctest::Approx(lo + h).epsilon(1e-13));
  CHECK(to_coords(form.mesh, 1023)[0] == doctest::Approx(lo + 1024.0 * h).epsilon(1e-13));

  CHECK(form.op.bc == BoundaryKind::dirichlet);
  CHECK(form.op.coeff(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(form.src.pins_faces);

  // Initial data is the payoff under the substitution, with no discounting.
  REQUIRE(form.u0.size() == 1024);
  for (std::uint64_t k : {std::uint64_t{0}, std::uint64_t{700}, std::uint64_t{1023}}) {
    const double y = to_coords(form.mesh, k)[0];
    const double s = std::exp(0.3 * y);
    const double expected =
        std::max(s - 1.25, 0.0) * std::exp(-form.coeffs.a[0] * 0.3 * y);
    CHECK(form.u0[static_cast<Eigen::Index>(k)] == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(form.u0[0] == 0.0);  // far out of the money at the lower face

  // Face data later in the run also carries the discount factor.
  const double tau = 0.4;
  const double y_hi = to_coords(form.mesh, 1023)[0];
  const double s_hi = std::exp(0.3 * y_hi);
  const double expected_face = std::max(s_hi - 1.25, 0.0) *
                               std::exp(-form.coeffs.a[0] * 0.3 * y_hi) *
                               std::exp(-(0.03 + form.coeffs.b) * tau);
  CHECK(form.src.face_value(tau, 1023) == doctest::Approx(expected_face).epsilon(1e-12));

  CHECK_THROWS_AS(to_heat(make_option(OptionKind::basket_call, 2, 1.25, 0.03, vec2(0.3, 0.2),
                                      corr2(0.1), 1.0),
                          9),
                  validation_error);
}

TEST_CASE("substitution round trip is the identity") {
  const OptionSpec spec = make_option(OptionKind::basket_call, 2, 1.25, 0.03, vec2(0.3, 0.2),
                                      corr2(0.1), 1.0);
  const HeatForm form = to_heat(spec, 8);
  GridFunction v(256);
  for (int i = 0; i < 256; ++i) v[i] = 0.3 + std::sin(0.11 * i);

  const GridFunction u = forward_transform(v, form.coeffs, spec, form.mesh);
  const GridFunction back = invert_transform(u, form.coeffs, spec, form.mesh);
  CHECK((back - v).cwiseAbs().maxCoeff() <= 1e-12 * v.cwiseAbs().maxCoeff());

  GridFunction wrong(255);
  CHECK_THROWS_AS(forward_transform(wrong, form.coeffs, spec, form.mesh), validation_error);
  CHECK_THROWS_AS(invert_transform(wrong, form.coeffs, spec, form.mesh), validation_error);
}

TEST_CASE("closed-form call value") {
  const OptionSpec spec = std_call();
  // At the money: d+ = 0.25, d- = -0.05.
  CHECK(analytic_call(spec, 0.0, 1.25) ==
        doctest::Approx(0.16604135497351147).epsilon(1e-14));

  // At expiry the value is the payoff.
  CHECK(analytic_call(spec, 1.0, 2.0) == 0.75);
  CHECK(analytic_call(spec, 1.5, 1.0) == 0.0);

  // Vanishing volatility: discounted forward intrinsic value.
  const OptionSpec tiny = std_call(1e-8);
  CHECK(analytic_call(tiny, 0.0, 2.0) ==
        doctest::Approx(2.0 - 1.25 * std::exp(-0.03)).epsilon(1e-10));
  CHECK(analytic_call(tiny, 0.0, 0.5) <= 1e-12);

  // Deep out of the money decays to zero.
  CHECK(analytic_call(spec, 0.0, 1e-6) <= 1e-12);
  CHECK_THROWS_AS(analytic_call(spec, 0.0, 0.0), validation_error);

  // Monotone in spot, strike, volatility, and expiry.
  double prev = 0.0;
  for (double s = 0.5; s <= 2.0; s += 0.1) {
    const double p = analytic_call(spec, 0.0, s);
    CHECK(p >= prev);
    prev = p;
  }
  for (double k = 0.8; k <= 1.6; k += 0.2) {
    const double lower = analytic_call(make_option(OptionKind::call_1d, 1, k + 0.1, 0.03,
                                                   vec1(0.3), Eigen::MatrixXd::Identity(1, 1),
                                                   1.0),
                                       0.0, 1.25);
    const double higher = analytic_call(make_option(OptionKind::call_1d, 1, k, 0.03, vec1(0.3),
                                                    Eigen::MatrixXd::Identity(1, 1), 1.0),
                                        0.0, 1.25);
    CHECK(higher >= lower);
  }
  CHECK(analytic_call(std_call(0.4), 0.0, 1.25) > analytic_call(std_call(0.2), 0.0, 1.25));
  const OptionSpec longer = make_option(OptionKind::call_1d, 1, 1.25, 0.03, vec1(0.3),
                                        Eigen::MatrixXd::Identity(1, 1), 2.0);
  CHECK(analytic_call(longer, 0.0, 1.25) > analytic_call(std_call(), 0.0, 1.25));
}

TEST_CASE("interpolation reproduces multilinear functions") {
  const MeshSpec mesh = make_mesh(2, 8, {{0.0, 1.5}, {-1.0, 0.5}});
  GridFunction vals(256);
  for (std::uint64_t k = 0; k < 256; ++k) {
    const Eigen::VectorXd y = to_coords(mesh, k);
    vals[static_cast<Eigen::Index>(k)] = 2.0 + 3.0 * y[0] - 1.5 * y[1] + 0.7 * y[0] * y[1];
  }

  const std::array<std::array<double, 2>, 3> queries = {
      {{0.31, -0.42}, {1.07, 0.35}, {0.0, -1.0}}};
  for (const auto& q : queries) {
    Eigen::VectorXd y0 = vec2(q[0], q[1]);
    const double expected = 2.0 + 3.0 * y0[0] - 1.5 * y0[1] + 0.7 * y0[0] * y0[1];
    CHECK(interp_at(vals, mesh, y0) == doctest::Approx(expected).epsilon(1e-12));
  }

  // Grid points reproduce exactly.
  for (std::uint64_t k : {std::uint64_t{0}, std::uint64_t{137}, std::uint64_t{255}})
    CHECK(interp_at(vals, mesh, to_coords(mesh, k)) ==
          doctest::Approx(vals[static_cast<Eigen::Index>(k)]).epsilon(1e-12));

  CHECK_THROWS_AS(interp_at(vals, mesh, vec2(-0.5, 0.0)), validation_error);
  CHECK_THROWS_AS(interp_at(vals, mesh, vec2(0.5, 1.5)), validation_error);
  CHECK_THROWS_AS(interp_at(vals, mesh, vec1(0.5)), validation_error);
}

TEST_CASE("monte carlo agrees with the closed form") {
  const OptionSpec spec = std_call();
  const McResult mc = mc_price(spec, vec1(1.25), 1000000, 11);
  CHECK(mc.std_error <= 1e-3);
  CHECK(mc.std_error > 0.0);
  CHECK(std::abs(mc.value - 0.16604135497351147) <= 3.5 * mc.std_error);

  // Deterministic per seed.
  const McResult again = mc_price(spec, vec1(1.25), 1000000, 11);
  CHECK(mc.value == again.value);
  CHECK(mc.std_error == again.std_error);
  const McResult other = mc_price(spec, vec1(1.25), 1000000, 12);
  CHECK(mc.value != other.value);

  CHECK_THROWS_AS(mc_price(spec, vec1(1.25), 100, 0), validation_error);
  CHECK_THROWS_AS(mc_price(spec, vec1(-1.0), 10000, 0), validation_error);
}

TEST_CASE("discounted terminal prices are martingales") {
  Eigen::VectorXd sigma(3);
  sigma << 0.2, 0.3, 0.4;
  Eigen::MatrixXd rho = Eigen::MatrixXd::Identity(3, 3);
  rho(0, 1) = rho(1, 0) = 0.4;
  rho(0, 2) = rho(2, 0) = 0.4;
  rho(1, 2) = rho(2, 1) = 0.4;
  const OptionSpec spec = make_option(OptionKind::basket_call, 3, 1.0, 0.05, sigma, rho, 1.5);
  Eigen::VectorXd s0(3);
  s0 << 1.0, 1.2, 0.9;

  for (int j = 0; j < 3; ++j) {
    const McResult mc = mc_expect(spec, s0, 200000, 31,
                                  [j](const Eigen::VectorXd& st) { return st[j]; });
    CHECK(std::abs(mc.value - s0[j]) <= 4.0 * mc.std_error);
  }
}

TEST_CASE("common random numbers preserve pathwise identities") {
  const Eigen::VectorXd sigma = vec2(0.3, 0.2);
  const Eigen::VectorXd s0 = vec2(1.3, 1.1);
  const std::int64_t paths = 50000;
  const std::uint64_t seed = 7;

  // Put-call parity holds exactly under common random numbers.
  const OptionSpec call = make_option(OptionKind::basket_call, 2, 1.25, 0.03, sigma, corr2(0.1),
                                      1.0);
  const OptionSpec put = make_option(OptionKind::basket_put, 2, 1.25, 0.03, sigma, corr2(0.1),
                                     1.0);
  const McResult c = mc_price(call, s0, paths, seed);
  const McResult p = mc_price(put, s0, paths, seed);
  const McResult fwd = mc_expect(call, s0, paths, seed, [&call](const Eigen::VectorXd& st) {
    return call.weights.dot(st) - call.strike;
  });
  CHECK(c.value - p.value == doctest::Approx(fwd.value).epsilon(1e-12));

  // Convexity and monotonicity in the strike, pathwise.
  auto with_strike = [&](double k) {
    return mc_price(make_option(OptionKind::basket_call, 2, k, 0.03, sigma, corr2(0.1), 1.0), s0,
                    paths, seed)
        .value;
  };
  const double c_lo = with_strike(1.0);
  const double c_mid = with_strike(1.25);
  const double c_hi = with_strike(1.5);
  CHECK(c_lo >= c_mid - 1e-14);
  CHECK(c_mid >= c_hi - 1e-14);
  CHECK(c_lo + c_hi - 2.0 * c_mid >= -1e-12);
}

TEST_CASE("correlation factorization") {
  Eigen::MatrixXd rho = Eigen::MatrixXd::Identity(4, 4);
  const double off[4][4] = {{1.0, 0.3, -0.1, 0.2},
                            {0.3, 1.0, 0.25, -0.15},
                            {-0.1, 0.25, 1.0, 0.4},
                            {0.2, -0.15, 0.4, 1.0}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) rho(i, j) = off[i][j];

  const Eigen::MatrixXd f = correlation_factor(rho);
  CHECK((f * f.transpose() - rho).cwiseAbs().maxCoeff() <= 1e-12);

  Eigen::MatrixXd indefinite = corr2(0.0);
  indefinite(0, 1) = indefinite(1, 0) = 1.5;  // eigenvalues 2.5 and -0.5
  CHECK_THROWS_AS(correlation_factor(indefinite), validation_error);
}

TEST_CASE("grid pricing converges to the closed form") {
  const OptionSpec spec = std_call();
  const double reference = analytic_call(spec, 0.0, 1.25);

  auto grid_price = [&](int n, std::int64_t steps) {
    const HeatForm form = to_heat(spec, n);
    const BaselineRun run = euler_run(form.op, form.mesh, &form.src, form.u0,
                                      spec.expiry / static_cast<double>(steps), steps, 0);
    REQUIRE(!run.aborted);
    const GridFunction v0 = invert_transform(run.final_state, form.coeffs, spec, form.mesh);
    return price_at_spot(v0, form.mesh, spec, vec1(1.25));
  };

  // At n = 10 the remaining error sits at the fixed-hull truncation floor,
  // well below the discretization error of the very coarse grid.
  const double err_coarse = std::abs(grid_price(6, 256) - reference);
  const double err_fine = std::abs(grid_price(10, 32768) - reference);
  CHECK(err_fine / reference <= 2e-3);
  CHECK(err_fine < err_coarse);
}
