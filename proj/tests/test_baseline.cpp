// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "meshvmc/baseline.hpp"
#include "meshvmc/common.hpp"
#include "meshvmc/mesh.hpp"
#include "meshvmc/stencil.hpp"

using namespace meshvmc;

TEST_CASE("scaled Bessel values against series references") {
  CHECK(bessel_i(0, 1.0) * std::exp(-1.0) ==
        doctest::Approx(0.4657596075936404).epsilon(1e-13));
  CHECK(bessel_i(2, 3.0) * std::exp(-3.0) ==
        doctest::Approx(0.11178254529695816).epsilon(1e-13));
  CHECK(bessel_i(-2, 3.0) == doctest::Approx(bessel_i(2, 3.0)).epsilon(1e-14));
  CHECK(bessel_i(0, 0.0) == 1.0);
  CHECK(bessel_i(3, 0.0) == 0.0);
}

TEST_CASE("discrete Gaussian mass and symmetry") {
  const MeshSpec mesh = make_lattice_mesh(1, 4);  // 16 points
  const GridFunction u = bessel_gaussian(mesh, 3.0, true);

  // The infinite-lattice mass is 1; the 16-point window keeps nearly all of
  // it at width 3.
  CHECK(u.minCoeff() >= 0.0);
  CHECK(u.sum() <= 1.0 + 1e-12);
  CHECK(u.sum() >= 0.999);

  // Centered: reflection about the mid-grid peak.
  for (int j = 1; j <= 7; ++j)
    CHECK(u[8 + j] == doctest::Approx(u[8 - j]).epsilon(1e-14));
  CHECK(u[8] == doctest::Approx(u.maxCoeff()).epsilon(1e-14));

  // Product structure across axes.
  const MeshSpec mesh2 = make_lattice_mesh(2, 8);
  const GridFunction u2 = bessel_gaussian(mesh2, 3.0, true);
  const GridFunction u1 = bessel_gaussian(make_lattice_mesh(1, 4), 3.0, true);
  for (std::uint64_t k = 0; k < mesh2.size(); ++k) {
    const double want = u1[static_cast<Eigen::Index>(axis_digit(mesh2, k, 0))] *
                        u1[static_cast<Eigen::Index>(axis_digit(mesh2, k, 1))];
    CHECK(u2[static_cast<Eigen::Index>(k)] == doctest::Approx(want).epsilon(1e-13));
  }

  CHECK_THROWS_AS(bessel_gaussian(mesh, 0.0, true), validation_error);
  CHECK_THROWS_AS(bessel_gaussian(mesh, -1.0, true), validation_error);
}

TEST_CASE("constant states are stationary under wraparound") {
  const MeshSpec mesh = make_lattice_mesh(2, 8);
  const OperatorSpec op = make_diffusion(0.1, BoundaryKind::periodic, mesh);
  const GridFunction u0 = GridFunction::Constant(static_cast<Eigen::Index>(mesh.size()), 0.7);
  const BaselineRun run = euler_run(op, mesh, nullptr, u0, 0.5, 200, 0);
  REQUIRE_FALSE(run.aborted);
  CHECK((run.final_state.array() - 0.7).abs().maxCoeff() < 1e-11);
}

TEST_CASE("wraparound march conserves total mass over 20k steps") {
  const MeshSpec mesh = make_lattice_mesh(1, 8);
  const OperatorSpec op = make_diffusion(0.1, BoundaryKind::periodic, mesh);
  const GridFunction u0 = bessel_gaussian(mesh, 3.0, true);
  const double mass0 = u0.sum();
  const BaselineRun run = euler_run(op, mesh, nullptr, u0, 0.5, 20000, 0);
  REQUIRE_FALSE(run.aborted);
  CHECK(std::abs(run.final_state.sum() - mass0) <= 1e-10 * std::abs(mass0));
}

TEST_CASE("homogeneous absorbing march decays monotonically") {
  const MeshSpec mesh = make_lattice_mesh(1, 6);
  const OperatorSpec op = make_diffusion(0.1, BoundaryKind::dirichlet, mesh);
  const GridFunction u0 = bessel_gaussian(mesh, 5.0, true);
  const BaselineRun run = euler_run(op, mesh, nullptr, u0, 1.0, 4000, 50);
  REQUIRE_FALSE(run.aborted);
  double prev = u0.norm();
  for (const GridFunction& snap : run.snapshots) {
    const double cur = snap.norm();
    CHECK(cur <= prev + 1e-14);
    prev = cur;
  }
  CHECK(run.final_state.norm() < 0.5 * u0.norm());
}

TEST_CASE("snapshot clock follows the record stride") {
  const MeshSpec mesh = make_lattice_mesh(1, 4);
  const OperatorSpec op = make_diffusion(0.1, BoundaryKind::dirichlet, mesh);
  const GridFunction u0 = bessel_gaussian(mesh, 3.0, true);
  const BaselineRun run = euler_run(op, mesh, nullptr, u0, 5e-5, 20000, 2000);
  REQUIRE_FALSE(run.aborted);
  REQUIRE(run.times.size() == 10);
  for (std::size_t i = 0; i < run.times.size(); ++i)
    CHECK(run.times[i] == doctest::Approx(5e-5 * 2000.0 * static_cast<double>(i + 1))
                              .epsilon(1e-12));
  CHECK(run.final_time == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((run.snapshots.back() - run.final_state).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("march agrees with a hand-rolled dense march") {
  const MeshSpec mesh = make_lattice_mesh(2, 8);
  Eigen::MatrixXd a(2, 2);
  a << 0.5, 0.2, 0.2, 0.5;
  const OperatorSpec op = make_operator(a, BoundaryKind::dirichlet, mesh);
  const GridFunction u0 = bessel_gaussian(mesh, 2.0, true);

  GridFunction v = u0;
  StencilRow r;
  const double dt = 0.05;
  for (int s = 0; s < 50; ++s) {
    GridFunction lv = GridFunction::Zero(v.size());
    for (std::uint64_t k = 0; k < mesh.size(); ++k) {
      problem_row(op, mesh, false, k, r);
      double acc = 0.0;
      for (const StencilEntry& e : r) acc += e.w * v[static_cast<Eigen::Index>(e.col)];
      lv[static_cast<Eigen::Index>(k)] = acc;
    }
    v += dt * lv;
  }

  const BaselineRun run = euler_run(op, mesh, nullptr, u0, dt, 50, 0);
  REQUIRE_FALSE(run.aborted);
  CHECK((run.final_state - v).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("refinement toward the continuum eigenmode is second order") {
  // u_t = u_xx on (0,1), absorbing ends, u0 = sin(pi x):
  // u(T, x) = exp(-pi^2 T) sin(pi x). Grid points sit strictly inside (0,1)
  // so the dropped off-grid columns are exactly the boundary.
  const double T = 0.25;
  auto run_error = [T](int n) {
    const auto m = static_cast<double>(std::uint64_t{1} << n);
    const double h = 1.0 / (m + 1.0);
    const MeshSpec mesh = make_mesh(1, n, {{h, 1.0}});  // dx = (1 - h)/m = h
    const OperatorSpec op = make_diffusion(1.0, BoundaryKind::dirichlet, mesh);
    GridFunction u0(static_cast<Eigen::Index>(mesh.size()));
    for (std::uint64_t k = 0; k < mesh.size(); ++k)
      u0[static_cast<Eigen::Index>(k)] = std::sin(M_PI * to_coords(mesh, k)[0]);
    const double dt0 = 0.2 * h * h;
    const auto steps = static_cast<std::int64_t>(std::ceil(T / dt0));
    const BaselineRun run = euler_run(op, mesh, nullptr, u0, T / static_cast<double>(steps),
                                      steps, 0);
    REQUIRE_FALSE(run.aborted);
    double err = 0.0;
    for (std::uint64_t k = 0; k < mesh.size(); ++k) {
      const double want = std::exp(-M_PI * M_PI * T) * std::sin(M_PI * to_coords(mesh, k)[0]);
      err = std::max(err, std::abs(run.final_state[static_cast<Eigen::Index>(k)] - want));
    }
    return err;
  };

  const double e4 = run_error(4);
  const double e5 = run_error(5);
  const double e6 = run_error(6);
  CHECK(e4 / e5 >= 3.0);
  CHECK(e5 / e6 >= 3.0);
}

TEST_CASE("instability aborts with a step-ratio diagnostic") {
  const MeshSpec mesh = make_lattice_mesh(1, 6);
  const OperatorSpec op = make_diffusion(0.1, BoundaryKind::dirichlet, mesh);
  const GridFunction u0 = bessel_gaussian(mesh, 3.0, true);
  // 4x past the explicit stability bound.
  const BaselineRun run = euler_run(op, mesh, nullptr, u0, 20.0, 2000, 0);
  CHECK(run.aborted);
  CHECK(run.abort_reason.find("step ratio") != std::string::npos);
}
