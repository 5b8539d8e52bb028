// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "meshvmc/mesh.hpp"
#include "meshvmc/stencil.hpp"

namespace meshvmc {

enum class OptionKind { call_1d, basket_call, basket_put, rainbow_max_call, spread_put };

struct OptionSpec {
  OptionKind kind = OptionKind::call_1d;
  int d = 1;
  double strike = 1.25;
  double rate = 0.03;
  Eigen::VectorXd sigma;    // per-asset volatility
  Eigen::MatrixXd rho;      // correlation, unit diagonal
  Eigen::VectorXd weights;  // basket weights, uniform by default
  double expiry = 1.0;
};

// Validates shapes and ranges; weights default to 1/d when empty.
OptionSpec make_option(OptionKind kind, int d, double strike, double rate,
                       const Eigen::VectorXd& sigma, const Eigen::MatrixXd& rho, double expiry,
                       const Eigen::VectorXd& weights = Eigen::VectorXd());

double payoff(const OptionSpec& spec, const Eigen::VectorXd& s);

// Log-price change of variables: the drift-removal vector a and constant b
// turning the pricing PDE into a pure correlated heat equation.
struct ReductionCoeffs {
  Eigen::VectorXd a;
  double b = 0.0;
};

ReductionCoeffs reduction_coeffs(const OptionSpec& spec);

// Heat-equation form of the pricing problem on a hypercube in y = ln(s)/sigma:
// per-axis domain ln(K)/sigma_i +- 3 sqrt(T), grid of 2^(n/d) points strictly
// inside it (spacing span/(2^(n/d)+1)), diffusion rho/2, Dirichlet data from
// the discounted payoff pushed through the substitution.
struct HeatForm {
  MeshSpec mesh;
  OperatorSpec op;
  SourceFn src;
  GridFunction u0;
  ReductionCoeffs coeffs;
};

HeatForm to_heat(const OptionSpec& spec, int n);

// V(0,s) on the grid from the heat state at time-to-expiry T.
GridFunction invert_transform(const GridFunction& u_final, const ReductionCoeffs& coeffs,
                              const OptionSpec& spec, const MeshSpec& mesh);

// Inverse of the above; the round-trip is the identity.
GridFunction forward_transform(const GridFunction& v, const ReductionCoeffs& coeffs,
                               const OptionSpec& spec, const MeshSpec& mesh);

// Multilinear interpolation of grid values at a point in mesh coordinates.
double interp_at(const GridFunction& values, const MeshSpec& mesh, const Eigen::VectorXd& y0);

// Price surface read off at spot prices s0 (interpolated in y-space).
double price_at_spot(const GridFunction& v0, const MeshSpec& mesh, const OptionSpec& spec,
                     const Eigen::VectorXd& s0);

// Closed-form 1D call price at time t and spot s; t >= expiry returns the
// payoff itself.
double analytic_call(const OptionSpec& spec, double t, double s);

// PSD factor F with F F^T = rho; rejects indefinite inputs.
Eigen::MatrixXd correlation_factor(const Eigen::MatrixXd& rho);

struct McResult {
  double value = 0.0;
  double std_error = 0.0;
};

// Discounted expectation of g over exact terminal log-normal states,
// correlated through a factorization of rho. Deterministic per seed.
McResult mc_expect(const OptionSpec& spec, const Eigen::VectorXd& s0, std::int64_t paths,
                   std::uint64_t seed, const std::function<double(const Eigen::VectorXd&)>& g);

McResult mc_price(const OptionSpec& spec, const Eigen::VectorXd& s0, std::int64_t paths,
                  std::uint64_t seed);

}  // namespace meshvmc
