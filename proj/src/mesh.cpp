// SPDX-License-Identifier: MIT
#include "meshvmc/mesh.hpp"

#include <cmath>
#include <string>

namespace meshvmc {

MeshSpec make_mesh(int d, int n, std::vector<std::array<double, 2>> bounds) {
  require(d >= 1, "mesh: d must be >= 1, got " + std::to_string(d));
  require(n >= 1, "mesh: n must be >= 1, got " + std::to_string(n));
  require(n <= 62, "mesh: n must be <= 62, got " + std::to_string(n));
  require(n % d == 0, "mesh: d must divide n, got d=" + std::to_string(d) +
                          " n=" + std::to_string(n));
  require(bounds.size() == static_cast<std::size_t>(d),
          "mesh: expected " + std::to_string(d) + " bound intervals, got " +
              std::to_string(bounds.size()));
  const double len0 = bounds[0][1] - bounds[0][0];
  for (int a = 0; a < d; ++a) {
    const double len = bounds[a][1] - bounds[a][0];
    require(len > 0.0, "mesh: axis " + std::to_string(a) + " has empty interval [" +
                           std::to_string(bounds[a][0]) + ", " + std::to_string(bounds[a][1]) +
                           "]");
    require(std::abs(len - len0) <= 1e-12 * std::abs(len0),
            "mesh: axis " + std::to_string(a) + " length " + std::to_string(len) +
                " differs from axis 0 length " + std::to_string(len0));
  }
  MeshSpec mesh;
  mesh.d = d;
  mesh.n = n;
  mesh.bounds = std::move(bounds);
  return mesh;
}

MeshSpec make_lattice_mesh(int d, int n) {
  require(d >= 1 && n >= 1 && n % d == 0, "mesh: invalid lattice dims");
  const double m = static_cast<double>(std::uint64_t{1} << (n / d));
  std::vector<std::array<double, 2>> bounds(d, {0.0, m});
  return make_mesh(d, n, std::move(bounds));
}

std::vector<int> to_bits(const MeshSpec& mesh, std::uint64_t k) {
  std::vector<int> bits(mesh.n);
  for (int i = 0; i < mesh.n; ++i) bits[i] = bit_of(k, i);
  return bits;
}

std::uint64_t from_bits(const MeshSpec& mesh, const std::vector<int>& bits) {
  require(bits.size() == static_cast<std::size_t>(mesh.n), "mesh: bit vector length mismatch");
  std::uint64_t k = 0;
  for (int i = 0; i < mesh.n; ++i) {
    require(bits[i] == 0 || bits[i] == 1, "mesh: bits must be 0/1");
    k |= static_cast<std::uint64_t>(bits[i]) << i;
  }
  return k;
}

MultiIndex to_multi(const MeshSpec& mesh, std::uint64_t k) {
  require(k < mesh.size(), "mesh: index " + std::to_string(k) + " out of range for 2^" +
                               std::to_string(mesh.n) + " points");
  MultiIndex multi(mesh.d);
  for (int a = 0; a < mesh.d; ++a) multi[a] = axis_digit(mesh, k, a);
  return multi;
}

std::uint64_t from_multi(const MeshSpec& mesh, const MultiIndex& multi) {
  require(multi.size() == static_cast<std::size_t>(mesh.d), "mesh: multi-index length mismatch");
  const int q = mesh.bits_per_axis();
  const std::uint64_t m = mesh.points_per_axis();
  std::uint64_t k = 0;
  for (int a = 0; a < mesh.d; ++a) {
    require(multi[a] < m, "mesh: multi-index digit out of range");
    k |= multi[a] << (a * q);
  }
  return k;
}

Eigen::VectorXd to_coords(const MeshSpec& mesh, std::uint64_t k) {
  require(k < mesh.size(), "mesh: index " + std::to_string(k) + " out of range for 2^" +
                               std::to_string(mesh.n) + " points");
  Eigen::VectorXd x(mesh.d);
  const double h = mesh.dx();
  for (int a = 0; a < mesh.d; ++a)
    x[a] = mesh.bounds[a][0] + static_cast<double>(axis_digit(mesh, k, a)) * h;
  return x;
}

bool neighbor(const MeshSpec& mesh, std::uint64_t k, int axis, int step, std::uint64_t& out) {
  const int q = mesh.bits_per_axis();
  const std::uint64_t m = mesh.points_per_axis();
  const std::uint64_t digit = (k >> (axis * q)) & (m - 1);
  if (step > 0 && digit + 1 >= m) return false;
  if (step < 0 && digit == 0) return false;
  const std::uint64_t moved = digit + static_cast<std::uint64_t>(static_cast<std::int64_t>(step));
  out = (k & ~((m - 1) << (axis * q))) | (moved << (axis * q));
  return true;
}

std::uint64_t neighbor_wrapped(const MeshSpec& mesh, std::uint64_t k, int axis, int step) {
  const int q = mesh.bits_per_axis();
  const std::uint64_t m = mesh.points_per_axis();
  const std::uint64_t digit = (k >> (axis * q)) & (m - 1);
  const std::uint64_t moved = (digit + m + static_cast<std::uint64_t>(static_cast<std::int64_t>(step))) & (m - 1);
  return (k & ~((m - 1) << (axis * q))) | (moved << (axis * q));
}

bool on_face(const MeshSpec& mesh, std::uint64_t k) {
  const std::uint64_t last = mesh.points_per_axis() - 1;
  for (int a = 0; a < mesh.d; ++a) {
    const std::uint64_t digit = axis_digit(mesh, k, a);
    if (digit == 0 || digit == last) return true;
  }
  return false;
}

}  // namespace meshvmc
