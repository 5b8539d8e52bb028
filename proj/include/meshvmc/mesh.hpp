// SPDX-License-Identifier: MIT
//
// Regular d-dimensional mesh with 2^n points, 2^(n/d) per axis. A grid point
// has three equivalent addresses:
//   linear k in [0, 2^n)            the canonical index,
//   bits                            little-endian binary digits of k,
//   multi (k_1, ..., k_d)           base-2^(n/d) digits of k, least
//                                   significant first,
// and a coordinate x_i = a_i + multi_i * dx with dx = (b_i - a_i) / 2^(n/d).
// Axis a owns bit range [a*n/d, (a+1)*n/d), so multi extraction is bit
// slicing. The upper bound b_i itself is not a grid point.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "meshvmc/common.hpp"

namespace meshvmc {

using GridFunction = Eigen::VectorXd;

struct MeshSpec {
  int d = 1;
  int n = 1;
  std::vector<std::array<double, 2>> bounds;  // per axis, equal lengths required

  int bits_per_axis() const { return n / d; }
  std::uint64_t points_per_axis() const { return std::uint64_t{1} << bits_per_axis(); }
  std::uint64_t size() const { return std::uint64_t{1} << n; }
  double dx() const {
    return (bounds[0][1] - bounds[0][0]) / static_cast<double>(points_per_axis());
  }
};

// Validates and returns the spec. Bounds are stored per axis even though
// equal lengths are required; the message names the offending axis.
MeshSpec make_mesh(int d, int n, std::vector<std::array<double, 2>> bounds);

// Mesh over [0, 2^(n/d)]^d, so dx = 1 and coordinates equal multi-indices.
MeshSpec make_lattice_mesh(int d, int n);

using MultiIndex = std::vector<std::uint64_t>;

inline int bit_of(std::uint64_t k, int i) { return static_cast<int>((k >> i) & 1u); }

std::vector<int> to_bits(const MeshSpec& mesh, std::uint64_t k);
std::uint64_t from_bits(const MeshSpec& mesh, const std::vector<int>& bits);

MultiIndex to_multi(const MeshSpec& mesh, std::uint64_t k);
std::uint64_t from_multi(const MeshSpec& mesh, const MultiIndex& multi);

// Digit of the multi-index along one axis, without materializing the vector.
inline std::uint64_t axis_digit(const MeshSpec& mesh, std::uint64_t k, int axis) {
  const int q = mesh.bits_per_axis();
  return (k >> (axis * q)) & (mesh.points_per_axis() - 1);
}

Eigen::VectorXd to_coords(const MeshSpec& mesh, std::uint64_t k);

// Neighbor one step along an axis; no wrap. Returns false when the step
// leaves the grid.
bool neighbor(const MeshSpec& mesh, std::uint64_t k, int axis, int step, std::uint64_t& out);

// Neighbor with periodic wrap along the axis.
std::uint64_t neighbor_wrapped(const MeshSpec& mesh, std::uint64_t k, int axis, int step);

// True when any axis digit sits on the outermost layer (0 or 2^(n/d)-1).
bool on_face(const MeshSpec& mesh, std::uint64_t k);

}  // namespace meshvmc
