// SPDX-License-Identifier: MIT
#pragma once

#include <string>
#include <vector>

#include "meshvmc/ansatz.hpp"
#include "meshvmc/geometry.hpp"
#include "meshvmc/mesh.hpp"

namespace meshvmc {

// Full-precision decimal form that round-trips the double exactly.
std::string format_double(double v);

void ensure_dir(const std::string& path);
void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

// Rows of preformatted cells; a config-hash comment line precedes the header
// when a hash is supplied.
void write_csv(const std::string& path, const std::string& config_hash,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Flat little-endian doubles.
void write_grid_binary(const std::string& path, const GridFunction& u);
GridFunction read_grid_binary(const std::string& path);

// Grid snapshot: raw array plus a JSON sidecar with shape, time, and hash.
void write_snapshot(const std::string& dir, const std::string& name, const GridFunction& u,
                    double time, const std::string& config_hash);

struct Checkpoint {
  NetworkSpec spec;
  AnsatzState state;
  std::string config_hash;
};

// JSON checkpoint; doubles serialize in shortest-round-trip form, so a
// save/load cycle is bit-exact.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace meshvmc
