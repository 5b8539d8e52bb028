// SPDX-License-Identifier: MIT
#include "meshvmc/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "meshvmc/common.hpp"

namespace meshvmc {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

void ensure_dir(const std::string& path) {
  if (path.empty()) return;
  std::error_code ec;
  fs::create_directories(path, ec);
  require(!ec, "io: cannot create directory '" + path + "': " + ec.message());
}

void write_text(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) ensure_dir(p.parent_path().string());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "io: cannot open '" + path + "' for writing");
  out << content;
  require(out.good(), "io: write failure on '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "io: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_csv(const std::string& path, const std::string& config_hash,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  if (!config_hash.empty()) out << "# config_hash=" << config_hash << "\n";
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    require(row.size() == header.size(), "io: csv row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  write_text(path, out.str());
}

void write_grid_binary(const std::string& path, const GridFunction& u) {
  const fs::path p(path);
  if (p.has_parent_path()) ensure_dir(p.parent_path().string());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "io: cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(u.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(u.size())));
  require(out.good(), "io: write failure on '" + path + "'");
}

GridFunction read_grid_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  require(in.good(), "io: cannot open '" + path + "'");
  const std::streamsize bytes = in.tellg();
  require(bytes >= 0 && bytes % static_cast<std::streamsize>(sizeof(double)) == 0,
          "io: '" + path + "' is not a flat double array");
  GridFunction u(bytes / static_cast<std::streamsize>(sizeof(double)));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(u.data()), bytes);
  require(in.good(), "io: read failure on '" + path + "'");
  return u;
}

void write_snapshot(const std::string& dir, const std::string& name, const GridFunction& u,
                    double time, const std::string& config_hash) {
  ensure_dir(dir);
  write_grid_binary(dir + "/" + name + ".bin", u);
  json side;
  side["shape"] = {u.size()};
  side["time"] = time;
  side["config_hash"] = config_hash;
  write_text(dir + "/" + name + ".json", side.dump(2) + "\n");
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  json j;
  j["network"] = {{"n", ckpt.spec.n},
                  {"hidden", ckpt.spec.hidden},
                  {"ordering", ckpt.spec.ordering},
                  {"prob_clamp", ckpt.spec.prob_clamp}};
  j["log_alpha"] = ckpt.state.log_alpha;
  std::vector<double> beta(ckpt.state.beta.data(),
                           ckpt.state.beta.data() + ckpt.state.beta.size());
  j["beta"] = beta;
  j["config_hash"] = ckpt.config_hash;
  write_text(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw validation_error("io: checkpoint parse failure in '" + path + "': " + e.what());
  }
  Checkpoint ckpt;
  try {
    ckpt.spec.n = j.at("network").at("n").get<int>();
    ckpt.spec.hidden = j.at("network").at("hidden").get<std::vector<int>>();
    ckpt.spec.ordering = j.at("network").at("ordering").get<std::vector<int>>();
    ckpt.spec.prob_clamp = j.at("network").at("prob_clamp").get<double>();
    ckpt.state.log_alpha = j.at("log_alpha").get<double>();
    const auto beta = j.at("beta").get<std::vector<double>>();
    ckpt.state.beta.resize(static_cast<Eigen::Index>(beta.size()));
    for (std::size_t i = 0; i < beta.size(); ++i)
      ckpt.state.beta[static_cast<Eigen::Index>(i)] = beta[i];
    ckpt.config_hash = j.at("config_hash").get<std::string>();
  } catch (const json::exception& e) {
    throw validation_error("io: checkpoint '" + path + "' missing fields: " + e.what());
  }
  return ckpt;
}

}  // namespace meshvmc
