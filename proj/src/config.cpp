// SPDX-License-Identifier: MIT
#include "meshvmc/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "meshvmc/baseline.hpp"
#include "meshvmc/common.hpp"

namespace meshvmc {

namespace {

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  require(j.is_object(), "config: " + section + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw validation_error("config: unknown key '" + it.key() + "' in " + section);
  }
}

template <typename T>
T field(const json& j, const std::string& section, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw validation_error("config: bad value for " + section + "." + key);
  }
}

const char* bc_name(BoundaryKind bc) {
  return bc == BoundaryKind::dirichlet ? "dirichlet" : "periodic";
}

BoundaryKind bc_from_name(const std::string& s) {
  if (s == "dirichlet") return BoundaryKind::dirichlet;
  if (s == "periodic") return BoundaryKind::periodic;
  throw validation_error("config: operator.bc must be 'dirichlet' or 'periodic'");
}

const char* option_name(OptionKind k) {
  switch (k) {
    case OptionKind::call_1d: return "call_1d";
    case OptionKind::basket_call: return "basket_call";
    case OptionKind::basket_put: return "basket_put";
    case OptionKind::rainbow_max_call: return "rainbow_max_call";
    case OptionKind::spread_put: return "spread_put";
  }
  return "call_1d";
}

OptionKind option_from_name(const std::string& s) {
  if (s == "call_1d") return OptionKind::call_1d;
  if (s == "basket_call") return OptionKind::basket_call;
  if (s == "basket_put") return OptionKind::basket_put;
  if (s == "rainbow_max_call") return OptionKind::rainbow_max_call;
  if (s == "spread_put") return OptionKind::spread_put;
  throw validation_error("config: unknown option.kind '" + s + "'");
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, "top level",
             {"seed", "output_dir", "mesh", "operator", "network", "initial", "pretrain",
              "evolution", "option", "suite"});
  ExperimentConfig cfg;
  cfg.seed = field<std::uint64_t>(j, "top level", "seed", cfg.seed);
  cfg.output_dir = field<std::string>(j, "top level", "output_dir", cfg.output_dir);

  if (j.contains("mesh")) {
    const json& m = j.at("mesh");
    check_keys(m, "mesh", {"d", "n", "bounds"});
    cfg.d = field<int>(m, "mesh", "d", cfg.d);
    cfg.n = field<int>(m, "mesh", "n", cfg.n);
    if (m.contains("bounds")) {
      try {
        for (const auto& pair : m.at("bounds"))
          cfg.bounds.push_back({pair.at(0).get<double>(), pair.at(1).get<double>()});
      } catch (const json::exception&) {
        throw validation_error("config: mesh.bounds must be a list of [lo, hi] pairs");
      }
    }
  }

  if (j.contains("operator")) {
    const json& o = j.at("operator");
    check_keys(o, "operator", {"diffusion", "coeff", "bc"});
    cfg.diffusion = field<double>(o, "operator", "diffusion", cfg.diffusion);
    if (o.contains("coeff")) {
      try {
        const auto rows = o.at("coeff").get<std::vector<std::vector<double>>>();
        cfg.coeff.resize(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(rows.empty() ? 0 : rows[0].size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
          require(rows[r].size() == rows.size(), "config: operator.coeff must be square");
          for (std::size_t c = 0; c < rows[r].size(); ++c)
            cfg.coeff(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
      } catch (const json::exception&) {
        throw validation_error("config: operator.coeff must be a square matrix");
      }
    }
    if (o.contains("bc")) cfg.bc = bc_from_name(field<std::string>(o, "operator", "bc", ""));
  }

  if (j.contains("network")) {
    const json& net = j.at("network");
    check_keys(net, "network", {"hidden", "prob_clamp"});
    cfg.hidden = field<std::vector<int>>(net, "network", "hidden", cfg.hidden);
    cfg.prob_clamp = field<double>(net, "network", "prob_clamp", cfg.prob_clamp);
  }

  if (j.contains("initial")) {
    const json& ini = j.at("initial");
    check_keys(ini, "initial", {"kind", "width", "centered"});
    const std::string kind = field<std::string>(ini, "initial", "kind", "bessel_gaussian");
    require(kind == "bessel_gaussian", "config: initial.kind must be 'bessel_gaussian'");
    cfg.init_width = field<double>(ini, "initial", "width", cfg.init_width);
    cfg.init_centered = field<bool>(ini, "initial", "centered", cfg.init_centered);
  }

  if (j.contains("pretrain")) {
    const json& p = j.at("pretrain");
    check_keys(p, "pretrain", {"iters", "batch", "lr", "beta1", "beta2", "eps", "trace_stride"});
    cfg.pretrain.iters = field<std::int64_t>(p, "pretrain", "iters", cfg.pretrain.iters);
    cfg.pretrain.batch = field<int>(p, "pretrain", "batch", cfg.pretrain.batch);
    cfg.pretrain.lr = field<double>(p, "pretrain", "lr", cfg.pretrain.lr);
    cfg.pretrain.adam.beta1 = field<double>(p, "pretrain", "beta1", cfg.pretrain.adam.beta1);
    cfg.pretrain.adam.beta2 = field<double>(p, "pretrain", "beta2", cfg.pretrain.adam.beta2);
    cfg.pretrain.adam.eps = field<double>(p, "pretrain", "eps", cfg.pretrain.adam.eps);
    cfg.pretrain.trace_stride =
        field<std::int64_t>(p, "pretrain", "trace_stride", cfg.pretrain.trace_stride);
  }

  if (j.contains("evolution")) {
    const json& e = j.at("evolution");
    check_keys(e, "evolution",
               {"dt", "steps", "batch", "svd_eps", "record_stride", "exact_geometry",
                "collect_trace"});
    cfg.evolution.dt = field<double>(e, "evolution", "dt", cfg.evolution.dt);
    cfg.evolution.steps = field<std::int64_t>(e, "evolution", "steps", cfg.evolution.steps);
    cfg.evolution.batch = field<int>(e, "evolution", "batch", cfg.evolution.batch);
    cfg.evolution.svd_eps = field<double>(e, "evolution", "svd_eps", cfg.evolution.svd_eps);
    cfg.evolution.record_stride =
        field<std::int64_t>(e, "evolution", "record_stride", cfg.evolution.record_stride);
    cfg.evolution.exact_geometry =
        field<bool>(e, "evolution", "exact_geometry", cfg.evolution.exact_geometry);
    cfg.evolution.collect_trace =
        field<bool>(e, "evolution", "collect_trace", cfg.evolution.collect_trace);
  }

  if (j.contains("option")) {
    const json& o = j.at("option");
    check_keys(o, "option",
               {"kind", "d", "strike", "rate", "sigma", "rho_offdiag", "weights", "expiry",
                "spot", "mc_paths"});
    cfg.has_option = true;
    cfg.option_kind = option_from_name(field<std::string>(o, "option", "kind", "call_1d"));
    cfg.option_d = field<int>(o, "option", "d", cfg.option_d);
    cfg.strike = field<double>(o, "option", "strike", cfg.strike);
    cfg.rate = field<double>(o, "option", "rate", cfg.rate);
    cfg.expiry = field<double>(o, "option", "expiry", cfg.expiry);
    if (o.contains("sigma")) {
      if (o.at("sigma").is_number()) {
        cfg.sigma.assign(static_cast<std::size_t>(cfg.option_d), o.at("sigma").get<double>());
      } else {
        cfg.sigma = field<std::vector<double>>(o, "option", "sigma", cfg.sigma);
      }
    }
    cfg.rho_offdiag = field<double>(o, "option", "rho_offdiag", cfg.rho_offdiag);
    cfg.weights = field<std::vector<double>>(o, "option", "weights", cfg.weights);
    cfg.spot = field<double>(o, "option", "spot", cfg.spot);
    cfg.mc_paths = field<std::int64_t>(o, "option", "mc_paths", cfg.mc_paths);
  }

  if (j.contains("suite")) {
    const json& s = j.at("suite");
    check_keys(s, "suite", {"vmc_n_1d", "vmc_n_2d", "euler_n_1d", "euler_n_2d"});
    cfg.suite_vmc_n_1d = field<int>(s, "suite", "vmc_n_1d", cfg.suite_vmc_n_1d);
    cfg.suite_vmc_n_2d = field<int>(s, "suite", "vmc_n_2d", cfg.suite_vmc_n_2d);
    cfg.suite_euler_n_1d = field<int>(s, "suite", "euler_n_1d", cfg.suite_euler_n_1d);
    cfg.suite_euler_n_2d = field<int>(s, "suite", "euler_n_2d", cfg.suite_euler_n_2d);
  }

  cfg.pretrain.seed = cfg.seed;
  cfg.evolution.seed = cfg.seed;
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;

  j["mesh"] = {{"d", cfg.d}, {"n", cfg.n}};
  if (!cfg.bounds.empty()) {
    json b = json::array();
    for (const auto& pair : cfg.bounds) b.push_back({pair[0], pair[1]});
    j["mesh"]["bounds"] = b;
  }

  j["operator"] = {{"diffusion", cfg.diffusion}, {"bc", bc_name(cfg.bc)}};
  if (cfg.coeff.size() > 0) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < cfg.coeff.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < cfg.coeff.cols(); ++c) row.push_back(cfg.coeff(r, c));
      rows.push_back(row);
    }
    j["operator"]["coeff"] = rows;
  }

  j["network"] = {{"hidden", cfg.hidden}, {"prob_clamp", cfg.prob_clamp}};
  j["initial"] = {{"kind", "bessel_gaussian"},
                  {"width", cfg.init_width},
                  {"centered", cfg.init_centered}};
  j["pretrain"] = {{"iters", cfg.pretrain.iters},
                   {"batch", cfg.pretrain.batch},
                   {"lr", cfg.pretrain.lr},
                   {"beta1", cfg.pretrain.adam.beta1},
                   {"beta2", cfg.pretrain.adam.beta2},
                   {"eps", cfg.pretrain.adam.eps},
                   {"trace_stride", cfg.pretrain.trace_stride}};
  j["evolution"] = {{"dt", cfg.evolution.dt},
                    {"steps", cfg.evolution.steps},
                    {"batch", cfg.evolution.batch},
                    {"svd_eps", cfg.evolution.svd_eps},
                    {"record_stride", cfg.evolution.record_stride},
                    {"exact_geometry", cfg.evolution.exact_geometry},
                    {"collect_trace", cfg.evolution.collect_trace}};
  if (cfg.has_option) {
    j["option"] = {{"kind", option_name(cfg.option_kind)},
                   {"d", cfg.option_d},
                   {"strike", cfg.strike},
                   {"rate", cfg.rate},
                   {"sigma", cfg.sigma},
                   {"rho_offdiag", cfg.rho_offdiag},
                   {"expiry", cfg.expiry},
                   {"spot", cfg.spot},
                   {"mc_paths", cfg.mc_paths}};
    if (!cfg.weights.empty()) j["option"]["weights"] = cfg.weights;
  }
  j["suite"] = {{"vmc_n_1d", cfg.suite_vmc_n_1d},
                {"vmc_n_2d", cfg.suite_vmc_n_2d},
                {"euler_n_1d", cfg.suite_euler_n_1d},
                {"euler_n_2d", cfg.suite_euler_n_2d}};
  return j;
}

void apply_overrides(json& j, const std::vector<std::string>& sets) {
  for (const std::string& kv : sets) {
    const std::size_t eq = kv.find('=');
    require(eq != std::string::npos && eq > 0, "config: --set expects key=value, got '" + kv + "'");
    std::string path = kv.substr(0, eq);
    const std::string raw = kv.substr(eq + 1);
    for (char& c : path)
      if (c == '.') c = '/';
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;  // bare strings pass through
    }
    try {
      j[json::json_pointer("/" + path)] = value;
    } catch (const json::exception&) {
      throw validation_error("config: cannot set '" + kv + "'");
    }
  }
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& sets) {
  json j = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    require(in.good(), "config: cannot open '" + path + "'");
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw validation_error("config: parse failure in '" + path + "': " + e.what());
    }
  }
  apply_overrides(j, sets);
  return config_from_json(j);
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
  const std::string dump = config_to_json(cfg).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

MeshSpec mesh_from_config(const ExperimentConfig& cfg) {
  if (cfg.bounds.empty()) return make_lattice_mesh(cfg.d, cfg.n);
  return make_mesh(cfg.d, cfg.n, cfg.bounds);
}

OperatorSpec operator_from_config(const ExperimentConfig& cfg, const MeshSpec& mesh) {
  if (cfg.coeff.size() > 0) return make_operator(cfg.coeff, cfg.bc, mesh);
  return make_operator(cfg.diffusion * Eigen::MatrixXd::Identity(cfg.d, cfg.d), cfg.bc, mesh);
}

NetworkSpec network_from_config(const ExperimentConfig& cfg) {
  return network_from_config(cfg, cfg.n);
}

NetworkSpec network_from_config(const ExperimentConfig& cfg, int n_override) {
  NetworkSpec spec;
  spec.n = n_override;
  spec.hidden = cfg.hidden;
  spec.prob_clamp = cfg.prob_clamp;
  return spec;
}

OptionSpec option_from_config(const ExperimentConfig& cfg) {
  require(cfg.has_option, "config: missing option section");
  const int d = cfg.option_d;
  Eigen::VectorXd sigma(d);
  require(cfg.sigma.size() == static_cast<std::size_t>(d) || cfg.sigma.size() == 1,
          "config: option.sigma must have 1 or d entries");
  for (int i = 0; i < d; ++i)
    sigma[i] = cfg.sigma.size() == 1 ? cfg.sigma[0] : cfg.sigma[static_cast<std::size_t>(i)];
  Eigen::MatrixXd rho = Eigen::MatrixXd::Constant(d, d, cfg.rho_offdiag);
  rho.diagonal().setOnes();
  Eigen::VectorXd w;
  if (!cfg.weights.empty()) {
    require(cfg.weights.size() == static_cast<std::size_t>(d),
            "config: option.weights must have d entries");
    w.resize(d);
    for (int i = 0; i < d; ++i) w[i] = cfg.weights[static_cast<std::size_t>(i)];
  }
  return make_option(cfg.option_kind, d, cfg.strike, cfg.rate, sigma, rho, cfg.expiry, w);
}

GridFunction initial_from_config(const ExperimentConfig& cfg, const MeshSpec& mesh) {
  return bessel_gaussian(mesh, cfg.init_width, cfg.init_centered);
}

}  // namespace meshvmc
