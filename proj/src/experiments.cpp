// SPDX-License-Identifier: MIT
#include "meshvmc/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "meshvmc/baseline.hpp"
#include "meshvmc/black_scholes.hpp"
#include "meshvmc/common.hpp"
#include "meshvmc/evolution.hpp"
#include "meshvmc/geometry.hpp"
#include "meshvmc/io.hpp"
#include "meshvmc/pretrain.hpp"
#include "meshvmc/rng.hpp"

namespace meshvmc {

namespace {

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty()) return name;
  if (dir.back() == '/') return dir + name;
  return dir + "/" + name;
}

// The resolved config is written as-is (loadable), so the hash of the file
// contents is the run's config hash; other artifacts carry it explicitly.
void write_resolved_config(const ExperimentConfig& cfg) {
  ensure_dir(cfg.output_dir);
  write_text(join_path(cfg.output_dir, "resolved_config.json"), config_to_json(cfg).dump(2) + "\n");
}

std::string index_name(const char* stem, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04zu", stem, i);
  return buf;
}

// Benchmark cells with pinned error budgets; negative means no budget known.
double cell_tolerance(int d, int bits_per_axis) {
  if (d == 1 && bits_per_axis == 4) return 1.5e-2;
  if (d == 1 && bits_per_axis == 5) return 1.0e-2;
  if (d == 2 && bits_per_axis == 4) return 2.5e-2;
  return -1.0;
}

double mean_of(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

BenchmarkOutcome benchmark_cell(const ExperimentConfig& cfg, std::uint64_t seed) {
  require(cfg.evolution.record_stride > 0, "benchmark: evolution.record_stride must be > 0");
  require(cfg.n <= 16, "benchmark: dense reference limited to n <= 16");
  const MeshSpec mesh = mesh_from_config(cfg);
  const OperatorSpec op = operator_from_config(cfg, mesh);
  const GridFunction u0 = initial_from_config(cfg, mesh);

  MaskedNet net(network_from_config(cfg));
  PretrainConfig pc = cfg.pretrain;
  pc.seed = seed;

  BenchmarkOutcome out;
  PretrainResult pre = pretrain(net, u0, pc);
  out.pretrain_fit = pre.fit_rel_error;
  if (pre.aborted) {
    out.aborted = true;
    out.abort_reason = "pretrain: " + pre.abort_reason;
    return out;
  }

  BaselineRun base = euler_run(op, mesh, nullptr, u0, cfg.evolution.dt, cfg.evolution.steps,
                               cfg.evolution.record_stride);
  if (base.aborted) {
    out.aborted = true;
    out.abort_reason = "reference: " + base.abort_reason;
    return out;
  }

  EvolutionConfig ec = cfg.evolution;
  ec.seed = seed;
  Problem prob{mesh, op, SourceFn{}};
  EvolutionRun run = evolve(net, pre.state, prob, ec);
  out.zero_direction_steps = run.zero_direction_steps;
  if (run.aborted) {
    out.aborted = true;
    out.abort_reason = "evolve: " + run.abort_reason;
    return out;
  }
  out.error = relative_error(run, base);
  return out;
}

VmcPriceOutcome vmc_price(const OptionSpec& spec, int n, const ExperimentConfig& cfg,
                          double spot) {
  HeatForm form = to_heat(spec, n);
  MaskedNet net(network_from_config(cfg, n));
  PretrainConfig pc = cfg.pretrain;
  pc.seed = cfg.seed;

  VmcPriceOutcome out;
  PretrainResult pre = pretrain(net, form.u0, pc);
  out.pretrain_fit = pre.fit_rel_error;
  if (pre.aborted) {
    out.aborted = true;
    out.abort_reason = "pretrain: " + pre.abort_reason;
    return out;
  }

  EvolutionConfig ec = cfg.evolution;
  require(ec.steps > 0, "price: evolution.steps must be > 0");
  ec.seed = cfg.seed;
  ec.dt = spec.expiry / static_cast<double>(ec.steps);
  ec.record_stride = 0;
  Problem prob{form.mesh, form.op, form.src};
  EvolutionRun run = evolve(net, pre.state, prob, ec);
  if (run.aborted) {
    out.aborted = true;
    out.abort_reason = "evolve: " + run.abort_reason;
    return out;
  }

  const GridFunction u_final = dense_state(net, run.final_state);
  const GridFunction v0 = invert_transform(u_final, form.coeffs, spec, form.mesh);
  out.price = price_at_spot(v0, form.mesh, spec, Eigen::VectorXd::Constant(spec.d, spot));
  return out;
}

double euler_price(const OptionSpec& spec, int n, double spot) {
  HeatForm form = to_heat(spec, n);
  double tr = 0.0;
  for (int i = 0; i < spec.d; ++i) tr += form.op.coeff(i, i);
  const double dx = form.mesh.dx();
  const double dt0 = 0.2 * dx * dx / tr;
  const auto steps = static_cast<std::int64_t>(std::ceil(spec.expiry / dt0));
  const double dt = spec.expiry / static_cast<double>(steps);
  BaselineRun run = euler_run(form.op, form.mesh, &form.src, form.u0, dt, steps, 0);
  if (run.aborted) throw numerical_error("euler price: " + run.abort_reason);
  const GridFunction v0 = invert_transform(run.final_state, form.coeffs, spec, form.mesh);
  return price_at_spot(v0, form.mesh, spec, Eigen::VectorXd::Constant(spec.d, spot));
}

double vmc_step_seconds(int d, int n, int batch, const std::vector<int>& hidden) {
  const MeshSpec mesh = make_lattice_mesh(d, n);
  const OperatorSpec op = make_diffusion(0.1, BoundaryKind::dirichlet, mesh);
  NetworkSpec ns;
  ns.n = n;
  ns.hidden = hidden;
  MaskedNet net(ns);
  AnsatzState state;
  state.beta = net.initial_params(7);
  const Problem prob{mesh, op, SourceFn{}};

  volatile double sink = 0.0;
  auto one_step = [&](std::uint64_t step) {
    const SampleBatch b = net.sample(batch, derive_stream(11, "timing", step));
    const GeometryEstimate est = estimate_mv(net, state, prob, 0.0, b);
    const SolveResult sol = solve_direction(est, 1e-6, 1e-12);
    sink = sink + (sol.dtheta.size() > 0 ? sol.dtheta[0] : 0.0);
  };

  one_step(0);
  double best = 1e300;
  std::uint64_t counter = 1;
  for (int rep = 0; rep < 3; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    int k = 0;
    double elapsed = 0.0;
    do {
      one_step(counter++);
      ++k;
      elapsed = seconds_since(t0);
    } while (elapsed < 0.25 && k < 64);
    best = std::min(best, elapsed / static_cast<double>(k));
  }
  return best;
}

double euler_step_seconds(int d, int n) {
  const MeshSpec mesh = make_lattice_mesh(d, n);
  const OperatorSpec op = make_diffusion(0.1, BoundaryKind::dirichlet, mesh);
  const CompiledOperator compiled = compile(op, mesh, false);
  GridFunction u(mesh.size());
  for (std::uint64_t k = 0; k < mesh.size(); ++k)
    u[static_cast<Eigen::Index>(k)] = std::sin(0.37 * static_cast<double>(k)) + 1.5;
  GridFunction lu(u.size());
  const double dt = 1e-8;  // cost does not depend on the step size

  auto one_step = [&] {
    compiled.apply(u, lu);
    u += dt * lu;
  };

  one_step();
  double best = 1e300;
  for (int rep = 0; rep < 3; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    std::int64_t k = 0;
    double elapsed = 0.0;
    do {
      one_step();
      ++k;
      elapsed = seconds_since(t0);
    } while (elapsed < 0.05 && k < 10000000);
    best = std::min(best, elapsed / static_cast<double>(k));
  }
  return best;
}

int cmd_pretrain(const ExperimentConfig& cfg) {
  const std::string hash = config_hash_hex(cfg);
  write_resolved_config(cfg);

  const MeshSpec mesh = mesh_from_config(cfg);
  const GridFunction u0 = initial_from_config(cfg, mesh);
  MaskedNet net(network_from_config(cfg));
  PretrainResult pre = pretrain(net, u0, cfg.pretrain);

  std::vector<std::vector<std::string>> rows;
  rows.reserve(pre.trace.size());
  for (const PretrainTraceRow& r : pre.trace)
    rows.push_back({std::to_string(r.iter), format_double(r.loss), format_double(r.lr)});
  write_csv(join_path(cfg.output_dir, "pretrain_trace.csv"), hash, {"iter", "loss", "lr"}, rows);
  save_checkpoint(join_path(cfg.output_dir, "checkpoint.json"), {net.spec(), pre.state, hash});

  if (pre.aborted) {
    std::fprintf(stderr, "pretrain aborted: %s\n", pre.abort_reason.c_str());
    return 3;
  }
  std::printf("pretrain: params=%d fit_rel_error=%s\n", net.n_params(),
              format_double(pre.fit_rel_error).c_str());
  return 0;
}

int cmd_baseline(const ExperimentConfig& cfg) {
  const std::string hash = config_hash_hex(cfg);
  write_resolved_config(cfg);

  const MeshSpec mesh = mesh_from_config(cfg);
  const OperatorSpec op = operator_from_config(cfg, mesh);
  const GridFunction u0 = initial_from_config(cfg, mesh);
  BaselineRun run = euler_run(op, mesh, nullptr, u0, cfg.evolution.dt, cfg.evolution.steps,
                              cfg.evolution.record_stride);

  const std::string dir = join_path(cfg.output_dir, "baseline");
  ensure_dir(dir);
  for (std::size_t i = 0; i < run.snapshots.size(); ++i)
    write_snapshot(dir, index_name("snap", i), run.snapshots[i], run.times[i], hash);
  write_snapshot(dir, "final", run.final_state, run.final_time, hash);

  if (run.aborted) {
    std::fprintf(stderr, "baseline aborted: %s\n", run.abort_reason.c_str());
    return 3;
  }
  std::printf("baseline: steps=%lld final_time=%s sup_norm=%s\n",
              static_cast<long long>(cfg.evolution.steps), format_double(run.final_time).c_str(),
              format_double(run.final_state.cwiseAbs().maxCoeff()).c_str());
  return 0;
}

int cmd_evolve(const ExperimentConfig& cfg) {
  const std::string hash = config_hash_hex(cfg);
  write_resolved_config(cfg);

  const MeshSpec mesh = mesh_from_config(cfg);
  const OperatorSpec op = operator_from_config(cfg, mesh);
  const GridFunction u0 = initial_from_config(cfg, mesh);
  MaskedNet net(network_from_config(cfg));

  // Start from a stored checkpoint when one matches this config; a stored
  // state from a different config is refused rather than reinterpreted.
  AnsatzState state0;
  const std::string ckpt_path = join_path(cfg.output_dir, "checkpoint.json");
  if (std::filesystem::exists(ckpt_path)) {
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    require(ckpt.config_hash == hash, "evolve: checkpoint in " + cfg.output_dir +
                                          " carries config hash " + ckpt.config_hash +
                                          " but the current config hashes to " + hash);
    require(ckpt.state.beta.size() == net.n_params(),
            "evolve: checkpoint parameter count mismatch");
    state0 = ckpt.state;
  } else {
    PretrainResult pre = pretrain(net, u0, cfg.pretrain);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(pre.trace.size());
    for (const PretrainTraceRow& r : pre.trace)
      rows.push_back({std::to_string(r.iter), format_double(r.loss), format_double(r.lr)});
    write_csv(join_path(cfg.output_dir, "pretrain_trace.csv"), hash, {"iter", "loss", "lr"},
              rows);
    if (pre.aborted) {
      std::fprintf(stderr, "pretrain aborted: %s\n", pre.abort_reason.c_str());
      return 3;
    }
    save_checkpoint(ckpt_path, {net.spec(), pre.state, hash});
    state0 = pre.state;
  }

  const Problem prob{mesh, op, SourceFn{}};
  EvolutionRun run = evolve(net, state0, prob, cfg.evolution);

  const std::string traj = join_path(cfg.output_dir, "trajectory");
  ensure_dir(traj);
  for (std::size_t i = 0; i < run.checkpoints.size(); ++i)
    save_checkpoint(join_path(traj, index_name("state", i) + ".json"),
                    {net.spec(), run.checkpoints[i], hash});
  save_checkpoint(join_path(traj, "final.json"), {net.spec(), run.final_state, hash});
  for (std::size_t i = 0; i < run.snapshots.size(); ++i)
    write_snapshot(traj, index_name("snap", i), run.snapshots[i], run.times[i], hash);

  if (cfg.evolution.collect_trace) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(run.trace.size());
    for (const TraceRow& r : run.trace)
      rows.push_back({std::to_string(r.step), std::to_string(r.rank), format_double(r.cond),
                      format_double(r.v_norm)});
    write_csv(join_path(cfg.output_dir, "geometry_trace.csv"), hash,
              {"step", "rank", "cond", "v_norm"}, rows);
  }

  if (run.aborted) {
    std::fprintf(stderr, "evolve aborted: %s\n", run.abort_reason.c_str());
    return 3;
  }

  // Error against the dense reference wherever the run recorded dense states.
  if (!run.snapshots.empty()) {
    BaselineRun base = euler_run(op, mesh, nullptr, u0, cfg.evolution.dt, cfg.evolution.steps,
                                 cfg.evolution.record_stride);
    if (base.aborted) {
      std::fprintf(stderr, "reference aborted: %s\n", base.abort_reason.c_str());
      return 3;
    }
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < run.snapshots.size(); ++i) {
      const double err = (run.snapshots[i] - base.snapshots[i]).norm() / base.snapshots[i].norm();
      rows.push_back({format_double(run.times[i]), format_double(err)});
    }
    write_csv(join_path(cfg.output_dir, "error.csv"), hash, {"time", "rel_error"}, rows);
    std::printf("evolve: final_time=%s mean_rel_error=%s zero_direction_steps=%lld\n",
                format_double(run.final_time).c_str(),
                format_double(relative_error(run, base)).c_str(),
                static_cast<long long>(run.zero_direction_steps));
  } else {
    std::printf("evolve: final_time=%s zero_direction_steps=%lld\n",
                format_double(run.final_time).c_str(),
                static_cast<long long>(run.zero_direction_steps));
  }
  return 0;
}

int cmd_table1(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds) {
  require(!seeds.empty(), "table1: at least one seed required");
  const std::string hash = config_hash_hex(cfg);
  write_resolved_config(cfg);

  std::vector<double> errors;
  json per_seed = json::array();
  for (std::uint64_t seed : seeds) {
    BenchmarkOutcome o = benchmark_cell(cfg, seed);
    if (o.aborted) {
      std::fprintf(stderr, "table1: seed %llu aborted: %s\n",
                   static_cast<unsigned long long>(seed), o.abort_reason.c_str());
      return 3;
    }
    errors.push_back(o.error);
    per_seed.push_back({{"seed", seed},
                        {"error", o.error},
                        {"pretrain_fit", o.pretrain_fit},
                        {"zero_direction_steps", o.zero_direction_steps}});
    std::printf("table1: seed=%llu error=%s\n", static_cast<unsigned long long>(seed),
                format_double(o.error).c_str());
  }

  const double mean = mean_of(errors);
  const double tol = cell_tolerance(cfg.d, cfg.n / cfg.d);
  json report{{"config_hash", hash},
              {"d", cfg.d},
              {"n", cfg.n},
              {"bits_per_axis", cfg.n / cfg.d},
              {"seeds", per_seed},
              {"mean_error", mean},
              {"std_error", sample_std(errors, mean)}};
  if (tol > 0.0) {
    report["tolerance"] = tol;
    report["pass"] = mean <= tol;
  }
  write_text(join_path(cfg.output_dir, "table1_cell.json"), report.dump(2) + "\n");

  std::printf("table1: d=%d n=%d mean_error=%s seeds=%zu\n", cfg.d, cfg.n,
              format_double(mean).c_str(), seeds.size());
  return 0;
}

int cmd_ablation(const ExperimentConfig& cfg, const std::vector<int>& batches,
                 const std::vector<std::uint64_t>& seeds) {
  require(!batches.empty(), "ablation: at least one batch size required");
  require(!seeds.empty(), "ablation: at least one seed required");
  require(cfg.evolution.record_stride > 0, "ablation: evolution.record_stride must be > 0");
  require(cfg.n <= 16, "ablation: dense reference limited to n <= 16");
  const std::string hash = config_hash_hex(cfg);
  write_resolved_config(cfg);

  const MeshSpec mesh = mesh_from_config(cfg);
  const OperatorSpec op = operator_from_config(cfg, mesh);
  const GridFunction u0 = initial_from_config(cfg, mesh);
  const BaselineRun base = euler_run(op, mesh, nullptr, u0, cfg.evolution.dt, cfg.evolution.steps,
                                     cfg.evolution.record_stride);
  if (base.aborted) {
    std::fprintf(stderr, "ablation: reference aborted: %s\n", base.abort_reason.c_str());
    return 3;
  }
  const Problem prob{mesh, op, SourceFn{}};

  // errors[bi][si]; the fit and the reference are shared across batch sizes.
  std::vector<std::vector<double>> errors(batches.size());
  std::vector<std::vector<double>> step_secs(batches.size());
  for (std::uint64_t seed : seeds) {
    MaskedNet net(network_from_config(cfg));
    PretrainConfig pc = cfg.pretrain;
    pc.seed = seed;
    PretrainResult pre = pretrain(net, u0, pc);
    if (pre.aborted) {
      std::fprintf(stderr, "ablation: seed %llu pretrain aborted: %s\n",
                   static_cast<unsigned long long>(seed), pre.abort_reason.c_str());
      return 3;
    }
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      EvolutionConfig ec = cfg.evolution;
      ec.seed = seed;
      ec.batch = batches[bi];
      const auto t0 = std::chrono::steady_clock::now();
      EvolutionRun run = evolve(net, pre.state, prob, ec);
      const double secs = seconds_since(t0);
      if (run.aborted) {
        std::fprintf(stderr, "ablation: seed %llu B=%d aborted: %s\n",
                     static_cast<unsigned long long>(seed), batches[bi],
                     run.abort_reason.c_str());
        return 3;
      }
      errors[bi].push_back(relative_error(run, base));
      step_secs[bi].push_back(secs / static_cast<double>(ec.steps));
    }
  }

  std::vector<std::vector<std::string>> rows;
  std::vector<std::vector<std::string>> timing_rows;
  for (std::size_t bi = 0; bi < batches.size(); ++bi) {
    const double mean = mean_of(errors[bi]);
    rows.push_back({std::to_string(batches[bi]), format_double(mean),
                    format_double(sample_std(errors[bi], mean))});
    timing_rows.push_back(
        {std::to_string(batches[bi]), format_double(mean_of(step_secs[bi]))});
    std::printf("ablation: B=%d mean_error=%s\n", batches[bi], format_double(mean).c_str());
  }
  write_csv(join_path(cfg.output_dir, "ablation.csv"), hash, {"batch", "mean_error", "std_error"},
            rows);
  // Wall-clock lives in its own file so the primary outputs stay
  // byte-reproducible.
  write_csv(join_path(cfg.output_dir, "ablation_timing.csv"), hash,
            {"batch", "mean_step_seconds"}, timing_rows);
  return 0;
}

namespace {

const char* kind_name(OptionKind kind) {
  switch (kind) {
    case OptionKind::call_1d: return "call_1d";
    case OptionKind::basket_call: return "basket_call";
    case OptionKind::basket_put: return "basket_put";
    case OptionKind::rainbow_max_call: return "rainbow_max_call";
    case OptionKind::spread_put: return "spread_put";
  }
  return "unknown";
}

json option_json(const OptionSpec& spec) {
  json sigma = json::array();
  for (int i = 0; i < spec.d; ++i) sigma.push_back(spec.sigma[i]);
  json weights = json::array();
  for (int i = 0; i < spec.weights.size(); ++i) weights.push_back(spec.weights[i]);
  json rho = json::array();
  for (int i = 0; i < spec.d; ++i) {
    json row = json::array();
    for (int j = 0; j < spec.d; ++j) row.push_back(spec.rho(i, j));
    rho.push_back(row);
  }
  return json{{"kind", kind_name(spec.kind)}, {"d", spec.d},     {"strike", spec.strike},
              {"rate", spec.rate},            {"sigma", sigma},  {"rho", rho},
              {"weights", weights},           {"expiry", spec.expiry}};
}

OptionSpec with_strike(const OptionSpec& spec, double strike) {
  return make_option(spec.kind, spec.d, strike, spec.rate, spec.sigma, spec.rho, spec.expiry,
                     spec.weights);
}

const std::vector<double> kCurveStrikes{1.0, 1.1, 1.2, 1.3, 1.4, 1.5};

}  // namespace

int cmd_price(const ExperimentConfig& cfg, const std::string& method) {
  require(cfg.has_option, "price: config carries no option section");
  const OptionSpec spec = option_from_config(cfg);
  const std::string hash = config_hash_hex(cfg);
  write_resolved_config(cfg);

  const Eigen::VectorXd s0 = Eigen::VectorXd::Constant(spec.d, cfg.spot);
  const bool has_analytic = spec.kind == OptionKind::call_1d;
  const double analytic = has_analytic ? analytic_call(spec, 0.0, cfg.spot) : 0.0;

  json report{{"config_hash", hash}, {"method", method}, {"option", option_json(spec)},
              {"spot", cfg.spot},    {"n", cfg.n}};

  double price = 0.0;
  std::vector<std::vector<std::string>> curve;
  std::vector<std::string> curve_header{"strike", "price"};

  if (method == "vmc") {
    VmcPriceOutcome out = vmc_price(spec, cfg.n, cfg, cfg.spot);
    if (out.aborted) {
      std::fprintf(stderr, "price aborted: %s\n", out.abort_reason.c_str());
      return 3;
    }
    price = out.price;
    report["pretrain_fit"] = out.pretrain_fit;
    curve.push_back({format_double(spec.strike), format_double(price)});
  } else if (method == "euler") {
    price = euler_price(spec, cfg.n, cfg.spot);
    for (double k : kCurveStrikes)
      curve.push_back(
          {format_double(k), format_double(euler_price(with_strike(spec, k), cfg.n, cfg.spot))});
  } else if (method == "analytic") {
    require(has_analytic, "price: the analytic method covers only the one-asset call");
    price = analytic;
    for (double k : kCurveStrikes)
      curve.push_back(
          {format_double(k), format_double(analytic_call(with_strike(spec, k), 0.0, cfg.spot))});
  } else if (method == "mc") {
    const McResult r = mc_price(spec, s0, cfg.mc_paths, cfg.seed);
    price = r.value;
    report["mc_std_error"] = r.std_error;
    report["mc_paths"] = cfg.mc_paths;
    curve_header.push_back("std_error");
    for (double k : kCurveStrikes) {
      // Shared seed across strikes: common random numbers keep the curve
      // smooth in K.
      const McResult rk = mc_price(with_strike(spec, k), s0, cfg.mc_paths, cfg.seed);
      curve.push_back(
          {format_double(k), format_double(rk.value), format_double(rk.std_error)});
    }
  } else {
    throw validation_error("price: unknown method '" + method + "'");
  }

  report["price"] = price;
  if (has_analytic) {
    report["analytic"] = analytic;
    if (method != "analytic")
      report["rel_error_vs_analytic"] = std::abs(price - analytic) / std::abs(analytic);
  }
  if (method != "mc") {
    const McResult oracle = mc_price(spec, s0, cfg.mc_paths, cfg.seed);
    report["mc"] = json{{"value", oracle.value},
                        {"std_error", oracle.std_error},
                        {"paths", cfg.mc_paths}};
    report["rel_error_vs_mc"] = std::abs(price - oracle.value) / std::abs(oracle.value);
  }

  write_text(join_path(cfg.output_dir, "price_report.json"), report.dump(2) + "\n");
  write_csv(join_path(cfg.output_dir, "price_curve.csv"), hash, curve_header, curve);
  std::printf("price: method=%s price=%s\n", method.c_str(), format_double(price).c_str());
  return 0;
}

int cmd_pricing_suite(const ExperimentConfig& cfg) {
  const std::string hash = config_hash_hex(cfg);
  write_resolved_config(cfg);

  struct Row {
    std::string label;
    OptionSpec spec;
    int n_vmc;
    int n_euler;
  };

  const Eigen::MatrixXd rho1 = Eigen::MatrixXd::Identity(1, 1);
  Eigen::MatrixXd rho2 = Eigen::MatrixXd::Identity(2, 2);
  rho2(0, 1) = rho2(1, 0) = 0.1;
  auto sig1 = [](double s) { return Eigen::VectorXd::Constant(1, s); };

  std::vector<Row> rows;
  for (double s : {0.3, 0.1, 0.2, 0.4}) {
    char label[32];
    std::snprintf(label, sizeof(label), "call_1d_sigma_%.1f", s);
    rows.push_back({label,
                    make_option(OptionKind::call_1d, 1, cfg.strike, cfg.rate, sig1(s), rho1,
                                cfg.expiry),
                    cfg.suite_vmc_n_1d, cfg.suite_euler_n_1d});
  }
  rows.push_back({"basket_call_2d_rho_0.1",
                  make_option(OptionKind::basket_call, 2, cfg.strike, cfg.rate,
                              Eigen::VectorXd::Constant(2, 0.3), rho2, cfg.expiry),
                  cfg.suite_vmc_n_2d, cfg.suite_euler_n_2d});

  std::vector<std::vector<std::string>> out_rows;
  for (const Row& row : rows) {
    const Eigen::VectorXd s0 = Eigen::VectorXd::Constant(row.spec.d, cfg.spot);
    const bool has_analytic = row.spec.kind == OptionKind::call_1d;
    double oracle = 0.0;
    double oracle_se = 0.0;
    std::string oracle_kind;
    if (has_analytic) {
      oracle = analytic_call(row.spec, 0.0, cfg.spot);
      oracle_kind = "analytic";
    } else {
      const McResult r = mc_price(row.spec, s0, cfg.mc_paths, cfg.seed);
      oracle = r.value;
      oracle_se = r.std_error;
      oracle_kind = "mc";
    }

    VmcPriceOutcome v = vmc_price(row.spec, row.n_vmc, cfg, cfg.spot);
    if (v.aborted) {
      std::fprintf(stderr, "pricing-suite: %s aborted: %s\n", row.label.c_str(),
                   v.abort_reason.c_str());
      return 3;
    }
    const double e = euler_price(row.spec, row.n_euler, cfg.spot);
    const double v_rel = std::abs(v.price - oracle) / std::abs(oracle);
    const double e_rel = std::abs(e - oracle) / std::abs(oracle);

    out_rows.push_back({row.label, std::to_string(row.spec.d), format_double(row.spec.sigma[0]),
                        std::to_string(row.n_vmc), std::to_string(row.n_euler),
                        format_double(v.price), format_double(e), oracle_kind,
                        format_double(oracle), format_double(oracle_se), format_double(v_rel),
                        format_double(e_rel)});
    std::printf("pricing-suite: %s vmc=%s euler=%s oracle=%s vmc_rel=%s euler_rel=%s\n",
                row.label.c_str(), format_double(v.price).c_str(), format_double(e).c_str(),
                format_double(oracle).c_str(), format_double(v_rel).c_str(),
                format_double(e_rel).c_str());
  }

  write_csv(join_path(cfg.output_dir, "table3.csv"), hash,
            {"label", "d", "sigma", "n_vmc", "n_euler", "vmc_price", "euler_price", "oracle_kind",
             "oracle_price", "oracle_std_error", "vmc_rel_error", "euler_rel_error"},
            out_rows);
  return 0;
}

namespace {

struct SelfCheck {
  int failures = 0;
  void operator()(bool ok, const char* name) {
    std::printf("%s %s\n", ok ? "[ok]  " : "[FAIL]", name);
    if (!ok) ++failures;
  }
};

}  // namespace

int cmd_selftest() {
  SelfCheck check;

  {
    const MeshSpec mesh = make_mesh(2, 4, {{0.0, 1.0}, {0.0, 1.0}});
    const Eigen::VectorXd x = to_coords(mesh, 6);
    check(std::abs(x[0] - 0.5) < 1e-15 && std::abs(x[1] - 0.25) < 1e-15,
          "mesh coordinates of an interleaved index");
    bool ok = true;
    for (std::uint64_t k = 0; k < mesh.size(); ++k)
      ok = ok && from_multi(mesh, to_multi(mesh, k)) == k;
    check(ok, "mesh index round-trip");
  }

  {
    const MeshSpec mesh = make_mesh(1, 4, {{0.0, 4.0}});  // dx = 0.25
    const OperatorSpec op = make_diffusion(0.1, BoundaryKind::dirichlet, mesh);
    StencilRow r;
    problem_row(op, mesh, false, 5, r);
    double diag = 0.0, off = 0.0;
    for (const StencilEntry& e : r) (e.col == 5 ? diag : off) += e.w;
    check(std::abs(diag + 3.2) < 1e-12 && std::abs(off - 3.2) < 1e-12,
          "second-difference row weights");

    const MeshSpec pm = make_lattice_mesh(2, 8);
    const OperatorSpec pop = make_diffusion(0.1, BoundaryKind::periodic, pm);
    bool ok = true;
    for (std::uint64_t k = 0; k < pm.size(); ++k) {
      problem_row(pop, pm, false, k, r);
      double sum = 0.0;
      for (const StencilEntry& e : r) sum += e.w;
      ok = ok && std::abs(sum) < 1e-12;
    }
    check(ok, "periodic rows sum to zero");
  }

  check(std::abs(bessel_i(0, 1.0) * std::exp(-1.0) - 0.4657596075936404) < 1e-12 &&
            std::abs(bessel_i(2, 3.0) * std::exp(-3.0) - 0.11178254529695816) < 1e-12,
        "scaled Bessel values");

  {
    NetworkSpec ns;
    ns.n = 8;
    ns.hidden = {16};
    MaskedNet net(ns);
    Eigen::VectorXd p = net.initial_params(3);
    for (int i = 0; i < p.size(); ++i)
      p[i] += 0.05 * std::sin(1.7 * static_cast<double>(i + 1));
    net.set_params(p);
    double sum = 0.0;
    for (std::uint64_t k = 0; k < (std::uint64_t{1} << ns.n); ++k) {
      const double v = net.psi(k);
      sum += v * v;
    }
    check(std::abs(sum - 1.0) < 1e-12, "amplitude normalization");

    const SampleBatch a = net.sample(512, derive_stream(5, "selftest"));
    const SampleBatch b = net.sample(512, derive_stream(5, "selftest"));
    check(a.keys == b.keys && a.counts == b.counts, "sampling determinism");
  }

  {
    const MeshSpec mesh = make_lattice_mesh(1, 2);
    const OperatorSpec op = make_operator(Eigen::MatrixXd::Constant(1, 1, 1.0),
                                          BoundaryKind::dirichlet, mesh);
    NetworkSpec ns;
    ns.n = 2;
    ns.hidden = {4};
    MaskedNet net(ns);
    AnsatzState st;
    st.beta = net.initial_params(1);  // zero head: uniform amplitude
    const Problem prob{mesh, op, SourceFn{}};
    const double at_edge = local_energy(net, st, prob, 0.0, 0);
    check(std::abs(at_edge + 1.0) < 1e-12, "local energy of the uniform state at an edge");

    const GeometryEstimate est = exact_mv(net, st, prob, 0.0);
    const Eigen::MatrixXd m = est.dense_m();
    bool ok = true;
    for (Eigen::Index j = 1; j < m.cols(); ++j) ok = ok && std::abs(m(0, j)) < 1e-10;
    check(ok, "scale row of the exact metric vanishes");
  }

  {
    GeometryEstimate est;
    est.m_dense = Eigen::MatrixXd::Identity(3, 3);
    est.v = Eigen::Vector3d(1.0, -2.0, 0.5);
    const SolveResult sol = solve_direction(est, 1e-3, 1e-12);
    check((sol.dtheta - 1e-3 * est.v).norm() < 1e-15 && sol.rank == 3,
          "identity-metric update");

    GeometryEstimate sing;
    sing.m_dense = Eigen::Vector2d(1.0, 1e-15).asDiagonal();
    sing.v = Eigen::Vector2d(1.0, 1.0);
    const SolveResult s2 = solve_direction(sing, 1e-3, 1e-12);
    check(std::abs(s2.dtheta[0] - 1e-3) < 1e-12 && s2.dtheta[1] == 0.0 && s2.rank == 1,
          "threshold drops a defective direction");
  }

  {
    const OptionSpec spec =
        make_option(OptionKind::call_1d, 1, 1.25, 0.03, Eigen::VectorXd::Constant(1, 0.3),
                    Eigen::MatrixXd::Identity(1, 1), 1.0);
    const ReductionCoeffs rc = reduction_coeffs(spec);
    check(std::abs(rc.a[0] - 1.0 / 6.0) < 1e-12 && std::abs(rc.b + 0.03125) < 1e-12,
          "drift-removal coefficients");
    check(std::abs(analytic_call(spec, 0.0, 1.25) - 0.16604135497351147) < 1e-9,
          "closed-form at-the-money call");

    const McResult mart = mc_expect(spec, Eigen::VectorXd::Constant(1, 1.25), 20000, 0,
                                    [](const Eigen::VectorXd& s) { return s[0]; });
    check(std::abs(mart.value - 1.25) <= 3.0 * mart.std_error,
          "discounted terminal mean is the spot");
  }

  if (check.failures > 0) {
    std::printf("selftest: %d check(s) failed\n", check.failures);
    return 3;
  }
  std::printf("selftest: all checks passed\n");
  return 0;
}

}  // namespace meshvmc
