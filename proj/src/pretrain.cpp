// SPDX-License-Identifier: MIT
#include "meshvmc/pretrain.hpp"

#include <cmath>

#include "meshvmc/common.hpp"
#include "meshvmc/rng.hpp"

namespace meshvmc {

double lr_at(const PretrainConfig& cfg, std::int64_t iter) {
  const std::int64_t warm = cfg.iters / 10;
  const std::int64_t cut1 = 3 * cfg.iters / 7;
  const std::int64_t cut2 = 5 * cfg.iters / 7;
  if (warm > 0 && iter < warm)
    return cfg.lr * static_cast<double>(iter) / static_cast<double>(warm);
  if (iter < cut1) return cfg.lr;
  if (iter < cut2) return cfg.lr * 0.1;
  return cfg.lr * 0.01;
}

double pretrain_loss(MaskedNet& net, const AnsatzState& state, const GridFunction& target,
                     const std::vector<std::uint64_t>& batch_keys) {
  require(!batch_keys.empty(), "pretrain: empty batch");
  net.set_params(state.beta);
  Eigen::VectorXd lp;
  net.batch_log_psi(batch_keys, lp);
  double acc = 0.0;
  for (std::size_t i = 0; i < batch_keys.size(); ++i) {
    const double model = std::exp(state.log_alpha + lp[static_cast<Eigen::Index>(i)]);
    const double r = model - target[static_cast<Eigen::Index>(batch_keys[i])];
    acc += r * r;
  }
  return acc / static_cast<double>(batch_keys.size());
}

PretrainResult pretrain(MaskedNet& net, const GridFunction& target, const PretrainConfig& cfg) {
  const int n = net.spec().n;
  require(target.size() == (Eigen::Index{1} << n), "pretrain: target length must be 2^n");
  require(target.norm() > 0.0, "pretrain: target must have positive norm");
  require(cfg.iters >= 1 && cfg.batch >= 1, "pretrain: iters and batch must be >= 1");
  require(cfg.adam.beta1 > 0.0 && cfg.adam.beta1 < 1.0 && cfg.adam.beta2 > 0.0 &&
              cfg.adam.beta2 < 1.0,
          "pretrain: adam betas must lie in (0,1)");

  const std::uint64_t key_mask = (n == 64) ? ~0ull : ((1ull << n) - 1);
  const int p = net.n_params();

  PretrainResult out;
  out.state.beta = net.initial_params(cfg.seed);

  // Scale init: overlap of the near-uniform fresh network with the target.
  double s = target.sum() * std::pow(2.0, -0.5 * n);
  if (!(s > 0.0)) s = target.norm();
  out.state.log_alpha = std::log(s);

  // Flat parameter order: scale first, then network weights.
  Eigen::VectorXd m = Eigen::VectorXd::Zero(p + 1);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(p + 1);
  Eigen::VectorXd grad(p + 1);

  std::vector<std::uint64_t> keys(static_cast<std::size_t>(cfg.batch));
  Eigen::MatrixXd scores;
  Eigen::VectorXd lp;

  AnsatzState state = out.state;
  for (std::int64_t it = 0; it < cfg.iters; ++it) {
    const std::uint64_t draw_key =
        derive_stream(cfg.seed, "pretrain-batch", static_cast<std::uint64_t>(it));
    for (int i = 0; i < cfg.batch; ++i)
      keys[static_cast<std::size_t>(i)] = draw_u64(draw_key, static_cast<std::uint64_t>(i)) & key_mask;

    net.set_params(state.beta);
    net.batch_scores(keys, scores, lp);

    double loss = 0.0;
    grad.setZero();
    for (int i = 0; i < cfg.batch; ++i) {
      const Eigen::Index ii = i;
      const double model = std::exp(state.log_alpha + lp[ii]);
      const double r = model - target[static_cast<Eigen::Index>(keys[static_cast<std::size_t>(i)])];
      loss += r * r;
      const double w = 2.0 * r * model;
      grad[0] += w;
      grad.tail(p) += w * scores.col(ii);
    }
    const double inv_b = 1.0 / static_cast<double>(cfg.batch);
    loss *= inv_b;
    grad *= inv_b;

    if (!std::isfinite(loss)) {
      out.aborted = true;
      out.abort_reason = "non-finite loss at iteration " + std::to_string(it);
      break;
    }
    out.state = state;  // last good checkpoint

    const double lr = lr_at(cfg, it);
    if (cfg.trace_stride > 0 && it % cfg.trace_stride == 0) out.trace.push_back({it, loss, lr});

    // Adam with bias correction, step count starting at 1.
    const double t = static_cast<double>(it + 1);
    const double bc1 = 1.0 - std::pow(cfg.adam.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.adam.beta2, t);
    m = cfg.adam.beta1 * m + (1.0 - cfg.adam.beta1) * grad;
    v = cfg.adam.beta2 * v + (1.0 - cfg.adam.beta2) * grad.cwiseProduct(grad);
    for (Eigen::Index j = 0; j < p + 1; ++j) {
      const double mh = m[j] / bc1;
      const double vh = v[j] / bc2;
      const double step = lr * mh / (std::sqrt(vh) + cfg.adam.eps);
      if (j == 0)
        state.log_alpha -= step;
      else
        state.beta[j - 1] -= step;
    }
  }

  if (!out.aborted) out.state = state;

  if (n <= 16) {
    net.set_params(out.state.beta);
    const GridFunction fit = dense_state(net, out.state);
    out.fit_rel_error = (fit - target).norm() / target.norm();
  }
  return out;
}

}  // namespace meshvmc
