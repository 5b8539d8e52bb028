// SPDX-License-Identifier: MIT
#include "meshvmc/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "meshvmc/mesh.hpp"
#include "meshvmc/rng.hpp"

namespace meshvmc {

namespace {

constexpr std::size_t kChunk = 4096;

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

MaskedNet::MaskedNet(NetworkSpec spec) : spec_(std::move(spec)) {
  const int n = spec_.n;
  require(n >= 1 && n <= 62, "ansatz: n must be in [1, 62]");
  for (int h : spec_.hidden) require(h >= 1, "ansatz: hidden widths must be >= 1");
  require(spec_.prob_clamp >= 0.0 && spec_.prob_clamp < 0.5,
          "ansatz: prob_clamp must lie in [0, 0.5)");

  if (spec_.ordering.empty()) {
    spec_.ordering.resize(n);
    for (int i = 0; i < n; ++i) spec_.ordering[i] = i;
  }
  require(spec_.ordering.size() == static_cast<std::size_t>(n),
          "ansatz: ordering must list every bit once");
  rank_of_bit_.assign(n, -1);
  for (int pos = 0; pos < n; ++pos) {
    const int b = spec_.ordering[pos];
    require(b >= 0 && b < n && rank_of_bit_[b] < 0, "ansatz: ordering must be a permutation");
    rank_of_bit_[b] = pos;
  }

  // Unit degrees: input/output unit for bit b has degree rank+1; hidden units
  // cycle through 1..n-1 (0 when n == 1, connecting to no input).
  std::vector<int> sizes;
  sizes.push_back(n);
  for (int h : spec_.hidden) sizes.push_back(h);
  sizes.push_back(n);
  const int n_layers = static_cast<int>(sizes.size()) - 1;

  auto degree = [&](int layer, int unit) -> int {
    if (layer == 0 || layer == n_layers) return rank_of_bit_[unit] + 1;
    return n >= 2 ? 1 + (unit % (n - 1)) : 0;
  };

  layers_.resize(n_layers);
  n_params_ = 0;
  for (int l = 0; l < n_layers; ++l) {
    Layer& layer = layers_[l];
    const int rows = sizes[l + 1];
    const int cols = sizes[l];
    layer.w = Eigen::MatrixXd::Zero(rows, cols);
    layer.b = Eigen::VectorXd::Zero(rows);
    layer.mask = Eigen::MatrixXd::Zero(rows, cols);
    const bool to_output = (l == n_layers - 1);
    for (int r = 0; r < rows; ++r) {
      const int dr = degree(l + 1, r);
      for (int c = 0; c < cols; ++c) {
        const int dc = degree(l, c);
        const bool allowed = to_output ? (dc < dr) : (dc <= dr);
        if (allowed) {
          layer.mask(r, c) = 1.0;
          layer.active.emplace_back(r, c);
        }
      }
    }
    n_params_ += static_cast<int>(layer.active.size()) + rows;
  }
  flat_ = Eigen::VectorXd::Zero(n_params_);
}

void MaskedNet::set_params(const Eigen::VectorXd& p) {
  require(p.size() == n_params_, "ansatz: parameter vector has wrong length");
  flat_ = p;
  int idx = 0;
  for (Layer& layer : layers_) {
    for (const auto& [r, c] : layer.active) layer.w(r, c) = p[idx++];
    for (int r = 0; r < layer.b.size(); ++r) layer.b[r] = p[idx++];
  }
}

Eigen::VectorXd MaskedNet::initial_params(std::uint64_t seed) const {
  const std::uint64_t key = derive_stream(seed, "ansatz-init");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n_params_);
  int idx = 0;
  std::uint64_t draw = 0;
  const int n_layers = static_cast<int>(layers_.size());
  for (int l = 0; l < n_layers; ++l) {
    const Layer& layer = layers_[l];
    const bool final_layer = (l == n_layers - 1);
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer.w.cols()));
    for (std::size_t a = 0; a < layer.active.size(); ++a) {
      p[idx++] = final_layer ? 0.0 : scale * draw_normal(key, draw);
      ++draw;
    }
    idx += static_cast<int>(layer.b.size());  // biases start at zero
  }
  return p;
}

void MaskedNet::forward_chunk(const std::vector<std::uint64_t>& keys, std::size_t begin,
                              std::size_t count, std::vector<Eigen::MatrixXd>& acts) const {
  const int n = spec_.n;
  acts.resize(layers_.size() + 1);
  acts[0].resize(n, count);
  for (std::size_t s = 0; s < count; ++s)
    for (int i = 0; i < n; ++i) acts[0](i, s) = static_cast<double>(bit_of(keys[begin + s], i));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    // Column-at-a-time keeps the accumulation order of each sample identical
    // for every batch size, so batched calls match per-sample calls bitwise.
    acts[l + 1].resize(layers_[l].w.rows(), static_cast<Eigen::Index>(count));
    for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(count); ++s) {
      acts[l + 1].col(s).noalias() = layers_[l].w * acts[l].col(s);
      acts[l + 1].col(s) += layers_[l].b;
    }
    if (l + 1 < layers_.size()) acts[l + 1] = acts[l + 1].array().tanh();
  }
}

double MaskedNet::log_psi_from_logits(std::uint64_t k,
                                      const Eigen::Ref<const Eigen::VectorXd>& z) const {
  const double eps = spec_.prob_clamp;
  double acc = 0.0;
  for (int i = 0; i < spec_.n; ++i) {
    const double q1 = eps + (1.0 - 2.0 * eps) * sigmoid(z[i]);
    acc += std::log(bit_of(k, i) ? q1 : 1.0 - q1);
  }
  return 0.5 * acc;
}

double MaskedNet::log_psi(std::uint64_t k) const {
  std::vector<std::uint64_t> keys{k};
  Eigen::VectorXd out(1);
  batch_log_psi(keys, out);
  return out[0];
}

double MaskedNet::psi(std::uint64_t k) const { return std::exp(log_psi(k)); }

void MaskedNet::batch_log_psi(const std::vector<std::uint64_t>& keys, Eigen::VectorXd& out) const {
  out.resize(static_cast<Eigen::Index>(keys.size()));
  std::vector<Eigen::MatrixXd> acts;
  for (std::size_t begin = 0; begin < keys.size(); begin += kChunk) {
    const std::size_t count = std::min(kChunk, keys.size() - begin);
    forward_chunk(keys, begin, count, acts);
    const Eigen::MatrixXd& logits = acts.back();
    for (std::size_t s = 0; s < count; ++s)
      out[static_cast<Eigen::Index>(begin + s)] = log_psi_from_logits(keys[begin + s], logits.col(s));
  }
}

void MaskedNet::batch_scores(const std::vector<std::uint64_t>& keys, Eigen::MatrixXd& scores,
                             Eigen::VectorXd& log_psi_out) const {
  const int n = spec_.n;
  const double eps = spec_.prob_clamp;
  const std::size_t u = keys.size();
  scores.resize(n_params_, static_cast<Eigen::Index>(u));
  log_psi_out.resize(static_cast<Eigen::Index>(u));

  std::vector<Eigen::MatrixXd> acts;
  Eigen::VectorXd g, gin;
  for (std::size_t begin = 0; begin < u; begin += kChunk) {
    const std::size_t count = std::min(kChunk, u - begin);
    forward_chunk(keys, begin, count, acts);
    for (std::size_t s = 0; s < count; ++s) {
      const std::uint64_t k = keys[begin + s];
      const Eigen::Index col = static_cast<Eigen::Index>(begin + s);
      log_psi_out[col] = log_psi_from_logits(k, acts.back().col(s));

      // d log psi / d logit_i = 0.5 * (+-) (1-2eps) s'(z) / p(chosen)
      g.resize(n);
      for (int i = 0; i < n; ++i) {
        const double sg = sigmoid(acts.back()(i, s));
        const double q1 = eps + (1.0 - 2.0 * eps) * sg;
        const double dq = (1.0 - 2.0 * eps) * sg * (1.0 - sg);
        g[i] = 0.5 * (bit_of(k, i) ? dq / q1 : -dq / (1.0 - q1));
      }

      int idx = n_params_;
      for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
        const Layer& layer = layers_[l];
        idx -= static_cast<int>(layer.active.size()) + static_cast<int>(layer.b.size());
        int slot = idx;
        for (const auto& [r, c] : layer.active) scores(slot++, col) = g[r] * acts[l](c, s);
        for (int r = 0; r < layer.b.size(); ++r) scores(slot++, col) = g[r];
        if (l > 0) {
          gin.noalias() = layer.w.transpose() * g;
          // tanh'(z) = 1 - a^2 with a the stored activation
          g = gin.cwiseProduct(
              (1.0 - acts[l].col(s).array().square()).matrix());
        }
      }
    }
  }
}

SampleBatch MaskedNet::sample(std::int64_t b, std::uint64_t stream_key) const {
  require(b >= 1, "ansatz: batch size must be >= 1");
  const int n = spec_.n;
  const double eps = spec_.prob_clamp;

  std::vector<std::uint64_t> keys(static_cast<std::size_t>(b), 0);
  std::vector<Eigen::MatrixXd> acts;
  std::vector<std::uint64_t> chunk_keys;

  for (std::int64_t begin = 0; begin < b; begin += static_cast<std::int64_t>(kChunk)) {
    const std::int64_t count = std::min<std::int64_t>(static_cast<std::int64_t>(kChunk), b - begin);
    chunk_keys.assign(static_cast<std::size_t>(count), 0);
    for (int pos = 0; pos < n; ++pos) {
      const int bit = spec_.ordering[pos];
      forward_chunk(chunk_keys, 0, static_cast<std::size_t>(count), acts);
      for (std::int64_t s = 0; s < count; ++s) {
        const double z = acts.back()(bit, static_cast<Eigen::Index>(s));
        const double q1 = eps + (1.0 - 2.0 * eps) * sigmoid(z);
        const double udraw = draw_unit(
            stream_key, static_cast<std::uint64_t>(pos) * static_cast<std::uint64_t>(b) +
                            static_cast<std::uint64_t>(begin + s));
        if (udraw < q1) chunk_keys[static_cast<std::size_t>(s)] |= std::uint64_t{1} << bit;
      }
    }
    std::copy(chunk_keys.begin(), chunk_keys.end(),
              keys.begin() + static_cast<std::size_t>(begin));
  }

  std::sort(keys.begin(), keys.end());
  SampleBatch batch;
  batch.b_total = b;
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    batch.keys.push_back(keys[i]);
    batch.counts.push_back(static_cast<std::int64_t>(j - i));
    i = j;
  }
  return batch;
}

Eigen::VectorXd MaskedNet::conditionals(std::uint64_t k) const {
  std::vector<std::uint64_t> keys{k};
  std::vector<Eigen::MatrixXd> acts;
  forward_chunk(keys, 0, 1, acts);
  Eigen::VectorXd out(spec_.n);
  const double eps = spec_.prob_clamp;
  for (int i = 0; i < spec_.n; ++i)
    out[i] = eps + (1.0 - 2.0 * eps) * sigmoid(acts.back()(i, 0));
  return out;
}

}  // namespace meshvmc
