// SPDX-License-Identifier: MIT
//
// Masked autoregressive ansatz over n-bit strings:
//   psi(k) = prod_i sqrt(p_i(k_i | k_before)),
// where the conditionals come from one masked MLP pass (logit i only sees
// bits earlier in the sampling order), so psi is strictly positive and
// unit-normalized by construction, and exact ancestral sampling from psi^2
// costs n forward passes. Conditionals are squashed into
// [clamp, 1 - clamp] by an affine map of the sigmoid, which keeps them
// smooth and bounds psi away from zero.
//
// Parameters are only the unmasked weights plus all biases, flattened layer
// by layer (active weights row-major, then the bias). The dense weight
// matrices keep structural zeros at masked slots.
#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "meshvmc/common.hpp"

namespace meshvmc {

struct NetworkSpec {
  int n = 0;
  std::vector<int> hidden = {64, 64};
  // ordering[pos] = bit generated at sequence position pos; empty = identity.
  std::vector<int> ordering;
  double prob_clamp = 1e-7;
};

// Unique sorted samples with multiplicities; sum(counts) = b_total.
struct SampleBatch {
  std::int64_t b_total = 0;
  std::vector<std::uint64_t> keys;
  std::vector<std::int64_t> counts;
};

class MaskedNet {
 public:
  explicit MaskedNet(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  int n_params() const { return n_params_; }
  const Eigen::VectorXd& params() const { return flat_; }
  void set_params(const Eigen::VectorXd& p);

  // Variance-scaled random hidden layers, zero final layer (uniform psi).
  Eigen::VectorXd initial_params(std::uint64_t seed) const;

  double log_psi(std::uint64_t k) const;
  double psi(std::uint64_t k) const;
  void batch_log_psi(const std::vector<std::uint64_t>& keys, Eigen::VectorXd& out) const;

  // Per-sample score d log psi / d params into columns of `scores`
  // (n_params x keys.size()), log psi values alongside.
  void batch_scores(const std::vector<std::uint64_t>& keys, Eigen::MatrixXd& scores,
                    Eigen::VectorXd& log_psi_out) const;

  // Ancestral sampling from psi^2. Draw s of bit position pos consumes
  // uniform (pos * b + s) of the stream, so results are independent of
  // internal batching.
  SampleBatch sample(std::int64_t b, std::uint64_t stream_key) const;

  // p_i(1 | prefix of k) for every bit i.
  Eigen::VectorXd conditionals(std::uint64_t k) const;

 private:
  struct Layer {
    Eigen::MatrixXd w;      // rows x cols, masked slots pinned at zero
    Eigen::VectorXd b;
    Eigen::MatrixXd mask;   // 1 allowed / 0 masked
    std::vector<std::pair<int, int>> active;  // row-major list of allowed slots
  };

  void forward_chunk(const std::vector<std::uint64_t>& keys, std::size_t begin, std::size_t count,
                     std::vector<Eigen::MatrixXd>& acts) const;
  double log_psi_from_logits(std::uint64_t k, const Eigen::Ref<const Eigen::VectorXd>& z) const;

  NetworkSpec spec_;
  std::vector<Layer> layers_;
  std::vector<int> rank_of_bit_;
  int n_params_ = 0;
  Eigen::VectorXd flat_;
};

}  // namespace meshvmc
