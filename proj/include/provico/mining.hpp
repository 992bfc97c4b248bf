#pragma once

#include <string>
#include <utility>
#include <vector>

#include "provico/numerics.hpp"

namespace provico {

enum class MiningMode { identity_only, fixed_tau, adaptive_tau };

std::string mining_mode_name(MiningMode m);
MiningMode mining_mode_from_name(const std::string& name);

// Positive/negative labels over all unordered pairs of a batch,
// self-pairs always positive.
struct PairLabels {
  std::size_t batch_size = 0;
  std::vector<std::uint8_t> positive;  // B x B, symmetric, diagonal set
  double tau_used = 0.0;
  MiningMode mode = MiningMode::identity_only;

  bool is_positive(std::size_t i, std::size_t j) const {
    return positive[i * batch_size + j] != 0;
  }
};

/// Thresholds a symmetric distance matrix into pair labels.
/// fixed_tau: positives are d_ij < tau plus self-pairs (ties negative);
/// adaptive_tau: tau = mean of the diagonal self-distances;
/// identity_only: self-pairs only.
PairLabels mine_pairs(const Mat64& batch_dists, MiningMode mode, double tau_fixed);

/// Precision/recall of mined non-self pairs against class labels.
/// Precision is 1 when nothing beyond the self-pairs was mined.
std::pair<double, double> mining_precision_recall(const PairLabels& labels,
                                                  const std::vector<int>& classes);

}  // namespace provico
