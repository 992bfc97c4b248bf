#include "provico/mining.hpp"

#include <cmath>

namespace provico {

std::string mining_mode_name(MiningMode m) {
  switch (m) {
    case MiningMode::identity_only: return "identity";
    case MiningMode::fixed_tau: return "fixed";
    case MiningMode::adaptive_tau: return "adaptive";
  }
  fail("mining_mode_name: unknown mode");
}

MiningMode mining_mode_from_name(const std::string& name) {
  if (name == "identity") return MiningMode::identity_only;
  if (name == "fixed") return MiningMode::fixed_tau;
  if (name == "adaptive") return MiningMode::adaptive_tau;
  fail("unknown mining mode '" + name + "' (expected identity|fixed|adaptive)");
}

PairLabels mine_pairs(const Mat64& batch_dists, MiningMode mode, double tau_fixed) {
  check(batch_dists.rows == batch_dists.cols, "mine_pairs: matrix must be square");
  const std::size_t b = batch_dists.rows;
  check(b >= 1, "mine_pairs: empty batch");
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = i + 1; j < b; ++j) {
      if (std::abs(batch_dists(i, j) - batch_dists(j, i)) > 1e-9) {
        fail("mine_pairs: distance matrix asymmetric at (" + std::to_string(i) +
             "," + std::to_string(j) + ")");
      }
    }
  }

  PairLabels labels;
  labels.batch_size = b;
  labels.mode = mode;
  labels.positive.assign(b * b, 0);
  for (std::size_t i = 0; i < b; ++i) labels.positive[i * b + i] = 1;

  if (mode == MiningMode::identity_only) {
    labels.tau_used = 0.0;
    return labels;
  }

  double tau = tau_fixed;
  if (mode == MiningMode::adaptive_tau) {
    double s = 0.0;
    for (std::size_t i = 0; i < b; ++i) s += batch_dists(i, i);
    tau = s / static_cast<double>(b);
  } else {
    check(tau_fixed > 0.0, "mine_pairs: fixed tau must be positive");
  }
  labels.tau_used = tau;

  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = i + 1; j < b; ++j) {
      if (batch_dists(i, j) < tau) {  // ties are negative
        labels.positive[i * b + j] = 1;
        labels.positive[j * b + i] = 1;
      }
    }
  }
  return labels;
}

std::pair<double, double> mining_precision_recall(const PairLabels& labels,
                                                  const std::vector<int>& classes) {
  const std::size_t b = labels.batch_size;
  check(classes.size() == b, "mining_precision_recall: label count mismatch");

  std::size_t mined = 0, mined_correct = 0, same_class = 0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = i + 1; j < b; ++j) {
      const bool same = classes[i] == classes[j];
      if (same) ++same_class;
      if (labels.is_positive(i, j)) {
        ++mined;
        if (same) ++mined_correct;
      }
    }
  }
  const double precision =
      mined == 0 ? 1.0
                 : static_cast<double>(mined_correct) / static_cast<double>(mined);
  const double recall =
      same_class == 0
          ? 0.0
          : static_cast<double>(mined_correct) / static_cast<double>(same_class);
  return {precision, recall};
}

}  // namespace provico
