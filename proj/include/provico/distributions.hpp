#pragma once

#include <vector>

#include "provico/heads.hpp"
#include "provico/numerics.hpp"

namespace provico {

// Uniform-weight Mixture of Gaussians over one video's clip embeddings,
// with cached moments and scalar uncertainty.
struct VideoDistribution {
  std::vector<GaussianEmbed> components;
  Vec64 mean;  // (1/N) sum of component means
  Vec64 var;   // (1/N) sum (var_n + mean_n^2) - mean^2, floored at kVarFloor
  std::vector<std::uint8_t> var_clamped;
  double uncertainty = 0.0;  // geometric mean of var, computed in log space
};

// K reparameterized draws from one video distribution; the epsilons are
// retained so backprop can reuse the identical draws.
struct SampleSet {
  std::vector<Vec64> draws;  // z[k] = sqrt(var) * eps[k] + mean
  std::vector<Vec64> eps;
};

/// exp(mean(log var)); the log-space form avoids underflow at large D.
double geometric_mean_variance(const Vec64& var);

double uncertainty(const VideoDistribution& dist);

VideoDistribution combine_mog(std::vector<GaussianEmbed> clips);

SampleSet sample_with_eps(const VideoDistribution& dist, std::vector<Vec64> eps);
SampleSet sample(const VideoDistribution& dist, std::size_t k, Rng& rng);

}  // namespace provico
