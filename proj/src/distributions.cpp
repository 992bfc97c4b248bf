#include "provico/distributions.hpp"

#include <cmath>

namespace provico {

double geometric_mean_variance(const Vec64& var) {
  check(!var.empty(), "geometric_mean_variance: empty variance vector");
  double log_sum = 0.0;
  for (double v : var) {
    check(v > 0.0, "geometric_mean_variance: variance must be positive");
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(var.size()));
}

double uncertainty(const VideoDistribution& dist) {
  return geometric_mean_variance(dist.var);
}

VideoDistribution combine_mog(std::vector<GaussianEmbed> clips) {
  check(!clips.empty(), "combine_mog: empty clip list");
  const std::size_t d = clips.front().mean.size();
  for (const GaussianEmbed& c : clips) {
    check(c.mean.size() == d && c.var.size() == d,
          "combine_mog: component dimension mismatch");
  }
  const double inv_n = 1.0 / static_cast<double>(clips.size());

  VideoDistribution dist;
  dist.mean.assign(d, 0.0);
  dist.var.assign(d, 0.0);
  dist.var_clamped.assign(d, 0);
  for (const GaussianEmbed& c : clips) {
    for (std::size_t i = 0; i < d; ++i) dist.mean[i] += c.mean[i];
  }
  for (std::size_t i = 0; i < d; ++i) dist.mean[i] *= inv_n;
  for (const GaussianEmbed& c : clips) {
    for (std::size_t i = 0; i < d; ++i) {
      dist.var[i] += c.var[i] + c.mean[i] * c.mean[i];
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    // >= mean of component variances mathematically; the floor only
    // catches floating-point cancellation
    const double raw = dist.var[i] * inv_n - dist.mean[i] * dist.mean[i];
    dist.var_clamped[i] = raw < kVarFloor;
    dist.var[i] = std::max(raw, kVarFloor);
  }
  dist.uncertainty = geometric_mean_variance(dist.var);
  dist.components = std::move(clips);
  check_finite(dist.mean, "combine_mog mean");
  check_finite(dist.var, "combine_mog var");
  return dist;
}

SampleSet sample_with_eps(const VideoDistribution& dist, std::vector<Vec64> eps) {
  check(!eps.empty(), "sample: need at least one draw");
  const std::size_t d = dist.mean.size();
  SampleSet s;
  s.draws.reserve(eps.size());
  for (const Vec64& e : eps) {
    check(e.size() == d, "sample: epsilon dimension mismatch");
    Vec64 z(d);
    for (std::size_t i = 0; i < d; ++i) {
      z[i] = std::sqrt(dist.var[i]) * e[i] + dist.mean[i];
    }
    s.draws.push_back(std::move(z));
  }
  s.eps = std::move(eps);
  return s;
}

SampleSet sample(const VideoDistribution& dist, std::size_t k, Rng& rng) {
  check(k >= 1, "sample: K must be >= 1");
  std::vector<Vec64> eps;
  eps.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    eps.push_back(normal_vector(rng, dist.mean.size()));
  }
  return sample_with_eps(dist, std::move(eps));
}

}  // namespace provico
