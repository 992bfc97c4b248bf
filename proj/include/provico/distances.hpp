#pragma once

#include <string>

#include "provico/distributions.hpp"
#include "provico/numerics.hpp"

namespace provico {

enum class Metric { bhattacharyya, euclidean, jensen_shannon, wasserstein2 };

std::string metric_name(Metric m);
Metric metric_from_name(const std::string& name);

struct DistanceMetric {
  Metric kind = Metric::bhattacharyya;
  double lambda = 0.0;  // quadratic-term scale; callers default it to 1/(4D)

  DistanceMetric(Metric k, double l) : kind(k), lambda(l) {
    check(lambda > 0.0, "DistanceMetric: lambda must be positive");
  }
};

inline double default_lambda(std::size_t embed_dim) {
  return 1.0 / (4.0 * static_cast<double>(embed_dim));
}

/// Bhattacharyya distance between N(z_i, var_i) and N(z_j, var_j):
/// (1/4) [ sum_d log((1/4)(r + 1/r + 2)) + lambda sum_d (z_i - z_j)^2 /
/// (var_i + var_j) ] with r = var_i/var_j; the variances are the owning
/// videos' MoG variances.
double bhatta_sample(const Vec64& z_i, const Vec64& z_j, const Vec64& var_i,
                     const Vec64& var_j, double lambda);

/// (1/2) sum_d [ log(var_q/var_p) + var_p/var_q + (mu_p-mu_q)^2/var_q - 1 ]
double kl_gauss(const Vec64& mean_p, const Vec64& var_p, const Vec64& mean_q,
                const Vec64& var_q);
double kl_gauss(const GaussianEmbed& p, const GaussianEmbed& q);

/// Symmetrized KL, (1/2)[KL(p,q) + KL(q,p)].
double js_gauss(const Vec64& mean_p, const Vec64& var_p, const Vec64& mean_q,
                const Vec64& var_q);
double js_gauss(const GaussianEmbed& p, const GaussianEmbed& q);

/// Squared 2-Wasserstein between diagonal Gaussians:
/// sum_d (mu_p - mu_q)^2 + sum_d (sigma_p - sigma_q)^2.
double wasserstein2_gauss(const Vec64& mean_p, const Vec64& var_p,
                          const Vec64& mean_q, const Vec64& var_q);
double wasserstein2_gauss(const GaussianEmbed& p, const GaussianEmbed& q);

/// (1/K^2) sum_k sum_k' |z_i - z_j|^2 (squared Euclidean).
double euclid_mc(const SampleSet& s_i, const SampleSet& s_j);

/// Monte-Carlo video distance: the chosen metric's closed form averaged
/// over the full K x K cross product of draws, each draw acting as the
/// mean of a Gaussian carrying its video's MoG variance.
double video_distance(const SampleSet& s_i, const SampleSet& s_j,
                      const VideoDistribution& dist_i, const VideoDistribution& dist_j,
                      const DistanceMetric& metric);

/// Symmetric B x B matrix of video_distance over a batch; diagonal is
/// the self-distance. Pairs are computed in a fixed order.
Mat64 distance_matrix(const std::vector<VideoDistribution>& dists,
                      const std::vector<SampleSet>& samples,
                      const DistanceMetric& metric, int threads);

}  // namespace provico
