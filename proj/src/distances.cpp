#include "provico/distances.hpp"

#include <cmath>

namespace provico {

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::bhattacharyya: return "bhattacharyya";
    case Metric::euclidean: return "euclidean";
    case Metric::jensen_shannon: return "jensen_shannon";
    case Metric::wasserstein2: return "wasserstein2";
  }
  fail("metric_name: unknown metric");
}

Metric metric_from_name(const std::string& name) {
  if (name == "bhattacharyya") return Metric::bhattacharyya;
  if (name == "euclidean") return Metric::euclidean;
  if (name == "jensen_shannon") return Metric::jensen_shannon;
  if (name == "wasserstein2") return Metric::wasserstein2;
  fail("unknown distance metric '" + name +
       "' (expected bhattacharyya|euclidean|jensen_shannon|wasserstein2)");
}

double bhatta_sample(const Vec64& z_i, const Vec64& z_j, const Vec64& var_i,
                     const Vec64& var_j, double lambda) {
  const std::size_t d = z_i.size();
  check(z_j.size() == d && var_i.size() == d && var_j.size() == d,
        "bhatta_sample: dimension mismatch");
  check(lambda > 0.0, "bhatta_sample: lambda must be positive");
  double log_term = 0.0;
  double quad = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double r = var_i[k] / var_j[k];
    log_term += std::log(0.25 * (r + 1.0 / r + 2.0));
    const double diff = z_i[k] - z_j[k];
    quad += diff * diff / (var_i[k] + var_j[k]);
  }
  return 0.25 * (log_term + lambda * quad);
}

double kl_gauss(const Vec64& mean_p, const Vec64& var_p, const Vec64& mean_q,
                const Vec64& var_q) {
  const std::size_t d = mean_p.size();
  check(mean_q.size() == d && var_p.size() == d && var_q.size() == d,
        "kl_gauss: dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double diff = mean_p[k] - mean_q[k];
    s += std::log(var_q[k] / var_p[k]) + var_p[k] / var_q[k] +
         diff * diff / var_q[k] - 1.0;
  }
  return 0.5 * s;
}

double kl_gauss(const GaussianEmbed& p, const GaussianEmbed& q) {
  return kl_gauss(p.mean, p.var, q.mean, q.var);
}

double js_gauss(const Vec64& mean_p, const Vec64& var_p, const Vec64& mean_q,
                const Vec64& var_q) {
  return 0.5 * (kl_gauss(mean_p, var_p, mean_q, var_q) +
                kl_gauss(mean_q, var_q, mean_p, var_p));
}

double js_gauss(const GaussianEmbed& p, const GaussianEmbed& q) {
  return js_gauss(p.mean, p.var, q.mean, q.var);
}

double wasserstein2_gauss(const Vec64& mean_p, const Vec64& var_p,
                          const Vec64& mean_q, const Vec64& var_q) {
  const std::size_t d = mean_p.size();
  check(mean_q.size() == d && var_p.size() == d && var_q.size() == d,
        "wasserstein2_gauss: dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double dm = mean_p[k] - mean_q[k];
    const double ds = std::sqrt(var_p[k]) - std::sqrt(var_q[k]);
    s += dm * dm + ds * ds;
  }
  return s;
}

double wasserstein2_gauss(const GaussianEmbed& p, const GaussianEmbed& q) {
  return wasserstein2_gauss(p.mean, p.var, q.mean, q.var);
}

double euclid_mc(const SampleSet& s_i, const SampleSet& s_j) {
  check(s_i.draws.size() == s_j.draws.size(), "euclid_mc: K mismatch");
  check(!s_i.draws.empty(), "euclid_mc: empty sample set");
  const std::size_t k = s_i.draws.size();
  const std::size_t d = s_i.draws.front().size();
  double s = 0.0;
  for (const Vec64& zi : s_i.draws) {
    for (const Vec64& zj : s_j.draws) {
      s += squared_distance(zi.data(), zj.data(), d);
    }
  }
  return s / static_cast<double>(k * k);
}

namespace {

// The variance part of each kernel is constant over the K x K draws, so
// the MC average reduces to const + sum_d w_d * mean_kk'((z_i - z_j)_d^2).
struct KernelTerms {
  double constant = 0.0;
  Vec64 quad_weight;
};

KernelTerms kernel_terms(const Vec64& var_i, const Vec64& var_j,
                         const DistanceMetric& metric) {
  const std::size_t d = var_i.size();
  KernelTerms t;
  t.quad_weight.assign(d, 0.0);
  switch (metric.kind) {
    case Metric::bhattacharyya:
      for (std::size_t k = 0; k < d; ++k) {
        const double r = var_i[k] / var_j[k];
        t.constant += 0.25 * std::log(0.25 * (r + 1.0 / r + 2.0));
        t.quad_weight[k] = 0.25 * metric.lambda / (var_i[k] + var_j[k]);
      }
      break;
    case Metric::euclidean:
      for (std::size_t k = 0; k < d; ++k) t.quad_weight[k] = 1.0;
      break;
    case Metric::jensen_shannon:
      for (std::size_t k = 0; k < d; ++k) {
        const double r = var_i[k] / var_j[k];
        t.constant += 0.25 * (r + 1.0 / r - 2.0);
        t.quad_weight[k] = 0.25 * (1.0 / var_i[k] + 1.0 / var_j[k]);
      }
      break;
    case Metric::wasserstein2:
      for (std::size_t k = 0; k < d; ++k) {
        const double ds = std::sqrt(var_i[k]) - std::sqrt(var_j[k]);
        t.constant += ds * ds;
        t.quad_weight[k] = 1.0;
      }
      break;
  }
  return t;
}

}  // namespace

double video_distance(const SampleSet& s_i, const SampleSet& s_j,
                      const VideoDistribution& dist_i, const VideoDistribution& dist_j,
                      const DistanceMetric& metric) {
  check(s_i.draws.size() == s_j.draws.size(), "video_distance: K mismatch");
  check(!s_i.draws.empty(), "video_distance: empty sample set");
  const std::size_t d = dist_i.var.size();
  check(dist_j.var.size() == d, "video_distance: dimension mismatch");
  const KernelTerms terms = kernel_terms(dist_i.var, dist_j.var, metric);

  const std::size_t k = s_i.draws.size();
  double quad = 0.0;
  for (const Vec64& zi : s_i.draws) {
    for (const Vec64& zj : s_j.draws) {
      double s = 0.0;
      for (std::size_t x = 0; x < d; ++x) {
        const double diff = zi[x] - zj[x];
        s += terms.quad_weight[x] * diff * diff;
      }
      quad += s;
    }
  }
  return terms.constant + quad / static_cast<double>(k * k);
}

Mat64 distance_matrix(const std::vector<VideoDistribution>& dists,
                      const std::vector<SampleSet>& samples,
                      const DistanceMetric& metric, int threads) {
  check(dists.size() == samples.size(), "distance_matrix: size mismatch");
  const std::size_t b = dists.size();
  Mat64 m(b, b, 0.0);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(b * (b + 1) / 2);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = i; j < b; ++j) pairs.emplace_back(i, j);
  }
  parallel_chunks(pairs.size(), threads,
                  [&](std::size_t begin, std::size_t end, int) {
                    for (std::size_t p = begin; p < end; ++p) {
                      const auto [i, j] = pairs[p];
                      const double v = video_distance(samples[i], samples[j],
                                                      dists[i], dists[j], metric);
                      m(i, j) = v;
                      m(j, i) = v;
                    }
                  });
  return m;
}

}  // namespace provico
