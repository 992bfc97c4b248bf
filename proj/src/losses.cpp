#include "provico/losses.hpp"

#include <cmath>
#include <limits>

namespace provico {

namespace {

constexpr double kProbClamp = 1e-12;

double clamp_prob(double p, bool* clamped) {
  if (p < kProbClamp) {
    if (clamped) *clamped = true;
    return kProbClamp;
  }
  if (p > 1.0 - kProbClamp) {
    if (clamped) *clamped = true;
    return 1.0 - kProbClamp;
  }
  return p;
}

}  // namespace

BatchTrace forward_batch_with_eps(const ModelParams& params,
                                  const std::vector<const Video*>& batch,
                                  std::size_t n_clips,
                                  const std::vector<std::vector<Vec64>>& eps,
                                  int threads) {
  check(!batch.empty(), "forward_batch: empty batch");
  check(eps.size() == batch.size(), "forward_batch: epsilon count mismatch");
  check(n_clips >= 1, "forward_batch: need at least one clip per video");

  BatchTrace trace;
  trace.n_clips = n_clips;
  trace.n_samples = eps.front().size();
  trace.videos.resize(batch.size());

  parallel_chunks(batch.size(), threads, [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t v = begin; v < end; ++v) {
      const Video& video = *batch[v];
      check(video.clips.size() >= n_clips,
            "forward_batch: video '" + video.id + "' has fewer than " +
                std::to_string(n_clips) + " clips");
      VideoTrace& vt = trace.videos[v];
      vt.clips.reserve(n_clips);
      std::vector<GaussianEmbed> embeds;
      embeds.reserve(n_clips);
      double kl = 0.0;
      for (std::size_t n = 0; n < n_clips; ++n) {
        vt.clips.push_back(embed_clip_trace(params, video.clips[n]));
        embeds.push_back(vt.clips.back().embed);
        kl += kl_unit_gauss(embeds.back());
      }
      vt.kl_to_prior = kl / static_cast<double>(n_clips);
      vt.dist = combine_mog(std::move(embeds));
      vt.samples = sample_with_eps(vt.dist, eps[v]);
    }
  });
  return trace;
}

BatchTrace forward_batch(const ModelParams& params,
                         const std::vector<const Video*>& batch, std::size_t n_clips,
                         std::size_t n_samples, Rng& rng, int threads) {
  check(n_samples >= 1, "forward_batch: K must be >= 1");
  std::vector<std::vector<Vec64>> eps(batch.size());
  for (std::size_t v = 0; v < batch.size(); ++v) {
    eps[v].reserve(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k) {
      eps[v].push_back(normal_vector(rng, params.dims.embed_dim));
    }
  }
  return forward_batch_with_eps(params, batch, n_clips, eps, threads);
}

double match_probability(const SampleSet& s_i, const SampleSet& s_j, double a,
                         double b) {
  check(a > 0.0, "match_probability: a must be positive");
  check(s_i.draws.size() == s_j.draws.size(), "match_probability: K mismatch");
  check(!s_i.draws.empty(), "match_probability: empty sample set");
  const std::size_t k = s_i.draws.size();
  const std::size_t d = s_i.draws.front().size();
  double s = 0.0;
  for (const Vec64& zi : s_i.draws) {
    for (const Vec64& zj : s_j.draws) {
      const double r = std::sqrt(squared_distance(zi.data(), zj.data(), d));
      s += sigmoid(-a * r + b);
    }
  }
  return s / static_cast<double>(k * k);
}

double soft_contrastive(bool is_positive, double p_match) {
  const double p = clamp_prob(p_match, nullptr);
  return is_positive ? -std::log(p) : -std::log1p(-p);
}

double stochastic_contrastive(double soft, double u_i, double u_j) {
  check(u_i > 0.0 && u_j > 0.0, "stochastic_contrastive: uncertainties must be > 0");
  return soft / (4.0 * u_i * u_j) + 0.5 * (std::log(u_i) + std::log(u_j));
}

double kl_unit_gauss(const GaussianEmbed& clip) {
  check(clip.mean.size() == clip.var.size(), "kl_unit_gauss: size mismatch");
  double s = 0.0;
  for (std::size_t d = 0; d < clip.mean.size(); ++d) {
    s += clip.var[d] + clip.mean[d] * clip.mean[d] - std::log(clip.var[d]) - 1.0;
  }
  return 0.5 * s;
}

double kl_regularizer(const VideoDistribution& v_i, const VideoDistribution& v_j) {
  auto mean_clip_kl = [](const VideoDistribution& v) {
    check(!v.components.empty(), "kl_regularizer: distribution without components");
    double s = 0.0;
    for (const GaussianEmbed& c : v.components) s += kl_unit_gauss(c);
    return s / static_cast<double>(v.components.size());
  };
  return mean_clip_kl(v_i) + mean_clip_kl(v_j);
}

LossBreakdown total_loss(const ModelParams& params, const BatchTrace& trace,
                         const PairLabels& labels, double beta, Vec64* grad,
                         int threads) {
  const std::size_t b = trace.videos.size();
  check(b >= 1, "total_loss: empty batch");
  check(labels.batch_size == b, "total_loss: label/batch size mismatch");
  check(beta >= 0.0, "total_loss: beta must be >= 0");
  const std::size_t n_draws = trace.n_samples;
  const std::size_t dim = params.dims.embed_dim;
  const double a = params.a();
  const double b_off = params.b();

  // canonical unordered enumeration, self-pairs included
  std::vector<std::pair<std::size_t, std::size_t>> pair_index;
  pair_index.reserve(b * (b + 1) / 2);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = i; j < b; ++j) pair_index.emplace_back(i, j);
  }
  const double pair_weight = 1.0 / static_cast<double>(pair_index.size());

  LossBreakdown out;
  out.pairs.resize(pair_index.size());
  out.uncertainties.resize(b);
  for (std::size_t v = 0; v < b; ++v) {
    out.uncertainties[v] = trace.videos[v].dist.uncertainty;
  }

  const bool want_grad = grad != nullptr;
  const int n_chunks = max_chunks(pair_index.size(), threads);

  // per-chunk accumulators, reduced in chunk order
  struct PairAccum {
    Vec64 dz;      // b * K * D
    Vec64 du;      // b
    Vec64 dklreg;  // b
    double da = 0.0, db = 0.0;
  };
  std::vector<PairAccum> accum(want_grad ? n_chunks : 0);
  if (want_grad) {
    for (auto& acc : accum) {
      acc.dz.assign(b * n_draws * dim, 0.0);
      acc.du.assign(b, 0.0);
      acc.dklreg.assign(b, 0.0);
    }
  }

  parallel_chunks(pair_index.size(), threads, [&](std::size_t begin, std::size_t end,
                                                  int chunk) {
    Vec64 dist_buf(n_draws * n_draws);
    Vec64 sig_buf(n_draws * n_draws);
    for (std::size_t p = begin; p < end; ++p) {
      const auto [i, j] = pair_index[p];
      const VideoTrace& vi = trace.videos[i];
      const VideoTrace& vj = trace.videos[j];
      const bool positive = labels.is_positive(i, j);

      double mean_sig = 0.0;
      for (std::size_t k = 0; k < n_draws; ++k) {
        for (std::size_t k2 = 0; k2 < n_draws; ++k2) {
          const double r = std::sqrt(squared_distance(
              vi.samples.draws[k].data(), vj.samples.draws[k2].data(), dim));
          const double s = sigmoid(-a * r + b_off);
          dist_buf[k * n_draws + k2] = r;
          sig_buf[k * n_draws + k2] = s;
          mean_sig += s;
        }
      }
      const double k2_inv = 1.0 / static_cast<double>(n_draws * n_draws);
      bool clamped = false;
      const double p_match = clamp_prob(mean_sig * k2_inv, &clamped);
      const double soft = positive ? -std::log(p_match) : -std::log1p(-p_match);
      const double u_i = vi.dist.uncertainty;
      const double u_j = vj.dist.uncertainty;
      const double stoc = soft / (4.0 * u_i * u_j) +
                          0.5 * (std::log(u_i) + std::log(u_j));
      const double kl_pair = vi.kl_to_prior + vj.kl_to_prior;

      out.pairs[p] = PairTerm{i, j, positive, p_match, clamped, soft, stoc, kl_pair};

      if (!want_grad) continue;
      PairAccum& acc = accum[chunk];
      const double d_stoc = pair_weight;
      const double d_soft = d_stoc / (4.0 * u_i * u_j);
      acc.du[i] += d_stoc * (-soft / (4.0 * u_i * u_i * u_j) + 0.5 / u_i);
      acc.du[j] += d_stoc * (-soft / (4.0 * u_i * u_j * u_j) + 0.5 / u_j);
      acc.dklreg[i] += beta * pair_weight;
      acc.dklreg[j] += beta * pair_weight;

      const double d_p = clamped ? 0.0
                                 : (positive ? -d_soft / p_match
                                             : d_soft / (1.0 - p_match));
      if (d_p == 0.0) continue;
      for (std::size_t k = 0; k < n_draws; ++k) {
        const double* zi = vi.samples.draws[k].data();
        double* dzi = acc.dz.data() + (i * n_draws + k) * dim;
        for (std::size_t k2 = 0; k2 < n_draws; ++k2) {
          const double r = dist_buf[k * n_draws + k2];
          const double s = sig_buf[k * n_draws + k2];
          const double d_arg = d_p * k2_inv * s * (1.0 - s);
          acc.da += d_arg * (-r);
          acc.db += d_arg;
          if (r <= 0.0) continue;
          const double d_r = d_arg * (-a);
          const double* zj = vj.samples.draws[k2].data();
          double* dzj = acc.dz.data() + (j * n_draws + k2) * dim;
          const double scale = d_r / r;
          for (std::size_t x = 0; x < dim; ++x) {
            const double g = scale * (zi[x] - zj[x]);
            dzi[x] += g;
            dzj[x] -= g;
          }
        }
      }
    }
  });

  double stoc_sum = 0.0, kl_sum = 0.0;
  for (const PairTerm& t : out.pairs) {
    stoc_sum += t.stoc;
    kl_sum += t.kl;
  }
  out.stoc = stoc_sum * pair_weight;
  out.kl = kl_sum * pair_weight;
  out.total = out.stoc + beta * out.kl;

  if (!want_grad) return out;

  // ordered reduction of the pair-level accumulators
  Vec64 dz(b * n_draws * dim, 0.0), du(b, 0.0), dklreg(b, 0.0);
  double da = 0.0, db = 0.0;
  for (const PairAccum& acc : accum) {
    for (std::size_t x = 0; x < dz.size(); ++x) dz[x] += acc.dz[x];
    for (std::size_t v = 0; v < b; ++v) {
      du[v] += acc.du[v];
      dklreg[v] += acc.dklreg[v];
    }
    da += acc.da;
    db += acc.db;
  }

  // per-video pullback into parameter space
  const int v_chunks = max_chunks(b, threads);
  std::vector<Vec64> grad_chunks(v_chunks, Vec64(params.size(), 0.0));
  parallel_chunks(b, threads, [&](std::size_t begin, std::size_t end, int chunk) {
    Vec64 d_mean_v(dim), d_sd(dim), d_var_v(dim), d_mu_n(dim), d_var_n(dim);
    for (std::size_t v = begin; v < end; ++v) {
      const VideoTrace& vt = trace.videos[v];
      const std::size_t n = vt.clips.size();
      const double inv_n = 1.0 / static_cast<double>(n);

      std::fill(d_mean_v.begin(), d_mean_v.end(), 0.0);
      std::fill(d_sd.begin(), d_sd.end(), 0.0);
      for (std::size_t k = 0; k < n_draws; ++k) {
        const double* g = dz.data() + (v * n_draws + k) * dim;
        const double* e = vt.samples.eps[k].data();
        for (std::size_t x = 0; x < dim; ++x) {
          d_mean_v[x] += g[x];
          d_sd[x] += g[x] * e[x];
        }
      }
      const double u_v = vt.dist.uncertainty;
      for (std::size_t x = 0; x < dim; ++x) {
        double dv = d_sd[x] / (2.0 * std::sqrt(vt.dist.var[x]));
        dv += du[v] * u_v / (static_cast<double>(dim) * vt.dist.var[x]);
        d_var_v[x] = vt.dist.var_clamped[x] ? 0.0 : dv;
      }

      for (std::size_t c = 0; c < n; ++c) {
        const GaussianEmbed& clip = vt.clips[c].embed;
        for (std::size_t x = 0; x < dim; ++x) {
          d_mu_n[x] = d_mean_v[x] * inv_n +
                      d_var_v[x] * 2.0 * (clip.mean[x] - vt.dist.mean[x]) * inv_n +
                      dklreg[v] * inv_n * clip.mean[x];
          d_var_n[x] = d_var_v[x] * inv_n +
                       dklreg[v] * inv_n * 0.5 * (1.0 - 1.0 / clip.var[x]);
        }
        clip_backward(params, vt.clips[c], d_mu_n, d_var_n, grad_chunks[chunk]);
      }
    }
  });

  grad->assign(params.size(), 0.0);
  for (const Vec64& g : grad_chunks) {
    for (std::size_t x = 0; x < g.size(); ++x) (*grad)[x] += g[x];
  }
  (*grad)[params.a_raw_offset()] += da * sigmoid(params.a_raw());
  (*grad)[params.b_offset()] += db;
  return out;
}

double infonce_baseline(const std::vector<VideoDistribution>& dists,
                        const PairLabels& labels, double temperature) {
  const std::size_t b = dists.size();
  check(b >= 1, "infonce_baseline: empty batch");
  check(labels.batch_size == b, "infonce_baseline: label/batch size mismatch");
  check(temperature > 0.0, "infonce_baseline: temperature must be positive");

  std::vector<double> norms(b);
  for (std::size_t v = 0; v < b; ++v) {
    norms[v] = std::max(l2_norm(dists[v].mean.data(), dists[v].mean.size()), 1e-12);
  }
  double loss = 0.0;
  Vec64 sims(b);
  for (std::size_t i = 0; i < b; ++i) {
    double max_s = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b; ++j) {
      sims[j] = dot(dists[i].mean, dists[j].mean) / (norms[i] * norms[j]);
      max_s = std::max(max_s, sims[j] / temperature);
    }
    double denom = 0.0, numer = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      const double e = std::exp(sims[j] / temperature - max_s);
      denom += e;
      if (labels.is_positive(i, j)) numer += e;
    }
    loss += -std::log(numer / denom);
  }
  return loss / static_cast<double>(b);
}

}  // namespace provico
