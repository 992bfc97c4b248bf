#pragma once

#include <vector>

#include "provico/data_io.hpp"
#include "provico/distributions.hpp"
#include "provico/heads.hpp"
#include "provico/mining.hpp"
#include "provico/numerics.hpp"

namespace provico {

// Cached forward pass of one video: clip activations, the MoG and the
// reparameterized draws. Everything backprop needs, nothing else.
struct VideoTrace {
  std::vector<ClipTrace> clips;
  VideoDistribution dist;
  SampleSet samples;
  double kl_to_prior = 0.0;  // mean over clips of KL(clip || N(0,I))
};

struct BatchTrace {
  std::vector<VideoTrace> videos;
  std::size_t n_clips = 0;
  std::size_t n_samples = 0;
};

/// Embeds the first n_clips clips of each video, combines the MoG and
/// draws with the provided epsilons (one K x D block per video).
BatchTrace forward_batch_with_eps(const ModelParams& params,
                                  const std::vector<const Video*>& batch,
                                  std::size_t n_clips,
                                  const std::vector<std::vector<Vec64>>& eps,
                                  int threads);

/// Same, drawing fresh epsilons from rng (in batch order, so the draw
/// stream is independent of the thread count).
BatchTrace forward_batch(const ModelParams& params,
                         const std::vector<const Video*>& batch, std::size_t n_clips,
                         std::size_t n_samples, Rng& rng, int threads);

struct PairTerm {
  std::size_t i = 0, j = 0;
  bool positive = false;
  double match_prob = 0.0;  // clamped to [1e-12, 1 - 1e-12]
  bool clamped = false;
  double soft = 0.0;
  double stoc = 0.0;
  double kl = 0.0;
};

struct LossBreakdown {
  double total = 0.0;
  double stoc = 0.0;  // mean of stochastic terms over all unordered pairs
  double kl = 0.0;    // mean of KL terms over the same pair enumeration
  std::vector<PairTerm> pairs;
  Vec64 uncertainties;  // per video
};

/// (1/K^2) sum_kk' sigmoid(-a |z_i - z_j|_2 + b); the plain l2 norm.
double match_probability(const SampleSet& s_i, const SampleSet& s_j, double a,
                         double b);

/// -log p for positives, -log(1 - p) for negatives; p clamped first.
double soft_contrastive(bool is_positive, double p_match);

/// soft / (4 u_i u_j) + (log u_i + log u_j) / 2.
double stochastic_contrastive(double soft, double u_i, double u_j);

/// KL(N(mean, diag var) || N(0, I)) for one clip embedding.
double kl_unit_gauss(const GaussianEmbed& clip);

/// Mean clip KL of each video, summed over the two videos of the pair.
double kl_regularizer(const VideoDistribution& v_i, const VideoDistribution& v_j);

/// Full objective over all unordered pairs (self-pairs included as
/// positives), averaged over the pair count: total = stoc + beta * kl.
/// When grad is non-null it receives d total / d params (same layout as
/// params.data); the epsilons retained in the traces are reused, making
/// the value a deterministic function of params for gradient checks.
LossBreakdown total_loss(const ModelParams& params, const BatchTrace& trace,
                         const PairLabels& labels, double beta, Vec64* grad,
                         int threads);

/// InfoNCE over cosine similarities of the MoG means with mined
/// positives as the positive sets. Comparison baseline only; not
/// differentiated.
double infonce_baseline(const std::vector<VideoDistribution>& dists,
                        const PairLabels& labels, double temperature);

}  // namespace provico
