#pragma once

#include <string>
#include <vector>

#include "provico/data_io.hpp"
#include "provico/distances.hpp"
#include "provico/losses.hpp"
#include "provico/mining.hpp"

namespace provico {

enum class Similarity { match_probability, cosine };

std::string similarity_name(Similarity s);
Similarity similarity_from_name(const std::string& name);

std::vector<VideoDistribution> embed_corpus(const ModelParams& params,
                                            const Corpus& corpus,
                                            std::size_t n_clips, int threads);

std::vector<SampleSet> draw_samples(const std::vector<VideoDistribution>& dists,
                                    std::size_t k, Rng& rng);

struct QueryResult {
  std::string id;
  int label = -1;
  bool excluded = false;              // class absent from gallery (or unlabeled)
  std::size_t first_hit_rank = 0;     // 0-based; npos when no same-class item
  std::vector<std::string> top_ids;   // up to max(ks) neighbors, best first
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

struct RetrievalReport {
  Similarity similarity = Similarity::match_probability;
  std::vector<std::size_t> ks = {1, 5, 10, 20};
  std::vector<double> recall_at;  // parallel to ks
  std::vector<QueryResult> queries;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;
};

/// Ranks the gallery per query by descending similarity (ties by
/// ascending id, the query's own id excluded) and reports R@k. The
/// match-probability mode draws K samples per video from eval_seed;
/// cosine uses the MoG means only.
RetrievalReport retrieve(const Corpus& queries, const Corpus& gallery,
                         const ModelParams& params, Similarity similarity,
                         std::size_t k_samples, std::uint64_t eval_seed,
                         std::size_t n_clips, int threads);

/// Frozen-encoder affine probe trained with softmax cross-entropy on
/// mean embeddings plus K sampled embeddings (200 full-batch steps,
/// lr 0.1 with cosine decay). Test prediction averages the softmax
/// outputs of K sampled embeddings. Returns top-1 accuracy.
double linear_probe(const Corpus& train_set, const Corpus& test_set,
                    const ModelParams& params, std::size_t k_samples,
                    std::uint64_t eval_seed, std::size_t n_clips, int threads);

struct MiningCurvePoint {
  std::size_t checkpoint = 0;  // index into the checkpoint list
  std::size_t epoch = 0;
  Metric metric = Metric::bhattacharyya;
  double tau = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct CheckpointRef {
  const ModelParams* params = nullptr;
  std::size_t epoch = 0;
};

/// Adaptive-threshold mining quality per checkpoint per metric on a
/// labeled corpus, treated as a single batch.
std::vector<MiningCurvePoint> mining_curve(const Corpus& corpus,
                                           const std::vector<CheckpointRef>& checkpoints,
                                           const std::vector<Metric>& metrics,
                                           std::size_t k_samples,
                                           std::uint64_t eval_seed,
                                           std::size_t n_clips, double lambda,
                                           int threads);

/// Each corrupted clip feature is the mean of `level` clip features from
/// `level` videos of distinct classes (its own plus level-1 others);
/// level 1 is the identity. Labels keep the source video's class.
Corpus corrupt_mixed(const Corpus& corpus, std::size_t level, Rng& rng);

/// Replaces a uniformly chosen ceil(rho * F) subset of coordinates of
/// every clip with fresh standard-normal draws.
Corpus corrupt_masked(const Corpus& corpus, double rho, Rng& rng);

struct UncertaintyReport {
  std::string family;                  // "mixed" or "masked"
  std::vector<double> levels;          // mix count or mask ratio per row
  std::vector<double> mean_uncertainty;
  // 10 uniform bins over the clean-corpus uncertainty range with
  // per-bin leave-one-out top-1 retrieval accuracy
  Vec64 bin_edges;                     // 11 edges
  std::vector<std::size_t> bin_counts;
  std::vector<double> bin_top1;        // -1 for empty bins
};

UncertaintyReport uncertainty_analysis(const ModelParams& params,
                                       const Corpus& corpus,
                                       const std::string& family,
                                       std::size_t k_samples,
                                       std::uint64_t eval_seed,
                                       std::size_t n_clips, int threads);

/// Spearman rank correlation with average ranks for ties.
double spearman(const Vec64& x, const Vec64& y);

}  // namespace provico
