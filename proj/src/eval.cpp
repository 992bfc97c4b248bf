#include "provico/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace provico {

std::string similarity_name(Similarity s) {
  return s == Similarity::match_probability ? "match" : "cosine";
}

Similarity similarity_from_name(const std::string& name) {
  if (name == "match") return Similarity::match_probability;
  if (name == "cosine") return Similarity::cosine;
  fail("unknown similarity '" + name + "' (expected match|cosine)");
}

std::vector<VideoDistribution> embed_corpus(const ModelParams& params,
                                            const Corpus& corpus,
                                            std::size_t n_clips, int threads) {
  require_min_clips(corpus, n_clips);
  std::vector<VideoDistribution> dists(corpus.size());
  parallel_chunks(corpus.size(), threads, [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t v = begin; v < end; ++v) {
      std::vector<GaussianEmbed> embeds;
      embeds.reserve(n_clips);
      for (std::size_t n = 0; n < n_clips; ++n) {
        embeds.push_back(embed_clip(params, corpus[v].clips[n]));
      }
      dists[v] = combine_mog(std::move(embeds));
    }
  });
  return dists;
}

std::vector<SampleSet> draw_samples(const std::vector<VideoDistribution>& dists,
                                    std::size_t k, Rng& rng) {
  std::vector<SampleSet> out;
  out.reserve(dists.size());
  for (const VideoDistribution& d : dists) out.push_back(sample(d, k, rng));
  return out;
}

namespace {

double cosine(const Vec64& a, const Vec64& b) {
  const double na = std::max(l2_norm(a.data(), a.size()), 1e-12);
  const double nb = std::max(l2_norm(b.data(), b.size()), 1e-12);
  return dot(a, b) / (na * nb);
}

}  // namespace

RetrievalReport retrieve(const Corpus& queries, const Corpus& gallery,
                         const ModelParams& params, Similarity similarity,
                         std::size_t k_samples, std::uint64_t eval_seed,
                         std::size_t n_clips, int threads) {
  check(!gallery.empty(), "retrieve: empty gallery");
  const bool same_corpus = &queries == &gallery;

  const std::vector<VideoDistribution> g_dists =
      embed_corpus(params, gallery, n_clips, threads);
  std::vector<VideoDistribution> q_dists_store;
  const std::vector<VideoDistribution>& q_dists =
      same_corpus ? g_dists
                  : (q_dists_store = embed_corpus(params, queries, n_clips, threads));

  std::vector<SampleSet> g_samples, q_samples_store;
  const std::vector<SampleSet>* q_samples = nullptr;
  if (similarity == Similarity::match_probability) {
    Rng rng(eval_seed);
    g_samples = draw_samples(g_dists, k_samples, rng);
    if (same_corpus) {
      q_samples = &g_samples;
    } else {
      q_samples_store = draw_samples(q_dists, k_samples, rng);
      q_samples = &q_samples_store;
    }
  }

  const double a = params.a();
  const double b = params.b();
  const std::size_t max_k = 20;

  RetrievalReport report;
  report.similarity = similarity;
  report.queries.resize(queries.size());

  parallel_chunks(queries.size(), threads, [&](std::size_t begin, std::size_t end, int) {
    std::vector<std::size_t> order(gallery.size());
    Vec64 scores(gallery.size());
    for (std::size_t q = begin; q < end; ++q) {
      QueryResult& res = report.queries[q];
      res.id = queries[q].id;
      res.label = queries[q].label;
      res.first_hit_rank = QueryResult::npos;

      for (std::size_t g = 0; g < gallery.size(); ++g) {
        if (similarity == Similarity::match_probability) {
          scores[g] = match_probability((*q_samples)[q], g_samples[g], a, b);
        } else {
          scores[g] = cosine(q_dists[q].mean, g_dists[g].mean);
        }
      }
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (scores[x] != scores[y]) return scores[x] > scores[y];
        return gallery[x].id < gallery[y].id;
      });

      bool class_present = false;
      std::size_t rank = 0;
      for (std::size_t g : order) {
        if (gallery[g].id == res.id) continue;  // self-retrieval excluded
        if (rank < max_k) res.top_ids.push_back(gallery[g].id);
        if (res.label >= 0 && gallery[g].label == res.label) {
          class_present = true;
          if (res.first_hit_rank == QueryResult::npos) res.first_hit_rank = rank;
        }
        ++rank;
      }
      res.excluded = res.label < 0 || !class_present;
    }
  });

  report.recall_at.assign(report.ks.size(), 0.0);
  for (const QueryResult& res : report.queries) {
    if (res.excluded) {
      ++report.excluded;
      continue;
    }
    ++report.evaluated;
    for (std::size_t i = 0; i < report.ks.size(); ++i) {
      if (res.first_hit_rank < report.ks[i]) report.recall_at[i] += 1.0;
    }
  }
  if (report.evaluated > 0) {
    for (double& r : report.recall_at) r /= static_cast<double>(report.evaluated);
  }
  return report;
}

double linear_probe(const Corpus& train_set, const Corpus& test_set,
                    const ModelParams& params, std::size_t k_samples,
                    std::uint64_t eval_seed, std::size_t n_clips, int threads) {
  check(!train_set.empty() && !test_set.empty(), "linear_probe: empty corpus");
  std::map<int, std::size_t> class_index;
  for (const Video& v : train_set) {
    check(v.label >= 0, "linear_probe: unlabeled training video '" + v.id + "'");
    class_index.emplace(v.label, class_index.size());
  }
  check(class_index.size() >= 2, "linear_probe: training set has a single class");
  const std::size_t n_classes = class_index.size();
  const std::size_t dim = params.dims.embed_dim;

  const std::vector<VideoDistribution> train_dists =
      embed_corpus(params, train_set, n_clips, threads);
  const std::vector<VideoDistribution> test_dists =
      embed_corpus(params, test_set, n_clips, threads);
  Rng rng(eval_seed);
  const std::vector<SampleSet> train_samples = draw_samples(train_dists, k_samples, rng);
  const std::vector<SampleSet> test_samples = draw_samples(test_dists, k_samples, rng);

  // mean embedding plus the K draws per training video
  std::vector<const double*> rows;
  std::vector<std::size_t> targets;
  for (std::size_t v = 0; v < train_set.size(); ++v) {
    const std::size_t cls = class_index.at(train_set[v].label);
    rows.push_back(train_dists[v].mean.data());
    targets.push_back(cls);
    for (const Vec64& z : train_samples[v].draws) {
      rows.push_back(z.data());
      targets.push_back(cls);
    }
  }
  const std::size_t n_rows = rows.size();

  Vec64 w(n_classes * dim, 0.0), bias(n_classes, 0.0);
  Vec64 dw(n_classes * dim), dbias(n_classes), logits(n_classes), probs(n_classes);
  const std::size_t steps = 200;
  const double base_lr = 0.1;
  for (std::size_t t = 0; t < steps; ++t) {
    const double lr = base_lr * 0.5 *
                      (1.0 + std::cos(M_PI * static_cast<double>(t) /
                                      static_cast<double>(steps)));
    std::fill(dw.begin(), dw.end(), 0.0);
    std::fill(dbias.begin(), dbias.end(), 0.0);
    for (std::size_t r = 0; r < n_rows; ++r) {
      const double* x = rows[r];
      double max_l = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < n_classes; ++c) {
        double s = bias[c];
        const double* wc = w.data() + c * dim;
        for (std::size_t d = 0; d < dim; ++d) s += wc[d] * x[d];
        logits[c] = s;
        max_l = std::max(max_l, s);
      }
      double z = 0.0;
      for (std::size_t c = 0; c < n_classes; ++c) {
        probs[c] = std::exp(logits[c] - max_l);
        z += probs[c];
      }
      for (std::size_t c = 0; c < n_classes; ++c) {
        const double g = probs[c] / z - (c == targets[r] ? 1.0 : 0.0);
        dbias[c] += g;
        double* dwc = dw.data() + c * dim;
        for (std::size_t d = 0; d < dim; ++d) dwc[d] += g * x[d];
      }
    }
    const double scale = lr / static_cast<double>(n_rows);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= scale * dw[i];
    for (std::size_t c = 0; c < n_classes; ++c) bias[c] -= scale * dbias[c];
  }

  // prediction: argmax of the mean softmax over the K sampled embeddings
  std::size_t correct = 0;
  for (std::size_t v = 0; v < test_set.size(); ++v) {
    Vec64 mean_probs(n_classes, 0.0);
    for (const Vec64& z : test_samples[v].draws) {
      double max_l = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < n_classes; ++c) {
        double s = bias[c];
        const double* wc = w.data() + c * dim;
        for (std::size_t d = 0; d < dim; ++d) s += wc[d] * z[d];
        logits[c] = s;
        max_l = std::max(max_l, s);
      }
      double zsum = 0.0;
      for (std::size_t c = 0; c < n_classes; ++c) {
        probs[c] = std::exp(logits[c] - max_l);
        zsum += probs[c];
      }
      for (std::size_t c = 0; c < n_classes; ++c) mean_probs[c] += probs[c] / zsum;
    }
    const std::size_t pred = static_cast<std::size_t>(
        std::max_element(mean_probs.begin(), mean_probs.end()) - mean_probs.begin());
    const auto it = class_index.find(test_set[v].label);
    if (it != class_index.end() && it->second == pred) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_set.size());
}

std::vector<MiningCurvePoint> mining_curve(const Corpus& corpus,
                                           const std::vector<CheckpointRef>& checkpoints,
                                           const std::vector<Metric>& metrics,
                                           std::size_t k_samples,
                                           std::uint64_t eval_seed,
                                           std::size_t n_clips, double lambda,
                                           int threads) {
  check(!checkpoints.empty(), "mining_curve: no checkpoints");
  check(!metrics.empty(), "mining_curve: no metrics");
  std::vector<int> classes;
  classes.reserve(corpus.size());
  for (const Video& v : corpus) {
    check(v.label >= 0, "mining_curve: unlabeled video '" + v.id + "'");
    classes.push_back(v.label);
  }

  std::vector<MiningCurvePoint> out;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const ModelParams& params = *checkpoints[c].params;
    const std::vector<VideoDistribution> dists =
        embed_corpus(params, corpus, n_clips, threads);
    Rng rng(eval_seed);  // fresh per checkpoint so curves are comparable
    const std::vector<SampleSet> samples = draw_samples(dists, k_samples, rng);
    const double lam = lambda > 0.0 ? lambda : default_lambda(params.dims.embed_dim);
    for (Metric metric : metrics) {
      const Mat64 dmat =
          distance_matrix(dists, samples, DistanceMetric(metric, lam), threads);
      const PairLabels labels = mine_pairs(dmat, MiningMode::adaptive_tau, 0.0);
      const auto [precision, recall] = mining_precision_recall(labels, classes);
      out.push_back(MiningCurvePoint{c, checkpoints[c].epoch, metric,
                                     labels.tau_used, precision, recall});
    }
  }
  return out;
}

Corpus corrupt_mixed(const Corpus& corpus, std::size_t level, Rng& rng) {
  check(level >= 1, "corrupt_mixed: level must be >= 1");
  if (level == 1) return corpus;

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t v = 0; v < corpus.size(); ++v) {
    check(corpus[v].label >= 0, "corrupt_mixed: unlabeled video '" + corpus[v].id + "'");
    by_class[corpus[v].label].push_back(v);
  }
  check(by_class.size() >= level,
        "corrupt_mixed: need at least " + std::to_string(level) + " classes, have " +
            std::to_string(by_class.size()));
  std::vector<int> class_list;
  for (const auto& [label, _] : by_class) class_list.push_back(label);

  Corpus out = corpus;
  std::vector<int> others;
  for (Video& video : out) {
    others.clear();
    for (int cls : class_list) {
      if (cls != video.label) others.push_back(cls);
    }
    for (Vec64& clip : video.clips) {
      // level-1 donor classes, one random clip from a random video each
      for (std::size_t pick = 0; pick < level - 1; ++pick) {
        const std::size_t swap_with = pick + rng.below(others.size() - pick);
        std::swap(others[pick], others[swap_with]);
        const std::vector<std::size_t>& pool = by_class.at(others[pick]);
        const Video& donor = corpus[pool[rng.below(pool.size())]];
        const Vec64& donor_clip = donor.clips[rng.below(donor.clips.size())];
        for (std::size_t d = 0; d < clip.size(); ++d) clip[d] += donor_clip[d];
      }
      const double inv = 1.0 / static_cast<double>(level);
      for (double& x : clip) x *= inv;
    }
  }
  return out;
}

Corpus corrupt_masked(const Corpus& corpus, double rho, Rng& rng) {
  check(rho >= 0.0 && rho < 1.0, "corrupt_masked: rho must be in [0, 1)");
  Corpus out = corpus;
  if (rho == 0.0) return out;
  for (Video& video : out) {
    for (Vec64& clip : video.clips) {
      const std::size_t f = clip.size();
      const std::size_t n_mask =
          static_cast<std::size_t>(std::ceil(rho * static_cast<double>(f)));
      std::vector<std::size_t> idx(f);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t pick = 0; pick < n_mask; ++pick) {
        const std::size_t swap_with = pick + rng.below(f - pick);
        std::swap(idx[pick], idx[swap_with]);
        clip[idx[pick]] = rng.normal();
      }
    }
  }
  return out;
}

UncertaintyReport uncertainty_analysis(const ModelParams& params,
                                       const Corpus& corpus,
                                       const std::string& family,
                                       std::size_t k_samples,
                                       std::uint64_t eval_seed,
                                       std::size_t n_clips, int threads) {
  check(family == "mixed" || family == "masked",
        "uncertainty_analysis: family must be mixed or masked");
  UncertaintyReport report;
  report.family = family;

  const Rng base(eval_seed);
  const bool mixed = family == "mixed";
  const std::vector<double> levels =
      mixed ? std::vector<double>{1, 2, 3, 4, 5}
            : std::vector<double>{0.0, 0.2, 0.4, 0.6, 0.8};
  for (std::size_t li = 0; li < levels.size(); ++li) {
    Rng rng = base.child(li + 1);
    const Corpus corrupted =
        mixed ? corrupt_mixed(corpus, static_cast<std::size_t>(levels[li]), rng)
              : corrupt_masked(corpus, levels[li], rng);
    const std::vector<VideoDistribution> dists =
        embed_corpus(params, corrupted, n_clips, threads);
    double u = 0.0;
    for (const VideoDistribution& d : dists) u += d.uncertainty;
    report.levels.push_back(levels[li]);
    report.mean_uncertainty.push_back(u / static_cast<double>(dists.size()));
  }

  // Fig-style bins: 10 uniform uncertainty bins over the clean corpus
  // with per-bin mean leave-one-out top-1
  const std::vector<VideoDistribution> clean =
      embed_corpus(params, corpus, n_clips, threads);
  Vec64 u_values(corpus.size());
  for (std::size_t v = 0; v < corpus.size(); ++v) u_values[v] = clean[v].uncertainty;

  const RetrievalReport loo =
      retrieve(corpus, corpus, params, Similarity::match_probability, k_samples,
               eval_seed, n_clips, threads);

  const double u_min = *std::min_element(u_values.begin(), u_values.end());
  const double u_max = *std::max_element(u_values.begin(), u_values.end());
  const std::size_t n_bins = 10;
  const double width = (u_max - u_min) / static_cast<double>(n_bins);
  report.bin_edges.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) {
    report.bin_edges[i] = u_min + width * static_cast<double>(i);
  }
  report.bin_counts.assign(n_bins, 0);
  Vec64 bin_hits(n_bins, 0.0);
  for (std::size_t v = 0; v < corpus.size(); ++v) {
    if (loo.queries[v].excluded) continue;
    std::size_t bin = width > 0.0
                          ? static_cast<std::size_t>((u_values[v] - u_min) / width)
                          : 0;
    if (bin >= n_bins) bin = n_bins - 1;
    report.bin_counts[bin] += 1;
    if (loo.queries[v].first_hit_rank == 0) bin_hits[bin] += 1.0;
  }
  report.bin_top1.assign(n_bins, -1.0);
  for (std::size_t i = 0; i < n_bins; ++i) {
    if (report.bin_counts[i] > 0) {
      report.bin_top1[i] = bin_hits[i] / static_cast<double>(report.bin_counts[i]);
    }
  }
  return report;
}

double spearman(const Vec64& x, const Vec64& y) {
  check(x.size() == y.size(), "spearman: size mismatch");
  check(x.size() >= 2, "spearman: need at least two points");
  auto ranks = [](const Vec64& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    Vec64 r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j);  // average rank for ties
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const Vec64 rx = ranks(x);
  const Vec64 ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace provico
