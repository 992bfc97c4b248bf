#include "provico/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace provico {

using nlohmann::json;

void TrainConfig::validate() const {
  check(embed_dim >= 1, "config: embed_dim must be >= 1");
  check(input_dim >= 1, "config: input_dim must be >= 1");
  check(n_samples >= 1, "config: n_samples (K) must be >= 1");
  check(n_clips >= 1, "config: n_clips (N) must be >= 1");
  check(batch_size >= 1, "config: batch_size must be >= 1");
  check(beta >= 0.0, "config: beta must be >= 0");
  check(tau > 0.0, "config: tau must be > 0");
  check(base_lr > 0.0, "config: base_lr must be > 0");
  check(epochs >= 1, "config: epochs must be >= 1");
  check(resolved_warmup() <= epochs, "config: warmup_epochs must be <= epochs");
  check(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "config: adam_beta1 in [0,1)");
  check(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "config: adam_beta2 in [0,1)");
  check(adam_eps > 0.0, "config: adam_eps must be > 0");
  check(lambda >= 0.0, "config: lambda must be >= 0 (0 = auto 1/(4D))");
}

namespace {

json config_to_json(const TrainConfig& c) {
  return json{{"embed_dim", c.embed_dim},
              {"input_dim", c.input_dim},
              {"encoder", c.encoder},
              {"n_samples", c.n_samples},
              {"n_clips", c.n_clips},
              {"batch_size", c.batch_size},
              {"lambda", c.lambda},
              {"tau", c.tau},
              {"tau_mode", mining_mode_name(c.tau_mode)},
              {"beta", c.beta},
              {"epochs", c.epochs},
              {"warmup_epochs", c.warmup_epochs},
              {"stage1_epochs", c.stage1_epochs},
              {"base_lr", c.base_lr},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"seed", c.seed},
              {"metric", metric_name(c.metric)}};
}

TrainConfig config_from_json(const json& j) {
  check(j.is_object(), "config: expected a JSON object");
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "embed_dim") c.embed_dim = value.get<std::size_t>();
    else if (key == "input_dim") c.input_dim = value.get<std::size_t>();
    else if (key == "encoder") c.encoder = value.get<std::vector<std::size_t>>();
    else if (key == "n_samples") c.n_samples = value.get<std::size_t>();
    else if (key == "n_clips") c.n_clips = value.get<std::size_t>();
    else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
    else if (key == "lambda") c.lambda = value.get<double>();
    else if (key == "tau") c.tau = value.get<double>();
    else if (key == "tau_mode") c.tau_mode = mining_mode_from_name(value.get<std::string>());
    else if (key == "beta") c.beta = value.get<double>();
    else if (key == "epochs") c.epochs = value.get<std::size_t>();
    else if (key == "warmup_epochs") c.warmup_epochs = value.get<long>();
    else if (key == "stage1_epochs") c.stage1_epochs = value.get<std::size_t>();
    else if (key == "base_lr") c.base_lr = value.get<double>();
    else if (key == "adam_beta1") c.adam_beta1 = value.get<double>();
    else if (key == "adam_beta2") c.adam_beta2 = value.get<double>();
    else if (key == "adam_eps") c.adam_eps = value.get<double>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "metric") c.metric = metric_from_name(value.get<std::string>());
    else fail("config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

}  // namespace

std::string TrainConfig::to_json_string() const {
  return config_to_json(*this).dump(2);
}

TrainConfig TrainConfig::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("config: invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

double lr_at(std::size_t epoch, const TrainConfig& config) {
  check(epoch < config.epochs, "lr_at: epoch out of range");
  const std::size_t warmup = config.resolved_warmup();
  if (epoch < warmup) {
    return config.base_lr * static_cast<double>(epoch) / static_cast<double>(warmup);
  }
  const double progress = static_cast<double>(epoch - warmup) /
                          static_cast<double>(config.epochs - warmup);
  return config.base_lr * 0.5 * (1.0 + std::cos(M_PI * progress));
}

TrainState init_state(const TrainConfig& config) {
  config.validate();
  HeadDims dims{config.input_dim, config.encoder, config.embed_dim};
  TrainState state{config, ModelParams(dims), {}, {}, 0, 0, Rng(config.seed), {}};
  state.params = ModelParams::init(dims, state.rng);
  state.adam_m.assign(state.params.size(), 0.0);
  state.adam_v.assign(state.params.size(), 0.0);
  return state;
}

void adam_step(TrainState& state, const Vec64& grad, double lr) {
  check(grad.size() == state.params.size(), "adam_step: gradient size mismatch");
  const TrainConfig& c = state.config;
  state.adam_step += 1;
  const double bc1 = 1.0 - std::pow(c.adam_beta1, static_cast<double>(state.adam_step));
  const double bc2 = 1.0 - std::pow(c.adam_beta2, static_cast<double>(state.adam_step));
  for (std::size_t i = 0; i < grad.size(); ++i) {
    state.adam_m[i] = c.adam_beta1 * state.adam_m[i] + (1.0 - c.adam_beta1) * grad[i];
    state.adam_v[i] =
        c.adam_beta2 * state.adam_v[i] + (1.0 - c.adam_beta2) * grad[i] * grad[i];
    const double m_hat = state.adam_m[i] / bc1;
    const double v_hat = state.adam_v[i] / bc2;
    state.params.data[i] -= lr * m_hat / (std::sqrt(v_hat) + c.adam_eps);
  }
}

void train_epoch(TrainState& state, const Corpus& corpus, int threads) {
  const TrainConfig& c = state.config;
  check(state.epoch < c.epochs, "train_epoch: all configured epochs already run");
  check(corpus.size() >= c.batch_size,
        "train_epoch: corpus has " + std::to_string(corpus.size()) +
            " videos, batch size is " + std::to_string(c.batch_size));
  require_min_clips(corpus, c.n_clips);

  const double lr = lr_at(state.epoch, c);
  const bool stage1 = state.epoch < c.stage1_epochs;
  const MiningMode mode = stage1 ? MiningMode::identity_only : c.tau_mode;
  const bool labeled = std::all_of(corpus.begin(), corpus.end(),
                                   [](const Video& v) { return v.label >= 0; });

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[state.rng.below(i)]);
  }

  const std::size_t n_batches = corpus.size() / c.batch_size;  // remainder dropped
  MetricsRow row;
  double tau_sum = 0.0, prec_sum = 0.0, rec_sum = 0.0;
  Vec64 grad;

  for (std::size_t bi = 0; bi < n_batches; ++bi) {
    std::vector<const Video*> batch(c.batch_size);
    std::vector<int> classes(c.batch_size);
    for (std::size_t k = 0; k < c.batch_size; ++k) {
      const Video& v = corpus[order[bi * c.batch_size + k]];
      batch[k] = &v;
      classes[k] = v.label;
    }
    BatchTrace trace =
        forward_batch(state.params, batch, c.n_clips, c.n_samples, state.rng, threads);

    PairLabels labels;
    if (mode == MiningMode::identity_only) {
      labels = mine_pairs(Mat64(c.batch_size, c.batch_size, 0.0), mode, c.tau);
    } else {
      std::vector<VideoDistribution> dists;
      std::vector<SampleSet> samples;
      dists.reserve(trace.videos.size());
      samples.reserve(trace.videos.size());
      for (const VideoTrace& vt : trace.videos) {
        dists.push_back(vt.dist);
        samples.push_back(vt.samples);
      }
      const DistanceMetric metric(c.metric, c.resolved_lambda());
      const Mat64 dmat = distance_matrix(dists, samples, metric, threads);
      labels = mine_pairs(dmat, mode, c.tau);
    }

    const LossBreakdown loss =
        total_loss(state.params, trace, labels, c.beta, &grad, threads);
    check_finite(grad, "train_epoch: gradient (epoch " +
                           std::to_string(state.epoch + 1) + ", batch " +
                           std::to_string(bi) + ")");
    adam_step(state, grad, lr);
    check_finite(state.params.data,
                 "train_epoch: parameters after update (epoch " +
                     std::to_string(state.epoch + 1) + ", batch " +
                     std::to_string(bi) + ")");

    row.total += loss.total;
    row.stoc += loss.stoc;
    row.kl += loss.kl;
    double u = 0.0;
    for (double x : loss.uncertainties) u += x;
    row.mean_uncertainty += u / static_cast<double>(loss.uncertainties.size());
    tau_sum += labels.tau_used;
    if (labeled) {
      const auto [p, r] = mining_precision_recall(labels, classes);
      prec_sum += p;
      rec_sum += r;
    }
  }

  const double inv = 1.0 / static_cast<double>(n_batches);
  row.total *= inv;
  row.stoc *= inv;
  row.kl *= inv;
  row.mean_uncertainty *= inv;
  row.lr = lr;
  row.mode = mining_mode_name(mode);
  row.tau = tau_sum * inv;
  row.precision = labeled ? prec_sum * inv : -1.0;
  row.recall = labeled ? rec_sum * inv : -1.0;

  state.epoch += 1;
  row.epoch = state.epoch;
  state.metrics.push_back(std::move(row));
}

void train(TrainState& state, const Corpus& corpus, int threads,
           const EpochCallback& callback) {
  while (state.epoch < state.config.epochs) {
    train_epoch(state, corpus, threads);
    if (callback) callback(state);
  }
}

namespace {

json metrics_to_json(const std::vector<MetricsRow>& rows) {
  json arr = json::array();
  for (const MetricsRow& r : rows) {
    arr.push_back(json{{"epoch", r.epoch},
                       {"lr", r.lr},
                       {"total", r.total},
                       {"stoc", r.stoc},
                       {"kl", r.kl},
                       {"mean_uncertainty", r.mean_uncertainty},
                       {"mode", r.mode},
                       {"tau", r.tau},
                       {"precision", r.precision},
                       {"recall", r.recall}});
  }
  return arr;
}

std::vector<MetricsRow> metrics_from_json(const json& arr) {
  std::vector<MetricsRow> rows;
  for (const json& j : arr) {
    MetricsRow r;
    r.epoch = j.at("epoch").get<std::size_t>();
    r.lr = j.at("lr").get<double>();
    r.total = j.at("total").get<double>();
    r.stoc = j.at("stoc").get<double>();
    r.kl = j.at("kl").get<double>();
    r.mean_uncertainty = j.at("mean_uncertainty").get<double>();
    r.mode = j.at("mode").get<std::string>();
    r.tau = j.at("tau").get<double>();
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

void save_checkpoint(const TrainState& state, const std::string& path) {
  const RngState rs = state.rng.state();
  json j{{"format_version", kCheckpointFormatVersion},
         {"config", config_to_json(state.config)},
         {"params", state.params.data},
         {"adam_m", state.adam_m},
         {"adam_v", state.adam_v},
         {"adam_step", state.adam_step},
         {"epoch", state.epoch},
         {"rng", json{{"seed", rs.seed},
                      {"engine", rs.engine},
                      {"has_spare", rs.has_spare},
                      {"spare", rs.spare}}},
         {"metrics", metrics_to_json(state.metrics)}};

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    check(out.good(), "save_checkpoint: cannot open " + tmp);
    out << j.dump() << '\n';
    out.flush();
    check(out.good(), "save_checkpoint: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "load_checkpoint: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail("load_checkpoint: " + path + ": parse error at byte " +
         std::to_string(e.byte) + ": " + e.what());
  }
  if (!j.contains("format_version") ||
      !j.at("format_version").is_number_integer() ||
      j.at("format_version").get<int>() != kCheckpointFormatVersion) {
    fail("load_checkpoint: " + path + ": unsupported format_version (expected " +
         std::to_string(kCheckpointFormatVersion) + ")");
  }
  TrainState state = init_state(config_from_json(j.at("config")));
  const Vec64 params = j.at("params").get<Vec64>();
  check(params.size() == state.params.size(),
        "load_checkpoint: parameter count mismatch");
  state.params.data = params;
  state.adam_m = j.at("adam_m").get<Vec64>();
  state.adam_v = j.at("adam_v").get<Vec64>();
  check(state.adam_m.size() == params.size() && state.adam_v.size() == params.size(),
        "load_checkpoint: optimizer moment size mismatch");
  state.adam_step = j.at("adam_step").get<long>();
  state.epoch = j.at("epoch").get<std::size_t>();
  const json& rj = j.at("rng");
  RngState rs;
  rs.seed = rj.at("seed").get<std::uint64_t>();
  rs.engine = rj.at("engine").get<std::string>();
  rs.has_spare = rj.at("has_spare").get<bool>();
  rs.spare = rj.at("spare").get<double>();
  state.rng = Rng::from_state(rs);
  state.metrics = metrics_from_json(j.at("metrics"));
  return state;
}

}  // namespace provico
