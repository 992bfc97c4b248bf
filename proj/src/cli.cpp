#include "provico/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "provico/data_io.hpp"
#include "provico/eval.hpp"
#include "provico/trainer.hpp"

namespace provico {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// shortest decimal string that parses back to the identical double
std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  check(out.good(), "cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  check(out.good(), "write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

// ---- minimal flat TOML (key = value, [section] prefixes, comments,
// strings, bools, numbers, simple arrays); enough to mirror TrainConfig
json parse_flat_toml(const std::string& text);

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

json parse_toml_value(const std::string& raw, std::size_t lineno) {
  const std::string v = trim(raw);
  check(!v.empty(), "config.toml:" + std::to_string(lineno) + ": empty value");
  if (v.front() == '"') {
    check(v.size() >= 2 && v.back() == '"',
          "config.toml:" + std::to_string(lineno) + ": unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\\' && i + 2 < v.size()) {
        ++i;
        switch (v[i]) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default:
            fail("config.toml:" + std::to_string(lineno) + ": unsupported escape");
        }
      } else {
        out += v[i];
      }
    }
    return json(out);
  }
  if (v == "true") return json(true);
  if (v == "false") return json(false);
  if (v.front() == '[') {
    check(v.back() == ']',
          "config.toml:" + std::to_string(lineno) + ": unterminated array");
    json arr = json::array();
    std::string inner = v.substr(1, v.size() - 2);
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (trim(item).empty()) continue;
      arr.push_back(parse_toml_value(item, lineno));
    }
    return arr;
  }
  if (v.find_first_of(".eE") != std::string::npos ||
      v == "inf" || v == "nan") {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    check(end == v.c_str() + v.size(),
          "config.toml:" + std::to_string(lineno) + ": bad number '" + v + "'");
    return json(d);
  }
  long long i = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), i);
  check(res.ec == std::errc{} && res.ptr == v.data() + v.size(),
        "config.toml:" + std::to_string(lineno) + ": bad value '" + v + "'");
  return json(i);
}

json parse_flat_toml(const std::string& text) {
  json out = json::object();
  std::istringstream in(text);
  std::string line, prefix;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments outside strings
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
      if (line[i] == '#' && !in_str) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      check(line.back() == ']',
            "config.toml:" + std::to_string(lineno) + ": malformed section");
      prefix = trim(line.substr(1, line.size() - 2));
      check(!prefix.empty(),
            "config.toml:" + std::to_string(lineno) + ": empty section name");
      prefix += '.';
      continue;
    }
    const std::size_t eq = line.find('=');
    check(eq != std::string::npos,
          "config.toml:" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    check(!key.empty(), "config.toml:" + std::to_string(lineno) + ": empty key");
    out[prefix + key] = parse_toml_value(line.substr(eq + 1), lineno);
  }
  return out;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  if (fs::path(path).extension() == ".toml") {
    j = parse_flat_toml(ss.str());
  } else {
    try {
      j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
      fail("config file " + path + ": " + e.what());
    }
  }
  // an effective_config.json from a previous run is accepted as-is
  if (j.is_object() && j.contains("train_config")) return j.at("train_config");
  return j;
}

int resolve_threads(int flag_value, bool flag_given) {
  if (flag_given) {
    check(flag_value >= 1, "--threads must be >= 1");
    return flag_value;
  }
  if (const char* env = std::getenv("PROVICO_THREADS")) {
    const int v = std::atoi(env);
    check(v >= 1, "PROVICO_THREADS must be a positive integer");
    return v;
  }
  return 1;
}

fs::path prepare_outdir(const std::string& out) {
  check(!out.empty(), "--out is required");
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    check(end == item.c_str() + item.size(), "bad number '" + item + "' in list");
    out.push_back(v);
  }
  check(!out.empty(), "expected a comma-separated list of numbers");
  return out;
}

std::vector<Metric> parse_metric_list(const std::string& csv) {
  std::vector<Metric> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(metric_from_name(item));
  }
  check(!out.empty(), "expected a comma-separated list of metrics");
  return out;
}

// ---- report writers --------------------------------------------------

void write_metrics_csv(const std::vector<MetricsRow>& rows, const fs::path& path) {
  std::ostringstream out;
  out << "epoch,lr,total,stoc,kl,mean_uncertainty,mode,tau,precision,recall\n";
  for (const MetricsRow& r : rows) {
    out << r.epoch << ',' << fmt_double(r.lr) << ',' << fmt_double(r.total) << ','
        << fmt_double(r.stoc) << ',' << fmt_double(r.kl) << ','
        << fmt_double(r.mean_uncertainty) << ',' << r.mode << ','
        << fmt_double(r.tau) << ',' << (r.precision < 0 ? "" : fmt_double(r.precision))
        << ',' << (r.recall < 0 ? "" : fmt_double(r.recall)) << '\n';
  }
  write_text(path, out.str());
}

void write_retrieval_reports(const RetrievalReport& report, const fs::path& dir) {
  std::ostringstream q;
  q << "id,label,excluded,first_hit_rank,top_ids\n";
  json qj = json::array();
  for (const QueryResult& res : report.queries) {
    std::string tops;
    for (std::size_t i = 0; i < res.top_ids.size(); ++i) {
      if (i) tops += ';';
      tops += res.top_ids[i];
    }
    q << csv_field(res.id) << ',' << res.label << ',' << (res.excluded ? 1 : 0) << ','
      << (res.first_hit_rank == QueryResult::npos
              ? std::string("")
              : std::to_string(res.first_hit_rank))
      << ',' << csv_field(tops) << '\n';
    qj.push_back(json{{"id", res.id},
                      {"label", res.label},
                      {"excluded", res.excluded},
                      {"first_hit_rank", res.first_hit_rank == QueryResult::npos
                                             ? json(nullptr)
                                             : json(res.first_hit_rank)},
                      {"top_ids", res.top_ids}});
  }
  write_text(dir / "retrieval_queries.csv", q.str());
  write_json(dir / "retrieval_queries.json", qj);

  std::ostringstream s;
  s << "k,recall\n";
  json sj;
  sj["similarity"] = similarity_name(report.similarity);
  sj["evaluated"] = report.evaluated;
  sj["excluded"] = report.excluded;
  json rk = json::object();
  for (std::size_t i = 0; i < report.ks.size(); ++i) {
    s << report.ks[i] << ',' << fmt_double(report.recall_at[i]) << '\n';
    rk["R@" + std::to_string(report.ks[i])] = report.recall_at[i];
  }
  sj["recall_at"] = rk;
  write_text(dir / "retrieval_summary.csv", s.str());
  write_json(dir / "retrieval_summary.json", sj);
}

void write_uncertainty_reports(const UncertaintyReport& report, const fs::path& dir) {
  std::ostringstream lv;
  lv << "level,mean_uncertainty\n";
  json lj = json::array();
  for (std::size_t i = 0; i < report.levels.size(); ++i) {
    lv << fmt_double(report.levels[i]) << ','
       << fmt_double(report.mean_uncertainty[i]) << '\n';
    lj.push_back(json{{"level", report.levels[i]},
                      {"mean_uncertainty", report.mean_uncertainty[i]}});
  }
  write_text(dir / "uncertainty_levels.csv", lv.str());
  write_json(dir / "uncertainty_levels.json",
             json{{"family", report.family}, {"rows", lj}});

  std::ostringstream bn;
  bn << "bin,lower,upper,count,mean_top1\n";
  json bj = json::array();
  for (std::size_t i = 0; i < report.bin_counts.size(); ++i) {
    bn << i << ',' << fmt_double(report.bin_edges[i]) << ','
       << fmt_double(report.bin_edges[i + 1]) << ',' << report.bin_counts[i] << ','
       << (report.bin_top1[i] < 0 ? "" : fmt_double(report.bin_top1[i])) << '\n';
    bj.push_back(json{{"bin", i},
                      {"lower", report.bin_edges[i]},
                      {"upper", report.bin_edges[i + 1]},
                      {"count", report.bin_counts[i]},
                      {"mean_top1", report.bin_top1[i] < 0 ? json(nullptr)
                                                           : json(report.bin_top1[i])}});
  }
  write_text(dir / "uncertainty_bins.csv", bn.str());
  write_json(dir / "uncertainty_bins.json", bj);
}

// ---- subcommand state -------------------------------------------------

struct GenArgs {
  std::string out;
  SyntheticSpec spec;
};

struct TrainArgs {
  std::string corpus, out, config_path, resume;
  std::size_t snapshot_every = 0;
};

struct RetrievalArgs {
  std::string checkpoint, corpus, out, similarity = "match";
  std::uint64_t eval_seed = 1;
  std::size_t eval_samples = 0;  // 0 = checkpoint K
};

struct MiningArgs {
  std::string corpus, out, metrics = "bhattacharyya,euclidean";
  std::vector<std::string> checkpoints;
  std::uint64_t eval_seed = 1;
  std::size_t eval_samples = 0;
};

struct UncArgs {
  std::string checkpoint, corpus, out, family = "mixed";
  std::uint64_t eval_seed = 1;
  std::size_t eval_samples = 0;
};

struct SweepArgs {
  std::string corpus, out, betas = "1e-5,1e-4,1e-3,1e-2", config_path;
};

struct ExportArgs {
  std::string checkpoint, corpus, out;
};

json args_echo_base(const std::string& subcommand, int threads) {
  return json{{"subcommand", subcommand}, {"threads", threads}};
}

// Flags shared by training-style subcommands. Values land in the maps;
// only flags the user actually passed are applied over the config file.
void add_train_flags(CLI::App* sub, std::map<std::string, std::string>& str_opts,
                     std::map<std::string, long long>& int_opts,
                     std::map<std::string, double>& dbl_opts) {
  sub->add_option("--embed-dim", int_opts["embed_dim"], "embedding dimension D");
  sub->add_option("--input-dim", int_opts["input_dim"], "clip feature dimension F");
  sub->add_option("--samples", int_opts["n_samples"], "embeddings per video K");
  sub->add_option("--clips", int_opts["n_clips"], "clips per video N");
  sub->add_option("--batch", int_opts["batch_size"], "mini-batch size B");
  sub->add_option("--epochs", int_opts["epochs"], "training epochs");
  sub->add_option("--warmup", int_opts["warmup_epochs"],
                  "warm-up epochs (default 10% of epochs)");
  sub->add_option("--stage1", int_opts["stage1_epochs"],
                  "epochs trained with identity-only positives");
  sub->add_option("--lambda", dbl_opts["lambda"],
                  "distance scale (default 1/(4D))");
  sub->add_option("--tau", dbl_opts["tau"], "mining threshold");
  sub->add_option("--tau-mode", str_opts["tau_mode"],
                  "mining mode after stage 1: fixed|adaptive");
  sub->add_option("--beta", dbl_opts["beta"], "KL regularizer weight");
  sub->add_option("--lr", dbl_opts["base_lr"], "base learning rate");
  sub->add_option("--seed", int_opts["seed"], "training seed");
  sub->add_option("--metric", str_opts["metric"],
                  "mining distance: bhattacharyya|euclidean|jensen_shannon|wasserstein2");
}

void apply_flag_overrides(const CLI::App* sub,
                          const std::map<std::string, std::string>& str_opts,
                          const std::map<std::string, long long>& int_opts,
                          const std::map<std::string, double>& dbl_opts,
                          TrainConfig& cfg) {
  auto given = [sub](const std::string& flag) {
    return sub->count(flag) > 0;
  };
  if (given("--embed-dim")) cfg.embed_dim = static_cast<std::size_t>(int_opts.at("embed_dim"));
  if (given("--input-dim")) cfg.input_dim = static_cast<std::size_t>(int_opts.at("input_dim"));
  if (given("--samples")) cfg.n_samples = static_cast<std::size_t>(int_opts.at("n_samples"));
  if (given("--clips")) cfg.n_clips = static_cast<std::size_t>(int_opts.at("n_clips"));
  if (given("--batch")) cfg.batch_size = static_cast<std::size_t>(int_opts.at("batch_size"));
  if (given("--epochs")) cfg.epochs = static_cast<std::size_t>(int_opts.at("epochs"));
  if (given("--warmup")) cfg.warmup_epochs = static_cast<long>(int_opts.at("warmup_epochs"));
  if (given("--stage1")) cfg.stage1_epochs = static_cast<std::size_t>(int_opts.at("stage1_epochs"));
  if (given("--lambda")) cfg.lambda = dbl_opts.at("lambda");
  if (given("--tau")) cfg.tau = dbl_opts.at("tau");
  if (given("--tau-mode")) cfg.tau_mode = mining_mode_from_name(str_opts.at("tau_mode"));
  if (given("--beta")) cfg.beta = dbl_opts.at("beta");
  if (given("--lr")) cfg.base_lr = dbl_opts.at("base_lr");
  if (given("--seed")) cfg.seed = static_cast<std::uint64_t>(int_opts.at("seed"));
  if (given("--metric")) cfg.metric = metric_from_name(str_opts.at("metric"));
}

TrainConfig build_train_config(const CLI::App* sub, const std::string& config_path,
                               const std::map<std::string, std::string>& str_opts,
                               const std::map<std::string, long long>& int_opts,
                               const std::map<std::string, double>& dbl_opts,
                               const Corpus& corpus) {
  json file_cfg = json::object();
  if (!config_path.empty()) file_cfg = load_config_file(config_path);
  TrainConfig cfg = TrainConfig::from_json_string(file_cfg.dump());
  apply_flag_overrides(sub, str_opts, int_opts, dbl_opts, cfg);

  check(!corpus.empty(), "corpus is empty");
  const std::size_t corpus_f = corpus.front().clips.front().size();
  const bool explicit_f = sub->count("--input-dim") > 0 || file_cfg.contains("input_dim");
  if (explicit_f) {
    check(cfg.input_dim == corpus_f,
          "configured input_dim " + std::to_string(cfg.input_dim) +
              " does not match corpus feature dim " + std::to_string(corpus_f));
  } else {
    cfg.input_dim = corpus_f;
  }
  cfg.validate();
  return cfg;
}

double mean_clip_variance(const ModelParams& params, const Corpus& corpus,
                          std::size_t n_clips, int threads) {
  const std::vector<VideoDistribution> dists =
      embed_corpus(params, corpus, n_clips, threads);
  double sum = 0.0;
  std::size_t count = 0;
  for (const VideoDistribution& d : dists) {
    for (const GaussianEmbed& c : d.components) {
      for (double v : c.var) sum += v;
      count += c.var.size();
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"ProViCo: probabilistic video contrastive learning at desk scale"};
  app.require_subcommand(1);

  int threads_flag = 1;
  app.add_option("--threads", threads_flag,
                 "worker threads (env PROVICO_THREADS is the fallback; 1 = "
                 "reproducibility reference)");

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic corpus");
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  long long gen_classes = 5, gen_vpc = 40, gen_clips = 2, gen_f = 64, gen_seed = 0;
  double gen_sep = 6.0, gen_within = 1.0, gen_noise = 0.5;
  gen_cmd->add_option("--classes", gen_classes, "number of classes");
  gen_cmd->add_option("--videos-per-class", gen_vpc, "videos per class");
  gen_cmd->add_option("--clips", gen_clips, "clips per video");
  gen_cmd->add_option("--feature-dim", gen_f, "clip feature dimension");
  gen_cmd->add_option("--separation", gen_sep,
                      "class-center radius in units of within-std");
  gen_cmd->add_option("--within-std", gen_within, "within-class std");
  gen_cmd->add_option("--clip-noise", gen_noise, "clip-level noise std");
  gen_cmd->add_option("--seed", gen_seed, "generator seed");

  TrainArgs train_args;
  std::map<std::string, std::string> t_str;
  std::map<std::string, long long> t_int;
  std::map<std::string, double> t_dbl;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model on a corpus");
  train_cmd->add_option("--corpus", train_args.corpus, "corpus JSONL")->required();
  train_cmd->add_option("--out", train_args.out, "output directory")->required();
  train_cmd->add_option("--config", train_args.config_path,
                        "TOML or JSON config mirroring the training parameters");
  train_cmd->add_option("--resume", train_args.resume,
                        "resume from a checkpoint (ignores --config and flags)");
  train_cmd->add_option("--snapshot-every", train_args.snapshot_every,
                        "write checkpoint_epochNNNN.json every E epochs");
  add_train_flags(train_cmd, t_str, t_int, t_dbl);

  RetrievalArgs ret;
  CLI::App* ret_cmd = app.add_subcommand("eval-retrieval",
                                         "leave-one-out retrieval report");
  ret_cmd->add_option("--checkpoint", ret.checkpoint, "checkpoint JSON")->required();
  ret_cmd->add_option("--corpus", ret.corpus, "corpus JSONL")->required();
  ret_cmd->add_option("--out", ret.out, "output directory")->required();
  ret_cmd->add_option("--similarity", ret.similarity, "match|cosine");
  ret_cmd->add_option("--eval-seed", ret.eval_seed, "evaluation sampling seed");
  ret_cmd->add_option("--eval-samples", ret.eval_samples,
                      "samples per video (default: checkpoint K)");

  MiningArgs mine_args;
  CLI::App* mine_cmd = app.add_subcommand("eval-mining",
                                          "mining precision/recall per checkpoint");
  mine_cmd->add_option("--corpus", mine_args.corpus, "labeled corpus JSONL")->required();
  mine_cmd->add_option("--checkpoints", mine_args.checkpoints, "checkpoint JSONs")
      ->required()
      ->expected(-1);
  mine_cmd->add_option("--metrics", mine_args.metrics, "comma-separated metric list");
  mine_cmd->add_option("--out", mine_args.out, "output directory")->required();
  mine_cmd->add_option("--eval-seed", mine_args.eval_seed, "evaluation sampling seed");
  mine_cmd->add_option("--eval-samples", mine_args.eval_samples,
                       "samples per video (default: checkpoint K)");

  UncArgs unc;
  CLI::App* unc_cmd = app.add_subcommand("analyze-uncertainty",
                                         "corruption and binning analyses");
  unc_cmd->add_option("--checkpoint", unc.checkpoint, "checkpoint JSON")->required();
  unc_cmd->add_option("--corpus", unc.corpus, "labeled corpus JSONL")->required();
  unc_cmd->add_option("--family", unc.family, "mixed|masked");
  unc_cmd->add_option("--out", unc.out, "output directory")->required();
  unc_cmd->add_option("--eval-seed", unc.eval_seed, "evaluation sampling seed");
  unc_cmd->add_option("--eval-samples", unc.eval_samples,
                      "samples per video (default: checkpoint K)");

  SweepArgs sweep;
  std::map<std::string, std::string> s_str;
  std::map<std::string, long long> s_int;
  std::map<std::string, double> s_dbl;
  CLI::App* sweep_cmd = app.add_subcommand("sweep-beta",
                                           "train one model per beta, report variance");
  sweep_cmd->add_option("--corpus", sweep.corpus, "corpus JSONL")->required();
  sweep_cmd->add_option("--out", sweep.out, "output directory")->required();
  sweep_cmd->add_option("--betas", sweep.betas, "comma-separated beta list");
  sweep_cmd->add_option("--config", sweep.config_path, "TOML or JSON config");
  add_train_flags(sweep_cmd, s_str, s_int, s_dbl);

  ExportArgs exp;
  CLI::App* exp_cmd = app.add_subcommand("export-embeddings",
                                         "per-video MoG moments and uncertainty");
  exp_cmd->add_option("--checkpoint", exp.checkpoint, "checkpoint JSON")->required();
  exp_cmd->add_option("--corpus", exp.corpus, "corpus JSONL")->required();
  exp_cmd->add_option("--out", exp.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const int threads = resolve_threads(threads_flag, app.count("--threads") > 0);

    if (gen_cmd->parsed()) {
      check(gen_sep >= 0.0, "--separation must be >= 0");
      gen.spec.classes = static_cast<std::size_t>(gen_classes);
      gen.spec.videos_per_class = static_cast<std::size_t>(gen_vpc);
      gen.spec.clips_per_video = static_cast<std::size_t>(gen_clips);
      gen.spec.feature_dim = static_cast<std::size_t>(gen_f);
      gen.spec.separation = gen_sep;
      gen.spec.within_std = gen_within;
      gen.spec.clip_noise_std = gen_noise;
      gen.spec.seed = static_cast<std::uint64_t>(gen_seed);
      const fs::path dir = prepare_outdir(gen.out);
      const SyntheticData data = generate_synthetic(gen.spec);
      write_corpus(data.corpus, (dir / "corpus.jsonl").string());
      const json spec_echo{{"classes", gen.spec.classes},
                           {"videos_per_class", gen.spec.videos_per_class},
                           {"clips_per_video", gen.spec.clips_per_video},
                           {"feature_dim", gen.spec.feature_dim},
                           {"separation", gen.spec.separation},
                           {"within_std", gen.spec.within_std},
                           {"clip_noise_std", gen.spec.clip_noise_std},
                           {"seed", gen.spec.seed}};
      write_json(dir / "gen_spec.json", spec_echo);
      json echo = args_echo_base("gen-data", threads);
      echo["args"] = spec_echo;
      echo["args"]["out"] = gen.out;
      write_json(dir / "effective_config.json", echo);
      return 0;
    }

    if (train_cmd->parsed()) {
      const fs::path dir = prepare_outdir(train_args.out);
      const Corpus corpus = read_corpus(train_args.corpus);

      TrainState state = [&] {
        if (!train_args.resume.empty()) return load_checkpoint(train_args.resume);
        return init_state(build_train_config(train_cmd, train_args.config_path,
                                             t_str, t_int, t_dbl, corpus));
      }();

      json echo = args_echo_base("train", threads);
      echo["args"] = json{{"corpus", train_args.corpus},
                          {"out", train_args.out},
                          {"resume", train_args.resume},
                          {"snapshot_every", train_args.snapshot_every}};
      echo["seed"] = state.config.seed;
      echo["train_config"] = json::parse(state.config.to_json_string());
      write_json(dir / "effective_config.json", echo);

      train(state, corpus, threads, [&](const TrainState& s) {
        if (train_args.snapshot_every > 0 &&
            s.epoch % train_args.snapshot_every == 0) {
          char name[40];
          std::snprintf(name, sizeof(name), "checkpoint_epoch%04zu.json", s.epoch);
          save_checkpoint(s, (dir / name).string());
        }
      });
      save_checkpoint(state, (dir / "checkpoint.json").string());
      write_metrics_csv(state.metrics, dir / "metrics.csv");
      return 0;
    }

    if (ret_cmd->parsed()) {
      const fs::path dir = prepare_outdir(ret.out);
      const TrainState state = load_checkpoint(ret.checkpoint);
      const Corpus corpus = read_corpus(ret.corpus);
      const Similarity sim = similarity_from_name(ret.similarity);
      const std::size_t k =
          ret.eval_samples > 0 ? ret.eval_samples : state.config.n_samples;
      const RetrievalReport report = retrieve(corpus, corpus, state.params, sim, k,
                                              ret.eval_seed, state.config.n_clips,
                                              threads);
      write_retrieval_reports(report, dir);
      json echo = args_echo_base("eval-retrieval", threads);
      echo["args"] = json{{"checkpoint", ret.checkpoint},
                          {"corpus", ret.corpus},
                          {"out", ret.out},
                          {"similarity", ret.similarity},
                          {"eval_seed", ret.eval_seed},
                          {"eval_samples", k}};
      write_json(dir / "effective_config.json", echo);
      return 0;
    }

    if (mine_cmd->parsed()) {
      const fs::path dir = prepare_outdir(mine_args.out);
      const Corpus corpus = read_corpus(mine_args.corpus);
      const std::vector<Metric> metrics = parse_metric_list(mine_args.metrics);
      std::vector<TrainState> states;
      states.reserve(mine_args.checkpoints.size());
      for (const std::string& path : mine_args.checkpoints) {
        states.push_back(load_checkpoint(path));
      }
      std::vector<CheckpointRef> refs;
      for (const TrainState& s : states) refs.push_back({&s.params, s.epoch});
      const TrainConfig& cfg = states.front().config;
      const std::size_t k =
          mine_args.eval_samples > 0 ? mine_args.eval_samples : cfg.n_samples;
      const std::vector<MiningCurvePoint> curve =
          mining_curve(corpus, refs, metrics, k, mine_args.eval_seed, cfg.n_clips,
                       cfg.resolved_lambda(), threads);

      std::ostringstream csv;
      csv << "checkpoint,epoch,metric,tau,precision,recall\n";
      json cj = json::array();
      for (const MiningCurvePoint& p : curve) {
        csv << p.checkpoint << ',' << p.epoch << ',' << metric_name(p.metric) << ','
            << fmt_double(p.tau) << ',' << fmt_double(p.precision) << ','
            << fmt_double(p.recall) << '\n';
        cj.push_back(json{{"checkpoint", p.checkpoint},
                          {"epoch", p.epoch},
                          {"metric", metric_name(p.metric)},
                          {"tau", p.tau},
                          {"precision", p.precision},
                          {"recall", p.recall}});
      }
      write_text(dir / "mining_curve.csv", csv.str());
      write_json(dir / "mining_curve.json", cj);
      json echo = args_echo_base("eval-mining", threads);
      echo["args"] = json{{"corpus", mine_args.corpus},
                          {"checkpoints", mine_args.checkpoints},
                          {"metrics", mine_args.metrics},
                          {"out", mine_args.out},
                          {"eval_seed", mine_args.eval_seed},
                          {"eval_samples", k}};
      write_json(dir / "effective_config.json", echo);
      return 0;
    }

    if (unc_cmd->parsed()) {
      const fs::path dir = prepare_outdir(unc.out);
      const TrainState state = load_checkpoint(unc.checkpoint);
      const Corpus corpus = read_corpus(unc.corpus);
      const std::size_t k =
          unc.eval_samples > 0 ? unc.eval_samples : state.config.n_samples;
      const UncertaintyReport report =
          uncertainty_analysis(state.params, corpus, unc.family, k, unc.eval_seed,
                               state.config.n_clips, threads);
      write_uncertainty_reports(report, dir);
      json echo = args_echo_base("analyze-uncertainty", threads);
      echo["args"] = json{{"checkpoint", unc.checkpoint},
                          {"corpus", unc.corpus},
                          {"family", unc.family},
                          {"out", unc.out},
                          {"eval_seed", unc.eval_seed},
                          {"eval_samples", k}};
      write_json(dir / "effective_config.json", echo);
      return 0;
    }

    if (sweep_cmd->parsed()) {
      const fs::path dir = prepare_outdir(sweep.out);
      const Corpus corpus = read_corpus(sweep.corpus);
      const std::vector<double> betas = parse_double_list(sweep.betas);
      for (double b : betas) check(b >= 0.0, "beta values must be >= 0");
      TrainConfig base_cfg = build_train_config(sweep_cmd, sweep.config_path,
                                                s_str, s_int, s_dbl, corpus);

      std::ostringstream csv;
      csv << "beta,mean_clip_variance,final_total,final_mean_uncertainty\n";
      json sj = json::array();
      for (double b : betas) {
        TrainConfig cfg = base_cfg;
        cfg.beta = b;
        TrainState state = init_state(cfg);
        train(state, corpus, threads);
        const double var = mean_clip_variance(state.params, corpus, cfg.n_clips,
                                              threads);
        const MetricsRow& last = state.metrics.back();
        csv << fmt_double(b) << ',' << fmt_double(var) << ','
            << fmt_double(last.total) << ',' << fmt_double(last.mean_uncertainty)
            << '\n';
        sj.push_back(json{{"beta", b},
                          {"mean_clip_variance", var},
                          {"final_total", last.total},
                          {"final_mean_uncertainty", last.mean_uncertainty}});
      }
      write_text(dir / "beta_sweep.csv", csv.str());
      write_json(dir / "beta_sweep.json", sj);
      json echo = args_echo_base("sweep-beta", threads);
      echo["args"] = json{{"corpus", sweep.corpus},
                          {"out", sweep.out},
                          {"betas", sweep.betas}};
      echo["train_config"] = json::parse(base_cfg.to_json_string());
      write_json(dir / "effective_config.json", echo);
      return 0;
    }

    if (exp_cmd->parsed()) {
      const fs::path dir = prepare_outdir(exp.out);
      const TrainState state = load_checkpoint(exp.checkpoint);
      const Corpus corpus = read_corpus(exp.corpus);
      const std::vector<VideoDistribution> dists =
          embed_corpus(state.params, corpus, state.config.n_clips, threads);

      const std::size_t d = state.config.embed_dim;
      std::ostringstream csv;
      csv << "id,label";
      for (std::size_t i = 0; i < d; ++i) csv << ",mu_" << i;
      for (std::size_t i = 0; i < d; ++i) csv << ",var_" << i;
      csv << ",uncertainty\n";
      json ej = json::array();
      for (std::size_t v = 0; v < corpus.size(); ++v) {
        csv << csv_field(corpus[v].id) << ',' << corpus[v].label;
        for (double x : dists[v].mean) csv << ',' << fmt_double(x);
        for (double x : dists[v].var) csv << ',' << fmt_double(x);
        csv << ',' << fmt_double(dists[v].uncertainty) << '\n';
        ej.push_back(json{{"id", corpus[v].id},
                          {"label", corpus[v].label},
                          {"mu", dists[v].mean},
                          {"var", dists[v].var},
                          {"uncertainty", dists[v].uncertainty}});
      }
      write_text(dir / "embeddings.csv", csv.str());
      write_json(dir / "embeddings.json", ej);
      json echo = args_echo_base("export-embeddings", threads);
      echo["args"] = json{{"checkpoint", exp.checkpoint},
                          {"corpus", exp.corpus},
                          {"out", exp.out}};
      write_json(dir / "effective_config.json", echo);
      return 0;
    }

    fail("no subcommand selected");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}

}  // namespace provico
