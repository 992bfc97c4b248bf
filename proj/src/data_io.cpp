#include "provico/data_io.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include "json.hpp"

namespace provico {

using nlohmann::json;

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  check(spec.classes >= 1, "generate_synthetic: need at least one class");
  check(spec.videos_per_class >= 1, "generate_synthetic: need videos per class");
  check(spec.clips_per_video >= 1, "generate_synthetic: need clips per video");
  check(spec.feature_dim >= 1, "generate_synthetic: need a feature dimension");
  check(spec.separation >= 0.0, "generate_synthetic: separation must be >= 0");
  check(spec.within_std > 0.0, "generate_synthetic: within_std must be > 0");
  check(spec.clip_noise_std > 0.0, "generate_synthetic: clip_noise_std must be > 0");

  Rng rng(spec.seed);
  SyntheticData out;
  const double radius = spec.separation * spec.within_std;

  out.class_centers.reserve(spec.classes);
  for (std::size_t c = 0; c < spec.classes; ++c) {
    Vec64 dir = normal_vector(rng, spec.feature_dim);
    const double norm = l2_norm(dir.data(), dir.size());
    Vec64 center(spec.feature_dim, 0.0);
    if (radius > 0.0 && norm > 1e-12) {
      for (std::size_t d = 0; d < spec.feature_dim; ++d)
        center[d] = dir[d] / norm * radius;
    }
    out.class_centers.push_back(std::move(center));
  }

  const std::size_t total = spec.classes * spec.videos_per_class;
  std::size_t index = 0;
  char idbuf[16];
  for (std::size_t c = 0; c < spec.classes; ++c) {
    for (std::size_t v = 0; v < spec.videos_per_class; ++v, ++index) {
      Video video;
      std::snprintf(idbuf, sizeof(idbuf), "v%05zu", index);
      video.id = idbuf;
      video.label = static_cast<int>(c);
      Vec64 latent = out.class_centers[c];
      const Vec64 wnoise = normal_vector(rng, spec.feature_dim);
      for (std::size_t d = 0; d < spec.feature_dim; ++d)
        latent[d] += spec.within_std * wnoise[d];
      video.clips.reserve(spec.clips_per_video);
      for (std::size_t n = 0; n < spec.clips_per_video; ++n) {
        Vec64 clip = latent;
        const Vec64 cnoise = normal_vector(rng, spec.feature_dim);
        for (std::size_t d = 0; d < spec.feature_dim; ++d)
          clip[d] += spec.clip_noise_std * cnoise[d];
        video.clips.push_back(std::move(clip));
      }
      out.video_latents.push_back(std::move(latent));
      out.corpus.push_back(std::move(video));
    }
  }
  check(out.corpus.size() == total, "generate_synthetic: internal count mismatch");
  return out;
}

namespace {

[[noreturn]] void corpus_fail(const std::string& path, std::size_t line,
                              const std::string& what) {
  fail(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

Corpus read_corpus(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "read_corpus: cannot open " + path);

  Corpus corpus;
  std::unordered_set<std::string> seen_ids;
  std::size_t feature_dim = 0;
  std::size_t clip_count = 0;
  std::string line;
  std::size_t lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      // parse_error for malformed lines, out_of_range for 1e999-style overflow
      corpus_fail(path, lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("label") ||
        !j.contains("clips")) {
      corpus_fail(path, lineno, "expected object with id, label, clips");
    }
    Video video;
    try {
      video.id = j.at("id").get<std::string>();
      video.label = j.at("label").get<int>();
    } catch (const json::exception& e) {
      corpus_fail(path, lineno, std::string("bad id/label field: ") + e.what());
    }
    if (!seen_ids.insert(video.id).second) {
      corpus_fail(path, lineno, "duplicate video id '" + video.id + "'");
    }
    const json& clips = j.at("clips");
    if (!clips.is_array() || clips.empty()) {
      corpus_fail(path, lineno, "clips must be a non-empty array");
    }
    for (const json& clip : clips) {
      if (!clip.is_array() || clip.empty()) {
        corpus_fail(path, lineno, "each clip must be a non-empty array");
      }
      Vec64 features;
      features.reserve(clip.size());
      for (const json& x : clip) {
        if (!x.is_number()) corpus_fail(path, lineno, "non-numeric feature value");
        const double v = x.get<double>();
        if (!std::isfinite(v)) corpus_fail(path, lineno, "non-finite feature value");
        features.push_back(v);
      }
      if (feature_dim == 0) feature_dim = features.size();
      if (features.size() != feature_dim) {
        corpus_fail(path, lineno,
                    "clip length " + std::to_string(features.size()) +
                        " != corpus feature dim " + std::to_string(feature_dim));
      }
      video.clips.push_back(std::move(features));
    }
    if (clip_count == 0) clip_count = video.clips.size();
    if (video.clips.size() != clip_count) {
      corpus_fail(path, lineno,
                  "video has " + std::to_string(video.clips.size()) +
                      " clips, corpus uses " + std::to_string(clip_count));
    }
    corpus.push_back(std::move(video));
  }
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  check(out.good(), "write_corpus: cannot open " + path);
  for (const Video& video : corpus) {
    json j;
    j["id"] = video.id;
    j["label"] = video.label;
    j["clips"] = video.clips;
    out << j.dump() << '\n';
  }
  out.flush();
  check(out.good(), "write_corpus: write failed for " + path);
}

void require_min_clips(const Corpus& corpus, std::size_t n) {
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].clips.size() < n) {
      fail("video '" + corpus[i].id + "' (index " + std::to_string(i) + ") has " +
           std::to_string(corpus[i].clips.size()) + " clips, need at least " +
           std::to_string(n));
    }
  }
}

}  // namespace provico
