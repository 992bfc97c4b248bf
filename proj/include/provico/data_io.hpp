#pragma once

#include <string>
#include <vector>

#include "provico/numerics.hpp"

namespace provico {

// One video: an id, an optional class label (-1 = unlabeled) and its
// precomputed clip feature vectors.
struct Video {
  std::string id;
  int label = -1;
  std::vector<Vec64> clips;
};

using Corpus = std::vector<Video>;

struct SyntheticSpec {
  std::size_t classes = 5;
  std::size_t videos_per_class = 40;
  std::size_t clips_per_video = 2;
  std::size_t feature_dim = 64;
  double separation = 6.0;      // class-center radius in units of within_std
  double within_std = 1.0;      // video-level spread inside a class
  double clip_noise_std = 0.5;  // clip-level spread inside a video
  std::uint64_t seed = 0;
};

struct SyntheticData {
  Corpus corpus;
  std::vector<Vec64> class_centers;  // classes x F
  std::vector<Vec64> video_latents;  // corpus.size() x F
};

/// Gaussian cluster corpus: class centers on a sphere of radius
/// separation * within_std, video latents around centers, clip features
/// around latents. Deterministic per seed.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// JSON Lines, one video per line:
///   {"id": str, "label": int, "clips": [[f64...], ...]}
/// The reader streams line by line and validates uniform feature length
/// and clip count, unique ids and finite values; errors cite the line.
Corpus read_corpus(const std::string& path);
void write_corpus(const Corpus& corpus, const std::string& path);

/// Every video must have at least n clips (callers pass config N).
void require_min_clips(const Corpus& corpus, std::size_t n);

}  // namespace provico
