#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "provico/data_io.hpp"

using namespace provico;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("provico_io_" + name);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("generate_synthetic is deterministic per seed") {
  SyntheticSpec spec;
  spec.classes = 3;
  spec.videos_per_class = 4;
  spec.feature_dim = 8;
  spec.seed = 21;
  const SyntheticData a = generate_synthetic(spec);
  const SyntheticData b = generate_synthetic(spec);
  const fs::path pa = temp_file("det_a.jsonl"), pb = temp_file("det_b.jsonl");
  write_corpus(a.corpus, pa.string());
  write_corpus(b.corpus, pb.string());
  CHECK(slurp(pa) == slurp(pb));
}

TEST_CASE("zero separation puts every class center at the origin") {
  SyntheticSpec spec;
  spec.separation = 0.0;
  spec.classes = 4;
  spec.videos_per_class = 2;
  spec.feature_dim = 6;
  const SyntheticData data = generate_synthetic(spec);
  for (const Vec64& c : data.class_centers) {
    for (double v : c) CHECK(v == 0.0);
  }
}

TEST_CASE("10-sigma separation gives perfect nearest-center classification") {
  SyntheticSpec spec;
  spec.classes = 5;
  spec.videos_per_class = 10;
  spec.feature_dim = 32;
  spec.separation = 10.0;
  spec.within_std = 1.0;
  spec.seed = 3;
  const SyntheticData data = generate_synthetic(spec);
  for (std::size_t v = 0; v < data.corpus.size(); ++v) {
    double best = 1e300;
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < spec.classes; ++c) {
      const double d = squared_distance(data.video_latents[v].data(),
                                        data.class_centers[c].data(),
                                        spec.feature_dim);
      if (d < best) {
        best = d;
        best_c = c;
      }
    }
    CHECK(static_cast<int>(best_c) == data.corpus[v].label);
  }
}

TEST_CASE("corpus write/read round-trips exactly") {
  SyntheticSpec spec;
  spec.classes = 2;
  spec.videos_per_class = 3;
  spec.feature_dim = 5;
  spec.clips_per_video = 3;
  spec.seed = 17;
  const Corpus corpus = generate_synthetic(spec).corpus;
  const fs::path p = temp_file("roundtrip.jsonl");
  write_corpus(corpus, p.string());
  const Corpus back = read_corpus(p.string());
  REQUIRE(back.size() == corpus.size());
  for (std::size_t v = 0; v < corpus.size(); ++v) {
    CHECK(back[v].id == corpus[v].id);
    CHECK(back[v].label == corpus[v].label);
    REQUIRE(back[v].clips.size() == corpus[v].clips.size());
    for (std::size_t n = 0; n < corpus[v].clips.size(); ++n) {
      CHECK(back[v].clips[n] == corpus[v].clips[n]);  // bit-exact
    }
  }
}

TEST_CASE("ragged clips are rejected with the offending line") {
  const fs::path p = temp_file("ragged.jsonl");
  std::ofstream out(p);
  out << R"({"id":"a","label":0,"clips":[[1,2,3],[1,2,3]]})" << "\n";
  out << R"({"id":"b","label":0,"clips":[[1,2,3],[1,2]]})" << "\n";
  out.close();
  CHECK_THROWS_WITH_AS(read_corpus(p.string()),
                       doctest::Contains(":2:"), std::runtime_error);
}

TEST_CASE("duplicate ids are rejected") {
  const fs::path p = temp_file("dup.jsonl");
  std::ofstream out(p);
  out << R"({"id":"a","label":0,"clips":[[1,2]]})" << "\n";
  out << R"({"id":"a","label":1,"clips":[[3,4]]})" << "\n";
  out.close();
  CHECK_THROWS_WITH_AS(read_corpus(p.string()),
                       doctest::Contains("duplicate"), std::runtime_error);
}

TEST_CASE("non-finite feature values are rejected with line numbers") {
  const fs::path p = temp_file("inf.jsonl");
  std::ofstream out(p);
  out << R"({"id":"a","label":0,"clips":[[1e999,2]]})" << "\n";
  out.close();
  CHECK_THROWS_WITH_AS(read_corpus(p.string()),
                       doctest::Contains(":1:"), std::runtime_error);
}

TEST_CASE("empty file reads as an empty corpus") {
  const fs::path p = temp_file("empty.jsonl");
  std::ofstream(p).close();
  CHECK(read_corpus(p.string()).empty());
}

TEST_CASE("require_min_clips names the offending video") {
  Corpus corpus;
  corpus.push_back(Video{"v0", 0, {{1.0, 2.0}, {3.0, 4.0}}});
  corpus.push_back(Video{"v1", 0, {{1.0, 2.0}}});
  CHECK_NOTHROW(require_min_clips(corpus, 1));
  CHECK_THROWS_WITH_AS(require_min_clips(corpus, 2), doctest::Contains("v1"),
                       std::runtime_error);
}
