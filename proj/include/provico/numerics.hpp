#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace provico {

using Vec64 = std::vector<double>;

// Dense row-major matrix of doubles.
struct Mat64 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec64 data;

  Mat64() = default;
  Mat64(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

[[noreturn]] void fail(const std::string& msg);

inline void check(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

void check_finite(const double* values, std::size_t n, const std::string& what);
void check_finite(const Vec64& values, const std::string& what);

double sigmoid(double x);
double softplus(double x);
// inverse of softplus; y must be > 0
double softplus_inverse(double y);

double dot(const Vec64& a, const Vec64& b);
double squared_distance(const double* a, const double* b, std::size_t n);
double l2_norm(const double* a, std::size_t n);

struct RngState {
  std::uint64_t seed = 0;
  std::string engine;  // mt19937_64 stream serialization
  bool has_spare = false;
  double spare = 0.0;
};

/// Deterministic seeded source of uniforms and standard normals.
///
/// Normals come from the Box-Muller transform over mt19937_64 uniforms;
/// the second draw of each pair is cached so the state is exactly
/// (engine state, cached spare). Identical seed gives an identical
/// stream on a given implementation; cross-platform bit equality of the
/// normals is not promised (libm sin/cos differ).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64() { return engine_(); }
  // unbiased draw in [0, n)
  std::uint64_t below(std::uint64_t n);
  // uniform in (0, 1]
  double uniform01();
  double normal();

  /// Independently seeded child generator for parallel work: the child
  /// seed is splitmix64(seed ^ splitmix64(index + 0x9E3779B97F4A7C15)),
  /// so children never share state with the parent or each other.
  Rng child(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }
  RngState state() const;
  static Rng from_state(const RngState& s);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// d iid standard-normal draws; advances rng. d must be >= 1.
Vec64 normal_vector(Rng& rng, std::size_t d);

/// Central-difference gradient (f(x+h e_i) - f(x-h e_i)) / 2h.
/// Throws if f evaluates to a non-finite value.
Vec64 finite_diff_grad(const std::function<double(const Vec64&)>& f,
                       const Vec64& x, double h = 1e-5);

/// Static contiguous partition of [0, n) into at most `threads` chunks,
/// each handled by body(begin, end, chunk_index). Chunk boundaries depend
/// only on (n, threads), so reductions done in chunk order are
/// deterministic for a fixed thread count. threads <= 1 runs inline.
void parallel_chunks(std::size_t n, int threads,
                     const std::function<void(std::size_t, std::size_t, int)>& body);

int max_chunks(std::size_t n, int threads);

}  // namespace provico
