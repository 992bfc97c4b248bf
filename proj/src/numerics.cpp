#include "provico/numerics.hpp"

#include <cmath>
#include <sstream>
#include <thread>

namespace provico {

void fail(const std::string& msg) { throw std::runtime_error(msg); }

void check_finite(const double* values, std::size_t n, const std::string& what) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(values[i])) {
      fail(what + ": non-finite value at index " + std::to_string(i));
    }
  }
}

void check_finite(const Vec64& values, const std::string& what) {
  check_finite(values.data(), values.size(), what);
}

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
  check(y > 0.0, "softplus_inverse: argument must be positive");
  if (y > 30.0) return y;
  return std::log(std::expm1(y));
}

double dot(const Vec64& a, const Vec64& b) {
  check(a.size() == b.size(), "dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double l2_norm(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
  return std::sqrt(s);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t Rng::below(std::uint64_t n) {
  check(n > 0, "Rng::below: n must be positive");
  // rejection sampling over the largest multiple of n
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::uniform01() {
  // 53 random bits mapped to (0, 1]
  return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Rng Rng::child(std::uint64_t index) const {
  return Rng(splitmix64(seed_ ^ splitmix64(index + 0x9E3779B97F4A7C15ULL)));
}

RngState Rng::state() const {
  RngState s;
  s.seed = seed_;
  std::ostringstream os;
  os << engine_;
  s.engine = os.str();
  s.has_spare = has_spare_;
  s.spare = spare_;
  return s;
}

Rng Rng::from_state(const RngState& s) {
  Rng rng(s.seed);
  std::istringstream is(s.engine);
  is >> rng.engine_;
  check(!is.fail(), "Rng::from_state: malformed engine state");
  rng.has_spare_ = s.has_spare;
  rng.spare_ = s.spare;
  return rng;
}

Vec64 normal_vector(Rng& rng, std::size_t d) {
  check(d >= 1, "normal_vector: dimension must be >= 1");
  Vec64 v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = rng.normal();
  return v;
}

Vec64 finite_diff_grad(const std::function<double(const Vec64&)>& f,
                       const Vec64& x, double h) {
  check(h > 0.0, "finite_diff_grad: step must be positive");
  Vec64 grad(x.size());
  Vec64 p = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + h;
    const double fp = f(p);
    p[i] = orig - h;
    const double fm = f(p);
    p[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      fail("finite_diff_grad: non-finite function value at coordinate " +
           std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

int max_chunks(std::size_t n, int threads) {
  if (threads < 1) threads = 1;
  const std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  return static_cast<int>(t == 0 ? 1 : t);
}

void parallel_chunks(std::size_t n, int threads,
                     const std::function<void(std::size_t, std::size_t, int)>& body) {
  if (n == 0) return;
  const int chunks = max_chunks(n, threads);
  if (chunks <= 1) {
    body(0, n, 0);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(chunks));
  const std::size_t base = n / static_cast<std::size_t>(chunks);
  const std::size_t rem = n % static_cast<std::size_t>(chunks);
  std::size_t begin = 0;
  for (int c = 0; c < chunks; ++c) {
    const std::size_t len = base + (static_cast<std::size_t>(c) < rem ? 1 : 0);
    const std::size_t end = begin + len;
    workers.emplace_back([&body, begin, end, c] { body(begin, end, c); });
    begin = end;
  }
  for (auto& w : workers) w.join();
}

}  // namespace provico
