#pragma once

#include <cstddef>
#include <vector>

#include "provico/numerics.hpp"

namespace provico {

inline constexpr double kVarFloor = 1e-8;
inline constexpr double kLayerNormEps = 1e-5;

// Diagonal-Gaussian clip embedding: unit-norm mean, per-dim variance
// floored at kVarFloor.
struct GaussianEmbed {
  Vec64 mean;
  Vec64 var;
};

struct HeadDims {
  std::size_t input_dim = 64;
  // encoder affine widths; ReLU between layers, none after the last
  std::vector<std::size_t> encoder = {128, 128};
  std::size_t embed_dim = 32;

  std::size_t hidden_dim() const { return encoder.empty() ? input_dim : encoder.back(); }
  bool operator==(const HeadDims&) const = default;
};

/// Encoder MLP plus the two embedding heads, stored as one flat
/// parameter vector so the optimizer and the finite-difference oracle
/// can treat the model as a plain R^P point.
///
/// Layout: encoder affine (W row-major out x in, then b) per layer,
/// mu head affine, LayerNorm gamma/delta, sigma head affine, then the
/// match-probability scalars a_raw (slope, pre-softplus) and b.
struct ModelParams {
  HeadDims dims;
  Vec64 data;

  explicit ModelParams(HeadDims d);

  // Glorot-uniform weights, zero biases, gamma = 1, delta = 0,
  // a_raw chosen so softplus(a_raw) = 1, b = 0.
  static ModelParams init(HeadDims d, Rng& rng);

  std::size_t size() const { return data.size(); }

  double* enc_w(std::size_t layer) { return data.data() + enc_w_off_[layer]; }
  const double* enc_w(std::size_t layer) const { return data.data() + enc_w_off_[layer]; }
  double* enc_b(std::size_t layer) { return data.data() + enc_b_off_[layer]; }
  const double* enc_b(std::size_t layer) const { return data.data() + enc_b_off_[layer]; }
  std::size_t enc_in(std::size_t layer) const;
  std::size_t enc_out(std::size_t layer) const { return dims.encoder[layer]; }

  double* mu_w() { return data.data() + mu_w_off_; }
  const double* mu_w() const { return data.data() + mu_w_off_; }
  double* mu_b() { return data.data() + mu_b_off_; }
  const double* mu_b() const { return data.data() + mu_b_off_; }
  double* ln_gamma() { return data.data() + gamma_off_; }
  const double* ln_gamma() const { return data.data() + gamma_off_; }
  double* ln_delta() { return data.data() + delta_off_; }
  const double* ln_delta() const { return data.data() + delta_off_; }
  double* sigma_w() { return data.data() + sigma_w_off_; }
  const double* sigma_w() const { return data.data() + sigma_w_off_; }
  double* sigma_b() { return data.data() + sigma_b_off_; }
  const double* sigma_b() const { return data.data() + sigma_b_off_; }

  double& a_raw() { return data[a_raw_off_]; }
  double a_raw() const { return data[a_raw_off_]; }
  double& b() { return data[b_off_]; }
  double b() const { return data[b_off_]; }
  double a() const { return softplus(data[a_raw_off_]); }

  std::size_t a_raw_offset() const { return a_raw_off_; }
  std::size_t b_offset() const { return b_off_; }

 private:
  std::vector<std::size_t> enc_w_off_, enc_b_off_;
  std::size_t mu_w_off_ = 0, mu_b_off_ = 0, gamma_off_ = 0, delta_off_ = 0;
  std::size_t sigma_w_off_ = 0, sigma_b_off_ = 0, a_raw_off_ = 0, b_off_ = 0;
};

// Cached activations of one clip's forward pass, kept for backprop.
struct ClipTrace {
  Vec64 input;
  std::vector<Vec64> pre;   // per encoder layer, before ReLU
  std::vector<Vec64> post;  // per encoder layer, after ReLU (last layer: = pre)
  Vec64 mu_affine;          // W_mu * enc + b_mu
  double ln_mean = 0.0;
  double ln_inv_std = 0.0;
  Vec64 ln_xhat;  // (mu_affine - mean) * inv_std
  Vec64 ln_out;   // gamma * xhat + delta
  double ln_out_norm = 0.0;
  Vec64 logvar;  // sigma head affine output
  GaussianEmbed embed;
  std::vector<std::uint8_t> var_clamped;

  const Vec64& enc_out() const { return post.back(); }
};

/// (x - mean) / sqrt(var + 1e-5) * gamma + delta with biased variance.
Vec64 layer_norm(const Vec64& x, const Vec64& gamma, const Vec64& delta);

ClipTrace embed_clip_trace(const ModelParams& params, const Vec64& clip);

/// mean = l2-normalize(LayerNorm(W_mu enc(c) + b_mu)),
/// var  = exp(W_sigma enc(c) + b_sigma) floored at kVarFloor.
GaussianEmbed embed_clip(const ModelParams& params, const Vec64& clip);

/// Accumulates into grad (same size as params.data) the chain-rule
/// pullback of (d_mean, d_var) through one clip's forward pass.
/// Clamped variance dims and the ReLU zero side get zero gradient.
void clip_backward(const ModelParams& params, const ClipTrace& trace,
                   const Vec64& d_mean, const Vec64& d_var, Vec64& grad);

/// Batch form over cached traces; returns a fresh gradient vector.
Vec64 head_backward(const ModelParams& params, const std::vector<ClipTrace>& traces,
                    const std::vector<Vec64>& d_means, const std::vector<Vec64>& d_vars);

}  // namespace provico
