#include "provico/heads.hpp"

#include <cmath>

namespace provico {

namespace {

// y = W x + b, W row-major (out x in)
void affine(const double* w, const double* b, const double* x, std::size_t in,
            std::size_t out, double* y) {
  for (std::size_t r = 0; r < out; ++r) {
    double s = b[r];
    const double* row = w + r * in;
    for (std::size_t c = 0; c < in; ++c) s += row[c] * x[c];
    y[r] = s;
  }
}

// dW += g outer x ; db += g ; dx += W^T g
void affine_backward(const double* w, const double* x, const double* g,
                     std::size_t in, std::size_t out, double* dw, double* db,
                     double* dx) {
  for (std::size_t r = 0; r < out; ++r) {
    const double gr = g[r];
    db[r] += gr;
    double* dwrow = dw + r * in;
    const double* wrow = w + r * in;
    for (std::size_t c = 0; c < in; ++c) {
      dwrow[c] += gr * x[c];
      if (dx) dx[c] += wrow[c] * gr;
    }
  }
}

}  // namespace

ModelParams::ModelParams(HeadDims d) : dims(std::move(d)) {
  check(dims.input_dim >= 1, "ModelParams: input_dim must be >= 1");
  check(dims.embed_dim >= 1, "ModelParams: embed_dim must be >= 1");
  std::size_t off = 0;
  std::size_t in = dims.input_dim;
  for (std::size_t l = 0; l < dims.encoder.size(); ++l) {
    const std::size_t out = dims.encoder[l];
    check(out >= 1, "ModelParams: encoder width must be >= 1");
    enc_w_off_.push_back(off);
    off += out * in;
    enc_b_off_.push_back(off);
    off += out;
    in = out;
  }
  const std::size_t dh = dims.hidden_dim();
  const std::size_t de = dims.embed_dim;
  mu_w_off_ = off;
  off += de * dh;
  mu_b_off_ = off;
  off += de;
  gamma_off_ = off;
  off += de;
  delta_off_ = off;
  off += de;
  sigma_w_off_ = off;
  off += de * dh;
  sigma_b_off_ = off;
  off += de;
  a_raw_off_ = off++;
  b_off_ = off++;
  data.assign(off, 0.0);
}

std::size_t ModelParams::enc_in(std::size_t layer) const {
  return layer == 0 ? dims.input_dim : dims.encoder[layer - 1];
}

ModelParams ModelParams::init(HeadDims d, Rng& rng) {
  ModelParams p(std::move(d));
  auto glorot = [&rng](double* w, std::size_t fan_in, std::size_t fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < fan_in * fan_out; ++i) {
      w[i] = (2.0 * rng.uniform01() - 1.0) * bound;
    }
  };
  for (std::size_t l = 0; l < p.dims.encoder.size(); ++l) {
    glorot(p.enc_w(l), p.enc_in(l), p.enc_out(l));
  }
  const std::size_t dh = p.dims.hidden_dim();
  const std::size_t de = p.dims.embed_dim;
  glorot(p.mu_w(), dh, de);
  glorot(p.sigma_w(), dh, de);
  for (std::size_t i = 0; i < de; ++i) p.ln_gamma()[i] = 1.0;
  p.a_raw() = softplus_inverse(1.0);
  return p;
}

Vec64 layer_norm(const Vec64& x, const Vec64& gamma, const Vec64& delta) {
  check(x.size() == gamma.size() && x.size() == delta.size(),
        "layer_norm: length mismatch");
  check(!x.empty(), "layer_norm: empty input");
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
  Vec64 out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = (x[i] - mean) * inv_std * gamma[i] + delta[i];
  }
  return out;
}

ClipTrace embed_clip_trace(const ModelParams& params, const Vec64& clip) {
  check(clip.size() == params.dims.input_dim,
        "embed_clip: clip feature length " + std::to_string(clip.size()) +
            " != configured input dim " + std::to_string(params.dims.input_dim));
  ClipTrace t;
  t.input = clip;

  const std::size_t layers = params.dims.encoder.size();
  t.pre.resize(layers);
  t.post.resize(layers);
  const Vec64* x = &t.input;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = params.enc_in(l);
    const std::size_t out = params.enc_out(l);
    t.pre[l].assign(out, 0.0);
    affine(params.enc_w(l), params.enc_b(l), x->data(), in, out, t.pre[l].data());
    if (l + 1 < layers) {
      t.post[l].resize(out);
      for (std::size_t i = 0; i < out; ++i) t.post[l][i] = std::max(t.pre[l][i], 0.0);
    } else {
      t.post[l] = t.pre[l];
    }
    x = &t.post[l];
  }
  const Vec64& enc = layers == 0 ? t.input : t.post.back();
  if (layers == 0) {
    t.pre.push_back(t.input);
    t.post.push_back(t.input);
  }

  const std::size_t dh = params.dims.hidden_dim();
  const std::size_t de = params.dims.embed_dim;

  t.mu_affine.assign(de, 0.0);
  affine(params.mu_w(), params.mu_b(), enc.data(), dh, de, t.mu_affine.data());

  double mean = 0.0;
  for (double v : t.mu_affine) mean += v;
  mean /= static_cast<double>(de);
  double var = 0.0;
  for (double v : t.mu_affine) var += (v - mean) * (v - mean);
  var /= static_cast<double>(de);
  t.ln_mean = mean;
  t.ln_inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
  t.ln_xhat.resize(de);
  t.ln_out.resize(de);
  for (std::size_t i = 0; i < de; ++i) {
    t.ln_xhat[i] = (t.mu_affine[i] - mean) * t.ln_inv_std;
    t.ln_out[i] = t.ln_xhat[i] * params.ln_gamma()[i] + params.ln_delta()[i];
  }
  // guard keeps degenerate inputs finite; the unit-norm invariant only
  // holds for pre-normalization norm > 1e-12
  t.ln_out_norm = std::max(l2_norm(t.ln_out.data(), de), 1e-12);
  t.embed.mean.resize(de);
  for (std::size_t i = 0; i < de; ++i) t.embed.mean[i] = t.ln_out[i] / t.ln_out_norm;

  t.logvar.assign(de, 0.0);
  affine(params.sigma_w(), params.sigma_b(), enc.data(), dh, de, t.logvar.data());
  t.embed.var.resize(de);
  t.var_clamped.resize(de);
  for (std::size_t i = 0; i < de; ++i) {
    const double v = std::exp(t.logvar[i]);
    t.var_clamped[i] = v < kVarFloor;
    t.embed.var[i] = std::max(v, kVarFloor);
  }
  check_finite(t.embed.mean, "embed_clip mean");
  check_finite(t.embed.var, "embed_clip var");
  return t;
}

GaussianEmbed embed_clip(const ModelParams& params, const Vec64& clip) {
  return embed_clip_trace(params, clip).embed;
}

void clip_backward(const ModelParams& params, const ClipTrace& trace,
                   const Vec64& d_mean, const Vec64& d_var, Vec64& grad) {
  const std::size_t de = params.dims.embed_dim;
  const std::size_t dh = params.dims.hidden_dim();
  check(trace.ln_out.size() == de, "clip_backward: missing forward cache");
  check(d_mean.size() == de && d_var.size() == de,
        "clip_backward: upstream gradient size mismatch");
  check(grad.size() == params.size(), "clip_backward: gradient buffer size mismatch");

  double* g = grad.data();
  const std::size_t layers = params.dims.encoder.size();
  Vec64 d_enc(dh, 0.0);

  // var = clamp(exp(logvar)): zero through the active clamp
  Vec64 d_logvar(de);
  for (std::size_t i = 0; i < de; ++i) {
    d_logvar[i] = trace.var_clamped[i] ? 0.0 : d_var[i] * trace.embed.var[i];
  }
  affine_backward(params.sigma_w(), trace.enc_out().data(), d_logvar.data(), dh, de,
                  g + (params.sigma_w() - params.data.data()),
                  g + (params.sigma_b() - params.data.data()), d_enc.data());

  // l2 normalize: d_ln = (d_mean - mean (mean . d_mean)) / norm
  double mdotg = 0.0;
  for (std::size_t i = 0; i < de; ++i) mdotg += trace.embed.mean[i] * d_mean[i];
  Vec64 d_ln(de);
  for (std::size_t i = 0; i < de; ++i) {
    d_ln[i] = (d_mean[i] - trace.embed.mean[i] * mdotg) / trace.ln_out_norm;
  }

  // LayerNorm affine + normalization
  double* d_gamma = g + (params.ln_gamma() - params.data.data());
  double* d_delta = g + (params.ln_delta() - params.data.data());
  Vec64 d_xhat(de);
  for (std::size_t i = 0; i < de; ++i) {
    d_gamma[i] += d_ln[i] * trace.ln_xhat[i];
    d_delta[i] += d_ln[i];
    d_xhat[i] = d_ln[i] * params.ln_gamma()[i];
  }
  double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
  for (std::size_t i = 0; i < de; ++i) {
    mean_dxhat += d_xhat[i];
    mean_dxhat_xhat += d_xhat[i] * trace.ln_xhat[i];
  }
  mean_dxhat /= static_cast<double>(de);
  mean_dxhat_xhat /= static_cast<double>(de);
  Vec64 d_mu_affine(de);
  for (std::size_t i = 0; i < de; ++i) {
    d_mu_affine[i] = trace.ln_inv_std *
                     (d_xhat[i] - mean_dxhat - trace.ln_xhat[i] * mean_dxhat_xhat);
  }
  affine_backward(params.mu_w(), trace.enc_out().data(), d_mu_affine.data(), dh, de,
                  g + (params.mu_w() - params.data.data()),
                  g + (params.mu_b() - params.data.data()), d_enc.data());

  // encoder MLP; ReLU between layers, subgradient 0 at the kink
  Vec64 d_post = std::move(d_enc);
  for (std::size_t li = layers; li-- > 0;) {
    const std::size_t in = params.enc_in(li);
    const std::size_t out = params.enc_out(li);
    Vec64 d_pre(out);
    for (std::size_t i = 0; i < out; ++i) {
      const bool relu = li + 1 < layers;
      d_pre[i] = (relu && trace.pre[li][i] <= 0.0) ? 0.0 : d_post[i];
    }
    const Vec64& x = li == 0 ? trace.input : trace.post[li - 1];
    Vec64 d_x(in, 0.0);
    affine_backward(params.enc_w(li), x.data(), d_pre.data(), in, out,
                    g + (params.enc_w(li) - params.data.data()),
                    g + (params.enc_b(li) - params.data.data()),
                    li == 0 ? nullptr : d_x.data());
    d_post = std::move(d_x);
  }
}

Vec64 head_backward(const ModelParams& params, const std::vector<ClipTrace>& traces,
                    const std::vector<Vec64>& d_means, const std::vector<Vec64>& d_vars) {
  check(traces.size() == d_means.size() && traces.size() == d_vars.size(),
        "head_backward: trace/gradient count mismatch");
  Vec64 grad(params.size(), 0.0);
  for (std::size_t i = 0; i < traces.size(); ++i) {
    clip_backward(params, traces[i], d_means[i], d_vars[i], grad);
  }
  return grad;
}

}  // namespace provico
