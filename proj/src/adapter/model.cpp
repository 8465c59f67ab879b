// Copyright 2026 The verilm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "verilm/adapter/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "verilm/error.hpp"

namespace verilm::adapter {
namespace {

constexpr double kNormEps = 1e-6;
constexpr double kEmbeddingInitStd = 0.02;

// y += a * x
template <class T>
inline void axpy(T a, const T* __restrict x, T* __restrict y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <class T>
inline T dot(const T* a, const T* b, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <class T>
T rmsnorm_forward(const T* x, const T* gain, T* y, std::size_t d) {
  T ms = dot(x, x, d) / T(d);
  T inv = T(1) / std::sqrt(ms + T(kNormEps));
  for (std::size_t i = 0; i < d; ++i) y[i] = gain[i] * x[i] * inv;
  return inv;
}

// dx += d rmsnorm / dx applied to dy (gain frozen).
template <class T>
void rmsnorm_backward(const T* x, const T* gain, T inv, const T* dy, T* dx, std::size_t d) {
  T s = 0;
  for (std::size_t i = 0; i < d; ++i) s += gain[i] * dy[i] * x[i];
  const T c = inv * inv * inv * s / T(d);
  for (std::size_t i = 0; i < d; ++i) dx[i] += inv * gain[i] * dy[i] - c * x[i];
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

template <class T>
inline T gelu(T u) {
  return T(0.5) * u * (T(1) + std::tanh(T(kGeluC) * (u + T(kGeluA) * u * u * u)));
}

template <class T>
inline T gelu_grad(T u) {
  T th = std::tanh(T(kGeluC) * (u + T(kGeluA) * u * u * u));
  return T(0.5) * (T(1) + th) +
         T(0.5) * u * (T(1) - th * th) * T(kGeluC) * (T(1) + T(3 * kGeluA) * u * u);
}

template <class T>
inline T softplus(T x) {
  return std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x)));
}

template <class T>
inline T sigmoid(T x) {
  return x >= 0 ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

}  // namespace

void ModelConfig::validate() const {
  if (d_spk < 2) throw ConfigError("model: d_spk must be >= 2");
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0)
    throw ConfigError("model: d_model must be a positive multiple of n_heads");
  if (n_blocks == 0 || d_ff == 0) throw ConfigError("model: n_blocks and d_ff must be positive");
  if (lora && (lora_rank == 0 || !(lora_alpha > 0)))
    throw ConfigError("model: LoRA rank and alpha must be positive");
}

template <class T>
AdapterModel<T>::AdapterModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  build_layout();
}

template <class T>
AdapterModel<T>::AdapterModel(const ModelConfig& cfg, std::mt19937_64& rng) : AdapterModel(cfg) {
  init_random(rng);
  refresh_frozen_cache();
}

template <class T>
void AdapterModel<T>::build_layout() {
  const auto d = cfg_.d_model, r = cfg_.lora_rank;
  connector_w_ = params_.add("connector.weight", d, cfg_.d_spk, true);
  connector_b_ = params_.add("connector.bias", 1, d, true);
  markers_ = params_.add("embed.markers", 3, d, false);
  positions_ = params_.add("embed.positions", ModelConfig::kSeqLen, d, false);
  std::size_t transposed = 0;
  auto linear = [&](const std::string& name, std::size_t in, std::size_t out) {
    LoraLinearIds ids;
    ids.in = in;
    ids.out = out;
    ids.weight = params_.add(name + ".weight", out, in, false);
    if (cfg_.lora) {
      ids.has_lora = true;
      ids.lora_a = params_.add(name + ".lora_a", r, in, true);
      ids.lora_b = params_.add(name + ".lora_b", out, r, true);
    }
    ids.transposed = transposed;
    transposed += in * out;
    return ids;
  };
  for (std::size_t b = 0; b < cfg_.n_blocks; ++b) {
    const std::string p = "block" + std::to_string(b);
    BlockIds blk;
    blk.norm1 = params_.add(p + ".norm1", 1, d, false);
    blk.q = linear(p + ".attn.q", d, d);
    blk.k = linear(p + ".attn.k", d, d);
    blk.v = linear(p + ".attn.v", d, d);
    blk.o = linear(p + ".attn.o", d, d);
    blk.norm2 = params_.add(p + ".norm2", 1, d, false);
    blk.up = linear(p + ".mlp.up", d, cfg_.d_ff);
    blk.down = linear(p + ".mlp.down", cfg_.d_ff, d);
    blocks_.push_back(blk);
  }
  final_norm_ = params_.add("final_norm", 1, d, false);
  head_w_ = params_.add("head.weight", 2, d, cfg_.train_head);
  head_b_ = params_.add("head.bias", 1, 2, cfg_.train_head);
  transposed_.assign(transposed, T(0));
}

template <class T>
void AdapterModel<T>::init_random(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto fill = [&](ParameterSet<float>::Id id, double stddev) {
    for (auto& v : params_.values(id)) v = static_cast<T>(stddev * gauss(rng));
  };
  auto ones = [&](ParameterSet<float>::Id id) {
    for (auto& v : params_.values(id)) v = T(1);
  };
  const double d = double(cfg_.d_model);
  fill(connector_w_, kEmbeddingInitStd);
  fill(markers_, kEmbeddingInitStd);
  fill(positions_, kEmbeddingInitStd);
  auto linear = [&](const LoraLinearIds& l) {
    fill(l.weight, 1.0 / std::sqrt(double(l.in)));
    if (l.has_lora) fill(l.lora_a, 1.0 / std::sqrt(double(l.in)));  // B stays zero
  };
  for (const auto& b : blocks_) {
    ones(b.norm1);
    ones(b.norm2);
    for (const auto* l : {&b.q, &b.k, &b.v, &b.o, &b.up, &b.down}) linear(*l);
  }
  ones(final_norm_);
  fill(head_w_, 1.0 / std::sqrt(d));
}

template <class T>
void AdapterModel<T>::refresh_frozen_cache() {
  for (const auto& b : blocks_) {
    for (const auto* l : {&b.q, &b.k, &b.v, &b.o, &b.up, &b.down}) {
      auto w = params_.values(l->weight);
      T* wt = transposed_.data() + l->transposed;
      for (std::size_t o = 0; o < l->out; ++o)
        for (std::size_t i = 0; i < l->in; ++i) wt[i * l->out + o] = w[o * l->in + i];
    }
  }
}

template <class T>
Workspace<T>::Workspace(const ModelConfig& cfg) {
  const auto L = ModelConfig::kSeqLen, d = cfg.d_model, r = std::max<std::size_t>(cfg.lora_rank, 1),
             ff = cfg.d_ff, H = cfg.n_heads;
  x0.assign(L * d, 0);
  blocks.resize(cfg.n_blocks);
  for (auto& b : blocks) {
    for (auto* v : {&b.x, &b.n1, &b.q, &b.k, &b.v, &b.att, &b.h, &b.n2}) v->assign(L * d, 0);
    for (auto* v : {&b.inv1, &b.inv2}) v->assign(L, 0);
    for (auto* v : {&b.zq, &b.zk, &b.zv, &b.zo, &b.zup, &b.zdown}) v->assign(L * r, 0);
    b.probs.assign(H * L * L, 0);
    b.u.assign(L * ff, 0);
    b.g.assign(L * ff, 0);
  }
  x_final.assign(L * d, 0);
  nf.assign(d, 0);
  for (auto* v : {&dx, &dh, &dn, &dq, &dk, &dv, &datt}) v->assign(L * d, 0);
  du.assign(L * ff, 0);
  dg.assign(L * ff, 0);
  dz.assign(r, 0);
  tmp.assign(std::max(d, ff), 0);
}

namespace {

// Y[L x out] = X W^T (+ s * (X A^T) B^T), caching Z = X A^T.
template <class T>
void lora_forward(const LoraLinearIds& l, const ParameterSet<T>& p, const T* wt, T scale,
                  bool use_lora, const T* X, T* Y, T* Z, std::size_t L) {
  const std::size_t in = l.in, out = l.out;
  const bool lora = use_lora && l.has_lora;
  const T* A = lora ? p.values(l.lora_a).data() : nullptr;
  const T* B = lora ? p.values(l.lora_b).data() : nullptr;
  const std::size_t r = lora ? p.info(l.lora_a).rows : 0;
  for (std::size_t t = 0; t < L; ++t) {
    const T* x = X + t * in;
    T* y = Y + t * out;
    std::fill(y, y + out, T(0));
    for (std::size_t k = 0; k < in; ++k) axpy(x[k], wt + k * out, y, out);
    if (!lora) continue;
    T* z = Z + t * r;
    for (std::size_t j = 0; j < r; ++j) z[j] = dot(A + j * in, x, in);
    for (std::size_t o = 0; o < out; ++o) y[o] += scale * dot(B + o * r, z, r);
  }
}

// dX += dY W_eff; accumulates A/B gradients.
template <class T>
void lora_backward(const LoraLinearIds& l, const ParameterSet<T>& p, std::span<T> grads, T scale,
                   const T* X, const T* Z, const T* dY, T* dX, T* wbuf, std::size_t L) {
  const std::size_t in = l.in, out = l.out;
  const T* W = p.values(l.weight).data();
  for (std::size_t t = 0; t < L; ++t) {
    const T* dy = dY + t * out;
    T* dx = dX + t * in;
    for (std::size_t o = 0; o < out; ++o)
      if (dy[o] != T(0)) axpy(dy[o], W + o * in, dx, in);
  }
  if (!l.has_lora) return;
  const T* A = p.values(l.lora_a).data();
  const T* B = p.values(l.lora_b).data();
  const std::size_t r = p.info(l.lora_a).rows;
  auto gA = p.grad(grads, l.lora_a);
  auto gB = p.grad(grads, l.lora_b);
  for (std::size_t t = 0; t < L; ++t) {
    const T* dy = dY + t * out;
    const T* x = X + t * in;
    const T* z = Z + t * r;
    // w = B^T dy
    std::fill(wbuf, wbuf + r, T(0));
    for (std::size_t o = 0; o < out; ++o) axpy(dy[o], B + o * r, wbuf, r);
    for (std::size_t j = 0; j < r; ++j) axpy(scale * wbuf[j], A + j * in, dX + t * in, in);
    if (!gB.empty())
      for (std::size_t o = 0; o < out; ++o) axpy(scale * dy[o], z, gB.data() + o * r, r);
    if (!gA.empty())
      for (std::size_t j = 0; j < r; ++j) axpy(scale * wbuf[j], x, gA.data() + j * in, in);
  }
}

}  // namespace

template <class T>
Logits<T> AdapterModel<T>::forward(std::span<const T> enroll, std::span<const T> test,
                                   bool use_lora) const {
  Workspace<T> ws(cfg_);
  return forward(enroll, test, ws, use_lora);
}

template <class T>
Logits<T> AdapterModel<T>::forward(std::span<const T> enroll, std::span<const T> test,
                                   Workspace<T>& ws, bool use_lora) const {
  if (enroll.size() != cfg_.d_spk || test.size() != cfg_.d_spk)
    throw ConfigError("adapter: embedding dim " + std::to_string(enroll.size()) + "/" +
                      std::to_string(test.size()) + " does not match connector input " +
                      std::to_string(cfg_.d_spk));
  constexpr std::size_t L = ModelConfig::kSeqLen;
  const std::size_t d = cfg_.d_model, H = cfg_.n_heads, dh = d / H, ff = cfg_.d_ff;
  const T scale = T(cfg_.lora_alpha / double(std::max<std::size_t>(cfg_.lora_rank, 1)));
  const T att_scale = T(1) / std::sqrt(T(dh));

  // Input tokens.
  const T* pos = params_.values(positions_).data();
  const T* mk = params_.values(markers_).data();
  const T* cw = params_.values(connector_w_).data();
  const T* cb = params_.values(connector_b_).data();
  static constexpr int kMarkerOf[L] = {0, -1, 1, -1, 2};
  for (std::size_t t = 0; t < L; ++t) {
    T* x = ws.x0.data() + t * d;
    if (kMarkerOf[t] >= 0) {
      const T* m = mk + std::size_t(kMarkerOf[t]) * d;
      for (std::size_t i = 0; i < d; ++i) x[i] = m[i] + pos[t * d + i];
    } else {
      const T* e = (t == ModelConfig::kSpeaker1 ? enroll : test).data();
      for (std::size_t i = 0; i < d; ++i) x[i] = cb[i] + dot(cw + i * cfg_.d_spk, e, cfg_.d_spk) + pos[t * d + i];
    }
  }

  const T* x_in = ws.x0.data();
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const auto& blk = blocks_[bi];
    auto& c = ws.blocks[bi];
    std::copy(x_in, x_in + L * d, c.x.begin());
    const T* g1 = params_.values(blk.norm1).data();
    for (std::size_t t = 0; t < L; ++t)
      c.inv1[t] = rmsnorm_forward(c.x.data() + t * d, g1, c.n1.data() + t * d, d);
    lora_forward(blk.q, params_, transposed_.data() + blk.q.transposed, scale, use_lora, c.n1.data(), c.q.data(), c.zq.data(), L);
    lora_forward(blk.k, params_, transposed_.data() + blk.k.transposed, scale, use_lora, c.n1.data(), c.k.data(), c.zk.data(), L);
    lora_forward(blk.v, params_, transposed_.data() + blk.v.transposed, scale, use_lora, c.n1.data(), c.v.data(), c.zv.data(), L);

    // Causal multi-head attention.
    std::fill(c.att.begin(), c.att.end(), T(0));
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t t = 0; t < L; ++t) {
        T* p = c.probs.data() + (h * L + t) * L;
        const T* q = c.q.data() + t * d + h * dh;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t u = 0; u <= t; ++u) {
          p[u] = att_scale * dot(q, c.k.data() + u * d + h * dh, dh);
          mx = std::max(mx, p[u]);
        }
        T sum = 0;
        for (std::size_t u = 0; u <= t; ++u) {
          p[u] = std::exp(p[u] - mx);
          sum += p[u];
        }
        for (std::size_t u = 0; u <= t; ++u) p[u] /= sum;
        for (std::size_t u = t + 1; u < L; ++u) p[u] = 0;
        T* a = c.att.data() + t * d + h * dh;
        for (std::size_t u = 0; u <= t; ++u) axpy(p[u], c.v.data() + u * d + h * dh, a, dh);
      }
    }
    lora_forward(blk.o, params_, transposed_.data() + blk.o.transposed, scale, use_lora, c.att.data(), c.h.data(), c.zo.data(), L);
    for (std::size_t i = 0; i < L * d; ++i) c.h[i] += c.x[i];

    const T* g2 = params_.values(blk.norm2).data();
    for (std::size_t t = 0; t < L; ++t)
      c.inv2[t] = rmsnorm_forward(c.h.data() + t * d, g2, c.n2.data() + t * d, d);
    lora_forward(blk.up, params_, transposed_.data() + blk.up.transposed, scale, use_lora, c.n2.data(), c.u.data(), c.zup.data(), L);
    for (std::size_t i = 0; i < L * ff; ++i) c.g[i] = gelu(c.u[i]);
    T* out = bi + 1 < blocks_.size() ? ws.blocks[bi + 1].x.data() : ws.x_final.data();
    lora_forward(blk.down, params_, transposed_.data() + blk.down.transposed, scale, use_lora, c.g.data(), out, c.zdown.data(), L);
    for (std::size_t i = 0; i < L * d; ++i) out[i] += c.h[i];
    x_in = out;
  }

  const T* xa = ws.x_final.data() + ModelConfig::kAnswer * d;
  ws.inv_final = rmsnorm_forward(xa, params_.values(final_norm_).data(), ws.nf.data(), d);
  const T* hw = params_.values(head_w_).data();
  const T* hb = params_.values(head_b_).data();
  return {dot(hw, ws.nf.data(), d) + hb[0], dot(hw + d, ws.nf.data(), d) + hb[1]};
}

template <class T>
T AdapterModel<T>::loss(std::span<const T> enroll, std::span<const T> test, bool target) const {
  auto lg = forward(enroll, test);
  T z = lg.yes - lg.no;
  return target ? softplus(-z) : softplus(z);
}

template <class T>
T AdapterModel<T>::loss_and_grad(std::span<const T> enroll, std::span<const T> test, bool target,
                                 Workspace<T>& ws, std::span<T> grads) const {
  if (grads.size() != params_.n_trainable()) throw ConfigError("adapter: gradient buffer size");
  const auto lg = forward(enroll, test, ws, true);
  const T z = lg.yes - lg.no;
  const T loss = target ? softplus(-z) : softplus(z);
  const T dz = sigmoid(z) - (target ? T(1) : T(0));  // d loss / d z
  const T dyes = dz, dno = -dz;

  constexpr std::size_t L = ModelConfig::kSeqLen;
  const std::size_t d = cfg_.d_model, H = cfg_.n_heads, dh = d / H, ff = cfg_.d_ff;
  const T scale = T(cfg_.lora_alpha / double(std::max<std::size_t>(cfg_.lora_rank, 1)));
  const T att_scale = T(1) / std::sqrt(T(dh));

  // Head.
  const T* hw = params_.values(head_w_).data();
  if (auto g = params_.grad(grads, head_w_); !g.empty()) {
    axpy(dyes, ws.nf.data(), g.data(), d);
    axpy(dno, ws.nf.data(), g.data() + d, d);
  }
  if (auto g = params_.grad(grads, head_b_); !g.empty()) {
    g[0] += dyes;
    g[1] += dno;
  }
  auto& dnf = ws.tmp;
  std::fill(dnf.begin(), dnf.begin() + d, T(0));
  axpy(dyes, hw, dnf.data(), d);
  axpy(dno, hw + d, dnf.data(), d);
  auto& dx = ws.dx;
  std::fill(dx.begin(), dx.end(), T(0));
  rmsnorm_backward(ws.x_final.data() + ModelConfig::kAnswer * d, params_.values(final_norm_).data(),
                   ws.inv_final, dnf.data(), dx.data() + ModelConfig::kAnswer * d, d);

  for (std::size_t bi = blocks_.size(); bi-- > 0;) {
    const auto& blk = blocks_[bi];
    auto& c = ws.blocks[bi];
    // x_next = h + down(gelu(up(norm2(h))))
    auto& dh_ = ws.dh;
    std::copy(dx.begin(), dx.end(), dh_.begin());
    std::fill(ws.dg.begin(), ws.dg.end(), T(0));
    lora_backward(blk.down, params_, grads, scale, c.g.data(), c.zdown.data(), dx.data(), ws.dg.data(), ws.dz.data(), L);
    for (std::size_t i = 0; i < L * ff; ++i) ws.du[i] = ws.dg[i] * gelu_grad(c.u[i]);
    std::fill(ws.dn.begin(), ws.dn.end(), T(0));
    lora_backward(blk.up, params_, grads, scale, c.n2.data(), c.zup.data(), ws.du.data(), ws.dn.data(), ws.dz.data(), L);
    const T* g2 = params_.values(blk.norm2).data();
    for (std::size_t t = 0; t < L; ++t)
      rmsnorm_backward(c.h.data() + t * d, g2, c.inv2[t], ws.dn.data() + t * d, dh_.data() + t * d, d);

    // h = x + o(attention(norm1(x)))
    std::copy(dh_.begin(), dh_.end(), dx.begin());
    std::fill(ws.datt.begin(), ws.datt.end(), T(0));
    lora_backward(blk.o, params_, grads, scale, c.att.data(), c.zo.data(), dh_.data(), ws.datt.data(), ws.dz.data(), L);
    std::fill(ws.dq.begin(), ws.dq.end(), T(0));
    std::fill(ws.dk.begin(), ws.dk.end(), T(0));
    std::fill(ws.dv.begin(), ws.dv.end(), T(0));
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t t = 0; t < L; ++t) {
        const T* p = c.probs.data() + (h * L + t) * L;
        const T* da = ws.datt.data() + t * d + h * dh;
        T dp[ModelConfig::kSeqLen];
        T wsum = 0;
        for (std::size_t u = 0; u <= t; ++u) {
          dp[u] = dot(da, c.v.data() + u * d + h * dh, dh);
          wsum += p[u] * dp[u];
          axpy(p[u], da, ws.dv.data() + u * d + h * dh, dh);
        }
        const T* q = c.q.data() + t * d + h * dh;
        for (std::size_t u = 0; u <= t; ++u) {
          const T ds = p[u] * (dp[u] - wsum) * att_scale;
          axpy(ds, c.k.data() + u * d + h * dh, ws.dq.data() + t * d + h * dh, dh);
          axpy(ds, q, ws.dk.data() + u * d + h * dh, dh);
        }
      }
    }
    std::fill(ws.dn.begin(), ws.dn.end(), T(0));
    lora_backward(blk.q, params_, grads, scale, c.n1.data(), c.zq.data(), ws.dq.data(), ws.dn.data(), ws.dz.data(), L);
    lora_backward(blk.k, params_, grads, scale, c.n1.data(), c.zk.data(), ws.dk.data(), ws.dn.data(), ws.dz.data(), L);
    lora_backward(blk.v, params_, grads, scale, c.n1.data(), c.zv.data(), ws.dv.data(), ws.dn.data(), ws.dz.data(), L);
    const T* g1 = params_.values(blk.norm1).data();
    for (std::size_t t = 0; t < L; ++t)
      rmsnorm_backward(c.x.data() + t * d, g1, c.inv1[t], ws.dn.data() + t * d, dx.data() + t * d, d);
  }

  // Connector: x0[t] = W e + b + pos[t] at the two speaker positions.
  auto gw = params_.grad(grads, connector_w_);
  auto gb = params_.grad(grads, connector_b_);
  for (std::size_t t : {ModelConfig::kSpeaker1, ModelConfig::kSpeaker2}) {
    const T* e = (t == ModelConfig::kSpeaker1 ? enroll : test).data();
    const T* g = dx.data() + t * d;
    for (std::size_t i = 0; i < d; ++i) {
      axpy(g[i], e, gw.data() + i * cfg_.d_spk, cfg_.d_spk);
      gb[i] += g[i];
    }
  }
  return loss;
}

template <class T>
template <class U>
AdapterModel<U> AdapterModel<T>::cast() const {
  AdapterModel<U> out(cfg_);
  auto src = params_.flat();
  auto dst = out.params().flat();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<U>(src[i]);
  out.refresh_frozen_cache();
  return out;
}

template class AdapterModel<float>;
template class AdapterModel<double>;
template class Workspace<float>;
template class Workspace<double>;
template AdapterModel<double> AdapterModel<float>::cast<double>() const;
template AdapterModel<float> AdapterModel<double>::cast<float>() const;
template AdapterModel<float> AdapterModel<float>::cast<float>() const;
template AdapterModel<double> AdapterModel<double>::cast<double>() const;

}  // namespace verilm::adapter
