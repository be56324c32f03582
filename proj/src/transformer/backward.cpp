// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "lb/kernels.hpp"
#include "lb/numerics.hpp"
#include "lb/transformer.hpp"
#include "record.hpp"

namespace lb {

namespace {

// Backward of y = x * W + s * (x * A^T) * B^T given dy. dx is accumulated;
// gw / gad are accumulated when non-null.
template <typename T>
void projection_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicLoraAdapter<T>* ad,
                         const BasicTensor<T>& u, const BasicTensor<T>& dy, BasicTensor<T>& dx, BasicTensor<T>* gw,
                         BasicLoraAdapter<T>* gad) {
  const int n = x.rows();
  const int din = w.dims[0];
  const int dout = w.dims[1];
  kernels::gemm_nt(dy.data.data(), w.data.data(), dx.data.data(), n, dout, din, /*accumulate=*/true);
  if (gw) kernels::gemm_tn(x.data.data(), dy.data.data(), gw->data.data(), din, n, dout, true);
  if (!ad) return;

  const int r = ad->rank;
  const T s = ad->scale();
  BasicTensor<T> du({n, r});
  kernels::gemm(dy.data.data(), ad->b.data.data(), du.data.data(), n, dout, r);
  for (T& v : du.data) v *= s;
  if (gad) {
    BasicTensor<T> db({dout, r});
    kernels::gemm_tn(dy.data.data(), u.data.data(), db.data.data(), dout, n, r);
    for (std::size_t i = 0; i < db.data.size(); ++i) gad->b.data[i] += s * db.data[i];
    kernels::gemm_tn(du.data.data(), x.data.data(), gad->a.data.data(), r, n, din, true);
  }
  kernels::gemm(du.data.data(), ad->a.data.data(), dx.data.data(), n, r, din, true);
}

}  // namespace

template <typename T>
double sequence_loss_grad(const BasicBaseWeights<T>& base, const BasicLoraSet<T>& adapters, const LayerMask& active,
                     std::span<const int> tokens, std::span<const int> targets,
                     std::span<const std::uint8_t> loss_mask, BasicBaseWeights<T>* gbase,
                     BasicLoraSet<T>* glora) {
  check_forward_inputs(base, adapters, active, tokens);
  const auto& cfg = base.config;
  const int t = static_cast<int>(tokens.size());
  const int d = cfg.d_model;
  const int H = cfg.n_heads;
  const int hd = cfg.head_dim();
  if (t == 0) throw InputError("sequence_loss_grad: empty sequence");

  detail::ForwardRecord<T> rec;
  BasicDecoder<T> dec(base, adapters, active);
  dec.append(tokens, nullptr, &rec);
  auto ce = cross_entropy_grad<T>(rec.logits, targets, loss_mask);
  if (!gbase && !glora) return ce.loss;

  auto adapter = [&](int l, Proj p) -> const BasicLoraAdapter<T>* {
    return active[l] ? adapters.find(l + 1, p) : nullptr;
  };
  auto grad_adapter = [&](int l, Proj p) -> BasicLoraAdapter<T>* {
    if (!glora || !active[l]) return nullptr;
    auto it = glora->adapters.find({l + 1, p});
    return it == glora->adapters.end() ? nullptr : &it->second;
  };
  // Output head.
  BasicTensor<T> dhn({t, d});
  if (cfg.tied_embeddings) {
    kernels::gemm(ce.dlogits.data.data(), base.tok_emb.data.data(), dhn.data.data(), t, cfg.vocab, d);
    if (gbase) {
      kernels::gemm_tn(ce.dlogits.data.data(), rec.hn.data.data(), gbase->tok_emb.data.data(), cfg.vocab, t, d,
                       true);
    }
  } else {
    kernels::gemm_nt(ce.dlogits.data.data(), base.head.data.data(), dhn.data.data(), t, cfg.vocab, d);
    if (gbase) {
      kernels::gemm_tn(rec.hn.data.data(), ce.dlogits.data.data(), gbase->head.data.data(), d, t, cfg.vocab, true);
    }
  }

  BasicTensor<T> dx({t, d});
  BasicTensor<T> scratch_gain({d});
  {
    auto& dg = gbase ? gbase->final_norm : scratch_gain;
    for (int i = 0; i < t; ++i) {
      rmsnorm_row_backward<T>(rec.h_final.row(i), std::span<const T>(base.final_norm.data), rec.inv_rms_f[i],
                              dhn.row(i), dx.row(i), std::span<T>(dg.data));
    }
  }

  const T att_scale = T(1) / std::sqrt(static_cast<T>(hd));
  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    const auto& lw = base.layers[l];
    const auto& r = rec.layers[l];
    auto* gl = gbase ? &gbase->layers[l] : nullptr;
    auto u_of = [&](Proj p) -> const BasicTensor<T>& { return r.u[static_cast<int>(p)]; };

    // Feed-forward branch: x_out = x_mid + down(gelu(up(norm(x_mid)))).
    BasicTensor<T> dact({t, cfg.d_ff});
    projection_backward(r.act, lw.w_down, adapter(l, Proj::down), u_of(Proj::down), dx, dact,
                        gl ? &gl->w_down : nullptr, grad_adapter(l, Proj::down));
    for (std::size_t i = 0; i < dact.data.size(); ++i) dact.data[i] *= gelu_grad(r.up.data[i]);
    BasicTensor<T> dxn2({t, d});
    projection_backward(r.xn2, lw.w_up, adapter(l, Proj::up), u_of(Proj::up), dact, dxn2,
                        gl ? &gl->w_up : nullptr, grad_adapter(l, Proj::up));
    {
      auto& dg = gl ? gl->ffn_norm : (scratch_gain.fill(T(0)), scratch_gain);
      for (int i = 0; i < t; ++i) {
        rmsnorm_row_backward<T>(r.x_mid.row(i), std::span<const T>(lw.ffn_norm.data), r.inv_rms2[i], dxn2.row(i),
                                dx.row(i), std::span<T>(dg.data));
      }
    }

    // Attention branch: x_mid = x_in + o(attn(q, k, v)).
    BasicTensor<T> datt({t, d});
    projection_backward(r.att, lw.wo, adapter(l, Proj::o), u_of(Proj::o), dx, datt, gl ? &gl->wo : nullptr,
                        grad_adapter(l, Proj::o));
    BasicTensor<T> dq({t, d}), dk({t, d}), dv({t, d});
    std::vector<T> dp(static_cast<std::size_t>(t));
    for (int i = 0; i < t; ++i) {
      for (int h = 0; h < H; ++h) {
        const T* p = r.probs.data() + (static_cast<std::size_t>(i) * H + h) * t;
        const T* doi = datt.row(i).data() + h * hd;
        T dot = T(0);
        for (int j = 0; j <= i; ++j) {
          const T* vj = r.v.row(j).data() + h * hd;
          T s = T(0);
          for (int c = 0; c < hd; ++c) s += doi[c] * vj[c];
          dp[j] = s;
          dot += p[j] * s;
          T* dvj = dv.row(j).data() + h * hd;
          for (int c = 0; c < hd; ++c) dvj[c] += p[j] * doi[c];
        }
        const T* qi = r.q.row(i).data() + h * hd;
        T* dqi = dq.row(i).data() + h * hd;
        for (int j = 0; j <= i; ++j) {
          const T ds = p[j] * (dp[j] - dot) * att_scale;
          const T* kj = r.k.row(j).data() + h * hd;
          T* dkj = dk.row(j).data() + h * hd;
          for (int c = 0; c < hd; ++c) {
            dqi[c] += ds * kj[c];
            dkj[c] += ds * qi[c];
          }
        }
      }
    }
    BasicTensor<T> dxn1({t, d});
    projection_backward(r.xn1, lw.wq, adapter(l, Proj::q), u_of(Proj::q), dq, dxn1, gl ? &gl->wq : nullptr,
                        grad_adapter(l, Proj::q));
    projection_backward(r.xn1, lw.wk, adapter(l, Proj::k), u_of(Proj::k), dk, dxn1, gl ? &gl->wk : nullptr,
                        grad_adapter(l, Proj::k));
    projection_backward(r.xn1, lw.wv, adapter(l, Proj::v), u_of(Proj::v), dv, dxn1, gl ? &gl->wv : nullptr,
                        grad_adapter(l, Proj::v));
    {
      auto& dg = gl ? gl->attn_norm : (scratch_gain.fill(T(0)), scratch_gain);
      for (int i = 0; i < t; ++i) {
        rmsnorm_row_backward<T>(r.x_in.row(i), std::span<const T>(lw.attn_norm.data), r.inv_rms1[i], dxn1.row(i),
                                dx.row(i), std::span<T>(dg.data));
      }
    }
  }

  if (gbase) {
    for (int i = 0; i < t; ++i) {
      auto src = dx.row(i);
      auto te = gbase->tok_emb.row(tokens[i]);
      auto pe = gbase->pos_emb.row(i);
      for (int c = 0; c < d; ++c) {
        te[c] += src[c];
        pe[c] += src[c];
      }
    }
  }
  return ce.loss;
}

template double sequence_loss_grad<float>(const BaseWeights&, const LoraSet&, const LayerMask&, std::span<const int>,
                                         std::span<const int>, std::span<const std::uint8_t>, BaseWeights*, LoraSet*);
template double sequence_loss_grad<double>(const BasicBaseWeights<double>&, const BasicLoraSet<double>&,
                                           const LayerMask&, std::span<const int>, std::span<const int>,
                                           std::span<const std::uint8_t>, BasicBaseWeights<double>*,
                                           BasicLoraSet<double>*);

}  // namespace lb
