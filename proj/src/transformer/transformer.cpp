// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include "lb/transformer.hpp"

#include <algorithm>
#include <cmath>

#include "lb/kernels.hpp"
#include "lb/numerics.hpp"
#include "record.hpp"

namespace lb {

namespace {

template <typename T>
void rmsnorm_rows(const BasicTensor<T>& x, const BasicTensor<T>& gain, T eps, BasicTensor<T>& out,
                  std::vector<T>* inv_rms) {
  if (out.dims != x.dims) out = BasicTensor<T>(x.dims);
  if (inv_rms) inv_rms->resize(static_cast<std::size_t>(x.rows()));
  for (int r = 0; r < x.rows(); ++r) {
    const T inv = rmsnorm_row<T>(x.row(r), std::span<const T>(gain.data), eps, out.row(r));
    if (inv_rms) (*inv_rms)[r] = inv;
  }
}

// Causal attention for one query row against cached keys/values 0..pos.
template <typename T>
void attend_row(const T* q, const T* keys, const T* values, int pos, int d, int n_heads, T* out, T* probs_out,
                std::vector<T>& scores) {
  const int hd = d / n_heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));
  scores.resize(static_cast<std::size_t>(pos) + 1);
  for (int h = 0; h < n_heads; ++h) {
    const T* qh = q + h * hd;
    for (int j = 0; j <= pos; ++j) {
      const T* kj = keys + static_cast<std::size_t>(j) * d + h * hd;
      T s = T(0);
      for (int c = 0; c < hd; ++c) s += qh[c] * kj[c];
      scores[j] = s * scale;
    }
    softmax_inplace(std::span<T>(scores.data(), static_cast<std::size_t>(pos) + 1));
    T* oh = out + h * hd;
    std::fill(oh, oh + hd, T(0));
    for (int j = 0; j <= pos; ++j) {
      const T p = scores[j];
      const T* vj = values + static_cast<std::size_t>(j) * d + h * hd;
      for (int c = 0; c < hd; ++c) oh[c] += p * vj[c];
    }
    if (probs_out) std::copy(scores.begin(), scores.begin() + pos + 1, probs_out + static_cast<std::size_t>(h) * (pos + 1));
  }
}

}  // namespace

template <typename T>
void check_forward_inputs(const BasicBaseWeights<T>& base, const BasicLoraSet<T>& adapters, const LayerMask& active,
                          std::span<const int> tokens) {
  const auto& cfg = base.config;
  if (static_cast<int>(active.size()) != cfg.n_layers) {
    throw InputError("layer mask has " + std::to_string(active.size()) + " entries, model has " +
                     std::to_string(cfg.n_layers) + " layers");
  }
  if (!adapters.empty() && adapters.max_layer() > cfg.n_layers) {
    throw CompatibilityError("adapter set references layer " + std::to_string(adapters.max_layer()) +
                             " but the model has " + std::to_string(cfg.n_layers));
  }
  if (static_cast<int>(tokens.size()) > cfg.max_seq) {
    throw InputError("sequence of " + std::to_string(tokens.size()) + " tokens exceeds max_seq " +
                     std::to_string(cfg.max_seq));
  }
  for (int tok : tokens) {
    if (tok < 0 || tok >= cfg.vocab) {
      throw InputError("token id " + std::to_string(tok) + " outside vocabulary of " + std::to_string(cfg.vocab));
    }
  }
}

template <typename T>
BasicDecoder<T>::BasicDecoder(const BasicBaseWeights<T>& base, const BasicLoraSet<T>& adapters,
                              const LayerMask& active)
    : base_(base), adapters_(adapters), active_(active) {
  check_forward_inputs<T>(base, adapters, active, {});
  const auto& cfg = base.config;
  head_t_ = cfg.tied_embeddings ? transpose(base.tok_emb) : base.head;
  k_cache_.assign(cfg.n_layers, BasicTensor<T>({cfg.max_seq, cfg.d_model}));
  v_cache_.assign(cfg.n_layers, BasicTensor<T>({cfg.max_seq, cfg.d_model}));
}

template <typename T>
BasicDecoder<T>::~BasicDecoder() = default;

template <typename T>
const BasicLoraAdapter<T>* BasicDecoder<T>::adapter(int layer0, Proj p) const {
  if (!active_[layer0]) return nullptr;
  return adapters_.find(layer0 + 1, p);
}

template <typename T>
void BasicDecoder<T>::lens(std::span<const T> hidden_row, std::span<T> logits) const {
  const auto& cfg = base_.config;
  std::vector<T> hn(static_cast<std::size_t>(cfg.d_model));
  rmsnorm_row<T>(hidden_row, std::span<const T>(base_.final_norm.data), static_cast<T>(cfg.norm_eps), hn);
  kernels::gemm(hn.data(), head_t_.data.data(), logits.data(), 1, cfg.d_model, cfg.vocab);
}

template <typename T>
std::vector<T> BasicDecoder<T>::append(std::span<const int> tokens, BasicLayerTrace<T>* trace,
                                       detail::ForwardRecord<T>* record) {
  const auto& cfg = base_.config;
  const int n = static_cast<int>(tokens.size());
  const int d = cfg.d_model;
  const int start = length_;
  if (n == 0) throw InputError("append: no tokens");
  if (start + n > cfg.max_seq) {
    throw InputError("sequence of " + std::to_string(start + n) + " tokens exceeds max_seq " +
                     std::to_string(cfg.max_seq));
  }
  for (int tok : tokens) {
    if (tok < 0 || tok >= cfg.vocab) {
      throw InputError("token id " + std::to_string(tok) + " outside vocabulary of " + std::to_string(cfg.vocab));
    }
  }
  if (record) {
    if (start != 0) throw InputError("append: recording requires an empty decoder");
    record->tokens.assign(tokens.begin(), tokens.end());
    record->layers.assign(cfg.n_layers, {});
  }
  const T eps = static_cast<T>(cfg.norm_eps);

  BasicTensor<T> x({n, d});
  for (int i = 0; i < n; ++i) {
    auto e = base_.tok_emb.row(tokens[i]);
    auto p = base_.pos_emb.row(start + i);
    auto out = x.row(i);
    for (int c = 0; c < d; ++c) out[c] = e[c] + p[c];
  }

  BasicTensor<T> xn, q, k, v, att({n, d}), proj_out, up, act, down;
  std::vector<T> scores;
  std::vector<T> probs_row;
  for (int l = 0; l < cfg.n_layers; ++l) {
    const auto& lw = base_.layers[l];
    detail::LayerRecord<T>* rec = record ? &record->layers[l] : nullptr;
    auto u_slot = [&](Proj p) -> BasicTensor<T>* { return rec ? &rec->u[static_cast<int>(p)] : nullptr; };
    if (rec) rec->x_in = x;

    rmsnorm_rows(x, lw.attn_norm, eps, xn, rec ? &rec->inv_rms1 : nullptr);
    adapted_projection(lw.wq, adapter(l, Proj::q), xn, q, u_slot(Proj::q));
    adapted_projection(lw.wk, adapter(l, Proj::k), xn, k, u_slot(Proj::k));
    adapted_projection(lw.wv, adapter(l, Proj::v), xn, v, u_slot(Proj::v));
    std::copy(k.data.begin(), k.data.end(), k_cache_[l].data.begin() + static_cast<std::ptrdiff_t>(start) * d);
    std::copy(v.data.begin(), v.data.end(), v_cache_[l].data.begin() + static_cast<std::ptrdiff_t>(start) * d);

    if (rec) rec->probs.assign(static_cast<std::size_t>(n) * cfg.n_heads * n, T(0));
    for (int i = 0; i < n; ++i) {
      const int pos = start + i;
      T* probs_out = nullptr;
      if (rec) {
        probs_row.assign(static_cast<std::size_t>(cfg.n_heads) * (pos + 1), T(0));
        probs_out = probs_row.data();
      }
      attend_row(q.row(i).data(), k_cache_[l].data.data(), v_cache_[l].data.data(), pos, d, cfg.n_heads,
                 att.row(i).data(), probs_out, scores);
      if (rec) {
        for (int h = 0; h < cfg.n_heads; ++h) {
          std::copy(probs_row.begin() + static_cast<std::ptrdiff_t>(h) * (pos + 1),
                    probs_row.begin() + static_cast<std::ptrdiff_t>(h + 1) * (pos + 1),
                    rec->probs.begin() + (static_cast<std::ptrdiff_t>(i) * cfg.n_heads + h) * n);
        }
      }
    }
    if (rec) {
      rec->xn1 = xn;
      rec->q = q;
      rec->k = k;
      rec->v = v;
      rec->att = att;
    }
    adapted_projection(lw.wo, adapter(l, Proj::o), att, proj_out, u_slot(Proj::o));
    for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += proj_out.data[i];
    if (rec) rec->x_mid = x;

    rmsnorm_rows(x, lw.ffn_norm, eps, xn, rec ? &rec->inv_rms2 : nullptr);
    adapted_projection(lw.w_up, adapter(l, Proj::up), xn, up, u_slot(Proj::up));
    act = up;
    for (T& a : act.data) a = gelu(a);
    adapted_projection(lw.w_down, adapter(l, Proj::down), act, down, u_slot(Proj::down));
    for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += down.data[i];
    if (rec) {
      rec->xn2 = xn;
      rec->up = up;
      rec->act = act;
    }
    if (trace) {
      std::copy(x.data.begin(), x.data.end(),
                trace->hidden[l].data.begin() + static_cast<std::ptrdiff_t>(start) * d);
    }
  }
  length_ = start + n;

  // Logits for every row when someone keeps them, else just the last row.
  const bool all_rows = trace != nullptr || record != nullptr;
  const int first = all_rows ? 0 : n - 1;
  const int rows = n - first;
  BasicTensor<T> h_rows({rows, d});
  std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(first) * d, x.data.end(), h_rows.data.begin());
  BasicTensor<T> hn;
  std::vector<T> inv_f;
  rmsnorm_rows(h_rows, base_.final_norm, eps, hn, record ? &inv_f : nullptr);
  BasicTensor<T> logits({rows, cfg.vocab});
  kernels::gemm(hn.data.data(), head_t_.data.data(), logits.data.data(), rows, d, cfg.vocab);
  if (trace) {
    std::copy(logits.data.begin(), logits.data.end(),
              trace->final_logits.data.begin() + static_cast<std::ptrdiff_t>(start) * cfg.vocab);
  }
  std::vector<T> last(logits.row(rows - 1).begin(), logits.row(rows - 1).end());
  if (record) {
    record->h_final = std::move(x);
    record->inv_rms_f = std::move(inv_f);
    record->hn = std::move(hn);
    record->logits = std::move(logits);
  }
  return last;
}

template <typename T>
BasicLayerTrace<T> forward_collect(const BasicBaseWeights<T>& base, const BasicLoraSet<T>& adapters,
                                   const LayerMask& active, std::span<const int> tokens) {
  check_forward_inputs(base, adapters, active, tokens);
  if (tokens.empty()) throw InputError("forward_collect: empty token sequence");
  const auto& cfg = base.config;
  const int t = static_cast<int>(tokens.size());
  BasicLayerTrace<T> trace;
  trace.hidden.assign(cfg.n_layers, BasicTensor<T>({t, cfg.d_model}));
  trace.final_logits = BasicTensor<T>({t, cfg.vocab});
  BasicDecoder<T> dec(base, adapters, active);
  dec.append(tokens, &trace);
  return trace;
}

LensProbs lens_probs(const BaseWeights& base, const LayerTrace& trace, std::span<const int> reference,
                     int prompt_len) {
  const auto& cfg = base.config;
  const int n = static_cast<int>(reference.size());
  const int t = trace.final_logits.rows();
  if (n == 0) throw InputError("teacher_forced_probs: empty reference");
  if (prompt_len < 1 || prompt_len + n - 1 > t) {
    throw InputError("teacher_forced_probs: prompt_len " + std::to_string(prompt_len) + " + " + std::to_string(n) +
                     " reference tokens exceed trace length " + std::to_string(t));
  }
  for (int tok : reference) {
    if (tok < 0 || tok >= cfg.vocab) {
      throw InputError("teacher_forced_probs: reference token " + std::to_string(tok) + " outside vocabulary");
    }
  }
  LayerMask none = mask_all(cfg.n_layers, false);
  LoraSet empty;
  Decoder lens(base, empty, none);
  LensProbs out{Tensor({cfg.n_layers, n}), Tensor({cfg.n_layers, n})};
  std::vector<float> logits(static_cast<std::size_t>(cfg.vocab));
  for (int l = 0; l < cfg.n_layers; ++l) {
    for (int i = 0; i < n; ++i) {
      lens.lens(trace.hidden[l].row(prompt_len + i - 1), logits);
      softmax_inplace(std::span<float>(logits));
      out.ground_truth.at(l, i) = logits[reference[i]];
      out.max_prob.at(l, i) = *std::max_element(logits.begin(), logits.end());
    }
  }
  return out;
}

Tensor teacher_forced_probs(const BaseWeights& base, const LayerTrace& trace, std::span<const int> reference,
                            int prompt_len) {
  return lens_probs(base, trace, reference, prompt_len).ground_truth;
}

int argmax_lowest(std::span<const float> row) {
  int best = 0;
  for (int j = 1; j < static_cast<int>(row.size()); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

namespace {
void check_generation_args(const BaseWeights& base, std::span<const int> prompt, int max_new) {
  if (prompt.empty()) throw InputError("generate_greedy: empty prompt");
  if (max_new < 1) throw InputError("generate_greedy: max_new must be >= 1");
  if (static_cast<int>(prompt.size()) > base.config.max_seq) {
    throw InputError("generate_greedy: prompt of " + std::to_string(prompt.size()) + " tokens exceeds max_seq " +
                     std::to_string(base.config.max_seq));
  }
}
}  // namespace

std::vector<int> generate_greedy(const BaseWeights& base, const LoraSet& adapters, const LayerMask& active,
                                 std::span<const int> prompt, int max_new, int stop) {
  check_generation_args(base, prompt, max_new);
  check_forward_inputs(base, adapters, active, prompt);
  Decoder dec(base, adapters, active);
  std::vector<float> logits = dec.append(prompt);
  std::vector<int> out;
  for (int step = 0; step < max_new; ++step) {
    const int next = argmax_lowest(logits);
    out.push_back(next);
    if (next == stop || dec.length() >= base.config.max_seq) break;
    if (step + 1 < max_new) logits = dec.append(std::span<const int>(&next, 1));
  }
  return out;
}

std::vector<int> generate_greedy_uncached(const BaseWeights& base, const LoraSet& adapters,
                                          const LayerMask& active, std::span<const int> prompt, int max_new,
                                          int stop) {
  check_generation_args(base, prompt, max_new);
  std::vector<int> seq(prompt.begin(), prompt.end());
  std::vector<int> out;
  for (int step = 0; step < max_new; ++step) {
    const LayerTrace trace = forward_collect(base, adapters, active, seq);
    const int next = argmax_lowest(trace.final_logits.row(trace.final_logits.rows() - 1));
    out.push_back(next);
    if (next == stop || static_cast<int>(seq.size()) >= base.config.max_seq) break;
    seq.push_back(next);
  }
  return out;
}

template class BasicDecoder<float>;
template class BasicDecoder<double>;
template void check_forward_inputs<float>(const BaseWeights&, const LoraSet&, const LayerMask&, std::span<const int>);
template void check_forward_inputs<double>(const BasicBaseWeights<double>&, const BasicLoraSet<double>&,
                                           const LayerMask&, std::span<const int>);
template LayerTrace forward_collect<float>(const BaseWeights&, const LoraSet&, const LayerMask&, std::span<const int>);
template BasicLayerTrace<double> forward_collect<double>(const BasicBaseWeights<double>&,
                                                         const BasicLoraSet<double>&, const LayerMask&,
                                                         std::span<const int>);

}  // namespace lb
