// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "lb/numerics.hpp"
#include "lb/transformer.hpp"

using namespace lb;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.n_layers = 4;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.d_ff = 24;
  cfg.vocab = 30;
  cfg.max_seq = 20;
  return cfg;
}

void randomize_b(LoraSet& set, std::uint64_t seed, float sd) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, sd);
  for (auto& [key, ad] : set.adapters) {
    for (float& v : ad.b.data) v = normal(rng);
  }
}

Tensor random_tensor(Dims dims, std::mt19937_64& rng) {
  Tensor t(std::move(dims));
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (float& v : t.data) v = u(rng);
  return t;
}

}  // namespace

TEST_CASE("init_adapters", "[lora]") {
  const ModelConfig cfg;  // desk defaults: L = 12, d = 64
  const LoraSet set = init_adapters(cfg, {Proj::q, Proj::v}, 8, 16.0f, 1);
  CHECK(set.size() == 24);
  for (const auto& [key, ad] : set.adapters) {
    CHECK(ad.a.dims == Dims{8, 64});
    CHECK(ad.b.dims == Dims{64, 8});
    CHECK(ad.a.size() + ad.b.size() == 8 * 64 + 64 * 8);
    CHECK(std::all_of(ad.b.data.begin(), ad.b.data.end(), [](float v) { return v == 0.0f; }));
    CHECK(ad.scale() == 2.0f);
  }
  // Per layer: two adapters of 8*64 + 64*8 each.
  CHECK(set.parameter_count() == 12u * 2u * (8 * 64 + 64 * 8));

  SECTION("A is drawn with standard deviation 0.02") {
    double ss = 0;
    std::size_t n = 0;
    for (const auto& [key, ad] : set.adapters) {
      for (float v : ad.a.data) ss += double(v) * v, ++n;
    }
    CHECK(std::sqrt(ss / n) == Catch::Approx(0.02).epsilon(0.05));
  }
  SECTION("same seed reproduces A, another seed does not") {
    CHECK(init_adapters(cfg, {Proj::q, Proj::v}, 8, 16.0f, 1) == set);
    CHECK_FALSE(init_adapters(cfg, {Proj::q, Proj::v}, 8, 16.0f, 2) == set);
  }
  SECTION("errors") {
    CHECK_THROWS_AS(init_adapters(cfg, {}, 8, 16.0f, 1), ConfigError);
    CHECK_THROWS_AS(init_adapters(cfg, {Proj::q}, 0, 16.0f, 1), ConfigError);
    CHECK_THROWS_AS(init_adapters(cfg, {Proj::q}, 65, 16.0f, 1), ConfigError);
  }
  SECTION("parameter count over mixed shapes") {
    const LoraSet mixed = init_adapters(cfg, {Proj::q, Proj::up, Proj::down}, 4, 8.0f, 3);
    std::size_t expect = 0;
    for (const auto& [key, ad] : mixed.adapters) {
      const auto [din, dout] = proj_shape(cfg, key.proj);
      expect += 4u * static_cast<std::size_t>(din + dout);
    }
    CHECK(mixed.parameter_count() == expect);
    CHECK(expect == 12u * 4u * ((64 + 64) + (64 + 256) + (256 + 64)));
  }
}

TEST_CASE("adapted_projection", "[lora]") {
  std::mt19937_64 rng(4);
  const Tensor w = random_tensor({6, 5}, rng);  // d_in = 6, d_out = 5
  const Tensor x = random_tensor({3, 6}, rng);
  const Tensor plain = matmul(x, w);

  LoraAdapter ad{random_tensor({2, 6}, rng), random_tensor({5, 2}, rng), 2, 3.0f};

  SECTION("matches explicit materialization") {
    const Tensor y = adapted_projection(w, ad, x);
    // Independent route: delta [d_out x d_in] by triple loop, y = x (W + delta^T).
    for (int n = 0; n < 3; ++n) {
      for (int o = 0; o < 5; ++o) {
        double ref = 0;
        for (int i = 0; i < 6; ++i) {
          double delta = 0;
          for (int r = 0; r < 2; ++r) delta += double(ad.b.at(o, r)) * ad.a.at(r, i);
          ref += double(x.at(n, i)) * (w.at(i, o) + 1.5 * delta);
        }
        CHECK(y.at(n, o) == Catch::Approx(ref).margin(1e-5));
      }
    }
  }
  SECTION("B = 0 or alpha = 0 leaves the projection alone") {
    LoraAdapter zero_b = ad;
    zero_b.b.fill(0.0f);
    CHECK(adapted_projection(w, zero_b, x) == plain);
    LoraAdapter zero_alpha = ad;
    zero_alpha.alpha = 0.0f;
    CHECK(adapted_projection(w, zero_alpha, x) == plain);
  }
  SECTION("shape mismatch") {
    const Tensor bad = random_tensor({3, 4}, rng);
    CHECK_THROWS_AS(adapted_projection(w, ad, bad), ShapeError);
    LoraAdapter wrong{random_tensor({2, 7}, rng), random_tensor({5, 2}, rng), 2, 3.0f};
    CHECK_THROWS_AS(adapted_projection(w, wrong, x), ShapeError);
  }
}

TEST_CASE("drop_above", "[lora]") {
  const ModelConfig cfg;
  const LoraSet set = init_adapters(cfg, {Proj::q, Proj::v}, 8, 16.0f, 5);
  const LoraSet kept = drop_above(set, 5);
  CHECK(kept.size() == 10);
  CHECK(kept.max_layer() == 5);
  CHECK(set.size() == 24);
  CHECK(drop_above(set, 12) == set);
  CHECK(drop_above(set, 0).empty());
  CHECK(drop_above(set, 0).rank == set.rank);
  CHECK_THROWS_AS(drop_above(set, -1), InputError);
  CHECK_THROWS_AS(drop_above(set, 13), InputError);

  SECTION("composition takes the minimum") {
    for (int k1 = 0; k1 <= 12; ++k1) {
      for (int k2 = 0; k2 <= 12; ++k2) {
        CHECK(drop_above(drop_above(set, k1), k2) == drop_above(set, std::min(k1, k2)));
      }
    }
  }
}

TEST_CASE("mask and set duality", "[lora][transformer]") {
  const ModelConfig cfg = small_config();
  const BaseWeights base = init_base_weights(cfg, 6);
  LoraSet full = init_adapters(cfg, {Proj::q, Proj::v, Proj::down}, 2, 4.0f, 7);
  randomize_b(full, 8, 0.2f);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> tok(0, cfg.vocab - 1);
  std::vector<int> tokens(10);
  for (int& t : tokens) t = tok(rng);

  // A subset with layers {1, 3} only.
  LoraSet subset = full;
  std::erase_if(subset.adapters, [](const auto& kv) { return kv.first.layer == 2 || kv.first.layer == 4; });
  const LayerMask mask{1, 0, 1, 0};
  const LayerTrace a = forward_collect(base, subset, mask_all(cfg.n_layers, true), tokens);
  const LayerTrace b = forward_collect(base, full, mask, tokens);
  CHECK(a.hidden == b.hidden);
  CHECK(a.final_logits == b.final_logits);
}

TEST_CASE("merge", "[lora]") {
  const ModelConfig cfg = small_config();
  const BaseWeights base = init_base_weights(cfg, 10);
  LoraSet set = init_adapters(cfg, {Proj::q, Proj::k, Proj::v, Proj::o, Proj::up, Proj::down}, 3, 6.0f, 11);
  randomize_b(set, 12, 0.1f);
  set.fingerprint = "abc";

  SECTION("empty set leaves the base unchanged") {
    CHECK(merge(base, LoraSet{}, "abc") == base);
  }
  SECTION("merged forward matches factored forward on 20 prompts") {
    const BaseWeights merged = merge(base, set, "abc");
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> tok(0, cfg.vocab - 1);
    std::uniform_int_distribution<int> len(1, cfg.max_seq);
    float worst = 0;
    for (int p = 0; p < 20; ++p) {
      std::vector<int> tokens(len(rng));
      for (int& t : tokens) t = tok(rng);
      const LayerTrace f = forward_collect(base, set, mask_all(cfg.n_layers, true), tokens);
      const LayerTrace m = forward_collect(merged, LoraSet{}, mask_all(cfg.n_layers, false), tokens);
      for (std::size_t i = 0; i < f.final_logits.size(); ++i) {
        worst = std::max(worst, std::abs(f.final_logits.data[i] - m.final_logits.data[i]));
      }
    }
    CHECK(worst < 1e-3f);
    CHECK(worst < 1e-4f);
  }
  SECTION("merging a dropped set folds only the bottom deltas") {
    const LoraSet bottom = drop_above(set, 2);
    const BaseWeights merged = merge(base, bottom, "abc");
    for (int l = 0; l < cfg.n_layers; ++l) {
      for (Proj p : kAllProjs) {
        const Tensor& before = base.layers[l].proj(p);
        const Tensor& after = merged.layers[l].proj(p);
        if (l + 1 > 2) {
          CHECK(after == before);
          continue;
        }
        const Tensor delta = materialize_delta(*bottom.find(l + 1, p));
        for (int i = 0; i < before.dims[0]; ++i) {
          for (int j = 0; j < before.dims[1]; ++j) CHECK(after.at(i, j) == before.at(i, j) + delta.at(j, i));
        }
      }
    }
  }
  SECTION("fingerprint mismatch") {
    CHECK_THROWS_AS(merge(base, set, "xyz"), CompatibilityError);
  }
}
