// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "lb/kernels.hpp"
#include "lb/numerics.hpp"

using namespace lb;
using Catch::Approx;

namespace {

Tensor random_tensor(Dims dims, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
  Tensor t(std::move(dims));
  std::uniform_real_distribution<float> u(lo, hi);
  for (float& v : t.data) v = u(rng);
  return t;
}

}  // namespace

TEST_CASE("matmul examples", "[numerics]") {
  std::mt19937_64 rng(1);
  const Tensor m = random_tensor({3, 4}, rng);
  CHECK(matmul(Tensor::identity(3), m) == m);
  CHECK(matmul(Tensor::zeros({2, 3}), m) == Tensor::zeros({2, 4}));

  const Tensor a({2, 2}, {1, 2, 3, 4});
  const Tensor b({2, 1}, {5, 6});
  CHECK(matmul(a, b) == Tensor({2, 1}, {17, 39}));

  CHECK_THROWS_AS(matmul(a, Tensor::zeros({3, 1})), ShapeError);
}

TEST_CASE("matmul is associative on small bounded matrices", "[numerics][property]") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> size(1, 16);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = size(rng), k = size(rng), n = size(rng), p = size(rng);
    const Tensor a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng), c = random_tensor({n, p}, rng);
    const Tensor left = matmul(matmul(a, b), c);
    const Tensor right = matmul(a, matmul(b, c));
    float scale = 0;
    for (float v : left.data) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < left.size(); ++i) {
      REQUIRE(std::abs(left.data[i] - right.data[i]) <= 1e-4f * std::max(1.0f, scale));
    }
  }
}

TEST_CASE("serial and omp kernels agree bit for bit", "[numerics][kernels]") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(1, 70);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = size(rng), k = size(rng), n = size(rng);
    const Tensor a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng);
    const Tensor at = transpose(a), bt = transpose(b);
    for (bool acc : {false, true}) {
      Tensor c1 = random_tensor({m, n}, rng);
      Tensor c2 = c1, c3 = c1, c4 = c1, c5 = c1, c6 = c1;
      kernels::serial::gemm(a.data.data(), b.data.data(), c1.data.data(), m, k, n, acc);
      kernels::omp::gemm(a.data.data(), b.data.data(), c2.data.data(), m, k, n, acc);
      kernels::serial::gemm_tn(at.data.data(), b.data.data(), c3.data.data(), m, k, n, acc);
      kernels::omp::gemm_tn(at.data.data(), b.data.data(), c4.data.data(), m, k, n, acc);
      kernels::serial::gemm_nt(a.data.data(), bt.data.data(), c5.data.data(), m, k, n, acc);
      kernels::omp::gemm_nt(a.data.data(), bt.data.data(), c6.data.data(), m, k, n, acc);
      REQUIRE(c1 == c2);
      REQUIRE(c1 == c3);
      REQUIRE(c1 == c4);
      REQUIRE(c1 == c5);
      REQUIRE(c1 == c6);
    }
  }
}

TEST_CASE("large gemm is identical across thread counts", "[numerics][kernels]") {
  std::mt19937_64 rng(4);
  const Tensor a = random_tensor({200, 96}, rng), b = random_tensor({96, 180}, rng);
  Tensor ref({200, 180}), par({200, 180});
  kernels::serial::gemm(a.data.data(), b.data.data(), ref.data.data(), 200, 96, 180, false);
  kernels::omp::gemm(a.data.data(), b.data.data(), par.data.data(), 200, 96, 180, false);
  CHECK(ref == par);
}

TEST_CASE("softmax_rows examples and invariants", "[numerics]") {
  const Tensor x({3, 3}, {1, 1, 1, 0, std::log(3.0f), 0, 1000, 0, 0});
  const Tensor y = softmax_rows(x);
  CHECK(y.at(0, 0) == Approx(1.0 / 3).margin(1e-7));
  CHECK(y.at(0, 2) == Approx(1.0 / 3).margin(1e-7));

  const Tensor two = softmax_rows(Tensor({1, 2}, {0, std::log(3.0f)}));
  CHECK(two.data[0] == Approx(0.25).margin(1e-7));
  CHECK(two.data[1] == Approx(0.75).margin(1e-7));

  CHECK(y.at(2, 0) == Approx(1.0).margin(1e-7));
  CHECK(y.at(2, 1) == Approx(0.0).margin(1e-7));
  CHECK(all_finite(y));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor r = random_tensor({4, 17}, rng, -20, 20);
    const Tensor s = softmax_rows(r);
    for (int i = 0; i < 4; ++i) {
      double sum = 0;
      for (float v : s.row(i)) {
        REQUIRE(v >= 0.0f);
        sum += v;
      }
      REQUIRE(std::abs(sum - 1.0) < 1e-6);
    }
    for (float& v : r.row(1)) v += 7.5f;
    const Tensor shifted = softmax_rows(r);
    for (int j = 0; j < 17; ++j) REQUIRE(shifted.at(1, j) == Approx(s.at(1, j)).margin(1e-6));
  }
}

TEST_CASE("rmsnorm examples", "[numerics]") {
  const Tensor ones = Tensor::filled({5}, 1.0f);
  const Tensor y = rmsnorm(ones, ones, 1e-12f);
  for (float v : y.data) CHECK(v == Approx(1.0f));

  const Tensor z = rmsnorm(Tensor::zeros({2, 5}), ones, 1e-5f);
  CHECK(z == Tensor::zeros({2, 5}));

  // [3, 4] / sqrt((9 + 16) / 2)
  const Tensor a = rmsnorm(Tensor({2}, {3, 4}), Tensor::filled({2}, 1.0f), 0.0f);
  CHECK(a.data[0] == Approx(3.0 / std::sqrt(12.5)));
  CHECK(a.data[1] == Approx(4.0 / std::sqrt(12.5)));

  CHECK_THROWS_AS(rmsnorm(Tensor::zeros({2, 3}), Tensor::zeros({4}), 1e-5f), ShapeError);
}

TEST_CASE("rmsnorm backward matches central differences", "[numerics][gradcheck]") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  const int d = 8;
  std::vector<double> x(d), g(d), dy(d);
  for (int i = 0; i < d; ++i) {
    x[i] = u(rng);
    g[i] = 1.0 + 0.3 * u(rng);
    dy[i] = u(rng);
  }
  const double eps = 1e-5;
  auto loss = [&](const std::vector<double>& xs, const std::vector<double>& gs) {
    std::vector<double> out(d);
    rmsnorm_row<double>(xs, gs, 1e-5, out);
    double s = 0;
    for (int i = 0; i < d; ++i) s += out[i] * dy[i];
    return s;
  };
  std::vector<double> out(d), dx(d, 0.0), dg(d, 0.0);
  const double inv = rmsnorm_row<double>(x, g, 1e-5, out);
  rmsnorm_row_backward<double>(x, g, inv, dy, dx, dg);
  for (int i = 0; i < d; ++i) {
    auto xp = x, xm = x;
    xp[i] += eps;
    xm[i] -= eps;
    const double num = (loss(xp, g) - loss(xm, g)) / (2 * eps);
    CHECK(std::abs(num - dx[i]) <= 1e-6 * std::max(1.0, std::abs(num)));
    auto gp = g, gm = g;
    gp[i] += eps;
    gm[i] -= eps;
    const double numg = (loss(x, gp) - loss(x, gm)) / (2 * eps);
    CHECK(std::abs(numg - dg[i]) <= 1e-6 * std::max(1.0, std::abs(numg)));
  }
}

TEST_CASE("gelu derivative matches central differences", "[numerics][gradcheck]") {
  for (double x = -4.0; x <= 4.0; x += 0.37) {
    const double num = (gelu(x + 1e-5) - gelu(x - 1e-5)) / 2e-5;
    CHECK(gelu_grad(x) == Approx(num).margin(1e-8));
  }
}

TEST_CASE("cross_entropy_grad examples", "[numerics]") {
  const int vocab = 7;
  const Tensor uniform = Tensor::zeros({2, vocab});
  const std::vector<int> targets{3, 5};
  const std::vector<std::uint8_t> mask{1, 1};
  CHECK(cross_entropy_grad(uniform, targets, mask).loss == Approx(std::log(7.0)));

  Tensor peaked = Tensor::zeros({1, 4});
  peaked.at(0, 2) = 100.0f;
  const std::vector<int> t2{2};
  const std::vector<std::uint8_t> m1{1};
  CHECK(cross_entropy_grad(peaked, t2, m1).loss == Approx(0.0).margin(1e-6));

  const Tensor two({1, 2}, {0, std::log(3.0f)});
  const std::vector<int> t1{1};
  CHECK(cross_entropy_grad(two, t1, m1).loss == Approx(-std::log(0.75)));

  const std::vector<std::uint8_t> none{0, 0};
  CHECK_THROWS_AS(cross_entropy_grad(uniform, targets, none), DegenerateInputError);
}

TEST_CASE("cross_entropy_grad gradient matches central differences", "[numerics][gradcheck]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2, 2);
  Tensor64 logits({3, 6});
  for (double& v : logits.data) v = u(rng);
  const std::vector<int> targets{1, 4, 0};
  const std::vector<std::uint8_t> mask{1, 0, 1};
  const auto res = cross_entropy_grad(logits, targets, mask);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    Tensor64 p = logits, m = logits;
    p.data[i] += 1e-5;
    m.data[i] -= 1e-5;
    const double num = (cross_entropy_grad(p, targets, mask).loss - cross_entropy_grad(m, targets, mask).loss) / 2e-5;
    CHECK(res.dlogits.data[i] == Approx(num).margin(1e-8));
  }
  for (int j = 0; j < 6; ++j) CHECK(res.dlogits.at(1, j) == 0.0);
}

TEST_CASE("adam_step", "[numerics][adam]") {
  SECTION("zero gradient leaves parameters unchanged and decays moments") {
    Tensor w({2, 2}, {1, 2, 3, 4});
    const Tensor w0 = w;
    Tensor g({2, 2}, {0.5f, -0.5f, 1, -1});
    AdamState st;
    ParamSlot slot{&w, &g, true};
    adam_step(std::span(&slot, 1), st);
    const Tensor m1 = st.m[0];
    const Tensor after_first = w;
    g.fill(0.0f);
    adam_step(std::span(&slot, 1), st);
    CHECK(st.step == 2);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(st.m[0].data[i]) < std::abs(m1.data[i]));
    // With the first-step moments still present the second update is not zero;
    // a fresh state with a zero gradient must not move anything.
    AdamState fresh;
    Tensor w2 = w0;
    ParamSlot s2{&w2, &g, true};
    adam_step(std::span(&s2, 1), fresh);
    CHECK(w2 == w0);
    CHECK(after_first != w0);
  }

  SECTION("first step moves each weight by about -lr * sign(g)") {
    Tensor w({4}, {0, 0, 0, 0});
    const Tensor g({4}, {3.0f, -0.01f, 1e-3f, -20.0f});
    AdamState st;
    st.hyper.lr = 1e-4f;
    ParamSlot slot{&w, &g, true};
    adam_step(std::span(&slot, 1), st);
    for (int i = 0; i < 4; ++i) {
      const float sign = g.data[i] > 0 ? 1.0f : -1.0f;
      CHECK(w.data[i] == Approx(-1e-4f * sign).epsilon(1e-4));
    }
  }

  SECTION("identical steps reproduce bit for bit") {
    std::mt19937_64 rng(8);
    const Tensor g = random_tensor({3, 5}, rng);
    Tensor a = random_tensor({3, 5}, rng);
    Tensor b = a;
    AdamState sa, sb;
    ParamSlot pa{&a, &g, true}, pb{&b, &g, true};
    for (int i = 0; i < 3; ++i) {
      adam_step(std::span(&pa, 1), sa);
      adam_step(std::span(&pb, 1), sb);
    }
    CHECK(a == b);
  }

  SECTION("frozen slots are not touched") {
    Tensor w({2}, {1, 1});
    const Tensor g({2}, {1, 1});
    AdamState st;
    ParamSlot slot{&w, &g, false};
    adam_step(std::span(&slot, 1), st);
    CHECK(w == Tensor({2}, {1, 1}));
    CHECK(st.step == 1);
  }

  SECTION("shape mismatch") {
    Tensor w({2});
    const Tensor g({3});
    AdamState st;
    ParamSlot slot{&w, &g, true};
    CHECK_THROWS_AS(adam_step(std::span(&slot, 1), st), ShapeError);
  }
}

TEST_CASE("32-bit rmsnorm and cross-entropy gradients at eps 1e-3", "[numerics][gradcheck]") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(-1, 1);
  const int d = 8;
  const float eps = 1e-3f;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<float> x(d), g(d), dy(d);
    for (int i = 0; i < d; ++i) {
      x[i] = u(rng);
      g[i] = 1.0f + 0.3f * u(rng);
      dy[i] = u(rng);
    }
    auto loss = [&](const std::vector<float>& xs) {
      std::vector<float> out(d);
      rmsnorm_row<float>(xs, g, 1e-5f, out);
      double s = 0;
      for (int i = 0; i < d; ++i) s += static_cast<double>(out[i]) * dy[i];
      return s;
    };
    std::vector<float> out(d), dx(d, 0.0f), dg(d, 0.0f);
    const float inv = rmsnorm_row<float>(x, g, 1e-5f, out);
    rmsnorm_row_backward<float>(x, g, inv, dy, dx, dg);
    double diff = 0, ref = 0;
    for (int i = 0; i < d; ++i) {
      auto xp = x, xm = x;
      xp[i] += eps;
      xm[i] -= eps;
      const double num = (loss(xp) - loss(xm)) / (static_cast<double>(xp[i]) - xm[i]);
      diff += (num - dx[i]) * (num - dx[i]);
      ref += std::max(num * num, static_cast<double>(dx[i]) * dx[i]);
    }
    CHECK(std::sqrt(diff / ref) < 1e-3);
  }

  Tensor logits({3, 8});
  for (float& v : logits.data) v = 2 * u(rng);
  const std::vector<int> targets{1, 4, 0};
  const std::vector<std::uint8_t> mask{1, 1, 1};
  const auto res = cross_entropy_grad(logits, targets, mask);
  double diff = 0, ref = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    Tensor p = logits, m = logits;
    p.data[i] += eps;
    m.data[i] -= eps;
    const double h = static_cast<double>(p.data[i]) - m.data[i];
    const double num = (cross_entropy_grad(p, targets, mask).loss - cross_entropy_grad(m, targets, mask).loss) / h;
    diff += (num - res.dlogits.data[i]) * (num - res.dlogits.data[i]);
    ref += num * num;
  }
  CHECK(std::sqrt(diff / ref) < 1e-3);
}
