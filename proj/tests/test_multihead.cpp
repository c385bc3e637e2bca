#include <cmath>
#include <cstring>

#include "doctest.h"
#include "gradcheck.hpp"
#include "multiface/errors.hpp"
#include "multiface/multihead.hpp"
#include "multiface/ops.hpp"

using namespace multiface;
using namespace multiface::testing;

TEST_CASE("split_feature") {
    std::vector<double> v(8);
    for (int i = 0; i < 8; ++i) v[i] = i;
    const Tensor x({1, 8}, v);
    const auto parts = split_feature(x, GroupSpec(8, 4));
    REQUIRE(parts.size() == 4);
    for (std::size_t n = 0; n < 4; ++n) {
        CHECK(parts[n].shape() == Shape{1, 2});
        CHECK(parts[n].at(0) == 2.0 * n);
        CHECK(parts[n].at(1) == 2.0 * n + 1);
    }
    const auto whole = split_feature(x, GroupSpec(8, 1));
    REQUIRE(whole.size() == 1);
    CHECK(whole[0].same_storage(x));

    std::mt19937_64 rng(1);
    const Tensor big = random_tensor({3, 512}, rng, 1, false);
    const auto slices = split_feature(big, GroupSpec(512, 4));
    for (const auto& s : slices) CHECK(s.shape() == Shape{3, 128});
    const Tensor joined = ops::concat_columns(slices);
    CHECK(std::memcmp(joined.data().data(), big.data().data(), big.size() * sizeof(double)) == 0);

    try {
        GroupSpec(10, 4);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == "groups_do_not_divide");
    }
}

TEST_CASE("mlml with one head is bit-identical to lml") {
    std::mt19937_64 rng(2);
    for (const char* kind : {"softmax-cos", "sphereface", "cosface", "arcface"}) {
        const MarginConfig cfg = preset_config(kind, 8.0, kind == std::string("sphereface") ? 1.5 : 0.3);
        const MultiHead mh = MultiHead::create(6, GroupSpec(8, 1), HeadLoss::large_margin, cfg, rng);
        const Tensor x = random_tensor({4, 8}, rng);
        const std::vector<int> labels = random_labels(4, 6, rng);
        const double single = lml_loss(x, labels, mh.heads[0], cfg).item();
        const MultiHeadLoss multi = mlml_loss(x, labels, mh, GroupSpec(8, 1));
        CHECK(std::memcmp(&single, &multi.per_head[0], sizeof(double)) == 0);
        const double total = multi.total.item();
        CHECK(std::memcmp(&single, &total, sizeof(double)) == 0);
    }
}

TEST_CASE("mlml total equals standalone per-slice losses") {
    std::mt19937_64 rng(3);
    const GroupSpec spec(12, 3);
    const MarginConfig cfg = preset_config("arcface", 16, 0.3);
    const MultiHead mh = MultiHead::create(5, spec, HeadLoss::large_margin, cfg, rng);
    const Tensor x = random_tensor({4, 12}, rng);
    const std::vector<int> labels = random_labels(4, 5, rng);
    const MultiHeadLoss multi = mlml_loss(x, labels, mh, spec);
    double standalone = 0.0, logged = 0.0;
    for (std::size_t n = 0; n < 3; ++n) {
        const Tensor slice = ops::slice_columns(x.detach(), spec.group_begin(n), spec.group_begin(n) + 4);
        const double term = lml_loss(slice, labels, ClassifierHead{mh.heads[n].weight.detach(), std::nullopt}, cfg).item();
        standalone += term;
        logged += multi.per_head[n];
        CHECK(std::abs(term - multi.per_head[n]) <= 1e-12);
    }
    CHECK(std::abs(multi.total.item() - standalone) <= 1e-12);
    CHECK(std::abs(multi.total.item() - logged) <= 1e-12);
}

TEST_CASE("each head only sees its own slice") {
    std::mt19937_64 rng(4);
    const GroupSpec spec(8, 4);
    const MarginConfig cfg = preset_config("cosface", 8, 0.3);
    const MultiHead mh = MultiHead::create(3, spec, HeadLoss::large_margin, cfg, rng);
    const std::vector<int> labels = random_labels(2, 3, rng);
    for (std::size_t n = 0; n < 4; ++n) {
        Tensor x = random_tensor({2, 8}, rng);
        const auto parts = split_feature(x, spec);
        lml_loss(parts[n], labels, mh.heads[n], cfg).backward();
        for (std::size_t row = 0; row < 2; ++row)
            for (std::size_t col = 0; col < 8; ++col) {
                const bool inside = col / 2 == n;
                if (!inside) CHECK(x.grad()[row * 8 + col] == 0.0);
            }
    }
}

TEST_CASE("mlml gradients pass the finite-difference oracle") {
    std::mt19937_64 rng(5);
    for (std::size_t groups : {1, 2, 4}) {
        for (HeadLoss loss : {HeadLoss::large_margin, HeadLoss::softmax}) {
            for (int trial = 0; trial < 10; ++trial) {
                const GroupSpec spec(4 * (1 + rng() % 4), groups);
                const std::size_t batch = 1 + rng() % 4, classes = 2 + rng() % 7;
                MultiHead mh = MultiHead::create(classes, spec, loss, preset_config("arcface", 4, 0.3), rng);
                // Larger head weights than the default init keep the check sensitive.
                for (auto& h : mh.heads)
                    for (double& w : h.weight.mutable_data()) w *= 50.0;
                Tensor x = random_tensor({batch, spec.dim}, rng);
                const std::vector<int> labels = random_labels(batch, classes, rng);
                std::vector<Tensor> inputs{x};
                for (const Tensor& p : mh.parameters()) inputs.push_back(p);
                CHECK(max_gradient_error([&] { return mlml_loss(x, labels, mh, spec).total; }, inputs) <= 1e-4);
            }
        }
    }
}

TEST_CASE("Multi-Softmax heads carry a bias; large-margin heads do not") {
    std::mt19937_64 rng(6);
    const MultiHead soft = MultiHead::create(10, GroupSpec(32, 4), HeadLoss::softmax, MarginConfig{}, rng);
    const MultiHead margin = MultiHead::create(10, GroupSpec(32, 4), HeadLoss::large_margin, MarginConfig{}, rng);
    REQUIRE(soft.heads.size() == 4);
    for (const auto& h : soft.heads) {
        CHECK(h.bias.has_value());
        CHECK(h.weight.shape() == Shape{10, 8});
    }
    for (const auto& h : margin.heads) CHECK_FALSE(h.bias.has_value());
    CHECK(soft.parameters().size() == 8);
    CHECK(margin.parameters().size() == 4);
}

TEST_CASE("head_gradient_stats") {
    std::mt19937_64 rng(7);
    MultiHead mh = MultiHead::create(2, GroupSpec(4, 2), HeadLoss::large_margin, MarginConfig{}, rng);
    try {
        head_gradient_stats(mh);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == "missing_gradient");
    }
    auto g0 = mh.heads[0].weight.mutable_grad();
    g0[0] = 1, g0[1] = -1, g0[2] = 2, g0[3] = -2;
    mh.heads[1].weight.mutable_grad();
    const auto stats = head_gradient_stats(mh);
    CHECK(stats[0] == 1.5);
    CHECK(stats[1] == 0.0);
}

TEST_CASE("mean_cross_group_cosine") {
    const std::vector<double> orthogonal{1, 0, 0, 1};
    CHECK(mean_cross_group_cosine(orthogonal, 1, GroupSpec(4, 2)) == 0.0);
    const std::vector<double> parallel{1, 2, -2, -4};
    CHECK(mean_cross_group_cosine(parallel, 1, GroupSpec(4, 2)) == doctest::Approx(1.0));
    CHECK(mean_cross_group_cosine(parallel, 1, GroupSpec(4, 1)) == 0.0);
}
