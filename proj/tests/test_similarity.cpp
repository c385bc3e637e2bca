#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "multiface/errors.hpp"
#include "multiface/similarity.hpp"
#include "oracles.hpp"

using namespace multiface;

namespace {

EmbeddingTable table_of(std::size_t dim, std::size_t groups, std::vector<std::vector<double>> rows,
                        std::vector<std::uint32_t> labels = {}) {
    EmbeddingTable t;
    t.count = rows.size();
    t.dim = dim;
    t.groups = groups;
    for (auto& r : rows) t.values.insert(t.values.end(), r.begin(), r.end());
    t.labels = labels.empty() ? std::vector<std::uint32_t>(rows.size(), 0) : labels;
    return t;
}

}  // namespace

TEST_CASE("grouped_similarity examples") {
    const std::vector<double> a{1, 0, 0, 1}, b{1, 0, 0, -1};
    CHECK(grouped_similarity(a, b, 2, SimilarityMode::group_cosine) == 0.0);
    const std::vector<double> dense{1, -2, 3, 4};
    for (std::size_t n : {1, 2, 4}) {
        CHECK(grouped_similarity(dense, dense, n, SimilarityMode::group_cosine) ==
              doctest::Approx(1.0).epsilon(1e-15));
    }
    const std::vector<double> z{0, 0, 1, 1};
    try {
        grouped_similarity(z, a, 2, SimilarityMode::group_cosine);
        FAIL("zero sub-vector");
    } catch (const Error&) {
    }
    CHECK_THROWS(grouped_similarity(a, b, 3, SimilarityMode::group_cosine));
    CHECK(parse_similarity_mode("raw-dot") == SimilarityMode::raw_dot);
    CHECK(to_string(SimilarityMode::group_cosine) == "group-cosine");
    CHECK_THROWS(parse_similarity_mode("cosine"));
}

TEST_CASE("grouped_similarity properties on random vectors") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> a(16), b(16);
        for (double& v : a) v = normal(rng);
        for (double& v : b) v = normal(rng);
        const double full = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
        for (std::size_t n : {1, 2, 4, 8}) {
            CHECK(std::abs(grouped_similarity(a, b, n, SimilarityMode::raw_dot) - full) <= 1e-12);
            const double ab = grouped_similarity(a, b, n, SimilarityMode::group_cosine);
            const double ba = grouped_similarity(b, a, n, SimilarityMode::group_cosine);
            CHECK(std::abs(ab - ba) <= 1e-15);
            CHECK(ab >= -1.0);
            CHECK(ab <= 1.0);
        }
    }
}

TEST_CASE("mean and sum aggregation rank pairs identically") {
    std::mt19937_64 rng(2);
    const EmbeddingTable t = oracle::random_table(40, 8, 4, 5, rng);
    std::vector<std::pair<double, double>> scored;  // (mean, sum)
    for (std::size_t i = 1; i < t.count; ++i) {
        const double mean = grouped_similarity(t.row(0), t.row(i), 4, SimilarityMode::group_cosine);
        scored.emplace_back(mean, mean * 4.0);
    }
    for (std::size_t i = 0; i < scored.size(); ++i)
        for (std::size_t j = 0; j < scored.size(); ++j)
            CHECK((scored[i].first < scored[j].first) == (scored[i].second < scored[j].second));
}

TEST_CASE("angle_stats") {
    const EmbeddingTable t = table_of(4, 2, {{1, 0, 0, 1}, {1, 0, 0, 1}, {0, 1, 1, 0}, {2, 0, 0, 2}});
    const PairSet pairs{{0, 1, true}, {0, 2, false}, {1, 3, true}, {2, 3, false}};
    const AngleStats s = angle_stats(t, pairs, SimilarityMode::group_cosine);
    CHECK(s.positive_count == 2);
    CHECK(s.negative_count == 2);
    CHECK(s.positive_mean_deg == doctest::Approx(0.0));
    CHECK(s.negative_mean_deg == doctest::Approx(90.0));
    CHECK(s.positive_hist[0] == 2);
    CHECK(s.negative_hist[90] + s.negative_hist[89] == 2);

    std::mt19937_64 rng(3);
    const EmbeddingTable r = oracle::random_table(6, 6, 3, 2, rng);
    const PairSet hand{{0, 1, true}, {2, 3, true}, {0, 5, false}, {4, 2, false}};
    const AngleStats hs = angle_stats(r, hand, SimilarityMode::group_cosine);
    double pos = 0.0, neg = 0.0;
    for (const Pair& p : hand) {
        const double deg = std::acos(oracle::similarity(r.row(p.a), r.row(p.b), 3, SimilarityMode::group_cosine)) *
                           180.0 / 3.14159265358979323846;
        (p.same ? pos : neg) += deg / 2.0;
    }
    CHECK(hs.positive_mean_deg == doctest::Approx(pos).epsilon(1e-12));
    CHECK(hs.negative_mean_deg == doctest::Approx(neg).epsilon(1e-12));
    std::size_t total = 0;
    for (std::size_t b = 0; b < kAngleBins; ++b) total += hs.positive_hist[b] + hs.negative_hist[b];
    CHECK(total == 4);
}

TEST_CASE("verification_accuracy examples") {
    const std::vector<double> sep{0.9, 0.9, 0.1, 0.1};
    CHECK(verification_accuracy(sep, {true, true, false, false}).accuracy == 1.0);

    const std::vector<double> flat{0.5, 0.5, 0.5, 0.5, 0.5};
    CHECK(verification_accuracy(flat, {true, false, false, false, true}).accuracy == doctest::Approx(0.6));
    CHECK(verification_accuracy(flat, {true, true, false, true, true}).accuracy == doctest::Approx(0.8));

    const std::vector<double> hand{0.9, 0.6, 0.4, 0.2};
    const VerificationResult r = verification_accuracy(hand, {true, false, true, false});
    CHECK(r.accuracy == 0.75);
    CHECK(r.threshold == doctest::Approx(0.3));

    CHECK_THROWS(verification_accuracy(std::vector<double>{}, {}));
}

TEST_CASE("verification_accuracy matches brute force") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> coarse(0, 12);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng() % 199;
        std::vector<double> scores(n);
        std::vector<bool> same(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = coarse(rng) / 12.0;  // coarse grid forces ties
            same[i] = rng() % 2;
        }
        same[0] = true;
        same[1] = false;
        const auto fast = verification_accuracy(scores, same);
        const auto slow = oracle::verification(scores, same);
        CHECK(fast.accuracy == slow.accuracy);
        CHECK(fast.threshold == slow.threshold);
    }
}

TEST_CASE("tar_at_far examples and monotonicity") {
    const std::vector<double> pos{0.9, 0.8, 0.3}, neg{0.7, 0.4, 0.2, 0.1};
    CHECK(tar_at_far(pos, neg, 0.25) == doctest::Approx(2.0 / 3.0));
    CHECK(tar_at_far(pos, neg, 1.0) == 1.0);
    CHECK(tar_at_far(std::vector<double>{0.95, 0.99}, neg, 0.0) == 1.0);
    CHECK_THROWS(tar_at_far(std::vector<double>{}, neg, 0.1));
    CHECK_THROWS(tar_at_far(pos, std::vector<double>{}, 0.1));

    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    std::vector<double> p(50), q(80);
    for (double& v : p) v = normal(rng) + 1.0;
    for (double& v : q) v = normal(rng);
    double prev = -1.0;
    for (double far = 0.0; far <= 1.0; far += 0.01) {
        const double tar = tar_at_far(p, q, far);
        CHECK(tar >= prev);
        prev = tar;
    }
}

TEST_CASE("tar_at_far matches brute force") {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<int> coarse(0, 20);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> pos(1 + rng() % 100), neg(1 + rng() % 100);
        for (double& v : pos) v = coarse(rng) / 20.0;
        for (double& v : neg) v = coarse(rng) / 20.0;
        const double far = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        CHECK(tar_at_far(pos, neg, far) == oracle::tar_at_far(pos, neg, far));
    }
}

TEST_CASE("rank1_identification") {
    std::mt19937_64 rng(7);
    const EmbeddingTable g = oracle::random_table(10, 8, 2, 10, rng);
    CHECK(rank1_identification(g, g, SimilarityMode::group_cosine) == 1.0);

    const EmbeddingTable probe = table_of(2, 1, {{1, 0}}, {0});
    const EmbeddingTable gallery = table_of(2, 1, {{0.6, 0.8}, {0.8, 0.6}}, {0, 1});
    CHECK(rank1_identification(probe, gallery, SimilarityMode::group_cosine) == 0.0);

    const EmbeddingTable stranger = table_of(2, 1, {{1, 0}, {0, 1}}, {7, 9});
    try {
        rank1_identification(stranger, gallery, SimilarityMode::group_cosine);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == "identity_missing");
        CHECK(std::string(e.what()).find("7,9") != std::string::npos);
    }

    // Exact ties go to the lowest gallery index.
    const EmbeddingTable tied = table_of(2, 1, {{1, 0}, {1, 0}}, {1, 0});
    CHECK(rank1_identification(probe, tied, SimilarityMode::group_cosine) == 0.0);
}

TEST_CASE("rank1_identification matches brute force") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t groups = std::size_t{1} << (rng() % 3);
        const EmbeddingTable gallery = oracle::random_table(50, 8, groups, 10, rng);
        EmbeddingTable probes = oracle::random_table(20, 8, groups, 10, rng);
        for (auto& l : probes.labels) l = gallery.labels[rng() % gallery.count];
        for (SimilarityMode mode : {SimilarityMode::group_cosine, SimilarityMode::raw_dot}) {
            CHECK(rank1_identification(probes, gallery, mode) == oracle::rank1(probes, gallery, mode));
        }
    }
}
