#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "fmprune/error.hpp"
#include "fmprune/stats.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace fmprune;
using namespace fmprune::stats;
using fixtures::make_acts;
using fixtures::value;

namespace {

SimilarityMatrix matrix(std::vector<std::vector<double>> rows) {
    std::vector<double> flat;
    for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    std::vector<std::size_t> ids(rows.size());
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    return {"m", ids, flat};
}

}  // namespace

TEST_CASE("m_std of a constant channel is zero") {
    auto a = make_acts("l", 3, 1, 3, 3);
    std::fill(a.values.begin(), a.values.end(), 4.25);
    CHECK(compute_m_std(a)[0] == 0.0);
}

TEST_CASE("m_std of [[0,0],[1,1]] is sqrt(1/3)") {
    auto a = make_acts("l", 1, 1, 2, 2);
    a.values = {0, 0, 1, 1};
    CHECK(compute_m_std(a)[0] == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-15));
    CHECK(compute_m_std(a)[0] == doctest::Approx(0.57735).epsilon(1e-5));
}

TEST_CASE("m_std averages per-sample deviations") {
    std::mt19937_64 rng(3);
    auto a = fixtures::random_acts(rng, 2, 1, 4, 4);
    auto b = a;
    b.samples = 1;
    b.values.resize(16);
    auto c = a;
    c.samples = 1;
    c.values.erase(c.values.begin(), c.values.begin() + 16);
    const double s1 = oracle::m_std(b)[0], s2 = oracle::m_std(c)[0];
    CHECK(std::abs(compute_m_std(a)[0] - (s1 + s2) / 2) <= 1e-9);
}

TEST_CASE("m_std rejects 1x1 maps") {
    auto a = make_acts("fc", 2, 3, 1, 1);
    CHECK_THROWS_AS(compute_m_std(a), Error);
    try {
        compute_m_std(a);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::degenerate_spatial);
    }
}

TEST_CASE("similarity of hand-built pairs") {
    SUBCASE("identical channels") {
        auto a = make_acts("l", 2, 2, 1, 3);
        a.values = {1, 2, 3, 1, 2, 3, -1, 5, 2, -1, 5, 2};
        const auto s = compute_similarity_matrix(a);
        CHECK(s.at(0, 1) == doctest::Approx(1.0));
        CHECK(s.at(0, 0) == 1.0);
    }
    SUBCASE("orthogonal") {
        auto a = make_acts("l", 1, 2, 2, 2);
        a.values = {1, 0, 0, 0, 0, 1, 0, 0};
        CHECK(compute_similarity_matrix(a).at(0, 1) == 0.0);
    }
    SUBCASE("[1,0] vs [1,1]") {
        auto a = make_acts("l", 1, 2, 1, 2);
        a.values = {1, 0, 1, 1};
        CHECK(compute_similarity_matrix(a).at(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    }
    SUBCASE("zero vectors have zero similarity, including with themselves") {
        auto a = make_acts("l", 2, 2, 1, 2);
        a.values = {0, 0, 1, 2, 3, 4, 3, 4};  // channel 0 is zero in sample 0 only
        const auto s = compute_similarity_matrix(a);
        CHECK(s.at(0, 0) == 0.5);
        CHECK(s.at(1, 1) == 1.0);
        CHECK(s.at(0, 1) == doctest::Approx(0.5));
    }
}

TEST_CASE("m_corr examples") {
    CHECK(compute_m_corr(matrix({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}})) == std::vector<double>{1, 1, 1});
    CHECK(compute_m_corr(matrix({{1, 0}, {0, 1}})) == std::vector<double>{0.5, 0.5});
}

TEST_CASE("top-k examples") {
    CHECK(compute_topk_corr(matrix({{1, 0.4}, {0.4, 1}}), 1) == std::vector<double>{0.4, 0.4});
    const auto m = matrix({{1, 0.9, 0.2, 0.1}, {0.9, 1, 0, 0}, {0.2, 0, 1, 0}, {0.1, 0, 0, 1}});
    CHECK(compute_topk_corr(m, 2)[0] == doctest::Approx(0.55));
    try {
        compute_topk_corr(m, 4);
        FAIL("expected KTooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::k_too_large);
    }
}

TEST_CASE("layer statistics clamp k for narrow layers") {
    std::mt19937_64 rng(5);
    auto a = fixtures::random_acts(rng, 2, 3, 3, 3);
    const auto st = compute_layer_statistics(a, 5);
    REQUIRE(st.stats.topk_corr);
    CHECK(st.stats.k == 2);
    auto one = fixtures::random_acts(rng, 2, 1, 3, 3);
    CHECK_FALSE(compute_layer_statistics(one, 5).stats.topk_corr);
}

TEST_CASE("statistics match the naive oracles on random layers (float64)") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> T(1, 4), N(2, 8), HW(2, 5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = N(rng), hw = HW(rng);
        const auto a = fixtures::random_acts(rng, T(rng), n, hw, hw);
        const auto sim = compute_similarity_matrix(a, 3);
        const auto ref = oracle::similarity(a);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < n; ++p) REQUIRE(std::abs(sim.at(j, p) - ref[j][p]) <= 1e-9);
        const auto ms = compute_m_std(a), ms_ref = oracle::m_std(a);
        const auto mc = compute_m_corr(sim), mc_ref = oracle::m_corr(a);
        const std::size_t k = 1 + trial % (n - 1);
        const auto tk = compute_topk_corr(sim, k), tk_ref = oracle::topk(ref, k);
        for (std::size_t j = 0; j < n; ++j) {
            REQUIRE(std::abs(ms[j] - ms_ref[j]) <= 1e-9);
            REQUIRE(std::abs(mc[j] - mc_ref[j]) <= 1e-9);
            REQUIRE(std::abs(tk[j] - tk_ref[j]) <= 1e-9);
            REQUIRE(ms[j] >= 0.0);
            REQUIRE((mc[j] >= 0.0 && mc[j] <= 1.0));
        }
    }
}

TEST_CASE("float32 inputs stay within 1e-5 of the float64 oracle") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        auto a = fixtures::random_acts(rng, 3, 6, 5, 5);
        const tensorio::TensorFile t({3, 6, 5, 5}, std::vector<float>(a.values.begin(), a.values.end()));
        const auto narrowed = tensorio::ActivationSet::from_tensor("f32", t);
        const auto ms = compute_m_std(narrowed), ms_ref = oracle::m_std(a);
        const auto mc = compute_m_corr(compute_similarity_matrix(narrowed)), mc_ref = oracle::m_corr(a);
        for (std::size_t j = 0; j < 6; ++j) {
            CHECK(std::abs(ms[j] - ms_ref[j]) <= 1e-5);
            CHECK(std::abs(mc[j] - mc_ref[j]) <= 1e-5);
        }
    }
}

TEST_CASE("similarity is exactly symmetric and thread-count independent") {
    std::mt19937_64 rng(13);
    const auto a = fixtures::random_acts(rng, 4, 33, 5, 5);
    const auto s1 = compute_similarity_matrix(a, 1);
    const auto s4 = compute_similarity_matrix(a, 4);
    CHECK(s1.values() == s4.values());
    for (std::size_t j = 0; j < 33; ++j)
        for (std::size_t p = 0; p < 33; ++p) CHECK(s1.at(j, p) == s1.at(p, j));
}

TEST_CASE("m_std is zero iff every sample's map is constant") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = fixtures::random_acts(rng, 3, 6, 3, 3);
        const auto ms = compute_m_std(a);
        for (std::size_t c = 0; c < 6; ++c) {
            bool constant = true;
            for (std::size_t m = 0; m < 3; ++m) {
                const auto x = a.map(m, c);
                constant = constant && std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
            }
            CHECK((ms[c] == 0.0) == constant);
        }
    }
}

TEST_CASE("restrict_to keeps original channel ids") {
    const auto m = matrix({{1, 0.9, 0.2}, {0.9, 1, 0.3}, {0.2, 0.3, 1}});
    const std::vector<std::size_t> rows{0, 2};
    const auto r = m.restrict_to(rows);
    CHECK(r.channel_ids() == std::vector<std::size_t>{0, 2});
    CHECK(r.at(0, 1) == 0.2);
}

TEST_CASE("pearson") {
    SUBCASE("affine negatives give -1") {
        const std::vector<double> x{0.1, 0.5, 0.2, 0.9}, y{1.0 - 2 * 0.1, 1.0 - 2 * 0.5, 1.0 - 2 * 0.2, 1.0 - 2 * 0.9};
        CHECK(pearson(x, y) == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("matches the textbook formula") {
        std::mt19937_64 rng(15);
        std::uniform_real_distribution<double> u(0, 1);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> x(20), y(20);
            for (std::size_t i = 0; i < 20; ++i) {
                x[i] = u(rng);
                y[i] = 0.3 * x[i] + u(rng);
            }
            CHECK(std::abs(pearson(x, y) - oracle::pearson(x, y)) <= 1e-9);
        }
    }
    SUBCASE("zero variance is nan") {
        const std::vector<double> x{1, 1, 1}, y{1, 2, 3};
        CHECK(std::isnan(pearson(x, y)));
    }
}

TEST_CASE("stats report layout") {
    FeatureStats s{"conv1", {0.5, 0.25}, {0.75, 0.5}, std::vector<double>{0.5, 0.5}, 1};
    const std::vector<FeatureStats> all{s};
    const auto csv = stats_report_csv(all);
    CHECK(csv ==
          "layer_id,channel,m_std,m_corr,topk_corr\n"
          "conv1,0,0.5,0.75,0.5\n"
          "conv1,1,0.25,0.5,0.5\n"
          "conv1,ALL,0.375,0.625,0.5\n"
          "GLOBAL_PEARSON,ALL,1,1,nan\n");

    FeatureStats anti{"l", {0.1, 0.2, 0.3}, {0.9, 0.7, 0.5}, std::nullopt, 0};
    const std::vector<FeatureStats> v{anti};
    const auto csv2 = stats_report_csv(v);
    CHECK(csv2.find("GLOBAL_PEARSON,ALL,1,-1,\n") != std::string::npos);
    const auto json = stats_report_json(v);
    CHECK(json["global"]["pearson_m_std_m_corr"].get<double>() == doctest::Approx(-1.0));
}

TEST_CASE("report floats carry nine significant digits") {
    FeatureStats s{"l", {1.0 / 3.0, 2.0}, {0.1, 0.2}, std::nullopt, 0};
    const std::vector<FeatureStats> v{s};
    CHECK(stats_report_csv(v).find("l,0,0.333333333,0.1,\n") != std::string::npos);
}
