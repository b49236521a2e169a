#include <doctest.h>

#include <random>

#include "fmprune/error.hpp"
#include "fmprune/surgery.hpp"
#include "support/fixtures.hpp"

using namespace fmprune;
using namespace fmprune::surgery;
using nlohmann::json;
using tensorio::TensorFile;

namespace {

TensorFile random_tensor(std::mt19937_64& rng, std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    std::normal_distribution<double> g;
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return {std::move(shape), std::move(v)};
}

// Bundle with the shape the graph dictates for every weighted layer.
WeightBundle random_bundle(std::mt19937_64& rng, const graph::ModelGraph& g) {
    WeightBundle b;
    for (const auto& l : g.layers()) {
        const auto in = std::size_t(l.in_channels), out = std::size_t(l.out_channels), k = std::size_t(l.kernel);
        LayerWeights w;
        switch (l.kind) {
            case graph::LayerKind::conv: w.weight = random_tensor(rng, {out, in, k, k}); break;
            case graph::LayerKind::depthwise_conv: w.weight = random_tensor(rng, {out, 1, k, k}); break;
            case graph::LayerKind::linear: w.weight = random_tensor(rng, {out, in}); break;
            case graph::LayerKind::batchnorm: w.bn = random_tensor(rng, {4, out}); break;
            default: continue;
        }
        if (l.bias) w.bias = random_tensor(rng, {out});
        b.entries.emplace(l.id, std::move(w));
    }
    return b;
}

PruningPlan plan_of(const graph::ModelGraph& g, const std::map<std::string, std::vector<std::size_t>>& kept) {
    PruningPlan plan;
    for (const auto& [id, k] : kept) {
        LayerPlan lp;
        lp.layer_id = id;
        lp.channels = std::size_t(g.layer(id).out_channels);
        lp.kept = k;
        plan.layers.push_back(lp);
    }
    return plan;
}

json small_net() {
    return json::parse(R"({"format_version":"1","input":{"channels":3,"height":5,"width":5},
      "layers":[{"id":"input","kind":"input"},
                {"id":"c1","kind":"conv","out":4,"kernel":3,"bias":true,"prunable":true},
                {"id":"bn","kind":"batchnorm"},
                {"id":"dw","kind":"depthwise_conv","kernel":3},
                {"id":"c2","kind":"conv","out":8,"kernel":1,"prunable":true},
                {"id":"pool","kind":"pool"},
                {"id":"fc","kind":"linear","out":3,"bias":true},
                {"id":"output","kind":"output"}],
      "edges":[["input","c1"],["c1","bn"],["bn","dw"],["dw","c2"],["c2","pool"],["pool","fc"],["fc","output"]]})");
}

// Direct-loop stride-1 "same" convolution followed by nothing.
std::vector<double> naive_conv(const std::vector<double>& x, std::size_t cin, std::size_t h, std::size_t w,
                               const TensorFile& weight, const std::optional<TensorFile>& bias) {
    const auto& s = weight.shape();
    const std::size_t cout = s[0], k = s[2];
    const long pad = long(k / 2);
    std::vector<double> y(cout * h * w, 0.0);
    for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j) {
                double acc = bias ? bias->value(o) : 0.0;
                for (std::size_t c = 0; c < cin; ++c)
                    for (std::size_t a = 0; a < k; ++a)
                        for (std::size_t b = 0; b < k; ++b) {
                            const long yi = long(i) + long(a) - pad, xj = long(j) + long(b) - pad;
                            if (yi < 0 || xj < 0 || yi >= long(h) || xj >= long(w)) continue;
                            acc += weight.value(((o * cin + c) * k + a) * k + b) * x[(c * h + yi) * w + xj];
                        }
                y[(o * h + i) * w + j] = acc;
            }
    return y;
}

}  // namespace

TEST_CASE("identity plan reproduces the bundle bit for bit") {
    std::mt19937_64 rng(41);
    const auto g = graph::parse_graph(small_net());
    const auto b = random_bundle(rng, g);
    CHECK(verify_bundle(b, g).empty());
    CHECK(apply_plan_weights(b, g, PruningPlan{}).bit_equal(b));
    CHECK(apply_plan_weights(b, g, plan_of(g, {{"c1", {0, 1, 2, 3}}})).bit_equal(b));
}

TEST_CASE("conv output filters and successor input slices") {
    std::mt19937_64 rng(42);
    const auto doc = json::parse(R"({"format_version":"1","input":{"channels":3,"height":4,"width":4},
      "layers":[{"id":"input","kind":"input"},{"id":"a","kind":"conv","out":4,"kernel":3,"prunable":true},
                {"id":"b","kind":"conv","out":8,"kernel":1},{"id":"output","kind":"output"}],
      "edges":[["input","a"],["a","b"],["b","output"]]})");
    const auto net = graph::parse_graph(doc);
    const auto bundle = random_bundle(rng, net);
    const std::vector<std::size_t> kept{0, 2};
    const auto out = apply_plan_weights(bundle, net, plan_of(net, {{"a", kept}}));

    const auto& wa = *bundle.entries.at("a").weight;
    const auto& pa = *out.entries.at("a").weight;
    REQUIRE(pa.shape() == std::vector<std::size_t>{2, 3, 3, 3});
    for (std::size_t o = 0; o < 2; ++o)
        for (std::size_t r = 0; r < 27; ++r) CHECK(pa.value(o * 27 + r) == wa.value(kept[o] * 27 + r));

    const auto& wb = *bundle.entries.at("b").weight;
    const auto& pb = *out.entries.at("b").weight;
    REQUIRE(pb.shape() == std::vector<std::size_t>{8, 2, 1, 1});
    for (std::size_t o = 0; o < 8; ++o)
        for (std::size_t i = 0; i < 2; ++i) CHECK(pb.value(o * 2 + i) == wb.value(o * 4 + kept[i]));
}

TEST_CASE("depthwise weights follow their producer") {
    std::mt19937_64 rng(43);
    const auto g = graph::parse_graph(small_net());
    const auto b = random_bundle(rng, g);
    const std::vector<std::size_t> kept{1, 3};
    const auto out = apply_plan_weights(b, g, plan_of(g, {{"c1", kept}}));
    const auto& dw = *out.entries.at("dw").weight;
    REQUIRE(dw.shape() == std::vector<std::size_t>{2, 1, 3, 3});
    for (std::size_t o = 0; o < 2; ++o)
        for (std::size_t r = 0; r < 9; ++r) CHECK(dw.value(o * 9 + r) == b.entries.at("dw").weight->value(kept[o] * 9 + r));
    const auto& bn = *out.entries.at("bn").bn;
    REQUIRE(bn.shape() == std::vector<std::size_t>{4, 2});
    for (std::size_t row = 0; row < 4; ++row)
        for (std::size_t i = 0; i < 2; ++i) CHECK(bn.value(row * 2 + i) == b.entries.at("bn").bn->value(row * 4 + kept[i]));
    CHECK(out.entries.at("c2").weight->shape() == std::vector<std::size_t>{8, 2, 1, 1});
    CHECK(out.entries.at("c1").bias->shape() == std::vector<std::size_t>{2});
    const auto pruned = graph::apply_plan_shapes(g, plan_of(g, {{"c1", kept}}));
    CHECK(verify_bundle(out, pruned).empty());
}

TEST_CASE("linear inputs are sliced per flattened feature") {
    std::mt19937_64 rng(44);
    const auto g = graph::parse_graph(small_net());
    const auto b = random_bundle(rng, g);
    // c2 has 8 channels at 5x5; pool gives 2x2, so fc sees 8 * 4 features
    REQUIRE(g.layer("fc").in_channels == 32);
    const std::vector<std::size_t> kept{2, 5, 7};
    const auto out = apply_plan_weights(b, g, plan_of(g, {{"c2", kept}}));
    const auto& fc = *out.entries.at("fc").weight;
    REQUIRE(fc.shape() == std::vector<std::size_t>{3, 12});
    for (std::size_t o = 0; o < 3; ++o)
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t s = 0; s < 4; ++s)
                CHECK(fc.value(o * 12 + i * 4 + s) == b.entries.at("fc").weight->value(o * 32 + kept[i] * 4 + s));
}

TEST_CASE("verify reports an off-by-one input dimension") {
    std::mt19937_64 rng(45);
    const auto g = graph::parse_graph(small_net());
    auto b = random_bundle(rng, g);
    b.entries.at("c2").weight = random_tensor(rng, {8, 5, 1, 1});
    const auto report = verify_bundle(b, g);
    REQUIRE(report.size() == 1);
    CHECK(report[0].layer_id == "c2");
    try {
        apply_plan_weights(b, g, PruningPlan{});
        FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::shape_mismatch);
    }

    auto missing = random_bundle(rng, g);
    missing.entries.erase("c1");
    CHECK(verify_bundle(missing, g).empty() == false);
    try {
        apply_plan_weights(missing, g, plan_of(g, {{"c1", {0}}}));
        FAIL("expected MissingWeights");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::missing_weights);
    }
}

TEST_CASE("surgery output always fits the pruned graph") {
    std::mt19937_64 rng(46);
    const auto g = graph::load_graph(fixtures::data_dir() / "graphs" / "preresnet_bottleneck_stage.json");
    for (int trial = 0; trial < 20; ++trial) {
        const auto b = random_bundle(rng, g);
        std::map<std::string, std::vector<std::size_t>> kept;
        auto subset = [&](std::size_t n) {
            std::vector<std::size_t> v;
            for (std::size_t c = 0; c < n; ++c)
                if (rng() % 3) v.push_back(c);
            if (v.empty()) v.push_back(rng() % n);
            return v;
        };
        for (const auto& l : g.layers())
            if (l.prunable && !g.post_addition_group_of(l.id) && rng() % 2) kept[l.id] = subset(std::size_t(l.out_channels));
        const auto shared = subset(64);
        for (const auto* id : {"b1_conv3", "b1_shortcut", "b2_conv3", "b3_conv3"}) kept[id] = shared;
        const auto plan = plan_of(g, kept);
        const auto out = apply_plan_weights(b, g, plan);
        REQUIRE(verify_bundle(out, graph::apply_plan_shapes(g, plan)).empty());
    }
}

TEST_CASE("pruning all-zero filters preserves a linear two-layer network") {
    std::mt19937_64 rng(47);
    const auto g = graph::parse_graph(json::parse(R"({"format_version":"1","input":{"channels":3,"height":6,"width":6},
      "layers":[{"id":"input","kind":"input"},{"id":"c1","kind":"conv","out":6,"kernel":3,"bias":true,"prunable":true},
                {"id":"act","kind":"activation"},{"id":"c2","kind":"conv","out":4,"kernel":3,"bias":true},
                {"id":"output","kind":"output"}],
      "edges":[["input","c1"],["c1","act"],["act","c2"],["c2","output"]]})"));
    for (int trial = 0; trial < 10; ++trial) {
        auto b = random_bundle(rng, g);
        const std::vector<std::size_t> zero{1, 4}, kept{0, 2, 3, 5};
        auto w1 = b.entries.at("c1").weight->to_f64();
        auto b1 = b.entries.at("c1").bias->to_f64();
        for (auto z : zero) {
            std::fill(w1.begin() + long(z * 27), w1.begin() + long((z + 1) * 27), 0.0);
            b1[z] = 0.0;
        }
        b.entries.at("c1").weight = TensorFile({6, 3, 3, 3}, w1);
        b.entries.at("c1").bias = TensorFile({6}, b1);
        const auto pruned = apply_plan_weights(b, g, plan_of(g, {{"c1", kept}}));

        const auto x = random_tensor(rng, {3, 6, 6}).to_f64();
        auto forward = [&](const WeightBundle& wb) {
            const auto& l1 = wb.entries.at("c1");
            const auto h = naive_conv(x, 3, 6, 6, *l1.weight, l1.bias);
            const auto& l2 = wb.entries.at("c2");
            return naive_conv(h, l1.weight->shape()[0], 6, 6, *l2.weight, l2.bias);
        };
        const auto y0 = forward(b), y1 = forward(pruned);
        REQUIRE(y0.size() == y1.size());
        for (std::size_t i = 0; i < y0.size(); ++i) REQUIRE(std::abs(y0[i] - y1[i]) <= 1e-6);
    }
}

TEST_CASE("bundle directory round trip") {
    std::mt19937_64 rng(48);
    const auto g = graph::parse_graph(small_net());
    const auto b = random_bundle(rng, g);
    const auto dir = fixtures::temp_dir("bundle");
    save_bundle(dir, b);
    const auto back = load_bundle(dir / kWeightsManifest);
    CHECK(back.bit_equal(b));
    const auto manifest = json::parse(fixtures::slurp(dir / kWeightsManifest));
    CHECK(manifest["format_version"] == "1");
    CHECK(manifest["layers"]["bn"].contains("bn"));
    CHECK_FALSE(manifest["layers"]["c2"].contains("bias"));
}
