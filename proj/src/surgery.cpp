#include "fmprune/surgery.hpp"

#include <algorithm>

#include "fmprune/error.hpp"
#include "fmprune/util.hpp"

namespace fmprune::surgery {

namespace fs = std::filesystem;
using graph::LayerKind;
using tensorio::TensorFile;

namespace {

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
    return s + ")";
}

bool same_tensor(const std::optional<TensorFile>& a, const std::optional<TensorFile>& b) {
    if (a.has_value() != b.has_value()) return false;
    return !a || a->bit_equal(*b);
}

std::vector<std::size_t> dims(std::initializer_list<std::int64_t> d) {
    std::vector<std::size_t> out;
    for (auto v : d) out.push_back(static_cast<std::size_t>(v));
    return out;
}

}  // namespace

bool WeightBundle::bit_equal(const WeightBundle& other) const {
    if (entries.size() != other.entries.size()) return false;
    for (const auto& [id, w] : entries) {
        auto it = other.entries.find(id);
        if (it == other.entries.end()) return false;
        if (!same_tensor(w.weight, it->second.weight) || !same_tensor(w.bias, it->second.bias) ||
            !same_tensor(w.bn, it->second.bn))
            return false;
    }
    return true;
}

WeightBundle load_bundle(const fs::path& manifest_path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::manifest_invalid, manifest_path.string() + ": " + e.what());
    }
    auto bad = [&](const std::string& what) {
        fail(ErrorCode::manifest_invalid, manifest_path.string() + ": " + what);
    };
    if (!doc.is_object() || doc.value("format_version", "") != "1") bad("format_version must be \"1\"");
    if (!doc.contains("layers") || !doc["layers"].is_object()) bad("missing layers object");
    const fs::path base = manifest_path.parent_path();
    WeightBundle bundle;
    for (const auto& [id, entry] : doc["layers"].items()) {
        if (!entry.is_object()) bad("entry for '" + id + "' must be an object");
        LayerWeights w;
        for (const auto& [key, value] : entry.items()) {
            if (!value.is_string()) bad("paths for '" + id + "' must be strings");
            fs::path p(value.get<std::string>());
            if (p.is_relative()) p = base / p;
            if (!fs::is_regular_file(p)) fail(ErrorCode::missing_file, "weight file not found: " + p.string());
            if (key == "weight") w.weight = tensorio::read_tensor(p);
            else if (key == "bias") w.bias = tensorio::read_tensor(p);
            else if (key == "bn") w.bn = tensorio::read_tensor(p);
            else bad("unknown key '" + key + "' for '" + id + "'");
        }
        bundle.entries.emplace(id, std::move(w));
    }
    return bundle;
}

void save_bundle(const fs::path& dir, const WeightBundle& bundle) {
    nlohmann::ordered_json doc;
    doc["format_version"] = "1";
    auto& layers = doc["layers"] = nlohmann::ordered_json::object();
    for (const auto& [id, w] : bundle.entries) {
        nlohmann::ordered_json entry = nlohmann::ordered_json::object();
        auto put = [&](const char* key, const std::optional<TensorFile>& t) {
            if (!t) return;
            const std::string name = id + "." + key + ".npy";
            tensorio::write_tensor(dir / name, *t);
            entry[key] = name;
        };
        put("weight", w.weight);
        put("bias", w.bias);
        put("bn", w.bn);
        layers[id] = std::move(entry);
    }
    write_file_atomic(dir / kWeightsManifest, doc.dump(2) + "\n");
}

std::vector<Mismatch> verify_bundle(const WeightBundle& bundle, const graph::ModelGraph& graph) {
    std::vector<Mismatch> out;
    for (const auto& [id, w] : bundle.entries) {
        auto report = [&](const std::string& msg) { out.push_back({id, msg}); };
        auto idx = graph.find(id);
        if (!idx) {
            report("no such layer in the graph");
            continue;
        }
        const auto& l = graph.layers()[*idx];
        auto check = [&](const char* what, const std::optional<TensorFile>& t, std::vector<std::size_t> want,
                         bool required) {
            if (!t) {
                if (required) report(std::string("missing ") + what + ", expected shape " + shape_str(want));
                return;
            }
            if (want.empty()) {
                report(std::string("unexpected ") + what + " tensor for a " + std::string(graph::to_string(l.kind)) +
                       " layer");
            } else if (t->shape() != want) {
                report(std::string(what) + " has shape " + shape_str(t->shape()) + ", expected " + shape_str(want));
            }
        };
        switch (l.kind) {
            case LayerKind::conv:
                check("weight", w.weight, dims({l.out_channels, l.in_channels, l.kernel, l.kernel}), true);
                check("bias", w.bias, l.bias ? dims({l.out_channels}) : std::vector<std::size_t>{}, l.bias);
                check("bn", w.bn, {}, false);
                break;
            case LayerKind::depthwise_conv:
                check("weight", w.weight, dims({l.out_channels, 1, l.kernel, l.kernel}), true);
                check("bias", w.bias, l.bias ? dims({l.out_channels}) : std::vector<std::size_t>{}, l.bias);
                check("bn", w.bn, {}, false);
                break;
            case LayerKind::linear:
                check("weight", w.weight, dims({l.out_channels, l.in_channels}), true);
                check("bias", w.bias, l.bias ? dims({l.out_channels}) : std::vector<std::size_t>{}, l.bias);
                check("bn", w.bn, {}, false);
                break;
            case LayerKind::batchnorm:
                check("weight", w.weight, {}, false);
                check("bias", w.bias, {}, false);
                check("bn", w.bn, dims({4, l.out_channels}), true);
                break;
            default:
                check("weight", w.weight, {}, false);
                check("bias", w.bias, {}, false);
                check("bn", w.bn, {}, false);
                break;
        }
    }
    for (const auto& l : graph.layers()) {
        const bool needs = (l.kind == LayerKind::conv || l.kind == LayerKind::linear) &&
                           (l.prunable || graph.post_addition_group_of(l.id));
        if (needs && !bundle.entries.count(l.id)) out.push_back({l.id, "prunable layer has no weight entry"});
    }
    return out;
}

WeightBundle apply_plan_weights(const WeightBundle& bundle, const graph::ModelGraph& graph, const PruningPlan& plan) {
    for (const auto& lp : plan.layers) {
        auto it = bundle.entries.find(lp.layer_id);
        if (it == bundle.entries.end() || !it->second.weight)
            fail(ErrorCode::missing_weights, "no weight tensor for pruned layer '" + lp.layer_id + "'");
    }
    const auto problems = verify_bundle(bundle, graph);
    if (!problems.empty())
        fail(ErrorCode::shape_mismatch, "weights do not match the graph: layer '" + problems.front().layer_id + "': " +
                                            problems.front().message + " (" + std::to_string(problems.size()) +
                                            " problem(s) total)");

    const auto sets = graph::propagate_channels(graph, plan);
    WeightBundle out;
    for (const auto& [id, w] : bundle.entries) {
        const auto idx = graph.index_of(id);
        const auto& l = graph.layers()[idx];
        const auto& out_set = sets[idx];
        const auto& in_set = graph.producers(idx).empty() ? out_set : sets[graph.producers(idx).front()];
        LayerWeights pruned;
        switch (l.kind) {
            case LayerKind::conv:
                pruned.weight = w.weight->take(0, out_set).take(1, in_set);
                if (w.bias) pruned.bias = w.bias->take(0, out_set);
                break;
            case LayerKind::depthwise_conv:
                pruned.weight = w.weight->take(0, in_set);
                if (w.bias) pruned.bias = w.bias->take(0, in_set);
                break;
            case LayerKind::linear: {
                const auto& prod = graph.layers()[graph.producers(idx).front()];
                const auto spatial = static_cast<std::size_t>(prod.out_height * prod.out_width);
                std::vector<std::size_t> features;
                features.reserve(in_set.size() * spatial);
                for (auto c : in_set)
                    for (std::size_t s = 0; s < spatial; ++s) features.push_back(c * spatial + s);
                pruned.weight = w.weight->take(0, out_set).take(1, features);
                if (w.bias) pruned.bias = w.bias->take(0, out_set);
                break;
            }
            case LayerKind::batchnorm:
                pruned.bn = w.bn->take(1, in_set);
                break;
            default:
                break;
        }
        out.entries.emplace(id, std::move(pruned));
    }
    return out;
}

}  // namespace fmprune::surgery
