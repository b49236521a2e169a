#include "fmprune/graph.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>

#include "fmprune/error.hpp"
#include "fmprune/plan.hpp"
#include "fmprune/util.hpp"

namespace fmprune::graph {

namespace {

[[noreturn]] void schema_error(const std::string& what) { fail(ErrorCode::schema_error, "graph: " + what); }

constexpr std::pair<LayerKind, std::string_view> kKindNames[] = {
    {LayerKind::input, "input"},       {LayerKind::conv, "conv"},
    {LayerKind::depthwise_conv, "depthwise_conv"}, {LayerKind::batchnorm, "batchnorm"},
    {LayerKind::activation, "activation"}, {LayerKind::pool, "pool"},
    {LayerKind::linear, "linear"},     {LayerKind::add_join, "add_join"},
    {LayerKind::output, "output"},
};

bool has_kernel(LayerKind k) {
    return k == LayerKind::conv || k == LayerKind::depthwise_conv || k == LayerKind::pool;
}

std::int64_t conv_extent(std::int64_t in, std::int64_t kernel, std::int64_t stride, std::int64_t pad) {
    const std::int64_t span = in + 2 * pad - kernel;
    return span < 0 ? 0 : span / stride + 1;
}

}  // namespace

std::string_view to_string(LayerKind kind) {
    for (const auto& [k, name] : kKindNames)
        if (k == kind) return name;
    return "unknown";
}

std::string_view to_string(GroupKind kind) {
    return kind == GroupKind::sequential_internal ? "sequential_internal" : "post_addition";
}

std::optional<LayerKind> parse_layer_kind(std::string_view text) {
    for (const auto& [k, name] : kKindNames)
        if (name == text) return k;
    return std::nullopt;
}

std::optional<GroupKind> parse_group_kind(std::string_view text) {
    if (text == "sequential_internal") return GroupKind::sequential_internal;
    if (text == "post_addition") return GroupKind::post_addition;
    return std::nullopt;
}

bool owns_channels(LayerKind kind) {
    return kind == LayerKind::input || kind == LayerKind::conv || kind == LayerKind::linear;
}

ModelGraph::ModelGraph(InputShape input, std::vector<Layer> layers,
                       std::vector<std::pair<std::string, std::string>> edges, std::vector<GroupSpec> groups)
    : input_(input), layers_(std::move(layers)), edges_(std::move(edges)), groups_(std::move(groups)) {
    validate_and_resolve();
}

void ModelGraph::validate_and_resolve() {
    if (input_.channels < 1 || input_.height < 1 || input_.width < 1)
        schema_error("input channels/height/width must be >= 1");

    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (layers_[i].id.empty()) schema_error("layer ids must be nonempty");
        if (!index_.emplace(layers_[i].id, i).second) schema_error("duplicate layer id '" + layers_[i].id + "'");
    }

    producers_.assign(layers_.size(), {});
    consumers_.assign(layers_.size(), {});
    std::set<std::pair<std::size_t, std::size_t>> seen_edges;
    for (const auto& [from, to] : edges_) {
        auto a = find(from), b = find(to);
        if (!a) schema_error("edge references unknown layer '" + from + "'");
        if (!b) schema_error("edge references unknown layer '" + to + "'");
        if (*a == *b) fail(ErrorCode::cycle_detected, "graph: self-loop on '" + from + "'");
        if (!seen_edges.insert({*a, *b}).second) schema_error("duplicate edge " + from + " -> " + to);
        producers_[*b].push_back(*a);
        consumers_[*a].push_back(*b);
    }

    // Kahn's algorithm, smallest declaration index first.
    std::vector<std::size_t> indegree(layers_.size());
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        indegree[i] = producers_[i].size();
        if (indegree[i] == 0) ready.push(i);
    }
    topo_.clear();
    while (!ready.empty()) {
        const auto i = ready.top();
        ready.pop();
        topo_.push_back(i);
        for (auto c : consumers_[i])
            if (--indegree[c] == 0) ready.push(c);
    }
    if (topo_.size() != layers_.size()) fail(ErrorCode::cycle_detected, "graph: the layer graph contains a cycle");

    std::size_t inputs = 0;
    for (auto i : topo_) {
        Layer& l = layers_[i];
        const auto& prods = producers_[i];
        auto mismatch = [&](const std::string& what) {
            fail(ErrorCode::channel_mismatch, "graph: layer '" + l.id + "': " + what);
        };
        const std::size_t want_producers = l.kind == LayerKind::input ? 0 : 1;
        if (l.kind == LayerKind::add_join) {
            if (prods.size() < 2) schema_error("add_join '" + l.id + "' needs at least two producers");
        } else if (prods.size() != want_producers) {
            schema_error("layer '" + l.id + "' (" + std::string(to_string(l.kind)) + ") needs exactly " +
                         std::to_string(want_producers) + " producer(s), has " + std::to_string(prods.size()));
        }
        if (has_kernel(l.kind) && (l.kernel < 1 || l.stride < 1 || l.padding < 0))
            schema_error("layer '" + l.id + "' has an invalid kernel/stride/padding");
        if (l.prunable && l.kind != LayerKind::conv && l.kind != LayerKind::linear)
            schema_error("layer '" + l.id + "': only conv and linear layers can be prunable");

        if (l.kind == LayerKind::input) {
            ++inputs;
            if (l.out_channels != 0 && l.out_channels != input_.channels) mismatch("out differs from input.channels");
            l.in_channels = l.out_channels = input_.channels;
            l.out_height = input_.height;
            l.out_width = input_.width;
            continue;
        }

        const Layer& first = layers_[prods.front()];
        const std::int64_t prod_c = first.out_channels;
        const std::int64_t h = first.out_height, w = first.out_width;
        std::int64_t expected_in = prod_c;
        if (l.kind == LayerKind::linear) expected_in = prod_c * h * w;
        if (l.in_channels != 0 && l.in_channels != expected_in)
            mismatch("in=" + std::to_string(l.in_channels) + " but producers supply " + std::to_string(expected_in));
        l.in_channels = expected_in;

        switch (l.kind) {
            case LayerKind::conv:
                if (l.out_channels < 1) mismatch("conv needs out >= 1");
                l.out_height = conv_extent(h, l.kernel, l.stride, l.padding);
                l.out_width = conv_extent(w, l.kernel, l.stride, l.padding);
                break;
            case LayerKind::depthwise_conv:
                if (l.out_channels != 0 && l.out_channels != l.in_channels) mismatch("depthwise conv needs out == in");
                l.out_channels = l.in_channels;
                l.out_height = conv_extent(h, l.kernel, l.stride, l.padding);
                l.out_width = conv_extent(w, l.kernel, l.stride, l.padding);
                break;
            case LayerKind::pool:
                if (l.out_channels != 0 && l.out_channels != l.in_channels) mismatch("pool needs out == in");
                l.out_channels = l.in_channels;
                if (l.global_pool) {
                    l.out_height = l.out_width = 1;
                } else {
                    l.out_height = conv_extent(h, l.kernel, l.stride, l.padding);
                    l.out_width = conv_extent(w, l.kernel, l.stride, l.padding);
                }
                break;
            case LayerKind::linear:
                if (l.out_channels < 1) mismatch("linear needs out >= 1");
                l.out_height = l.out_width = 1;
                break;
            case LayerKind::add_join:
                for (auto p : prods) {
                    const Layer& other = layers_[p];
                    if (other.out_channels != prod_c)
                        mismatch("add_join producers disagree on channels (" + std::to_string(prod_c) + " vs " +
                                 std::to_string(other.out_channels) + ")");
                    if (other.out_height != h || other.out_width != w)
                        mismatch("add_join producers disagree on spatial size");
                }
                [[fallthrough]];
            default:  // batchnorm, activation, output
                if (l.out_channels != 0 && l.out_channels != l.in_channels)
                    mismatch(std::string(to_string(l.kind)) + " needs out == in");
                l.out_channels = l.in_channels;
                l.out_height = h;
                l.out_width = w;
                break;
        }
        if (l.out_height < 1 || l.out_width < 1) schema_error("layer '" + l.id + "' produces an empty spatial map");
    }
    if (inputs != 1) schema_error("graph needs exactly one input layer");

    std::set<std::string> group_names;
    std::set<std::string> grouped;
    for (const auto& g : groups_) {
        if (!group_names.insert(g.name).second) schema_error("duplicate group name '" + g.name + "'");
        if (g.members.empty()) schema_error("group '" + g.name + "' has no members");
        for (const auto& m : g.members) {
            auto idx = find(m);
            if (!idx) schema_error("group '" + g.name + "' references unknown layer '" + m + "'");
            if (!grouped.insert(m).second) schema_error("layer '" + m + "' belongs to more than one group");
            const Layer& l = layers_[*idx];
            if (g.kind == GroupKind::sequential_internal && !(l.prunable && owns_channels(l.kind)))
                schema_error("sequential_internal group '" + g.name + "' member '" + m +
                             "' must be a prunable conv or linear layer");
            if (g.kind == GroupKind::post_addition) {
                if (l.kind == LayerKind::input)
                    schema_error("post_addition group '" + g.name + "' cannot contain the input layer");
                if (l.out_channels != layer(g.members.front()).out_channels)
                    fail(ErrorCode::group_inconsistency, "graph: post_addition group '" + g.name +
                                                             "' members have unequal channel counts");
            }
        }
    }
}

std::optional<std::size_t> ModelGraph::find(std::string_view id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t ModelGraph::index_of(std::string_view id) const {
    auto idx = find(id);
    if (!idx) schema_error("unknown layer '" + std::string(id) + "'");
    return *idx;
}

std::pair<std::int64_t, std::int64_t> ModelGraph::input_spatial(std::size_t layer) const {
    if (producers_[layer].empty()) return {input_.height, input_.width};
    const Layer& p = layers_[producers_[layer].front()];
    return {p.out_height, p.out_width};
}

const GroupSpec* ModelGraph::post_addition_group_of(std::string_view id) const {
    for (const auto& g : groups_)
        if (g.kind == GroupKind::post_addition && std::find(g.members.begin(), g.members.end(), id) != g.members.end())
            return &g;
    return nullptr;
}

bool ModelGraph::operator==(const ModelGraph& other) const { return graph_to_json(*this) == graph_to_json(other); }

ModelGraph parse_graph(const nlohmann::json& doc) {
    if (!doc.is_object()) schema_error("document must be an object");
    static const std::set<std::string> top_keys = {"format_version", "input", "layers", "edges", "groups"};
    for (const auto& [key, _] : doc.items())
        if (!top_keys.count(key)) schema_error("unknown top-level key '" + key + "'");
    if (!doc.contains("format_version") || doc["format_version"] != "1") schema_error("format_version must be \"1\"");

    auto int_field = [](const nlohmann::json& obj, const char* key, const std::string& where) -> std::int64_t {
        if (!obj.contains(key)) schema_error(where + ": missing '" + key + "'");
        if (!obj[key].is_number_integer()) schema_error(where + ": '" + key + "' must be an integer");
        return obj[key].get<std::int64_t>();
    };

    if (!doc.contains("input") || !doc["input"].is_object()) schema_error("missing input object");
    const auto& in = doc["input"];
    InputShape input{int_field(in, "channels", "input"), int_field(in, "height", "input"),
                     int_field(in, "width", "input")};

    if (!doc.contains("layers") || !doc["layers"].is_array()) schema_error("missing layers array");
    static const std::set<std::string> layer_keys = {"id",   "kind",     "in",     "out",      "kernel", "stride",
                                                     "padding", "bias", "prunable", "global", "metadata"};
    std::vector<Layer> layers;
    for (const auto& j : doc["layers"]) {
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) schema_error("every layer needs a string id");
        Layer l;
        l.id = j["id"].get<std::string>();
        const std::string where = "layer '" + l.id + "'";
        for (const auto& [key, _] : j.items())
            if (!layer_keys.count(key)) schema_error(where + ": unknown key '" + key + "'");
        if (!j.contains("kind") || !j["kind"].is_string()) schema_error(where + ": missing kind");
        auto kind = parse_layer_kind(j["kind"].get<std::string>());
        if (!kind) schema_error(where + ": unsupported kind '" + j["kind"].get<std::string>() + "'");
        l.kind = *kind;
        if (j.contains("in")) l.in_channels = int_field(j, "in", where);
        if (j.contains("out")) l.out_channels = int_field(j, "out", where);
        if (l.in_channels < 0 || l.out_channels < 0) schema_error(where + ": channel counts must be positive");
        if (l.kind == LayerKind::conv || l.kind == LayerKind::depthwise_conv) {
            l.kernel = int_field(j, "kernel", where);
            l.padding = l.kernel / 2;
        } else if (l.kind == LayerKind::pool) {
            l.kernel = j.contains("kernel") ? int_field(j, "kernel", where) : 2;
        } else if (j.contains("kernel") || j.contains("stride") || j.contains("padding")) {
            schema_error(where + ": kernel/stride/padding only apply to conv and pool layers");
        }
        l.stride = j.contains("stride") ? int_field(j, "stride", where) : (l.kind == LayerKind::pool ? l.kernel : 1);
        if (j.contains("padding")) l.padding = int_field(j, "padding", where);
        auto bool_field = [&](const char* key) {
            if (!j.contains(key)) return false;
            if (!j[key].is_boolean()) schema_error(where + ": '" + key + "' must be a boolean");
            return j[key].get<bool>();
        };
        l.bias = bool_field("bias");
        l.prunable = bool_field("prunable");
        l.global_pool = bool_field("global");
        if (l.global_pool && l.kind != LayerKind::pool) schema_error(where + ": 'global' only applies to pool layers");
        if (l.bias && !(l.kind == LayerKind::conv || l.kind == LayerKind::depthwise_conv || l.kind == LayerKind::linear))
            schema_error(where + ": 'bias' only applies to conv and linear layers");
        if (j.contains("metadata")) l.metadata = j["metadata"];
        layers.push_back(std::move(l));
    }

    std::vector<std::pair<std::string, std::string>> edges;
    if (!doc.contains("edges") || !doc["edges"].is_array()) schema_error("missing edges array");
    for (const auto& e : doc["edges"]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
            schema_error("edges must be [\"producer\", \"consumer\"] pairs");
        edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }

    std::vector<GroupSpec> groups;
    if (doc.contains("groups")) {
        if (!doc["groups"].is_array()) schema_error("groups must be an array");
        for (const auto& g : doc["groups"]) {
            if (!g.is_object() || !g.contains("name") || !g.contains("kind") || !g.contains("members") ||
                !g["name"].is_string() || !g["kind"].is_string() || !g["members"].is_array())
                schema_error("each group needs name, kind and members");
            auto kind = parse_group_kind(g["kind"].get<std::string>());
            if (!kind) schema_error("unknown group kind '" + g["kind"].get<std::string>() + "'");
            GroupSpec spec{g["name"].get<std::string>(), *kind, {}};
            for (const auto& m : g["members"]) {
                if (!m.is_string()) schema_error("group members must be layer ids");
                spec.members.push_back(m.get<std::string>());
            }
            groups.push_back(std::move(spec));
        }
    }
    return ModelGraph(input, std::move(layers), std::move(edges), std::move(groups));
}

ModelGraph load_graph(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        return parse_graph(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        schema_error(path.string() + ": " + e.what());
    }
}

nlohmann::ordered_json graph_to_json(const ModelGraph& graph) {
    nlohmann::ordered_json doc;
    doc["format_version"] = "1";
    doc["input"] = {{"channels", graph.input().channels},
                    {"height", graph.input().height},
                    {"width", graph.input().width}};
    auto& layers = doc["layers"] = nlohmann::ordered_json::array();
    for (const auto& l : graph.layers()) {
        nlohmann::ordered_json j;
        j["id"] = l.id;
        j["kind"] = to_string(l.kind);
        j["in"] = l.in_channels;
        j["out"] = l.out_channels;
        if (has_kernel(l.kind)) {
            j["kernel"] = l.kernel;
            j["stride"] = l.stride;
            j["padding"] = l.padding;
        }
        if (l.bias) j["bias"] = true;
        if (l.prunable) j["prunable"] = true;
        if (l.global_pool) j["global"] = true;
        if (!l.metadata.is_null()) j["metadata"] = l.metadata;
        layers.push_back(std::move(j));
    }
    auto& edges = doc["edges"] = nlohmann::ordered_json::array();
    for (const auto& [a, b] : graph.edges()) edges.push_back({a, b});
    auto& groups = doc["groups"] = nlohmann::ordered_json::array();
    for (const auto& g : graph.groups())
        groups.push_back({{"name", g.name}, {"kind", to_string(g.kind)}, {"members", g.members}});
    return doc;
}

std::int64_t layer_params(const ModelGraph& graph, std::size_t index) {
    const Layer& l = graph.layers()[index];
    const std::int64_t k2 = l.kernel * l.kernel;
    switch (l.kind) {
        case LayerKind::conv:
            return l.out_channels * l.in_channels * k2 + (l.bias ? l.out_channels : 0);
        case LayerKind::depthwise_conv:
            return l.in_channels * k2 + (l.bias ? l.out_channels : 0);
        case LayerKind::batchnorm:
            return 2 * l.out_channels;
        case LayerKind::linear:
            return l.in_channels * l.out_channels + (l.bias ? l.out_channels : 0);
        default:
            return 0;
    }
}

std::int64_t layer_flops(const ModelGraph& graph, std::size_t index, const AccountingOptions& options) {
    const Layer& l = graph.layers()[index];
    const std::int64_t k2 = l.kernel * l.kernel;
    const std::int64_t out_hw = l.out_height * l.out_width;
    switch (l.kind) {
        case LayerKind::conv:
            return 2 * l.out_channels * out_hw * l.in_channels * k2;
        case LayerKind::depthwise_conv:
            return 2 * l.out_channels * out_hw * k2;
        case LayerKind::linear:
            return 2 * l.in_channels * l.out_channels;
        case LayerKind::add_join:
            return static_cast<std::int64_t>(graph.producers(index).size() - 1) * l.out_channels * out_hw;
        case LayerKind::batchnorm:
            return 2 * l.out_channels * out_hw;
        case LayerKind::pool:
            if (!options.count_pool_and_activation) return 0;
            if (l.global_pool) {
                auto [h, w] = graph.input_spatial(index);
                return l.out_channels * h * w;
            }
            return l.out_channels * out_hw * k2;
        case LayerKind::activation:
            return options.count_pool_and_activation ? l.out_channels * out_hw : 0;
        default:
            return 0;
    }
}

std::int64_t count_params(const ModelGraph& graph) {
    std::int64_t total = 0;
    for (std::size_t i = 0; i < graph.layers().size(); ++i) total += layer_params(graph, i);
    return total;
}

std::int64_t count_flops(const ModelGraph& graph, const AccountingOptions& options) {
    std::int64_t total = 0;
    for (std::size_t i = 0; i < graph.layers().size(); ++i) total += layer_flops(graph, i, options);
    return total;
}

std::vector<std::vector<std::size_t>> propagate_channels(const ModelGraph& graph, const PruningPlan& plan) {
    const auto& layers = graph.layers();
    std::vector<const LayerPlan*> by_layer(layers.size(), nullptr);
    for (const auto& lp : plan.layers) {
        auto bad = [&](const std::string& what) {
            fail(ErrorCode::plan_invalid, "plan: layer '" + lp.layer_id + "': " + what);
        };
        auto idx = graph.find(lp.layer_id);
        if (!idx) bad("not present in the graph");
        const Layer& l = layers[*idx];
        if (by_layer[*idx]) bad("listed twice");
        if (l.kind != LayerKind::conv && l.kind != LayerKind::linear) bad("only conv and linear layers can be pruned");
        if (!l.prunable && !graph.post_addition_group_of(l.id)) bad("layer is not prunable");
        if (lp.channels != static_cast<std::size_t>(l.out_channels))
            bad("plan expects " + std::to_string(lp.channels) + " channels, graph has " +
                std::to_string(l.out_channels));
        if (lp.kept.empty())
            fail(ErrorCode::dangling_layer, "plan: layer '" + lp.layer_id + "' keeps no channels");
        for (std::size_t k = 0; k < lp.kept.size(); ++k) {
            if (lp.kept[k] >= lp.channels) bad("kept index out of range");
            if (k && lp.kept[k] <= lp.kept[k - 1]) bad("kept indices must be strictly ascending");
        }
        by_layer[*idx] = &lp;
    }

    std::vector<std::vector<std::size_t>> sets(layers.size());
    auto all = [](std::int64_t n) {
        std::vector<std::size_t> v(static_cast<std::size_t>(n));
        std::iota(v.begin(), v.end(), std::size_t{0});
        return v;
    };
    for (auto i : graph.topo_order()) {
        const Layer& l = layers[i];
        const auto& prods = graph.producers(i);
        if (l.kind == LayerKind::input || l.kind == LayerKind::conv || l.kind == LayerKind::linear) {
            sets[i] = by_layer[i] ? by_layer[i]->kept : all(l.out_channels);
        } else {
            sets[i] = sets[prods.front()];
            for (auto p : prods)
                if (sets[p] != sets[i])
                    fail(ErrorCode::group_inconsistency, "plan: producers of '" + l.id +
                                                             "' keep different channel sets ('" +
                                                             layers[prods.front()].id + "' vs '" + layers[p].id + "')");
        }
        if (sets[i].empty()) fail(ErrorCode::dangling_layer, "plan: layer '" + l.id + "' is left with no channels");
    }

    for (const auto& g : plan.groups) {
        for (const auto& m : g.members) {
            auto idx = graph.find(m);
            if (!idx) fail(ErrorCode::plan_invalid, "plan: group '" + g.name + "' references unknown layer '" + m + "'");
            if (sets[*idx] != g.kept)
                fail(ErrorCode::group_inconsistency,
                     "plan: member '" + m + "' of group '" + g.name + "' does not carry the group's kept set");
        }
    }
    return sets;
}

ModelGraph apply_plan_shapes(const ModelGraph& graph, const PruningPlan& plan) {
    const auto sets = propagate_channels(graph, plan);
    std::vector<Layer> layers = graph.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        Layer& l = layers[i];
        if (l.kind == LayerKind::input) continue;
        const auto p = graph.producers(i).front();
        const auto produced = static_cast<std::int64_t>(sets[p].size());
        if (l.kind == LayerKind::linear) {
            const Layer& prod = graph.layers()[p];
            l.in_channels = produced * prod.out_height * prod.out_width;
        } else {
            l.in_channels = produced;
        }
        l.out_channels = static_cast<std::int64_t>(sets[i].size());
    }
    return ModelGraph(graph.input(), std::move(layers), graph.edges(), graph.groups());
}

double ReductionReport::params_drop_pct() const {
    return params_before == 0 ? 0.0
                              : (1.0 - static_cast<double>(params_after) / static_cast<double>(params_before)) * 100.0;
}

double ReductionReport::flops_drop_pct() const {
    return flops_before == 0 ? 0.0
                             : (1.0 - static_cast<double>(flops_after) / static_cast<double>(flops_before)) * 100.0;
}

ReductionReport reduction_report(const ModelGraph& original, const ModelGraph& pruned,
                                 const AccountingOptions& options) {
    return {count_params(original), count_params(pruned), count_flops(original, options),
            count_flops(pruned, options)};
}

std::string reduction_report_csv(const ReductionReport& r) {
    std::string out = "# " + std::string(kFlopsConvention) + "\n";
    out += "metric,before,after,drop_pct\n";
    out += "params," + std::to_string(r.params_before) + "," + std::to_string(r.params_after) + "," +
           format_pct(r.params_drop_pct()) + "\n";
    out += "flops," + std::to_string(r.flops_before) + "," + std::to_string(r.flops_after) + "," +
           format_pct(r.flops_drop_pct()) + "\n";
    return out;
}

nlohmann::ordered_json reduction_report_json(const ReductionReport& r) {
    nlohmann::ordered_json doc;
    doc["flops_convention"] = kFlopsConvention;
    doc["params"] = {{"before", r.params_before},
                     {"after", r.params_after},
                     {"drop_pct", format_pct(r.params_drop_pct())}};
    doc["flops"] = {{"before", r.flops_before},
                    {"after", r.flops_after},
                    {"drop_pct", format_pct(r.flops_drop_pct())}};
    return doc;
}

}  // namespace fmprune::graph
