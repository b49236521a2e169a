#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace fmprune {
struct PruningPlan;
}

namespace fmprune::graph {

enum class LayerKind { input, conv, depthwise_conv, batchnorm, activation, pool, linear, add_join, output };
enum class GroupKind { sequential_internal, post_addition };

std::string_view to_string(LayerKind kind);
std::string_view to_string(GroupKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view text);
std::optional<GroupKind> parse_group_kind(std::string_view text);

// Layers that create a fresh set of output channels (filters). Every other
// kind forwards the channel set of its producer(s).
bool owns_channels(LayerKind kind);

struct InputShape {
    std::int64_t channels = 0;
    std::int64_t height = 0;
    std::int64_t width = 0;
};

struct Layer {
    std::string id;
    LayerKind kind = LayerKind::conv;
    std::int64_t in_channels = 0;
    std::int64_t out_channels = 0;
    std::int64_t kernel = 1;
    std::int64_t stride = 1;
    std::int64_t padding = 0;
    bool bias = false;
    bool prunable = false;
    bool global_pool = false;
    nlohmann::json metadata;

    // resolved by ModelGraph
    std::int64_t out_height = 0;
    std::int64_t out_width = 0;
};

struct GroupSpec {
    std::string name;
    GroupKind kind = GroupKind::sequential_internal;
    std::vector<std::string> members;
};

// Validated, immutable DAG of layers.
class ModelGraph {
public:
    // Resolves spatial shapes and checks every structural invariant; throws
    // SchemaError / ChannelMismatch / CycleDetected.
    ModelGraph(InputShape input, std::vector<Layer> layers, std::vector<std::pair<std::string, std::string>> edges,
               std::vector<GroupSpec> groups);

    const InputShape& input() const noexcept { return input_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    const std::vector<std::pair<std::string, std::string>>& edges() const noexcept { return edges_; }
    const std::vector<GroupSpec>& groups() const noexcept { return groups_; }

    std::optional<std::size_t> find(std::string_view id) const;
    std::size_t index_of(std::string_view id) const;  // throws SchemaError
    const Layer& layer(std::string_view id) const { return layers_[index_of(id)]; }

    const std::vector<std::size_t>& producers(std::size_t layer) const { return producers_[layer]; }
    const std::vector<std::size_t>& consumers(std::size_t layer) const { return consumers_[layer]; }
    const std::vector<std::size_t>& topo_order() const noexcept { return topo_; }

    // Spatial size (H, W) of the tensor a layer consumes.
    std::pair<std::int64_t, std::int64_t> input_spatial(std::size_t layer) const;

    // Post-addition group containing the layer, if any.
    const GroupSpec* post_addition_group_of(std::string_view id) const;

    bool operator==(const ModelGraph& other) const;

private:
    void validate_and_resolve();

    InputShape input_;
    std::vector<Layer> layers_;
    std::vector<std::pair<std::string, std::string>> edges_;
    std::vector<GroupSpec> groups_;

    std::map<std::string, std::size_t, std::less<>> index_;
    std::vector<std::vector<std::size_t>> producers_;
    std::vector<std::vector<std::size_t>> consumers_;
    std::vector<std::size_t> topo_;
};

ModelGraph parse_graph(const nlohmann::json& doc);
ModelGraph load_graph(const std::filesystem::path& path);
nlohmann::ordered_json graph_to_json(const ModelGraph& graph);

struct AccountingOptions {
    // Pooling and activation layers are free unless this is set.
    bool count_pool_and_activation = false;
};

std::int64_t layer_params(const ModelGraph& graph, std::size_t layer);
std::int64_t layer_flops(const ModelGraph& graph, std::size_t layer, const AccountingOptions& options = {});
std::int64_t count_params(const ModelGraph& graph);
std::int64_t count_flops(const ModelGraph& graph, const AccountingOptions& options = {});

// Original channel indices surviving at the output of every layer (indexed
// like graph.layers()). Throws PlanInvalid, GroupInconsistency, DanglingLayer.
std::vector<std::vector<std::size_t>> propagate_channels(const ModelGraph& graph, const PruningPlan& plan);

ModelGraph apply_plan_shapes(const ModelGraph& graph, const PruningPlan& plan);

struct ReductionReport {
    std::int64_t params_before = 0;
    std::int64_t params_after = 0;
    std::int64_t flops_before = 0;
    std::int64_t flops_after = 0;

    double params_drop_pct() const;
    double flops_drop_pct() const;
};

inline constexpr std::string_view kFlopsConvention = "FLOPs counted as 2 per multiply-accumulate";

ReductionReport reduction_report(const ModelGraph& original, const ModelGraph& pruned,
                                 const AccountingOptions& options = {});
std::string reduction_report_csv(const ReductionReport& report);
nlohmann::ordered_json reduction_report_json(const ReductionReport& report);

}  // namespace fmprune::graph
