#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fmprune/graph.hpp"

namespace fmprune {

enum class DfsMode { mean, percentile };
enum class Grouping { global, residual_two_group };

std::string_view to_string(DfsMode mode);
std::string_view to_string(Grouping grouping);

struct PruneConfig {
    DfsMode dfs_mode = DfsMode::percentile;
    double dfs_percentile = 40.0;  // in (0, 100)
    double nu = 0.85;              // SFS similarity threshold, in (0, 1]
    Grouping grouping = Grouping::global;
    std::size_t topk_k = 5;

    // Throws InvalidArgument.
    void validate() const;
};

struct SfsRemoval {
    std::size_t channel = 0;
    std::size_t reference = 0;
    double similarity = 0.0;

    bool operator==(const SfsRemoval&) const = default;
};

struct LayerPlan {
    std::string layer_id;
    std::size_t channels = 0;  // before pruning
    std::vector<std::size_t> kept;
    std::vector<std::size_t> removed_dfs;
    std::vector<SfsRemoval> removed_sfs;
    bool floor_rule_applied = false;

    bool is_identity() const { return kept.size() == channels; }
    bool operator==(const LayerPlan&) const = default;
};

struct GroupPlan {
    std::string name;
    graph::GroupKind kind = graph::GroupKind::post_addition;
    std::vector<std::string> members;
    std::vector<std::size_t> kept;

    bool operator==(const GroupPlan&) const = default;
};

struct PruningPlan {
    PruneConfig config;
    std::vector<double> beta;
    std::vector<std::string> beta_pools;  // label per beta entry
    std::vector<LayerPlan> layers;
    std::vector<GroupPlan> groups;

    const LayerPlan* find(std::string_view layer_id) const;
    bool is_identity() const;
};

nlohmann::ordered_json config_to_json(const PruneConfig& config);
PruneConfig config_from_json(const nlohmann::json& doc);

nlohmann::ordered_json plan_to_json(const PruningPlan& plan);
PruningPlan plan_from_json(const nlohmann::json& doc);
PruningPlan load_plan(const std::filesystem::path& path);
void save_plan(const std::filesystem::path& path, const PruningPlan& plan);

}  // namespace fmprune
