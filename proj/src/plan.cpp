#include "fmprune/plan.hpp"

#include <algorithm>
#include <cmath>

#include "fmprune/error.hpp"
#include "fmprune/util.hpp"

namespace fmprune {

namespace {

[[noreturn]] void bad_plan(const std::string& what) { fail(ErrorCode::plan_invalid, "plan: " + what); }

template <typename T>
T field(const nlohmann::json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) bad_plan(std::string("missing field '") + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        bad_plan(std::string("field '") + key + "' has the wrong type");
    }
}

}  // namespace

std::string_view to_string(DfsMode mode) { return mode == DfsMode::mean ? "mean" : "percentile"; }
std::string_view to_string(Grouping grouping) {
    return grouping == Grouping::global ? "global" : "residual_two_group";
}

void PruneConfig::validate() const {
    if (!(nu > 0.0 && nu <= 1.0)) fail(ErrorCode::invalid_argument, "nu must lie in (0, 1]");
    if (dfs_mode == DfsMode::percentile && !(dfs_percentile > 0.0 && dfs_percentile < 100.0))
        fail(ErrorCode::invalid_argument, "dfs_percentile must lie in (0, 100)");
    if (topk_k == 0) fail(ErrorCode::invalid_argument, "topk must be a positive integer");
}

const LayerPlan* PruningPlan::find(std::string_view layer_id) const {
    auto it = std::find_if(layers.begin(), layers.end(), [&](const LayerPlan& l) { return l.layer_id == layer_id; });
    return it == layers.end() ? nullptr : &*it;
}

bool PruningPlan::is_identity() const {
    return std::all_of(layers.begin(), layers.end(), [](const LayerPlan& l) { return l.is_identity(); });
}

nlohmann::ordered_json config_to_json(const PruneConfig& config) {
    nlohmann::ordered_json doc;
    doc["dfs_mode"] = to_string(config.dfs_mode);
    doc["dfs_percentile"] = config.dfs_percentile;
    doc["nu"] = config.nu;
    doc["grouping"] = to_string(config.grouping);
    doc["topk_k"] = config.topk_k;
    return doc;
}

PruneConfig config_from_json(const nlohmann::json& doc) {
    PruneConfig c;
    const auto mode = field<std::string>(doc, "dfs_mode");
    if (mode == "mean") c.dfs_mode = DfsMode::mean;
    else if (mode == "percentile") c.dfs_mode = DfsMode::percentile;
    else bad_plan("unknown dfs_mode '" + mode + "'");
    c.dfs_percentile = field<double>(doc, "dfs_percentile");
    c.nu = field<double>(doc, "nu");
    const auto grouping = field<std::string>(doc, "grouping");
    if (grouping == "global") c.grouping = Grouping::global;
    else if (grouping == "residual_two_group") c.grouping = Grouping::residual_two_group;
    else bad_plan("unknown grouping '" + grouping + "'");
    c.topk_k = field<std::size_t>(doc, "topk_k");
    return c;
}

nlohmann::ordered_json plan_to_json(const PruningPlan& plan) {
    nlohmann::ordered_json doc;
    doc["format_version"] = "1";
    doc["config"] = config_to_json(plan.config);
    doc["beta"] = plan.beta;
    doc["beta_pools"] = plan.beta_pools;
    auto& layers = doc["layers"] = nlohmann::ordered_json::array();
    for (const auto& l : plan.layers) {
        nlohmann::ordered_json entry;
        entry["layer_id"] = l.layer_id;
        entry["channels"] = l.channels;
        entry["kept"] = l.kept;
        entry["removed_dfs"] = l.removed_dfs;
        auto& sfs = entry["removed_sfs"] = nlohmann::ordered_json::array();
        for (const auto& r : l.removed_sfs)
            sfs.push_back({{"channel", r.channel}, {"reference", r.reference}, {"similarity", r.similarity}});
        entry["floor_rule_applied"] = l.floor_rule_applied;
        layers.push_back(std::move(entry));
    }
    auto& groups = doc["groups"] = nlohmann::ordered_json::array();
    for (const auto& g : plan.groups) {
        nlohmann::ordered_json entry;
        entry["name"] = g.name;
        entry["kind"] = graph::to_string(g.kind);
        entry["members"] = g.members;
        entry["kept"] = g.kept;
        groups.push_back(std::move(entry));
    }
    return doc;
}

PruningPlan plan_from_json(const nlohmann::json& doc) {
    if (field<std::string>(doc, "format_version") != "1") bad_plan("unsupported format_version");
    PruningPlan plan;
    plan.config = config_from_json(doc.contains("config") ? doc["config"] : nlohmann::json{});
    plan.beta = field<std::vector<double>>(doc, "beta");
    if (doc.contains("beta_pools")) plan.beta_pools = field<std::vector<std::string>>(doc, "beta_pools");
    for (const auto& entry : field<nlohmann::json>(doc, "layers")) {
        LayerPlan l;
        l.layer_id = field<std::string>(entry, "layer_id");
        l.kept = field<std::vector<std::size_t>>(entry, "kept");
        l.removed_dfs = field<std::vector<std::size_t>>(entry, "removed_dfs");
        for (const auto& r : field<nlohmann::json>(entry, "removed_sfs"))
            l.removed_sfs.push_back(
                {field<std::size_t>(r, "channel"), field<std::size_t>(r, "reference"), field<double>(r, "similarity")});
        l.floor_rule_applied = field<bool>(entry, "floor_rule_applied");
        l.channels = entry.contains("channels") ? field<std::size_t>(entry, "channels")
                                                : l.kept.size() + l.removed_dfs.size() + l.removed_sfs.size();
        plan.layers.push_back(std::move(l));
    }
    if (doc.contains("groups")) {
        for (const auto& entry : doc["groups"]) {
            GroupPlan g;
            g.name = field<std::string>(entry, "name");
            if (entry.contains("kind")) {
                auto kind = graph::parse_group_kind(field<std::string>(entry, "kind"));
                if (!kind) bad_plan("unknown group kind for '" + g.name + "'");
                g.kind = *kind;
            }
            g.members = field<std::vector<std::string>>(entry, "members");
            g.kept = field<std::vector<std::size_t>>(entry, "kept");
            plan.groups.push_back(std::move(g));
        }
    }
    return plan;
}

PruningPlan load_plan(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        return plan_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        bad_plan(path.string() + ": " + e.what());
    }
}

void save_plan(const std::filesystem::path& path, const PruningPlan& plan) {
    write_file_atomic(path, plan_to_json(plan).dump(2) + "\n");
}

}  // namespace fmprune
