#include "fmprune/select.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <tuple>

#include "fmprune/error.hpp"
#include "fmprune/util.hpp"

namespace fmprune::select {

double percentile(std::span<const double> values, double p) {
    if (values.empty()) fail(ErrorCode::empty_pool, "percentile of an empty pool");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    if (frac == 0.0 || sorted[lo] == sorted[hi]) return sorted[lo];
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

double dfs_threshold(std::span<const double> pooled, const PruneConfig& config) {
    if (pooled.empty()) fail(ErrorCode::empty_pool, "no channels to derive the diversity threshold from");
    if (config.dfs_mode == DfsMode::mean)
        return std::accumulate(pooled.begin(), pooled.end(), 0.0) / static_cast<double>(pooled.size());
    return percentile(pooled, config.dfs_percentile);
}

double dfs_threshold(std::span<const stats::FeatureStats> all_stats, const PruneConfig& config) {
    std::vector<double> pooled;
    for (const auto& s : all_stats) pooled.insert(pooled.end(), s.m_std.begin(), s.m_std.end());
    return dfs_threshold(pooled, config);
}

DfsResult dfs_select(std::span<const double> m_std, double beta) {
    DfsResult r;
    for (std::size_t j = 0; j < m_std.size(); ++j) (m_std[j] >= beta ? r.kept : r.removed).push_back(j);
    if (r.kept.empty() && !m_std.empty()) {
        const auto best = static_cast<std::size_t>(std::max_element(m_std.begin(), m_std.end()) - m_std.begin());
        r.kept.push_back(best);
        r.removed.erase(std::find(r.removed.begin(), r.removed.end(), best));
        r.floor_rule_applied = true;
    }
    return r;
}

SfsResult sfs_select(const stats::SimilarityMatrix& sim, std::span<const std::size_t> candidates,
                     std::span<const double> m_std, double nu) {
    const std::size_t n = sim.size();
    if (m_std.size() != n) fail(ErrorCode::invalid_argument, "sfs_select: m_std length differs from matrix size");

    std::vector<std::size_t> rows(candidates.begin(), candidates.end());
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    for (auto r : rows)
        if (r >= n) fail(ErrorCode::invalid_argument, "sfs_select: candidate row out of range");

    // Similarities never change, only pairs get withdrawn, so the running
    // maximum is the first still-active pair of a list sorted once.
    struct Pair {
        double value;
        std::size_t a, b;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = i + 1; k < rows.size(); ++k) {
            const double v = sim.at(rows[i], rows[k]);
            if (v > nu) pairs.push_back({v, rows[i], rows[k]});
        }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
        return std::tie(y.value, x.a, x.b) < std::tie(x.value, y.a, y.b);
    });

    std::vector<char> active(n, 0);
    for (auto r : rows) active[r] = 1;

    SfsResult out;
    std::vector<std::size_t> kept_rows;
    for (const auto& pr : pairs) {
        if (!active[pr.a] || !active[pr.b]) continue;
        const std::size_t ref = m_std[pr.b] > m_std[pr.a] ? pr.b : pr.a;
        active[ref] = 0;
        kept_rows.push_back(ref);
        out.references.push_back(sim.channel_ids()[ref]);
        for (auto j : rows) {
            if (!active[j]) continue;
            const double s = sim.at(ref, j);
            if (s > nu) {
                active[j] = 0;
                out.removed.push_back({sim.channel_ids()[j], sim.channel_ids()[ref], s});
            }
        }
    }
    for (auto r : rows)
        if (active[r]) kept_rows.push_back(r);
    for (auto r : kept_rows) out.kept.push_back(sim.channel_ids()[r]);
    std::sort(out.kept.begin(), out.kept.end());
    return out;
}

namespace {

// One independent selection problem: a single prunable layer, or a
// post-addition group whose members share one kept set.
struct Unit {
    std::string name;
    const graph::GroupSpec* group = nullptr;
    std::vector<std::string> sources;  // layers whose activations feed the statistics
    std::vector<std::string> targets;  // layers that receive the kept set
    std::size_t channels = 0;
    std::size_t pool = 0;

    std::vector<double> m_std;
    stats::SimilarityMatrix similarity;
};

void compute_unit_statistics(Unit& unit, const std::map<std::string, tensorio::ActivationSet>& acts) {
    std::vector<double> sim_sum;
    std::vector<double> std_sum(unit.channels, 0.0);
    for (const auto& id : unit.sources) {
        const auto& set = acts.at(id);
        if (set.channels != unit.channels)
            fail(ErrorCode::shape_mismatch, "activations for '" + id + "' have " + std::to_string(set.channels) +
                                                " channels, the graph expects " + std::to_string(unit.channels));
        const auto m_std = stats::compute_m_std(set);
        const auto sim = stats::compute_similarity_matrix(set);
        if (unit.sources.size() == 1) {
            unit.m_std = m_std;
            unit.similarity = sim;
            return;
        }
        for (std::size_t j = 0; j < unit.channels; ++j) std_sum[j] += m_std[j];
        if (sim_sum.empty()) sim_sum.assign(sim.values().size(), 0.0);
        for (std::size_t i = 0; i < sim_sum.size(); ++i) sim_sum[i] += sim.values()[i];
    }
    const double count = static_cast<double>(unit.sources.size());
    for (auto& v : std_sum) v /= count;
    for (auto& v : sim_sum) v /= count;
    std::vector<std::size_t> ids(unit.channels);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    unit.m_std = std::move(std_sum);
    unit.similarity = stats::SimilarityMatrix(unit.name, std::move(ids), std::move(sim_sum));
}

}  // namespace

PruningPlan run_pruning(const graph::ModelGraph& graph, const std::map<std::string, tensorio::ActivationSet>& acts,
                        const PruneConfig& config, unsigned threads) {
    config.validate();
    const bool two_pools = config.grouping == Grouping::residual_two_group;

    PruningPlan plan;
    plan.config = config;
    plan.beta_pools = two_pools ? std::vector<std::string>{"sequential_internal", "post_addition"}
                                : std::vector<std::string>{"global"};

    std::vector<Unit> units;
    for (const auto& g : graph.groups()) {
        if (g.kind != graph::GroupKind::post_addition) continue;
        Unit u;
        u.name = g.name;
        u.group = &g;
        u.channels = static_cast<std::size_t>(graph.layer(g.members.front()).out_channels);
        u.pool = two_pools ? 1 : 0;
        for (const auto& m : g.members) {
            if (acts.count(m)) u.sources.push_back(m);
            const auto kind = graph.layer(m).kind;
            if (kind == graph::LayerKind::conv || kind == graph::LayerKind::linear) u.targets.push_back(m);
        }
        if (u.sources.empty())
            fail(ErrorCode::missing_activations, "no member of post_addition group '" + g.name + "' has activations");
        units.push_back(std::move(u));
    }
    for (const auto& l : graph.layers()) {
        if (!l.prunable || graph.post_addition_group_of(l.id)) continue;
        if (!acts.count(l.id)) fail(ErrorCode::missing_activations, "prunable layer '" + l.id + "' has no activations");
        Unit u;
        u.name = l.id;
        u.sources = {l.id};
        u.targets = {l.id};
        u.channels = static_cast<std::size_t>(l.out_channels);
        units.push_back(std::move(u));
    }

    std::vector<std::exception_ptr> errors(units.size());
    parallel_for(units.size(), threads, [&](std::size_t i) {
        try {
            compute_unit_statistics(units[i], acts);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    // Barrier: beta needs every unit's statistics.
    for (std::size_t pool = 0; pool < plan.beta_pools.size(); ++pool) {
        std::vector<double> pooled;
        for (const auto& u : units)
            if (u.pool == pool) pooled.insert(pooled.end(), u.m_std.begin(), u.m_std.end());
        if (pooled.empty())
            fail(ErrorCode::empty_pool, "no channels in the '" + plan.beta_pools[pool] + "' pool");
        plan.beta.push_back(dfs_threshold(pooled, config));
    }

    std::map<std::string, LayerPlan> by_layer;
    for (const auto& u : units) {
        const auto dfs = dfs_select(u.m_std, plan.beta[u.pool]);
        const auto sfs = sfs_select(u.similarity, dfs.kept, u.m_std, config.nu);
        LayerPlan lp;
        lp.channels = u.channels;
        lp.kept = sfs.kept;
        lp.removed_dfs = dfs.removed;
        lp.removed_sfs = sfs.removed;
        lp.floor_rule_applied = dfs.floor_rule_applied;
        for (const auto& t : u.targets) {
            lp.layer_id = t;
            by_layer[t] = lp;
        }
        if (u.group) plan.groups.push_back({u.group->name, u.group->kind, u.group->members, sfs.kept});
    }
    for (const auto& l : graph.layers())
        if (auto it = by_layer.find(l.id); it != by_layer.end()) plan.layers.push_back(std::move(it->second));
    return plan;
}

}  // namespace fmprune::select
