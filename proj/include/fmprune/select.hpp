#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fmprune/graph.hpp"
#include "fmprune/plan.hpp"
#include "fmprune/stats.hpp"
#include "fmprune/tensorio.hpp"

namespace fmprune::select {

// Linear interpolation between order statistics at rank p/100 * (n - 1).
double percentile(std::span<const double> values, double p);

// Diversity threshold beta over one pool of M-std values. Throws EmptyPool.
double dfs_threshold(std::span<const double> pooled_m_std, const PruneConfig& config);
double dfs_threshold(std::span<const stats::FeatureStats> all_stats, const PruneConfig& config);

struct DfsResult {
    std::vector<std::size_t> kept;
    std::vector<std::size_t> removed;
    bool floor_rule_applied = false;
};

// Keeps channels with m_std >= beta. When nothing survives, the channel with
// the largest m_std (lowest index on ties) is kept and the result flagged.
DfsResult dfs_select(std::span<const double> m_std, double beta);
inline DfsResult dfs_select(const stats::FeatureStats& stats, double beta) { return dfs_select(stats.m_std, beta); }

struct SfsResult {
    std::vector<std::size_t> kept;     // ascending channel ids
    std::vector<SfsRemoval> removed;   // in removal order
    std::vector<std::size_t> references;  // in selection order
};

// Greedy redundancy removal over the rows `candidates` of `sim`:
// repeatedly take the most similar surviving pair (ties: smallest (a, b)
// with a < b); if its similarity exceeds nu, the member with the larger
// m_std (lower row on ties) becomes a reference and every surviving channel
// more similar than nu to it is dropped. References and dropped channels
// leave the candidate pool. `m_std` is indexed by row of `sim`; reported
// channels are sim.channel_ids() values.
SfsResult sfs_select(const stats::SimilarityMatrix& sim, std::span<const std::size_t> candidates,
                     std::span<const double> m_std, double nu);

// Whole-network selection: M-std for every prunable layer (post-addition
// groups aggregated by averaging their members' statistics), one beta per
// pool, then DFS followed by SFS per layer or group.
PruningPlan run_pruning(const graph::ModelGraph& graph, const std::map<std::string, tensorio::ActivationSet>& acts,
                        const PruneConfig& config, unsigned threads = 1);

}  // namespace fmprune::select
