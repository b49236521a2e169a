#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fmprune/tensorio.hpp"

namespace fmprune::stats {

// Per-channel statistics of one layer's feature maps.
struct FeatureStats {
    std::string layer_id;
    std::vector<double> m_std;
    std::vector<double> m_corr;
    std::optional<std::vector<double>> topk_corr;
    std::size_t k = 0;  // meaningful only when topk_corr is present

    std::size_t channels() const noexcept { return m_std.size(); }
};

// Sample-averaged absolute cosine similarity between the channels of a layer.
// `channel_ids` maps local rows back to the layer's original channel indices.
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;
    SimilarityMatrix(std::string layer_id, std::vector<std::size_t> channel_ids, std::vector<double> values);

    const std::string& layer_id() const noexcept { return layer_id_; }
    const std::vector<std::size_t>& channel_ids() const noexcept { return channel_ids_; }
    std::size_t size() const noexcept { return channel_ids_.size(); }
    double at(std::size_t row, std::size_t col) const { return values_[row * size() + col]; }
    const std::vector<double>& values() const noexcept { return values_; }

    // Sub-matrix over the given local rows, in the given order.
    SimilarityMatrix restrict_to(std::span<const std::size_t> rows) const;

private:
    std::string layer_id_;
    std::vector<std::size_t> channel_ids_;
    std::vector<double> values_;
};

// Mean over samples of the per-sample spatial sample standard deviation.
// Throws DegenerateSpatial for 1x1 maps.
std::vector<double> compute_m_std(const tensorio::ActivationSet& acts);

// |cos| is taken as 0 for any pair involving an all-zero map, including the
// diagonal entry of that channel. Rows may be computed on `threads` workers;
// each entry is accumulated in a fixed order, so the result does not depend
// on the thread count.
SimilarityMatrix compute_similarity_matrix(const tensorio::ActivationSet& acts, unsigned threads = 1);

// Row mean of the similarity matrix, self-pair included. Each row is summed
// in ascending order, so relabeling channels permutes the result exactly.
std::vector<double> compute_m_corr(const SimilarityMatrix& sim);

// Mean of the k largest off-diagonal entries of each row. Throws KTooLarge
// unless 1 <= k <= N - 1.
std::vector<double> compute_topk_corr(const SimilarityMatrix& sim, std::size_t k);

struct LayerStatistics {
    FeatureStats stats;
    SimilarityMatrix similarity;
};

// All statistics for one layer. Top-k uses min(k, N - 1) partners and is
// omitted for single-channel layers.
LayerStatistics compute_layer_statistics(const tensorio::ActivationSet& acts, std::size_t k, unsigned threads = 1);

double pearson(std::span<const double> x, std::span<const double> y);

// CSV with header layer_id,channel,m_std,m_corr,topk_corr. After each layer's
// channel rows comes a summary row (channel "ALL", column means). The final
// row GLOBAL_PEARSON,ALL holds the Pearson correlation of every column with
// m_std across all channels of all layers.
std::string stats_report_csv(std::span<const FeatureStats> stats);
nlohmann::ordered_json stats_report_json(std::span<const FeatureStats> stats);

}  // namespace fmprune::stats
