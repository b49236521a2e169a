#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fmprune/graph.hpp"
#include "fmprune/plan.hpp"
#include "fmprune/tensorio.hpp"

namespace fmprune::surgery {

// Parameter tensors of one layer. Expected shapes:
//   conv            weight (out, in, K, K), bias (out)
//   depthwise_conv  weight (C, 1, K, K),    bias (C)
//   linear          weight (out, in),       bias (out)
//   batchnorm       bn (4, C): gamma, beta, running mean, running var
struct LayerWeights {
    std::optional<tensorio::TensorFile> weight;
    std::optional<tensorio::TensorFile> bias;
    std::optional<tensorio::TensorFile> bn;
};

struct WeightBundle {
    std::map<std::string, LayerWeights> entries;

    bool bit_equal(const WeightBundle& other) const;
};

// Directory layout: weights_manifest.json next to the NPY files it names.
inline constexpr const char* kWeightsManifest = "weights_manifest.json";

WeightBundle load_bundle(const std::filesystem::path& manifest_path);
// Writes <layer>.weight.npy / .bias.npy / .bn.npy and the manifest into dir.
void save_bundle(const std::filesystem::path& dir, const WeightBundle& bundle);

struct Mismatch {
    std::string layer_id;
    std::string message;
};

// Empty iff every entry has the shape the graph implies and every prunable
// or post-addition conv/linear layer has a weight.
std::vector<Mismatch> verify_bundle(const WeightBundle& bundle, const graph::ModelGraph& graph);

// Gathers kept output filters, consumer input slices, and batchnorm vectors.
// Throws ShapeMismatch if the bundle does not fit the graph, MissingWeights
// if a pruned layer has no weight.
WeightBundle apply_plan_weights(const WeightBundle& bundle, const graph::ModelGraph& graph, const PruningPlan& plan);

}  // namespace fmprune::surgery
