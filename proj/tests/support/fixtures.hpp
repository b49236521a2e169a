#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fmprune/graph.hpp"
#include "fmprune/tensorio.hpp"
#include "fmprune/util.hpp"

namespace fixtures {

namespace fs = std::filesystem;
using fmprune::tensorio::ActivationSet;

inline fs::path data_dir() { return fs::path(FMPRUNE_DATA_DIR); }

// Fresh empty directory under the system temp dir.
inline fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("fmprune_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

inline ActivationSet make_acts(std::string id, std::size_t t, std::size_t n, std::size_t h, std::size_t w) {
    ActivationSet a;
    a.layer_id = std::move(id);
    a.samples = t;
    a.channels = n;
    a.height = h;
    a.width = w;
    a.values.assign(t * n * h * w, 0.0);
    return a;
}

inline double& value(ActivationSet& a, std::size_t m, std::size_t c, std::size_t p) {
    return a.values[(m * a.channels + c) * a.spatial() + p];
}

// Gaussian maps, occasionally with planted all-zero, constant or duplicate
// channels so the degenerate branches are exercised.
inline ActivationSet random_acts(std::mt19937_64& rng, std::size_t t, std::size_t n, std::size_t h, std::size_t w) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> coin(0, 9);
    auto a = make_acts("rand", t, n, h, w);
    for (auto& v : a.values) v = gauss(rng);
    for (std::size_t c = 0; c < n; ++c) {
        const int roll = coin(rng);
        for (std::size_t m = 0; m < t; ++m)
            for (std::size_t p = 0; p < a.spatial(); ++p) {
                if (roll == 0) value(a, m, c, p) = 0.0;
                else if (roll == 1) value(a, m, c, p) = 0.75;
                else if (roll == 2 && c > 0) value(a, m, c, p) = -2.0 * value(a, m, c - 1, p);
            }
    }
    return a;
}

// Sylvester-Hadamard matrix of order 16 with entries +-1.
inline std::vector<std::vector<double>> hadamard16() {
    std::vector<std::vector<double>> h{{1.0}};
    while (h.size() < 16) {
        const std::size_t n = h.size();
        std::vector<std::vector<double>> next(2 * n, std::vector<double>(2 * n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                next[i][j] = next[i][j + n] = next[i + n][j] = h[i][j];
                next[i + n][j + n] = -h[i][j];
            }
        h = std::move(next);
    }
    return h;
}

// 8-channel 4x4 activations: every channel is a distinct balanced Hadamard
// row (pairwise orthogonal, identical M-std) except `constant` (all ones,
// M-std 0) and `dup_b`, which copies `dup_a` exactly.
inline ActivationSet planted_acts(std::string id, std::size_t t, std::size_t constant, std::size_t dup_a,
                                  std::size_t dup_b) {
    const auto h = hadamard16();
    auto a = make_acts(std::move(id), t, 8, 4, 4);
    for (std::size_t m = 0; m < t; ++m) {
        std::size_t next_row = 1 + m % 7;  // rows 1..15 are balanced
        std::vector<std::size_t> row_of(8);
        for (std::size_t c = 0; c < 8; ++c) {
            if (c == dup_b) continue;
            row_of[c] = next_row;
            next_row = next_row % 15 + 1;
        }
        row_of[dup_b] = row_of[dup_a];
        const double scale = 1.0 + double(m);
        for (std::size_t c = 0; c < 8; ++c)
            for (std::size_t p = 0; p < 16; ++p)
                value(a, m, c, p) = c == constant ? 1.0 : scale * h[row_of[c]][p];
    }
    return a;
}

// input(3x4x4) -> conv1 -> conv2 -> conv3 -> global pool -> fc -> output,
// all convs 8 channels, 3x3, bias, prunable.
inline nlohmann::json planted_chain_graph_json() {
    return nlohmann::json::parse(R"({
      "format_version": "1",
      "input": {"channels": 3, "height": 4, "width": 4},
      "layers": [
        {"id": "input", "kind": "input"},
        {"id": "conv1", "kind": "conv", "in": 3, "out": 8, "kernel": 3, "bias": true, "prunable": true},
        {"id": "conv2", "kind": "conv", "in": 8, "out": 8, "kernel": 3, "bias": true, "prunable": true},
        {"id": "conv3", "kind": "conv", "in": 8, "out": 8, "kernel": 3, "bias": true, "prunable": true},
        {"id": "gap", "kind": "pool", "global": true},
        {"id": "fc", "kind": "linear", "out": 10, "bias": true},
        {"id": "output", "kind": "output"}
      ],
      "edges": [["input","conv1"],["conv1","conv2"],["conv2","conv3"],["conv3","gap"],["gap","fc"],["fc","output"]]
    })");
}

struct PlantedLayer {
    std::string id;
    std::size_t constant, dup_a, dup_b;
};

inline std::vector<PlantedLayer> planted_layers() {
    return {{"conv1", 2, 5, 6}, {"conv2", 0, 3, 7}, {"conv3", 7, 1, 4}};
}

// Writes graph.json, per-layer NPY activations and manifest.json into dir.
inline fs::path write_dataset(const fs::path& dir, const nlohmann::json& graph,
                              const std::vector<ActivationSet>& acts, bool float32 = false) {
    fs::create_directories(dir);
    fmprune::write_file_atomic(dir / "graph.json", graph.dump(2));
    nlohmann::json manifest = {{"format_version", "1"}, {"model_graph", "graph.json"}, {"entries", nlohmann::json::array()}};
    for (const auto& a : acts) {
        std::vector<std::size_t> shape{a.samples, a.channels, a.height, a.width};
        const std::string file = a.layer_id + ".npy";
        if (float32) {
            std::vector<float> v(a.values.begin(), a.values.end());
            fmprune::tensorio::write_tensor(dir / file, {shape, v});
        } else {
            fmprune::tensorio::write_tensor(dir / file, {shape, a.values});
        }
        manifest["entries"].push_back({{"layer_id", a.layer_id}, {"tensor", file}, {"samples", a.samples}});
    }
    fmprune::write_file_atomic(dir / "manifest.json", manifest.dump(2));
    return dir / "manifest.json";
}

inline std::vector<ActivationSet> planted_chain_activations(std::size_t t = 4) {
    std::vector<ActivationSet> out;
    for (const auto& l : planted_layers()) out.push_back(planted_acts(l.id, t, l.constant, l.dup_a, l.dup_b));
    return out;
}

// Activations for the bottleneck example graph: random maps per captured
// layer; post-addition captures at the add_join outputs.
inline std::vector<ActivationSet> bottleneck_activations(std::mt19937_64& rng, const fmprune::graph::ModelGraph& g,
                                                         std::size_t t = 4) {
    std::vector<ActivationSet> out;
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> scale(0.05, 1.5);
    for (const auto& l : g.layers()) {
        const bool captured = l.prunable ? !g.post_addition_group_of(l.id) : l.kind == fmprune::graph::LayerKind::add_join;
        if (!captured) continue;
        // keep the maps small; statistics do not depend on the true resolution
        auto a = make_acts(l.id, t, static_cast<std::size_t>(l.out_channels), 4, 4);
        for (std::size_t c = 0; c < a.channels; ++c) {
            const double s = scale(rng);
            for (std::size_t m = 0; m < t; ++m)
                for (std::size_t p = 0; p < 16; ++p) value(a, m, c, p) = s * gauss(rng);
        }
        out.push_back(std::move(a));
    }
    return out;
}

inline std::map<std::string, ActivationSet> by_id(std::vector<ActivationSet> v) {
    std::map<std::string, ActivationSet> out;
    for (auto& a : v) out.emplace(a.layer_id, std::move(a));
    return out;
}

inline std::string slurp(const fs::path& p) { return fmprune::read_file(p); }

}  // namespace fixtures
