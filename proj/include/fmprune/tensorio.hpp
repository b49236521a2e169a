#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace fmprune::graph {
class ModelGraph;
}

namespace fmprune::tensorio {

enum class DType { float32, float64 };

std::size_t dtype_size(DType dtype);

// Dense row-major float tensor as stored in one NPY file.
class TensorFile {
public:
    using Storage = std::variant<std::vector<float>, std::vector<double>>;

    TensorFile() : TensorFile({1}, std::vector<double>{0.0}) {}
    TensorFile(std::vector<std::size_t> shape, std::vector<float> data);
    TensorFile(std::vector<std::size_t> shape, std::vector<double> data);

    DType dtype() const noexcept;
    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept;
    const Storage& storage() const noexcept { return data_; }

    double value(std::size_t flat_index) const;
    std::vector<double> to_f64() const;

    // Copy of the tensor restricted to `indices` along `axis`, order preserved.
    TensorFile take(std::size_t axis, std::span<const std::size_t> indices) const;

    // Compares dtype, shape and the raw bytes of the buffer.
    bool bit_equal(const TensorFile& other) const;

private:
    std::vector<std::size_t> shape_;
    Storage data_;
};

std::string encode_npy(const TensorFile& tensor);
TensorFile decode_npy(std::string_view bytes, const std::string& origin = "<memory>");

TensorFile read_tensor(const std::filesystem::path& path);
void write_tensor(const std::filesystem::path& path, const TensorFile& tensor);

// T stacked feature maps of one layer, shape (T, N, H, W), widened to float64.
struct ActivationSet {
    std::string layer_id;
    std::size_t samples = 0;
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;

    std::size_t spatial() const noexcept { return height * width; }
    std::span<const double> map(std::size_t sample, std::size_t channel) const {
        return {values.data() + (sample * channels + channel) * spatial(), spatial()};
    }

    static ActivationSet from_tensor(std::string layer_id, const TensorFile& tensor);
};

struct ManifestEntry {
    std::string layer_id;
    std::filesystem::path tensor;
    std::size_t samples = 0;
};

struct Manifest {
    std::string format_version = "1";
    std::filesystem::path model_graph;
    std::vector<ManifestEntry> entries;
};

// Relative paths in the document are resolved against base_dir.
Manifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir);
Manifest load_manifest(const std::filesystem::path& path);
nlohmann::ordered_json manifest_to_json(const Manifest& manifest);

// Every entry must name a layer of the graph.
void validate_manifest(const Manifest& manifest, const graph::ModelGraph& graph);

std::map<std::string, ActivationSet> load_activations(const Manifest& manifest, unsigned threads = 1);

}  // namespace fmprune::tensorio
