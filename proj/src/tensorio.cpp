#include "fmprune/tensorio.hpp"

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <functional>
#include <numeric>
#include <set>

#include "fmprune/error.hpp"
#include "fmprune/graph.hpp"
#include "fmprune/util.hpp"

namespace fmprune::tensorio {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "NPY buffers are read and written as little-endian host memory");

namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kAlign = 64;

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_size(const std::vector<std::size_t>& shape, std::size_t n) {
    if (shape_product(shape) != n)
        fail(ErrorCode::invalid_argument, "tensor shape does not match element count");
}

// Minimal reader for the python dict literal in an NPY header.
class HeaderParser {
public:
    HeaderParser(std::string_view text, const std::string& origin) : s_(text), origin_(origin) {}

    void parse(std::string& descr, bool& fortran, std::vector<std::size_t>& shape) {
        bool have_descr = false, have_fortran = false, have_shape = false;
        expect('{');
        while (true) {
            skip_ws();
            if (peek() == '}') { ++pos_; break; }
            const std::string key = string_literal();
            expect(':');
            if (key == "descr") {
                descr = string_literal();
                have_descr = true;
            } else if (key == "fortran_order") {
                fortran = boolean();
                have_fortran = true;
            } else if (key == "shape") {
                shape = tuple();
                have_shape = true;
            } else {
                bad("unexpected key '" + key + "'");
            }
            skip_ws();
            if (peek() == ',') { ++pos_; continue; }
            expect('}');
            break;
        }
        if (!have_descr || !have_fortran || !have_shape) bad("header is missing a required key");
    }

private:
    [[noreturn]] void bad(const std::string& what) const {
        fail(ErrorCode::malformed_header, origin_ + ": " + what);
    }
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    char peek() {
        if (pos_ >= s_.size()) bad("header ends unexpectedly");
        return s_[pos_];
    }
    void expect(char c) {
        skip_ws();
        if (peek() != c) bad(std::string("expected '") + c + "'");
        ++pos_;
    }
    std::string string_literal() {
        skip_ws();
        const char quote = peek();
        if (quote != '\'' && quote != '"') bad("expected string literal");
        const auto end = s_.find(quote, pos_ + 1);
        if (end == std::string_view::npos) bad("unterminated string literal");
        std::string out(s_.substr(pos_ + 1, end - pos_ - 1));
        pos_ = end + 1;
        return out;
    }
    bool boolean() {
        skip_ws();
        if (s_.substr(pos_, 4) == "True") { pos_ += 4; return true; }
        if (s_.substr(pos_, 5) == "False") { pos_ += 5; return false; }
        bad("expected True or False");
    }
    std::vector<std::size_t> tuple() {
        std::vector<std::size_t> dims;
        expect('(');
        while (true) {
            skip_ws();
            if (peek() == ')') { ++pos_; break; }
            if (!std::isdigit(static_cast<unsigned char>(peek()))) bad("shape entries must be integers");
            std::size_t v = 0;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                v = v * 10 + static_cast<std::size_t>(s_[pos_] - '0');
                ++pos_;
            }
            dims.push_back(v);
            skip_ws();
            if (peek() == ',') { ++pos_; continue; }
            expect(')');
            break;
        }
        return dims;
    }

    std::string_view s_;
    const std::string& origin_;
    std::size_t pos_ = 0;
};

std::string header_dict(const TensorFile& t) {
    std::string dict = "{'descr': '";
    dict += t.dtype() == DType::float32 ? "<f4" : "<f8";
    dict += "', 'fortran_order': False, 'shape': (";
    for (std::size_t i = 0; i < t.rank(); ++i) {
        if (i) dict += ", ";
        dict += std::to_string(t.shape()[i]);
    }
    if (t.rank() == 1) dict += ",";
    dict += "), }";
    return dict;
}

}  // namespace

std::size_t dtype_size(DType dtype) { return dtype == DType::float32 ? 4 : 8; }

TensorFile::TensorFile(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_size(shape_, size());
}

TensorFile::TensorFile(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_size(shape_, size());
}

DType TensorFile::dtype() const noexcept {
    return std::holds_alternative<std::vector<float>>(data_) ? DType::float32 : DType::float64;
}

std::size_t TensorFile::size() const noexcept {
    return std::visit([](const auto& v) { return v.size(); }, data_);
}

double TensorFile::value(std::size_t flat_index) const {
    return std::visit([&](const auto& v) { return static_cast<double>(v.at(flat_index)); }, data_);
}

std::vector<double> TensorFile::to_f64() const {
    return std::visit([](const auto& v) { return std::vector<double>(v.begin(), v.end()); }, data_);
}

TensorFile TensorFile::take(std::size_t axis, std::span<const std::size_t> indices) const {
    if (axis >= rank()) fail(ErrorCode::invalid_argument, "take: axis out of range");
    for (auto idx : indices)
        if (idx >= shape_[axis]) fail(ErrorCode::invalid_argument, "take: index out of range");

    std::size_t outer = 1, inner = 1;
    for (std::size_t a = 0; a < axis; ++a) outer *= shape_[a];
    for (std::size_t a = axis + 1; a < rank(); ++a) inner *= shape_[a];
    auto shape = shape_;
    shape[axis] = indices.size();

    return std::visit(
        [&](const auto& src) {
            using T = typename std::decay_t<decltype(src)>::value_type;
            std::vector<T> out;
            out.reserve(outer * indices.size() * inner);
            for (std::size_t o = 0; o < outer; ++o)
                for (auto idx : indices) {
                    const auto first = src.begin() + static_cast<std::ptrdiff_t>((o * shape_[axis] + idx) * inner);
                    out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(inner));
                }
            return TensorFile(std::move(shape), std::move(out));
        },
        data_);
}

bool TensorFile::bit_equal(const TensorFile& other) const {
    if (dtype() != other.dtype() || shape_ != other.shape_ || size() != other.size()) return false;
    return std::visit(
        [&](const auto& a) {
            using V = std::decay_t<decltype(a)>;
            const auto& b = std::get<V>(other.data_);
            return a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(typename V::value_type)) == 0;
        },
        data_);
}

std::string encode_npy(const TensorFile& tensor) {
    if (tensor.rank() == 0) fail(ErrorCode::invalid_argument, "cannot write a tensor with an empty shape");
    for (auto d : tensor.shape())
        if (d == 0) fail(ErrorCode::invalid_argument, "cannot write a tensor with a zero-length dimension");

    std::string dict = header_dict(tensor);
    // magic(6) + version(2) + header_len(2) + dict + '\n' padded to kAlign
    const std::size_t unpadded = kMagicLen + 4 + dict.size() + 1;
    const std::size_t total = (unpadded + kAlign - 1) / kAlign * kAlign;
    dict.append(total - unpadded, ' ');
    dict += '\n';
    const auto header_len = static_cast<std::uint16_t>(dict.size());

    std::string out(kMagic, kMagicLen);
    out += '\x01';
    out += '\x00';
    out += static_cast<char>(header_len & 0xff);
    out += static_cast<char>(header_len >> 8);
    out += dict;
    std::visit(
        [&](const auto& v) {
            out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(v[0]));
        },
        tensor.storage());
    return out;
}

TensorFile decode_npy(std::string_view bytes, const std::string& origin) {
    if (bytes.size() < kMagicLen + 4 || bytes.substr(0, kMagicLen) != std::string_view(kMagic, kMagicLen))
        fail(ErrorCode::malformed_header, origin + ": missing NPY magic");
    const auto major = static_cast<unsigned char>(bytes[6]);
    const auto minor = static_cast<unsigned char>(bytes[7]);
    std::size_t header_len = 0, prefix = 0;
    if (major == 1 && minor == 0) {
        header_len = static_cast<unsigned char>(bytes[8]) | (static_cast<unsigned char>(bytes[9]) << 8);
        prefix = 10;
    } else if (major == 2 && minor == 0) {
        if (bytes.size() < 12) fail(ErrorCode::malformed_header, origin + ": header ends unexpectedly");
        for (int i = 3; i >= 0; --i) header_len = (header_len << 8) | static_cast<unsigned char>(bytes[8 + i]);
        prefix = 12;
    } else {
        fail(ErrorCode::malformed_header,
             origin + ": unsupported NPY version " + std::to_string(major) + "." + std::to_string(minor));
    }
    if (bytes.size() < prefix + header_len) fail(ErrorCode::malformed_header, origin + ": header ends unexpectedly");

    std::string descr;
    bool fortran = false;
    std::vector<std::size_t> shape;
    HeaderParser(bytes.substr(prefix, header_len), origin).parse(descr, fortran, shape);

    DType dtype;
    if (descr == "<f4") dtype = DType::float32;
    else if (descr == "<f8") dtype = DType::float64;
    else fail(ErrorCode::unsupported_dtype, origin + ": unsupported dtype '" + descr + "' (need <f4 or <f8)");
    if (fortran) fail(ErrorCode::malformed_header, origin + ": fortran_order arrays are not supported");
    if (shape.empty()) fail(ErrorCode::malformed_header, origin + ": scalar (empty shape) arrays are not supported");
    for (auto d : shape)
        if (d == 0) fail(ErrorCode::malformed_header, origin + ": zero-length dimension in shape");

    const std::size_t count = shape_product(shape);
    const std::size_t need = count * dtype_size(dtype);
    const auto payload = bytes.substr(prefix + header_len);
    if (payload.size() < need)
        fail(ErrorCode::truncated_data, origin + ": expected " + std::to_string(need) + " data bytes, found " +
                                            std::to_string(payload.size()));
    if (payload.size() > need)
        fail(ErrorCode::malformed_header, origin + ": trailing bytes after tensor data");

    if (dtype == DType::float32) {
        std::vector<float> data(count);
        std::memcpy(data.data(), payload.data(), need);
        return {std::move(shape), std::move(data)};
    }
    std::vector<double> data(count);
    std::memcpy(data.data(), payload.data(), need);
    return {std::move(shape), std::move(data)};
}

TensorFile read_tensor(const fs::path& path) { return decode_npy(read_file(path), path.string()); }

void write_tensor(const fs::path& path, const TensorFile& tensor) {
    write_file_atomic(path, encode_npy(tensor));
}

ActivationSet ActivationSet::from_tensor(std::string layer_id, const TensorFile& tensor) {
    if (tensor.rank() != 4)
        fail(ErrorCode::shape_mismatch,
             "activations for '" + layer_id + "' must have rank 4 (T, N, H, W), got rank " +
                 std::to_string(tensor.rank()));
    ActivationSet set;
    set.layer_id = std::move(layer_id);
    set.samples = tensor.shape()[0];
    set.channels = tensor.shape()[1];
    set.height = tensor.shape()[2];
    set.width = tensor.shape()[3];
    set.values = tensor.to_f64();
    return set;
}

Manifest parse_manifest(const nlohmann::json& doc, const fs::path& base_dir) {
    auto bad = [](const std::string& what) { fail(ErrorCode::manifest_invalid, "manifest: " + what); };
    if (!doc.is_object()) bad("document must be an object");
    Manifest m;
    if (!doc.contains("format_version") || !doc["format_version"].is_string()) bad("missing format_version");
    m.format_version = doc["format_version"].get<std::string>();
    if (m.format_version != "1") bad("unsupported format_version '" + m.format_version + "'");
    if (!doc.contains("model_graph") || !doc["model_graph"].is_string()) bad("missing model_graph");
    auto resolve = [&](const std::string& p) {
        fs::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };
    m.model_graph = resolve(doc["model_graph"].get<std::string>());
    if (!doc.contains("entries") || !doc["entries"].is_array()) bad("missing entries array");

    std::set<std::string> seen;
    for (const auto& e : doc["entries"]) {
        if (!e.is_object() || !e.contains("layer_id") || !e.contains("tensor") || !e.contains("samples") ||
            !e["layer_id"].is_string() || !e["tensor"].is_string() || !e["samples"].is_number_integer())
            bad("each entry needs layer_id, tensor and samples");
        if (e["samples"].get<std::int64_t>() < 1)
            bad("samples must be >= 1 for '" + e["layer_id"].get<std::string>() + "'");
        ManifestEntry entry{e["layer_id"].get<std::string>(), resolve(e["tensor"].get<std::string>()),
                            e["samples"].get<std::size_t>()};
        if (!seen.insert(entry.layer_id).second) bad("duplicate layer_id '" + entry.layer_id + "'");
        m.entries.push_back(std::move(entry));
    }
    for (const auto& e : m.entries)
        if (e.samples != m.entries.front().samples)
            fail(ErrorCode::shape_mismatch, "manifest: sample counts differ across entries (" +
                                                std::to_string(m.entries.front().samples) + " vs " +
                                                std::to_string(e.samples) + ")");
    return m;
}

Manifest load_manifest(const fs::path& path) {
    const std::string text = read_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::manifest_invalid, path.string() + ": " + e.what());
    }
    return parse_manifest(doc, path.parent_path());
}

nlohmann::ordered_json manifest_to_json(const Manifest& manifest) {
    nlohmann::ordered_json doc;
    doc["format_version"] = manifest.format_version;
    doc["model_graph"] = manifest.model_graph.generic_string();
    doc["entries"] = nlohmann::ordered_json::array();
    for (const auto& e : manifest.entries)
        doc["entries"].push_back({{"layer_id", e.layer_id}, {"tensor", e.tensor.generic_string()}, {"samples", e.samples}});
    return doc;
}

void validate_manifest(const Manifest& manifest, const graph::ModelGraph& graph) {
    for (const auto& e : manifest.entries)
        if (!graph.find(e.layer_id))
            fail(ErrorCode::manifest_invalid, "manifest entry '" + e.layer_id + "' does not name a layer of the graph");
}

std::map<std::string, ActivationSet> load_activations(const Manifest& manifest, unsigned threads) {
    const auto& entries = manifest.entries;
    for (const auto& e : entries)
        if (!fs::is_regular_file(e.tensor))
            fail(ErrorCode::missing_file, "activation tensor for '" + e.layer_id + "' not found: " + e.tensor.string());

    std::vector<ActivationSet> loaded(entries.size());
    std::vector<std::exception_ptr> errors(entries.size());
    parallel_for(entries.size(), threads, [&](std::size_t i) {
        try {
            loaded[i] = ActivationSet::from_tensor(entries[i].layer_id, read_tensor(entries[i].tensor));
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);

    std::map<std::string, ActivationSet> out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        auto& set = loaded[i];
        if (set.samples != entries[i].samples)
            fail(ErrorCode::shape_mismatch, "'" + set.layer_id + "' holds " + std::to_string(set.samples) +
                                                " samples but the manifest declares " +
                                                std::to_string(entries[i].samples));
        if (set.samples != loaded.front().samples)
            fail(ErrorCode::shape_mismatch, "sample count differs across layers ('" + loaded.front().layer_id +
                                                "' vs '" + set.layer_id + "')");
        out.emplace(set.layer_id, std::move(set));
    }
    return out;
}

}  // namespace fmprune::tensorio
