#include "fmprune/util.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "fmprune/error.hpp"

namespace fmprune {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, std::string_view bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) fail(ErrorCode::io_failure, "cannot create directory " + path.parent_path().string());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::io_failure, "cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) fail(ErrorCode::io_failure, "write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(ErrorCode::io_failure, "cannot rename temp file onto " + path.string());
    }
}

std::string read_file(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) fail(ErrorCode::missing_file, "no such file: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io_failure, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

std::string format_sig(double value, int digits) {
    if (std::isnan(value)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, value);
    return buf;
}

std::string format_pct(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f", value);
    // avoid "-0.0" for tiny negative rounding noise
    if (std::string_view(buf) == "-0.0") return "0.0";
    return buf;
}

}  // namespace fmprune
