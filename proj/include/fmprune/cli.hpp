#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fmprune/plan.hpp"

namespace fmprune::cli {

enum class ReportFormat { csv, json };

struct StatsOptions {
    std::filesystem::path manifest;
    std::optional<std::filesystem::path> graph;  // defaults to the manifest's model_graph
    std::filesystem::path out;
    std::size_t topk = 5;
    ReportFormat format = ReportFormat::csv;
    unsigned threads = 1;
};

struct PruneOptions {
    std::filesystem::path manifest;
    std::optional<std::filesystem::path> graph;
    std::filesystem::path out;
    PruneConfig config;
    ReportFormat format = ReportFormat::csv;
    unsigned threads = 1;
};

struct ApplyOptions {
    std::filesystem::path weights;  // weights_manifest.json
    std::filesystem::path graph;
    std::filesystem::path plan;
    std::filesystem::path out;
};

struct ReportOptions {
    std::filesystem::path graph;
    std::filesystem::path plan;
    std::filesystem::path out;
    ReportFormat format = ReportFormat::csv;
};

// Pruning thresholds from a JSON object with any subset of the keys of a
// plan's "config" block; missing keys keep their defaults. Throws
// InvalidArgument.
PruneConfig load_config(const std::filesystem::path& path);

// Each command writes into options.out (created if needed) and returns the
// paths it wrote. Module errors propagate as fmprune::Error.
std::vector<std::filesystem::path> cmd_stats(const StatsOptions& options);
std::vector<std::filesystem::path> cmd_prune(const PruneOptions& options);
std::vector<std::filesystem::path> cmd_apply(const ApplyOptions& options);
std::vector<std::filesystem::path> cmd_report(const ReportOptions& options);

// Parses argv (without the program name) and dispatches. Returns the process
// exit code: 0 on success, 2 on usage errors, the error's code otherwise.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fmprune::cli
