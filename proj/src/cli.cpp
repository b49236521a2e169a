#include "fmprune/cli.hpp"

#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "fmprune/error.hpp"
#include "fmprune/graph.hpp"
#include "fmprune/select.hpp"
#include "fmprune/stats.hpp"
#include "fmprune/surgery.hpp"
#include "fmprune/tensorio.hpp"
#include "fmprune/util.hpp"

namespace fmprune::cli {

namespace fs = std::filesystem;

namespace {

struct Inputs {
    tensorio::Manifest manifest;
    graph::ModelGraph graph;
};

Inputs load_inputs(const fs::path& manifest_path, const std::optional<fs::path>& graph_path) {
    auto manifest = tensorio::load_manifest(manifest_path);
    auto graph = graph::load_graph(graph_path.value_or(manifest.model_graph));
    tensorio::validate_manifest(manifest, graph);
    return {std::move(manifest), std::move(graph)};
}

fs::path write_report(const fs::path& dir, const graph::ReductionReport& report, ReportFormat format) {
    if (format == ReportFormat::json) {
        const auto path = dir / "reduction_report.json";
        write_file_atomic(path, graph::reduction_report_json(report).dump(2) + "\n");
        return path;
    }
    const auto path = dir / "reduction_report.csv";
    write_file_atomic(path, graph::reduction_report_csv(report));
    return path;
}

}  // namespace

PruneConfig load_config(const fs::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_argument, "config " + path.string() + ": " + e.what());
    }
    if (!doc.is_object()) fail(ErrorCode::invalid_argument, "config " + path.string() + ": expected a JSON object");
    nlohmann::json merged = config_to_json(PruneConfig{});
    for (const auto& [key, value] : doc.items()) {
        if (!merged.contains(key)) fail(ErrorCode::invalid_argument, "config " + path.string() + ": unknown key '" + key + "'");
        merged[key] = value;
    }
    if (merged["grouping"] == "residual") merged["grouping"] = "residual_two_group";
    try {
        return config_from_json(merged);
    } catch (const Error& e) {
        fail(ErrorCode::invalid_argument, "config " + path.string() + ": " + e.what());
    }
}

std::vector<fs::path> cmd_stats(const StatsOptions& options) {
    const auto inputs = load_inputs(options.manifest, options.graph);
    const auto acts = tensorio::load_activations(inputs.manifest, options.threads);

    // manifest order, not map order
    std::vector<stats::FeatureStats> all(inputs.manifest.entries.size());
    std::vector<std::exception_ptr> errors(all.size());
    parallel_for(all.size(), options.threads, [&](std::size_t i) {
        try {
            all[i] = stats::compute_layer_statistics(acts.at(inputs.manifest.entries[i].layer_id), options.topk).stats;
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    if (options.format == ReportFormat::json) {
        const auto path = options.out / "stats.json";
        write_file_atomic(path, stats::stats_report_json(all).dump(2) + "\n");
        return {path};
    }
    const auto path = options.out / "stats.csv";
    write_file_atomic(path, stats::stats_report_csv(all));
    return {path};
}

std::vector<fs::path> cmd_prune(const PruneOptions& options) {
    options.config.validate();
    const auto inputs = load_inputs(options.manifest, options.graph);
    const auto acts = tensorio::load_activations(inputs.manifest, options.threads);
    const auto plan = select::run_pruning(inputs.graph, acts, options.config, options.threads);
    const auto pruned = graph::apply_plan_shapes(inputs.graph, plan);

    const auto plan_path = options.out / "plan.json";
    save_plan(plan_path, plan);
    const auto graph_path = options.out / "pruned_graph.json";
    write_file_atomic(graph_path, graph::graph_to_json(pruned).dump(2) + "\n");
    const auto report_path = write_report(options.out, graph::reduction_report(inputs.graph, pruned), options.format);
    return {plan_path, graph_path, report_path};
}

std::vector<fs::path> cmd_apply(const ApplyOptions& options) {
    const auto graph = graph::load_graph(options.graph);
    const auto plan = load_plan(options.plan);
    const auto bundle = surgery::load_bundle(options.weights);
    const auto pruned_graph = graph::apply_plan_shapes(graph, plan);
    const auto pruned = surgery::apply_plan_weights(bundle, graph, plan);
    const auto problems = surgery::verify_bundle(pruned, pruned_graph);
    if (!problems.empty())
        fail(ErrorCode::bundle_mismatch, "pruned weights do not match the pruned graph: layer '" +
                                             problems.front().layer_id + "': " + problems.front().message);
    surgery::save_bundle(options.out, pruned);
    return {options.out / surgery::kWeightsManifest};
}

std::vector<fs::path> cmd_report(const ReportOptions& options) {
    const auto graph = graph::load_graph(options.graph);
    const auto plan = load_plan(options.plan);
    const auto pruned = graph::apply_plan_shapes(graph, plan);
    return {write_report(options.out, graph::reduction_report(graph, pruned), options.format)};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Feature-map diversity/similarity filter pruning"};
    app.name("fmprune");
    app.require_subcommand(1);

    const std::map<std::string, ReportFormat> formats{{"csv", ReportFormat::csv}, {"json", ReportFormat::json}};
    const std::map<std::string, DfsMode> modes{{"mean", DfsMode::mean}, {"percentile", DfsMode::percentile}};
    const std::map<std::string, Grouping> groupings{{"global", Grouping::global},
                                                   {"residual", Grouping::residual_two_group},
                                                   {"residual_two_group", Grouping::residual_two_group}};

    StatsOptions stats_opt;
    std::string stats_graph;
    auto* stats_cmd = app.add_subcommand("stats", "Per-channel M-std / M-corr / Top-k-corr report");
    stats_cmd->add_option("--manifest", stats_opt.manifest, "Activation manifest.json")->required();
    stats_cmd->add_option("--graph", stats_graph, "Model graph (defaults to the manifest's model_graph)");
    stats_cmd->add_option("--out", stats_opt.out, "Output directory")->required();
    stats_cmd->add_option("--topk", stats_opt.topk, "Partners for Top-k-corr")->check(CLI::PositiveNumber);
    stats_cmd->add_option("--format", stats_opt.format, "csv or json")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case))
        ->option_text("{csv,json}");
    stats_cmd->add_option("--threads", stats_opt.threads, "Worker threads")->check(CLI::PositiveNumber);

    PruneOptions prune_opt;
    std::string prune_graph;
    auto* prune_cmd = app.add_subcommand("prune", "DFS + SFS selection, plan and reduction report");
    prune_cmd->add_option("--manifest", prune_opt.manifest, "Activation manifest.json")->required();
    prune_cmd->add_option("--graph", prune_graph, "Model graph (defaults to the manifest's model_graph)");
    prune_cmd->add_option("--out", prune_opt.out, "Output directory")->required();
    std::string config_path, dfs_mode, grouping;
    PruneConfig flags;
    prune_cmd->add_option("--config", config_path, "JSON file with pruning thresholds; flags override it");
    auto* mode_opt = prune_cmd->add_option("--dfs-mode", dfs_mode, "mean or percentile")
                         ->check(CLI::IsMember(modes, CLI::ignore_case));
    auto* pct_opt =
        prune_cmd->add_option("--dfs-percentile", flags.dfs_percentile, "Percentile of pooled M-std, (0,100)");
    auto* nu_opt = prune_cmd->add_option("--nu", flags.nu, "SFS similarity threshold, (0,1]");
    auto* grouping_opt = prune_cmd->add_option("--grouping", grouping, "global or residual")
                             ->check(CLI::IsMember(groupings, CLI::ignore_case));
    auto* topk_opt =
        prune_cmd->add_option("--topk", flags.topk_k, "Partners for Top-k-corr")->check(CLI::PositiveNumber);
    prune_cmd->add_option("--format", prune_opt.format, "Reduction report format, csv or json")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case))
        ->option_text("{csv,json}");
    prune_cmd->add_option("--threads", prune_opt.threads, "Worker threads")->check(CLI::PositiveNumber);

    ApplyOptions apply_opt;
    auto* apply_cmd = app.add_subcommand("apply", "Slice a weight bundle according to a plan");
    apply_cmd->add_option("--weights", apply_opt.weights, "weights_manifest.json")->required();
    apply_cmd->add_option("--graph", apply_opt.graph, "Model graph")->required();
    apply_cmd->add_option("--plan", apply_opt.plan, "plan.json")->required();
    apply_cmd->add_option("--out", apply_opt.out, "Output directory")->required();

    ReportOptions report_opt;
    auto* report_cmd = app.add_subcommand("report", "Parameter/FLOPs reduction of a plan");
    report_cmd->add_option("--graph", report_opt.graph, "Model graph")->required();
    report_cmd->add_option("--plan", report_opt.plan, "plan.json")->required();
    report_cmd->add_option("--out", report_opt.out, "Output directory")->required();
    report_cmd->add_option("--format", report_opt.format, "csv or json")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case))
        ->option_text("{csv,json}");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    try {
        std::vector<fs::path> written;
        if (*stats_cmd) {
            if (!stats_graph.empty()) stats_opt.graph = stats_graph;
            written = cmd_stats(stats_opt);
        } else if (*prune_cmd) {
            if (!prune_graph.empty()) prune_opt.graph = prune_graph;
            if (!config_path.empty()) prune_opt.config = load_config(config_path);
            if (*mode_opt) prune_opt.config.dfs_mode = modes.at(CLI::detail::to_lower(dfs_mode));
            if (*pct_opt) prune_opt.config.dfs_percentile = flags.dfs_percentile;
            if (*nu_opt) prune_opt.config.nu = flags.nu;
            if (*grouping_opt) prune_opt.config.grouping = groupings.at(CLI::detail::to_lower(grouping));
            if (*topk_opt) prune_opt.config.topk_k = flags.topk_k;
            written = cmd_prune(prune_opt);
        } else if (*apply_cmd) {
            written = cmd_apply(apply_opt);
        } else {
            written = cmd_report(report_opt);
        }
        for (const auto& p : written) out << "wrote " << p.string() << "\n";
        return 0;
    } catch (const Error& e) {
        err << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace fmprune::cli
