// refine: score, tune, select and evaluate candidate predictions.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "refine/error.hpp"
#include "refine/pipeline.hpp"

namespace {

int exit_code_for(refine::ErrorCode code) {
    using refine::ErrorCode;
    switch (code) {
        case ErrorCode::BackendUnavailable:
        case ErrorCode::MissingEmbedding:
        case ErrorCode::MissingEntailment:
        case ErrorCode::RangeViolation:
        case ErrorCode::DimensionMismatch:
            return 2;
        case ErrorCode::ConfigError:
        case ErrorCode::InvalidCoefficients:
        case ErrorCode::InvalidStep:
            return 3;
        default:
            return 1;
    }
}

std::vector<std::string> split_methods(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    for (const auto& item : raw) {
        std::stringstream in(item);
        std::string method;
        while (std::getline(in, method, ',')) {
            if (!method.empty()) out.push_back(method);
        }
    }
    return out;
}

void print_cache(const char* name, const refine::CacheStats& s) {
    std::cout << "  " << name << " cache: " << s.hits << " hits, " << s.misses << " misses, " << s.loaded
              << " loaded from disk" << (s.rebuilt ? " (corrupt cache rebuilt)" : "") << "\n";
}

int run(const std::string& command, const refine::RunConfig& config, const refine::CommandOptions& options) {
    using namespace refine;
    if (command == "validate") {
        const ValidationReport report = cmd_validate(config);
        for (const auto& d : report.diagnostics) std::cerr << format_diagnostic(d) << "\n";
        std::cout << report.errors() << " error(s), " << report.warnings() << " warning(s)\n";
        return report.clean() ? 0 : 1;
    }
    if (command == "score") {
        const ScoreSummary s = cmd_score(config, options);
        std::cout << "scored " << s.candidates << " candidates in " << s.samples << " samples -> "
                  << config.scores_path().string() << "\n";
        print_cache("embedding", s.embedding_cache);
        print_cache("entailment", s.entailment_cache);
        if (s.clamped_batches > 0) {
            std::cerr << "warning: neighborhood size clamped in " << s.clamped_batches << " batch(es)\n";
        }
        return 0;
    }
    if (command == "tune") {
        const TuneSummary s = cmd_tune(config, options);
        const auto& c = s.best.coefficients;
        std::cout << "best of " << s.grid_points << " points: alpha=" << c.alpha << " beta=" << c.beta
                  << " gamma=" << c.gamma << " " << s.best.metric_name << "=" << s.best.metric_value << " -> "
                  << config.best_path().string() << "\n";
        for (std::size_t i = 0; i < 3; ++i) {
            if (s.scaling.degenerate[i]) {
                static const char* names[] = {"stability", "entailment", "uncertainty"};
                std::cerr << "warning: " << names[i] << " scores are constant on validation; scale set to 1\n";
            }
        }
        return 0;
    }
    if (command == "select") {
        const SelectSummary s = cmd_select(config, options);
        std::cout << "wrote " << s.rows << " selections for " << s.samples << " samples -> "
                  << config.selected_path().string() << "\n";
        return 0;
    }
    const EvalReport report = cmd_eval(config, options);
    std::cout << report.metric_name << "\n";
    for (const auto& [method, aggregate] : report.methods) {
        std::printf("  %-18s %6.1f  (n=%zu)\n", method.c_str(), round_to_one_decimal(aggregate.aggregate),
                    aggregate.n);
    }
    std::cout << "report -> " << config.report_path().string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Confidence-based refinement of sampled LLM predictions"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::vector<std::string> methods;
    refine::CommandOptions options;

    for (const char* name : {"validate", "score", "tune", "select", "eval"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "path to the run config (JSON)")->required();
        sub->add_option("--workers", options.workers, "worker threads")->check(CLI::PositiveNumber);
        if (std::string_view(name) == "score") {
            sub->add_flag("--force", options.force, "score even when validation reports errors");
        }
        if (std::string_view(name) == "select") {
            sub->add_option("--methods", methods, "ceret,no_refinement,self_consistency,oracle or all")
                ->delimiter(',');
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (!methods.empty()) options.methods = split_methods(methods);
        const refine::RunConfig config = refine::load_config(config_path);
        return run(command, config, options);
    } catch (const refine::Error& e) {
        std::cerr << "refine " << command << ": " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "refine " << command << ": " << e.what() << "\n";
        return 1;
    }
}
