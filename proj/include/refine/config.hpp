#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "refine/evaluation.hpp"
#include "refine/fusion.hpp"
#include "refine/providers.hpp"
#include "refine/scoring.hpp"
#include "refine/text.hpp"
#include "refine/types.hpp"

namespace refine {

struct BackendConfig {
    enum class Kind { file, http };
    Kind kind = Kind::file;
    std::filesystem::path path;  // file backend
    HttpOptions http;            // http backend
};

/// Where fusion weights or scaling factors come from. `tuned` means
/// "produced by `refine tune`" and resolves to <output_dir>/best.json.
template <typename T>
struct Source {
    enum class Kind { tuned, fixed, file };
    Kind kind = Kind::tuned;
    T value{};
    std::filesystem::path file;
};

struct RunConfig {
    static constexpr int kVersion = 1;

    std::filesystem::path config_path;
    TaskKind task = TaskKind::qa;
    std::filesystem::path candidates;
    std::optional<std::filesystem::path> references;
    BackendConfig embeddings;
    BackendConfig nli;
    std::filesystem::path output_dir;

    MetricKind metric = MetricKind::hit_rate;
    DistanceMetric stability_metric = DistanceMetric::euclidean;
    DistanceMetric uncertainty_metric = DistanceMetric::euclidean;
    int k = 5;
    LengthPenaltyConfig length_penalty;
    UncertaintyConfig uncertainty;
    Source<Coefficients> coefficients;
    Source<ScalingFactors> scaling;
    ExtractionRule extraction;
    bool normalize_answers = true;
    double grid_step = 0.1;

    MetricSpec metric_spec() const { return {metric, extraction, normalize_answers}; }

    std::filesystem::path scores_path() const { return output_dir / "scores.jsonl"; }
    std::filesystem::path best_path() const { return output_dir / "best.json"; }
    std::filesystem::path sweep_path() const { return output_dir / "sweep.csv"; }
    std::filesystem::path grid_path() const { return output_dir / "grid.csv"; }
    std::filesystem::path selected_path() const { return output_dir / "selected.jsonl"; }
    std::filesystem::path report_path() const { return output_dir / "report.json"; }
    std::filesystem::path eval_path() const { return output_dir / "eval.jsonl"; }

    /// REFINE_CACHE_DIR if set, else <output_dir>/.cache.
    std::filesystem::path cache_dir() const;
};

/// Parses a config document. Relative paths resolve against `base_dir`.
/// Unknown keys, bad values and missing input files throw ConfigError.
RunConfig parse_config(const std::string& document, const std::filesystem::path& base_dir);

RunConfig load_config(const std::filesystem::path& path);

}  // namespace refine
