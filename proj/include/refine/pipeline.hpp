#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "refine/config.hpp"
#include "refine/evaluation.hpp"
#include "refine/providers.hpp"
#include "refine/tuning.hpp"

namespace refine {

struct CommandOptions {
    unsigned workers = 1;
    bool force = false;                          // score despite validation errors
    std::vector<std::string> methods{"ceret"};   // select: methods to emit; "all" expands
};

struct Diagnostic {
    enum class Severity { error, warning };
    Severity severity = Severity::error;
    std::string file;
    std::size_t line = 0;  // 0 when not tied to a line
    std::string key;
    std::string message;
};

struct ValidationReport {
    std::vector<Diagnostic> diagnostics;

    std::size_t errors() const;
    std::size_t warnings() const;
    bool clean() const { return errors() == 0; }
};

std::string format_diagnostic(const Diagnostic& d);

/// Schema conformance of every input file, per-sample prediction counts,
/// embedding coverage of every (sample_id, rank), and, for file-backed NLI,
/// coverage of every within-sample ordered rank pair.
ValidationReport cmd_validate(const RunConfig& config);

struct ScoreSummary {
    std::size_t samples = 0;
    std::size_t candidates = 0;
    std::size_t clamped_batches = 0;
    CacheStats embedding_cache;
    CacheStats entailment_cache;
};

/// dedup -> stability -> entailment -> uncertainty; writes scores.jsonl.
ScoreSummary cmd_score(const RunConfig& config, const CommandOptions& options);

struct TuneSummary {
    GridPoint best;
    ScalingFactors scaling;
    std::size_t grid_points = 0;
};

/// Fits scaling if requested, grid-searches the coefficients and writes
/// best.json, grid.csv and the three axis sweeps to sweep.csv.
TuneSummary cmd_tune(const RunConfig& config, const CommandOptions& options);

struct SelectSummary {
    std::size_t samples = 0;
    std::size_t rows = 0;
    Coefficients coefficients;
    ScalingFactors scaling;
};

/// Writes selected.jsonl: one "ceret" row per sample plus any requested baselines.
SelectSummary cmd_select(const RunConfig& config, const CommandOptions& options);

/// Writes report.json and eval.jsonl; the oracle is always included.
EvalReport cmd_eval(const RunConfig& config, const CommandOptions& options);

/// Joined candidates and scores of one sample.
struct ScoredGroup {
    CandidateGroup group;
    std::vector<ScoreVector> scores;
};

/// Reads candidates.jsonl and scores.jsonl and checks they describe the same candidates.
std::vector<ScoredGroup> load_scored_groups(const RunConfig& config);

/// Short content hash identifying a scores file.
std::string run_id_of(const std::filesystem::path& scores_path);

}  // namespace refine
