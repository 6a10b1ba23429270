#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "refine/text.hpp"
#include "refine/types.hpp"

namespace refine {

enum class MetricKind { hit_rate, rouge1, rouge2, rougeL };

std::string_view to_string(MetricKind kind);
MetricKind parse_metric_kind(std::string_view text);

/// Per-sample values are 0/1 for hit rate; aggregates multiply by this.
double metric_scale(MetricKind kind);

/// 1 iff the prediction equals one of the answers (after normalize_answer
/// on both sides unless `normalize` is false).
int hit_rate(std::string_view prediction, std::span<const std::string> answers, bool normalize = true);

/// Clipped n-gram overlap F1 on metric_tokens, scaled to [0, 100].
double rouge_n(std::string_view prediction, std::string_view reference, int n);

/// Token LCS F1, scaled to [0, 100].
double rouge_l(std::string_view prediction, std::string_view reference);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

struct MetricSpec {
    MetricKind kind = MetricKind::hit_rate;
    ExtractionRule extraction;
    bool normalize = true;
};

/// Metric of one selected text against its reference. For hit rate the
/// answer is extracted first; Rouge uses the first (only) reference.
double sample_metric(std::string_view selected_text, const ReferenceRecord& reference, const MetricSpec& spec);

struct Selection {
    std::size_t candidate_index = 0;
    std::string text;
};

/// The candidate holding the lowest raw rank.
Selection no_refinement(const CandidateGroup& group);

/// Modal extracted answer over all raw predictions; ties go to the class
/// seen at the earliest rank. `text` is the extracted answer.
Selection self_consistency(const CandidateGroup& group, const ExtractionRule& extraction, bool normalize = true);

struct OracleResult {
    std::size_t candidate_index = 0;
    double value = 0.0;
};

/// Best per-sample metric over the candidates (first index on ties).
OracleResult oracle(const CandidateGroup& group, const ReferenceRecord& reference, const MetricSpec& spec);

struct EvalRecord {
    std::string sample_id;
    std::string method;
    std::string selected_text;
    std::string metric_name;
    double metric_value = 0.0;
};

struct MethodAggregate {
    double aggregate = 0.0;  // full precision, report scale
    std::size_t n = 0;
};

struct EvalReport {
    std::string metric_name;
    std::vector<std::pair<std::string, MethodAggregate>> methods;  // canonical method order
    std::vector<EvalRecord> records;                               // reference order x method order
};

/// method -> sample_id -> selected text
using SelectionsByMethod = std::map<std::string, std::map<std::string, std::string>>;

/// Aggregates every method over the referenced samples. Throws MissingSample
/// when a method lacks a referenced sample, and ValidationFailed if an
/// "oracle" entry is beaten by another method.
EvalReport evaluate_run(const SelectionsByMethod& selections, std::span<const ReferenceRecord> references,
                        const MetricSpec& spec);

/// Canonical ordering position of a method name (unknown names sort last).
int method_order(std::string_view method);

double round_to_one_decimal(double value);

}  // namespace refine
