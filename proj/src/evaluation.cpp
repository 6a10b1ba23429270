#include "refine/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "refine/dedup.hpp"
#include "refine/error.hpp"

namespace refine {
namespace {

double f1_percent(double overlap, double predicted, double reference) {
    if (predicted == 0.0 || reference == 0.0 || overlap == 0.0) {
        return 0.0;
    }
    const double precision = overlap / predicted;
    const double recall = overlap / reference;
    return 100.0 * 2.0 * precision * recall / (precision + recall);
}

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& tokens, int n) {
    std::map<std::vector<std::string>, int> counts;
    const auto size = static_cast<std::ptrdiff_t>(tokens.size());
    for (std::ptrdiff_t i = 0; i + n <= size; ++i) {
        ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
    }
    return counts;
}

}  // namespace

std::string_view to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::hit_rate: return "hit_rate";
        case MetricKind::rouge1: return "rouge1";
        case MetricKind::rouge2: return "rouge2";
        case MetricKind::rougeL: return "rougeL";
    }
    return "hit_rate";
}

MetricKind parse_metric_kind(std::string_view text) {
    if (text == "hit_rate") return MetricKind::hit_rate;
    if (text == "rouge1") return MetricKind::rouge1;
    if (text == "rouge2") return MetricKind::rouge2;
    if (text == "rougeL") return MetricKind::rougeL;
    throw Error(ErrorCode::ConfigError, "unknown metric \"" + std::string(text) + "\"");
}

double metric_scale(MetricKind kind) {
    return kind == MetricKind::hit_rate ? 100.0 : 1.0;
}

int hit_rate(std::string_view prediction, std::span<const std::string> answers, bool normalize) {
    const std::string predicted = normalize ? normalize_answer(prediction) : std::string(prediction);
    for (const auto& answer : answers) {
        if (predicted == (normalize ? normalize_answer(answer) : answer)) {
            return 1;
        }
    }
    return 0;
}

double rouge_n(std::string_view prediction, std::string_view reference, int n) {
    if (n < 1) {
        throw Error(ErrorCode::ConfigError, "rouge n must be >= 1");
    }
    const auto predicted = ngram_counts(metric_tokens(prediction), n);
    const auto expected = ngram_counts(metric_tokens(reference), n);
    double overlap = 0.0;
    double predicted_total = 0.0;
    double expected_total = 0.0;
    for (const auto& [gram, count] : predicted) {
        predicted_total += count;
        if (const auto it = expected.find(gram); it != expected.end()) {
            overlap += std::min(count, it->second);
        }
    }
    for (const auto& [gram, count] : expected) {
        expected_total += count;
    }
    return f1_percent(overlap, predicted_total, expected_total);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
    std::vector<std::size_t> previous(b.size() + 1, 0);
    std::vector<std::size_t> current(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            current[j] = a[i - 1] == b[j - 1] ? previous[j - 1] + 1 : std::max(previous[j], current[j - 1]);
        }
        std::swap(previous, current);
    }
    return previous[b.size()];
}

double rouge_l(std::string_view prediction, std::string_view reference) {
    const auto predicted = metric_tokens(prediction);
    const auto expected = metric_tokens(reference);
    const double lcs = static_cast<double>(lcs_length(predicted, expected));
    return f1_percent(lcs, static_cast<double>(predicted.size()), static_cast<double>(expected.size()));
}

double sample_metric(std::string_view selected_text, const ReferenceRecord& reference, const MetricSpec& spec) {
    switch (spec.kind) {
        case MetricKind::hit_rate:
            return hit_rate(extract_answer(selected_text, spec.extraction), reference.answers, spec.normalize);
        case MetricKind::rouge1: return rouge_n(selected_text, reference.answers.front(), 1);
        case MetricKind::rouge2: return rouge_n(selected_text, reference.answers.front(), 2);
        case MetricKind::rougeL: return rouge_l(selected_text, reference.answers.front());
    }
    return 0.0;
}

Selection no_refinement(const CandidateGroup& group) {
    if (group.candidates.empty()) {
        throw Error(ErrorCode::EmptyCandidateSet, "sample \"" + group.sample_id + "\" has no candidates");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < group.candidates.size(); ++i) {
        if (group.candidates[i].min_rank() < group.candidates[best].min_rank()) {
            best = i;
        }
    }
    return {best, group.candidates[best].text};
}

Selection self_consistency(const CandidateGroup& group, const ExtractionRule& extraction, bool normalize) {
    if (group.candidates.empty()) {
        throw Error(ErrorCode::EmptyCandidateSet, "sample \"" + group.sample_id + "\" has no candidates");
    }
    struct Vote {
        int count = 0;
        int first_rank = 0;
        std::size_t candidate_index = 0;
        std::string answer;
    };
    std::vector<std::tuple<int, std::size_t>> raw;  // (rank, candidate index)
    for (std::size_t c = 0; c < group.candidates.size(); ++c) {
        for (int rank : group.candidates[c].source_ranks) {
            raw.emplace_back(rank, c);
        }
    }
    std::sort(raw.begin(), raw.end());

    std::vector<Vote> votes;
    std::unordered_map<std::string, std::size_t> index_by_class;
    for (const auto& [rank, c] : raw) {
        std::string answer = extract_answer(group.candidates[c].text, extraction);
        std::string label = normalize ? normalize_answer(answer) : answer;
        auto [it, inserted] = index_by_class.try_emplace(std::move(label), votes.size());
        if (inserted) {
            votes.push_back({0, rank, c, std::move(answer)});
        }
        ++votes[it->second].count;
    }
    // votes are in first-seen rank order, so the first maximum is the earliest class.
    const Vote* best = &votes.front();
    for (const auto& vote : votes) {
        if (vote.count > best->count) best = &vote;
    }
    return {best->candidate_index, best->answer};
}

OracleResult oracle(const CandidateGroup& group, const ReferenceRecord& reference, const MetricSpec& spec) {
    if (group.candidates.empty()) {
        throw Error(ErrorCode::EmptyCandidateSet, "sample \"" + group.sample_id + "\" has no candidates");
    }
    OracleResult best{0, sample_metric(group.candidates.front().text, reference, spec)};
    for (std::size_t i = 1; i < group.candidates.size(); ++i) {
        const double value = sample_metric(group.candidates[i].text, reference, spec);
        if (value > best.value) {
            best = {i, value};
        }
    }
    return best;
}

int method_order(std::string_view method) {
    static constexpr std::string_view kOrder[] = {"no_refinement", "self_consistency", "ceret", "oracle"};
    for (int i = 0; i < 4; ++i) {
        if (kOrder[i] == method) return i;
    }
    return 4;
}

double round_to_one_decimal(double value) {
    return std::round(value * 10.0) / 10.0;
}

EvalReport evaluate_run(const SelectionsByMethod& selections, std::span<const ReferenceRecord> references,
                        const MetricSpec& spec) {
    std::vector<std::string> methods;
    for (const auto& [method, unused] : selections) {
        methods.push_back(method);
    }
    std::stable_sort(methods.begin(), methods.end(), [](const std::string& a, const std::string& b) {
        return method_order(a) < method_order(b);
    });

    for (const auto& method : methods) {
        const auto& chosen = selections.at(method);
        std::string absent;
        std::size_t missing = 0;
        for (const auto& reference : references) {
            if (!chosen.contains(reference.sample_id)) {
                if (missing++ < 20) absent += (absent.empty() ? "" : ", ") + reference.sample_id;
            }
        }
        if (missing > 0) {
            throw Error(ErrorCode::MissingSample, "method \"" + method + "\" has no selection for " +
                                                      std::to_string(missing) + " sample(s): " + absent +
                                                      (missing > 20 ? ", ..." : ""));
        }
    }

    EvalReport report;
    report.metric_name = std::string(to_string(spec.kind));
    std::vector<double> sums(methods.size(), 0.0);
    for (const auto& reference : references) {
        for (std::size_t m = 0; m < methods.size(); ++m) {
            const std::string& text = selections.at(methods[m]).at(reference.sample_id);
            const double value = sample_metric(text, reference, spec);
            sums[m] += value;
            report.records.push_back({reference.sample_id, methods[m], text, report.metric_name, value});
        }
    }
    const double n = static_cast<double>(references.size());
    for (std::size_t m = 0; m < methods.size(); ++m) {
        const double aggregate = references.empty() ? 0.0 : sums[m] / n * metric_scale(spec.kind);
        report.methods.push_back({methods[m], {aggregate, references.size()}});
    }

    const auto oracle_it = std::find_if(report.methods.begin(), report.methods.end(),
                                        [](const auto& entry) { return entry.first == "oracle"; });
    if (oracle_it != report.methods.end()) {
        for (const auto& [method, aggregate] : report.methods) {
            if (aggregate.aggregate > oracle_it->second.aggregate + 1e-9) {
                throw Error(ErrorCode::ValidationFailed, "method \"" + method + "\" exceeds the oracle aggregate");
            }
        }
    }
    return report;
}

}  // namespace refine
