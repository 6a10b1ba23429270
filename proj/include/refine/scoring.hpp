#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "refine/providers.hpp"
#include "refine/types.hpp"

namespace refine {

enum class DistanceMetric { euclidean, cosine };

std::string_view to_string(DistanceMetric metric);

/// euclidean: sqrt(sum (a_i - b_i)^2). cosine: 1 - a.b / (|a||b|), clamped to
/// [0, 2]; throws ZeroVector when either norm is zero.
double distance(std::span<const double> a, std::span<const double> b, DistanceMetric metric);

struct LengthPenaltyConfig {
    double q = 0.0;  // 0 <= q < 1; 0 disables the penalty
    double p = 2.0;  // p > 1

    /// Throws ConfigError outside the admissible ranges.
    void validate() const;
};

struct UncertaintyConfig {
    std::size_t neighborhood_size = 5;
    std::size_t batch_limit = 1000;  // groups per independently scored batch
};

/// Negative distance of each candidate embedding to the multiplicity-weighted
/// mean embedding of its group. All values are <= 0.
std::vector<double> stability_scores(const CandidateGroup& group, DistanceMetric metric = DistanceMetric::euclidean);

/// 1 - (1 + q * tokens)^p, with tokens counted on whitespace.
double length_penalty(std::string_view text, const LengthPenaltyConfig& cfg);

/// The distinct directed pairs needed to score `group`: (c, c') for every
/// ordered candidate pair plus (c, c) for merged candidates. File keys use
/// the minimum source rank of each side (the second rank for self pairs).
std::vector<EntailRequest> entailment_requests(const CandidateGroup& group);

/// Mean directed entailment from each raw prediction to its k-1 siblings,
/// divided by k, plus the length penalty. Merged copies share one value.
std::vector<double> entailment_scores(const CandidateGroup& group, EntailmentProvider& provider,
                                      const LengthPenaltyConfig& cfg);

/// Condensed symmetric distance table over a fixed point set.
class DistanceTable {
  public:
    DistanceTable(std::span<const Vector* const> points, DistanceMetric metric, unsigned workers = 1);

    std::size_t size() const { return size_; }

    double operator()(std::size_t i, std::size_t j) const {
        if (i == j) return 0.0;
        if (i > j) std::swap(i, j);
        return values_[offset(i) + (j - i - 1)];
    }

  private:
    std::size_t offset(std::size_t i) const { return i * size_ - i * (i + 1) / 2; }

    std::size_t size_;
    std::vector<double> values_;
};

/// Identifies a point for deterministic kNN tie-breaking.
struct PointLabel {
    std::string_view sample_id;
    int candidate_id = 0;
};

/// The `s` points j != i closest to i, ascending by (distance, sample_id,
/// candidate_id). `s` is clamped to size() - 1.
std::vector<std::size_t> knn(std::size_t i, const DistanceTable& table, std::size_t s,
                             std::span<const PointLabel> labels);

struct UncertaintyResult {
    std::vector<std::vector<double>> scores;  // [group][candidate]
    std::size_t clamped_batches = 0;          // batches where s exceeded the point count - 1
};

/// Minus the sum over the s nearest neighbours from other inputs of
/// 1 / (1 + distance). Groups are split into consecutive batches of at most
/// batch_limit and scored independently. Values lie in [-s, 0].
UncertaintyResult uncertainty_scores(std::span<const CandidateGroup> groups, DistanceMetric metric,
                                     const UncertaintyConfig& cfg, unsigned workers = 1);

}  // namespace refine
