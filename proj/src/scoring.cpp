#include "refine/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "refine/error.hpp"
#include "refine/parallel.hpp"
#include "refine/text.hpp"

namespace refine {
namespace {

const Vector& embedding_of(const CandidateGroup& group, const Candidate& candidate) {
    if (!candidate.embedding) {
        throw Error(ErrorCode::MissingEmbedding, "candidate " + std::to_string(candidate.candidate_id) +
                                                     " of sample \"" + group.sample_id + "\" has no embedding");
    }
    return *candidate.embedding;
}

}  // namespace

std::string_view to_string(DistanceMetric metric) {
    return metric == DistanceMetric::euclidean ? "euclidean" : "cosine";
}

double distance(std::span<const double> a, std::span<const double> b, DistanceMetric metric) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch, "distance between vectors of length " + std::to_string(a.size()) +
                                                      " and " + std::to_string(b.size()));
    }
    if (metric == DistanceMetric::euclidean) {
        double sum = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double diff = a[i] - b[i];
            sum += diff * diff;
        }
        return std::sqrt(sum);
    }
    double dot = 0.0;
    double norm_a = 0.0;
    double norm_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        norm_a += a[i] * a[i];
        norm_b += b[i] * b[i];
    }
    if (norm_a == 0.0 || norm_b == 0.0) {
        throw Error(ErrorCode::ZeroVector, "cosine distance is undefined for a zero vector");
    }
    return std::clamp(1.0 - dot / (std::sqrt(norm_a) * std::sqrt(norm_b)), 0.0, 2.0);
}

void LengthPenaltyConfig::validate() const {
    if (!(q >= 0.0 && q < 1.0)) {
        throw Error(ErrorCode::ConfigError, "length penalty q must lie in [0, 1)");
    }
    if (!(p > 1.0)) {
        throw Error(ErrorCode::ConfigError, "length penalty p must exceed 1");
    }
}

std::vector<double> stability_scores(const CandidateGroup& group, DistanceMetric metric) {
    if (group.candidates.empty()) {
        throw Error(ErrorCode::EmptyCandidateSet, "sample \"" + group.sample_id + "\" has no candidates");
    }
    const std::size_t dim = embedding_of(group, group.candidates.front()).size();
    Vector reference(dim, 0.0);
    double total = 0.0;
    for (const auto& candidate : group.candidates) {
        const Vector& e = embedding_of(group, candidate);
        if (e.size() != dim) {
            throw Error(ErrorCode::DimensionMismatch, "mixed embedding dimensions in sample \"" + group.sample_id + "\"");
        }
        for (std::size_t d = 0; d < dim; ++d) {
            reference[d] += candidate.multiplicity * e[d];
        }
        total += candidate.multiplicity;
    }
    for (double& x : reference) {
        x /= total;
    }
    std::vector<double> scores;
    scores.reserve(group.candidates.size());
    for (const auto& candidate : group.candidates) {
        scores.push_back(-distance(embedding_of(group, candidate), reference, metric));
    }
    return scores;
}

double length_penalty(std::string_view text, const LengthPenaltyConfig& cfg) {
    const double tokens = static_cast<double>(whitespace_token_count(text));
    return 1.0 - std::pow(1.0 + cfg.q * tokens, cfg.p);
}

std::vector<EntailRequest> entailment_requests(const CandidateGroup& group) {
    std::vector<EntailRequest> requests;
    for (const auto& premise : group.candidates) {
        for (const auto& hypothesis : group.candidates) {
            if (premise.candidate_id != hypothesis.candidate_id) {
                requests.push_back({premise.text, hypothesis.text,
                                    {group.sample_id, premise.min_rank(), hypothesis.min_rank()}});
            } else if (premise.multiplicity > 1) {
                requests.push_back({premise.text, premise.text,
                                    {group.sample_id, premise.source_ranks[0], premise.source_ranks[1]}});
            }
        }
    }
    return requests;
}

std::vector<double> entailment_scores(const CandidateGroup& group, EntailmentProvider& provider,
                                      const LengthPenaltyConfig& cfg) {
    const std::size_t n = group.candidates.size();
    const std::vector<EntailRequest> requests = entailment_requests(group);
    const std::vector<double> values = provider.entail_pairs(requests);

    // ent[c][c2] = ENT(text_c, text_c2); the diagonal is only filled for merged candidates.
    std::vector<std::vector<double>> ent(n, std::vector<double>(n, 0.0));
    std::size_t next = 0;
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t c2 = 0; c2 < n; ++c2) {
            if (c != c2 || group.candidates[c].multiplicity > 1) {
                ent[c][c2] = values[next++];
            }
        }
    }

    // Raw predictions in rank order, each mapped to its candidate.
    std::vector<std::pair<int, std::size_t>> raw;
    for (std::size_t c = 0; c < n; ++c) {
        for (int rank : group.candidates[c].source_ranks) {
            raw.emplace_back(rank, c);
        }
    }
    std::sort(raw.begin(), raw.end());

    std::vector<double> scores;
    scores.reserve(n);
    const double k = static_cast<double>(raw.size());
    for (std::size_t c = 0; c < n; ++c) {
        const int own_rank = group.candidates[c].min_rank();
        double sum = 0.0;
        for (const auto& [rank, other] : raw) {
            if (rank != own_rank) {
                sum += ent[c][other];
            }
        }
        scores.push_back(sum / k + length_penalty(group.candidates[c].text, cfg));
    }
    return scores;
}

DistanceTable::DistanceTable(std::span<const Vector* const> points, DistanceMetric metric, unsigned workers)
  : size_{points.size()}
  , values_(size_ < 2 ? 0 : size_ * (size_ - 1) / 2) {
    parallel_for(size_, workers, [&](std::size_t i) {
        double* row = values_.data() + offset(i);
        for (std::size_t j = i + 1; j < size_; ++j) {
            row[j - i - 1] = distance(*points[i], *points[j], metric);
        }
    });
}

std::vector<std::size_t> knn(std::size_t i, const DistanceTable& table, std::size_t s,
                             std::span<const PointLabel> labels) {
    const std::size_t n = table.size();
    if (n < 2) return {};
    s = std::min(s, n - 1);
    std::vector<std::size_t> others;
    others.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
        if (j != i) others.push_back(j);
    }
    auto closer = [&](std::size_t a, std::size_t b) {
        const double da = table(i, a);
        const double db = table(i, b);
        if (da != db) return da < db;
        if (labels[a].sample_id != labels[b].sample_id) return labels[a].sample_id < labels[b].sample_id;
        return labels[a].candidate_id < labels[b].candidate_id;
    };
    std::partial_sort(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(s), others.end(), closer);
    others.resize(s);
    return others;
}

UncertaintyResult uncertainty_scores(std::span<const CandidateGroup> groups, DistanceMetric metric,
                                     const UncertaintyConfig& cfg, unsigned workers) {
    UncertaintyResult result;
    result.scores.resize(groups.size());
    const std::size_t limit = std::max<std::size_t>(1, cfg.batch_limit);

    for (std::size_t begin = 0; begin < groups.size(); begin += limit) {
        const std::size_t end = std::min(groups.size(), begin + limit);

        std::vector<const Vector*> points;
        std::vector<PointLabel> labels;
        std::vector<std::size_t> owner;
        for (std::size_t g = begin; g < end; ++g) {
            const CandidateGroup& group = groups[g];
            result.scores[g].assign(group.candidates.size(), 0.0);
            for (const auto& candidate : group.candidates) {
                points.push_back(&embedding_of(group, candidate));
                labels.push_back({group.sample_id, candidate.candidate_id});
                owner.push_back(g);
            }
        }
        if (points.size() < 2) continue;
        if (cfg.neighborhood_size > points.size() - 1) {
            ++result.clamped_batches;
        }

        const DistanceTable table(points, metric, workers);
        std::vector<double> flat(points.size(), 0.0);
        parallel_for(points.size(), workers, [&](std::size_t i) {
            double score = 0.0;
            for (std::size_t j : knn(i, table, cfg.neighborhood_size, labels)) {
                if (owner[j] != owner[i]) {
                    score -= 1.0 / (1.0 + table(i, j));
                }
            }
            flat[i] = score;
        });

        std::size_t next = 0;
        for (std::size_t g = begin; g < end; ++g) {
            for (double& value : result.scores[g]) {
                value = flat[next++];
            }
        }
    }
    return result;
}

}  // namespace refine
