#include "refine/dedup.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "refine/error.hpp"
#include "refine/text.hpp"

namespace refine {

CandidateGroup dedup(std::span<const RawPrediction> raw) {
    if (raw.empty()) {
        throw Error(ErrorCode::EmptyCandidateSet, "no predictions to deduplicate");
    }
    std::vector<const RawPrediction*> ordered;
    ordered.reserve(raw.size());
    for (const auto& prediction : raw) {
        ordered.push_back(&prediction);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const RawPrediction* a, const RawPrediction* b) { return a->rank < b->rank; });

    CandidateGroup group;
    group.sample_id = raw.front().sample_id;
    group.k_raw = static_cast<int>(raw.size());

    std::unordered_map<std::string, std::size_t> index_by_canonical;
    for (const RawPrediction* prediction : ordered) {
        auto [it, inserted] = index_by_canonical.try_emplace(canonicalize(prediction->text), group.candidates.size());
        if (inserted) {
            Candidate candidate;
            candidate.candidate_id = static_cast<int>(group.candidates.size());
            candidate.text = prediction->text;
            candidate.multiplicity = 1;
            candidate.source_ranks.push_back(prediction->rank);
            group.candidates.push_back(std::move(candidate));
        } else {
            Candidate& candidate = group.candidates[it->second];
            ++candidate.multiplicity;
            candidate.source_ranks.push_back(prediction->rank);
        }
    }
    return group;
}

std::vector<CandidateGroup> group_predictions(std::span<const RawPrediction> raw) {
    std::vector<std::vector<RawPrediction>> buckets;
    std::unordered_map<std::string, std::size_t> bucket_by_id;
    for (const auto& prediction : raw) {
        auto [it, inserted] = bucket_by_id.try_emplace(prediction.sample_id, buckets.size());
        if (inserted) {
            buckets.emplace_back();
        }
        buckets[it->second].push_back(prediction);
    }
    std::vector<CandidateGroup> groups;
    groups.reserve(buckets.size());
    for (const auto& bucket : buckets) {
        groups.push_back(dedup(bucket));
    }
    return groups;
}

std::vector<RawPrediction> expand(const CandidateGroup& group) {
    std::vector<RawPrediction> raw;
    raw.reserve(static_cast<std::size_t>(group.k_raw));
    for (const auto& candidate : group.candidates) {
        for (int rank : candidate.source_ranks) {
            raw.push_back({group.sample_id, rank, candidate.text});
        }
    }
    std::stable_sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
    return raw;
}

}  // namespace refine
