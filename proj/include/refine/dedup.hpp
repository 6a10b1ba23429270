#pragma once

#include <span>
#include <vector>

#include "refine/types.hpp"

namespace refine {

/// Merge predictions of one sample whose canonical texts coincide.
/// Throws EmptyCandidateSet on empty input.
CandidateGroup dedup(std::span<const RawPrediction> raw);

/// Group a flat prediction list by sample_id (first-appearance order) and dedup each.
std::vector<CandidateGroup> group_predictions(std::span<const RawPrediction> raw);

/// Expand a group back to raw predictions, one per source rank, each carrying
/// its candidate's text.
std::vector<RawPrediction> expand(const CandidateGroup& group);

}  // namespace refine
