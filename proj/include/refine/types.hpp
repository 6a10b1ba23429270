#pragma once

#include <optional>
#include <string>
#include <vector>

namespace refine {

using Vector = std::vector<double>;

/// One sampled generation for one input. `rank` is the beam-sample index.
struct RawPrediction {
    std::string sample_id;
    int rank = 0;
    std::string text;
};

struct Candidate {
    int candidate_id = 0;
    std::string text;
    int multiplicity = 1;
    std::vector<int> source_ranks;  // ascending; multiplicity == source_ranks.size()
    std::optional<Vector> embedding;

    int min_rank() const { return source_ranks.front(); }
};

/// Deduplicated candidates of one input, ordered by minimum source rank.
struct CandidateGroup {
    std::string sample_id;
    std::vector<Candidate> candidates;
    int k_raw = 0;
};

enum class TaskKind { qa, summarization };

struct ReferenceRecord {
    std::string sample_id;
    TaskKind task = TaskKind::qa;
    std::vector<std::string> answers;
};

struct ScoreVector {
    double s_sta = 0.0;
    double s_ent = 0.0;
    double s_unc = 0.0;
    double s_sta_scaled = 0.5;
    double s_ent_scaled = 0.5;
    double s_unc_scaled = 0.5;
    double final = 0.5;
};

}  // namespace refine
