#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "refine/types.hpp"

namespace refine {

/// Fusion weights on the probability simplex.
struct Coefficients {
    double alpha = 1.0 / 3.0;
    double beta = 1.0 / 3.0;
    double gamma = 1.0 / 3.0;

    static constexpr double kSumTolerance = 1e-12;

    bool valid() const;
    /// Throws InvalidCoefficients unless valid().
    void validate() const;

    auto operator<=>(const Coefficients&) const = default;
};

struct ScalingFactors {
    enum class Source { fixed, fitted };

    double u_sta = 1.0;
    double u_ent = 1.0;
    double u_unc = 1.0;
    Source source = Source::fixed;
    std::string validation_run_id;             // set when fitted
    std::array<bool, 3> degenerate{};          // sta, ent, unc had ~zero spread

    /// Throws ConfigError unless every factor is finite and > 0.
    void validate() const;
};

/// u = 1 / population standard deviation of each raw dimension; dimensions
/// with spread below 1e-9 fall back to u = 1 and are flagged.
ScalingFactors fit_scaling(std::span<const ScoreVector> validation, std::string validation_run_id = {});

/// 1 / (1 + exp(-u * raw)), kept inside the open interval (0, 1).
double sigmoid_scale(double raw, double u);

/// Fills the scaled fields of `scores` from its raw fields.
ScoreVector apply_scaling(ScoreVector scores, const ScalingFactors& u);

double fuse(const ScoreVector& scaled, const Coefficients& c);

/// Index of the highest score. Candidates are indexed in ascending
/// minimum-rank order, so the first maximum is also the earliest beam rank.
std::size_t select(std::span<const double> final_scores);

}  // namespace refine
