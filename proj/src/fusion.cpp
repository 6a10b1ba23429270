#include "refine/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "refine/error.hpp"

namespace refine {
namespace {

struct Spread {
    double u;
    bool degenerate;
};

template <typename Field>
Spread inverse_spread(std::span<const ScoreVector> scores, Field field) {
    double mean = 0.0;
    for (const auto& s : scores) mean += s.*field;
    mean /= static_cast<double>(scores.size());
    double var = 0.0;
    for (const auto& s : scores) {
        const double d = s.*field - mean;
        var += d * d;
    }
    const double sigma = std::sqrt(var / static_cast<double>(scores.size()));
    if (!(sigma >= 1e-9)) {
        return {1.0, true};
    }
    return {1.0 / sigma, false};
}

}  // namespace

bool Coefficients::valid() const {
    const bool finite = std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(gamma);
    return finite && alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0 &&
           std::abs(alpha + beta + gamma - 1.0) <= kSumTolerance;
}

void Coefficients::validate() const {
    if (!valid()) {
        throw Error(ErrorCode::InvalidCoefficients,
                    "coefficients must be non-negative and sum to 1 (got alpha=" + std::to_string(alpha) +
                        ", beta=" + std::to_string(beta) + ", gamma=" + std::to_string(gamma) + ")");
    }
}

void ScalingFactors::validate() const {
    for (double u : {u_sta, u_ent, u_unc}) {
        if (!(std::isfinite(u) && u > 0.0)) {
            throw Error(ErrorCode::ConfigError, "scaling factors must be finite and positive");
        }
    }
}

ScalingFactors fit_scaling(std::span<const ScoreVector> validation, std::string validation_run_id) {
    if (validation.empty()) {
        throw Error(ErrorCode::EmptyValidation, "cannot fit scaling factors on an empty validation set");
    }
    const Spread sta = inverse_spread(validation, &ScoreVector::s_sta);
    const Spread ent = inverse_spread(validation, &ScoreVector::s_ent);
    const Spread unc = inverse_spread(validation, &ScoreVector::s_unc);
    ScalingFactors factors;
    factors.u_sta = sta.u;
    factors.u_ent = ent.u;
    factors.u_unc = unc.u;
    factors.source = ScalingFactors::Source::fitted;
    factors.validation_run_id = std::move(validation_run_id);
    factors.degenerate = {sta.degenerate, ent.degenerate, unc.degenerate};
    return factors;
}

double sigmoid_scale(double raw, double u) {
    static const double lowest = std::numeric_limits<double>::min();
    static const double highest = std::nextafter(1.0, 0.0);
    if (!(u > 0.0) || !std::isfinite(u)) {
        throw Error(ErrorCode::ConfigError, "scaling factor must be finite and positive");
    }
    const double value = 1.0 / (1.0 + std::exp(-u * raw));
    return std::clamp(value, lowest, highest);
}

ScoreVector apply_scaling(ScoreVector scores, const ScalingFactors& u) {
    scores.s_sta_scaled = sigmoid_scale(scores.s_sta, u.u_sta);
    scores.s_ent_scaled = sigmoid_scale(scores.s_ent, u.u_ent);
    scores.s_unc_scaled = sigmoid_scale(scores.s_unc, u.u_unc);
    return scores;
}

double fuse(const ScoreVector& scaled, const Coefficients& c) {
    c.validate();
    const double value = c.alpha * scaled.s_sta_scaled + c.beta * scaled.s_ent_scaled + c.gamma * scaled.s_unc_scaled;
    return std::clamp(value, 0.0, 1.0);
}

std::size_t select(std::span<const double> final_scores) {
    if (final_scores.empty()) {
        throw Error(ErrorCode::EmptyCandidateSet, "cannot select from an empty group");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < final_scores.size(); ++i) {
        if (final_scores[i] > final_scores[best]) {
            best = i;
        }
    }
    return best;
}

}  // namespace refine
