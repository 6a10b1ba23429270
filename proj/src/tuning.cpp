#include "refine/tuning.hpp"

#include <cmath>

#include "refine/error.hpp"
#include "refine/parallel.hpp"

namespace refine {
namespace {

Coefficients on_axis(Axis axis, double x, double rest) {
    switch (axis) {
        case Axis::alpha: return {x, rest, rest};
        case Axis::beta: return {rest, x, rest};
        case Axis::gamma: return {rest, rest, x};
    }
    return {x, rest, rest};
}

}  // namespace

Coefficients SimplexPoint::coefficients() const {
    const double m = steps;
    return {alpha_units / m, beta_units / m, gamma_units / m};
}

int grid_divisions(double step) {
    if (!(step > 0.0 && step <= 1.0)) {
        throw Error(ErrorCode::InvalidStep, "grid step must lie in (0, 1]");
    }
    const double inverse = 1.0 / step;
    const double rounded = std::round(inverse);
    if (std::abs(inverse - rounded) > 1e-9 * rounded || rounded > 10'000) {
        throw Error(ErrorCode::InvalidStep, "1 / step must be an integer (step " + std::to_string(step) + ")");
    }
    return static_cast<int>(rounded);
}

std::vector<SimplexPoint> simplex_grid(double step) {
    const int m = grid_divisions(step);
    std::vector<SimplexPoint> points;
    points.reserve(static_cast<std::size_t>((m + 1) * (m + 2) / 2));
    for (int a = 0; a <= m; ++a) {
        for (int b = 0; b <= m - a; ++b) {
            points.push_back({a, b, m - a - b, m});
        }
    }
    return points;
}

double evaluate_coefficients(const TuningSet& set, const Coefficients& c) {
    c.validate();
    if (set.samples.empty()) {
        throw Error(ErrorCode::EmptyValidation, "tuning set has no samples");
    }
    double sum = 0.0;
    std::vector<double> finals;
    for (const auto& sample : set.samples) {
        finals.clear();
        for (const auto& scores : sample.scores) {
            finals.push_back(fuse(scores, c));
        }
        sum += sample.metric[select(finals)];
    }
    return sum / static_cast<double>(set.samples.size()) * set.scale;
}

GridSearchResult grid_search(const TuningSet& set, double step, unsigned workers) {
    const std::vector<SimplexPoint> grid = simplex_grid(step);
    GridSearchResult result;
    result.table.resize(grid.size());
    parallel_for(grid.size(), workers, [&](std::size_t i) {
        const Coefficients c = grid[i].coefficients();
        result.table[i] = {c, grid[i], set.metric_name, evaluate_coefficients(set, c)};
    });
    result.best = result.table.front();
    for (const auto& point : result.table) {
        if (point.metric_value > result.best.metric_value) {
            result.best = point;
        }
    }
    return result;
}

std::string_view to_string(Axis axis) {
    switch (axis) {
        case Axis::alpha: return "alpha";
        case Axis::beta: return "beta";
        case Axis::gamma: return "gamma";
    }
    return "alpha";
}

Coefficients sweep_coefficients(Axis axis, double x) {
    return on_axis(axis, x, (1.0 - x) / 2.0);
}

std::vector<SweepPoint> sensitivity_sweep(const TuningSet& set, Axis axis, double step) {
    const int m = grid_divisions(step);
    std::vector<SweepPoint> curve;
    curve.reserve(static_cast<std::size_t>(m + 1));
    for (int i = 0; i <= m; ++i) {
        const double x = static_cast<double>(i) / m;
        const Coefficients c = on_axis(axis, x, static_cast<double>(m - i) / (2.0 * m));
        curve.push_back({axis, x, c, set.metric_name, evaluate_coefficients(set, c)});
    }
    return curve;
}

}  // namespace refine
