#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "refine/fusion.hpp"
#include "refine/types.hpp"

namespace refine {

/// A simplex point held as integer step counts so that
/// alpha_units + beta_units + gamma_units == steps exactly.
struct SimplexPoint {
    int alpha_units = 0;
    int beta_units = 0;
    int gamma_units = 0;
    int steps = 1;

    Coefficients coefficients() const;
};

/// All points (a, b, c) / m with a + b + c = m and m = 1 / step, in
/// lexicographic (alpha, beta) ascending order. Throws InvalidStep unless
/// 1 / step is a positive integer.
std::vector<SimplexPoint> simplex_grid(double step = 0.1);

/// Number of grid divisions for `step`; throws InvalidStep.
int grid_divisions(double step);

struct TuningSample {
    std::vector<ScoreVector> scores;  // scaled fields filled, candidate order
    std::vector<double> metric;       // per-candidate metric against the reference
};

/// Cached scores of a validation run. Only fusion, selection and metric
/// averaging depend on the coefficients, so every grid point reuses them.
struct TuningSet {
    std::vector<TuningSample> samples;
    std::string metric_name;
    double scale = 1.0;  // aggregate = mean(per-sample metric) * scale
};

/// Aggregate metric of the selections made under `c`.
double evaluate_coefficients(const TuningSet& set, const Coefficients& c);

struct GridPoint {
    Coefficients coefficients;
    SimplexPoint point;
    std::string metric_name;
    double metric_value = 0.0;
};

struct GridSearchResult {
    GridPoint best;
    std::vector<GridPoint> table;  // every grid point, in simplex_grid order
};

/// Maximiser over simplex_grid(step); ties go to the lexicographically
/// smallest (alpha, beta, gamma).
GridSearchResult grid_search(const TuningSet& set, double step = 0.1, unsigned workers = 1);

enum class Axis { alpha, beta, gamma };

std::string_view to_string(Axis axis);

/// `x` on `axis`, the other two weights at (1 - x) / 2 each.
Coefficients sweep_coefficients(Axis axis, double x);

struct SweepPoint {
    Axis axis = Axis::alpha;
    double x = 0.0;
    Coefficients coefficients;
    std::string metric_name;
    double metric_value = 0.0;
};

/// Evaluates x = i * step for i = 0..m on one axis.
std::vector<SweepPoint> sensitivity_sweep(const TuningSet& set, Axis axis, double step = 0.1);

}  // namespace refine
