#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace emlaw {

struct ScatterPoint {
    double x = 0.0;
    double y = 0.0;
    double weight = 1.0;
};

struct RegressionReport {
    double intercept = 0.0;
    double slope = 0.0;
    double pearson_r = 0.0;
    std::size_t n_points = 0;
};

// Weighted least-squares line y = intercept + slope * x, computed from
// mean-centred sums. pearson_r uses the same weights (all 1 by default) and
// is reported as 0 when every y is equal.
// Throws InsufficientData (< 2 points) or DegenerateAbscissa (all x equal).
RegressionReport fit_ols(std::span<const ScatterPoint> points);

// Sample Pearson correlation; throws DegenerateVariance when either
// coordinate is constant and InsufficientData on fewer than two points.
double pearson(std::span<const ScatterPoint> points);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> xs, std::span<const double> ys);

std::vector<double> average_ranks(std::span<const double> values);

}  // namespace emlaw
