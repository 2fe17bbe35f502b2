#include "emlaw/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "emlaw/error.hpp"

namespace emlaw {

namespace {

struct Moments {
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    double mean_x = 0.0;
    double mean_y = 0.0;
};

Moments centred_moments(std::span<const ScatterPoint> points) {
    Moments m;
    double wsum = 0.0;
    for (const auto& p : points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !(p.weight > 0.0) ||
            !std::isfinite(p.weight)) {
            throw Error(ErrorCode::InvalidArgument, "scatter points must be finite with positive weight");
        }
        wsum += p.weight;
        m.mean_x += p.weight * p.x;
        m.mean_y += p.weight * p.y;
    }
    m.mean_x /= wsum;
    m.mean_y /= wsum;
    for (const auto& p : points) {
        const double dx = p.x - m.mean_x;
        const double dy = p.y - m.mean_y;
        m.sxx += p.weight * dx * dx;
        m.syy += p.weight * dy * dy;
        m.sxy += p.weight * dx * dy;
    }
    return m;
}

double correlation(const Moments& m) {
    return std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0);
}

}  // namespace

RegressionReport fit_ols(std::span<const ScatterPoint> points) {
    if (points.size() < 2) {
        throw Error(ErrorCode::InsufficientData,
                    "regression needs at least 2 points, got " + std::to_string(points.size()));
    }
    const Moments m = centred_moments(points);
    if (m.sxx == 0.0) {
        throw Error(ErrorCode::DegenerateAbscissa, "all x values are equal");
    }
    RegressionReport r;
    r.n_points = points.size();
    r.slope = m.sxy / m.sxx;
    r.intercept = m.mean_y - r.slope * m.mean_x;
    r.pearson_r = m.syy == 0.0 ? 0.0 : correlation(m);
    return r;
}

double pearson(std::span<const ScatterPoint> points) {
    if (points.size() < 2) {
        throw Error(ErrorCode::InsufficientData, "correlation needs at least 2 points");
    }
    const Moments m = centred_moments(points);
    if (m.sxx == 0.0 || m.syy == 0.0) {
        throw Error(ErrorCode::DegenerateVariance, "a coordinate has zero variance");
    }
    return correlation(m);
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) {
        throw Error(ErrorCode::InvalidArgument, "spearman inputs differ in length");
    }
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    std::vector<ScatterPoint> pts;
    pts.reserve(rx.size());
    for (std::size_t i = 0; i < rx.size(); ++i) {
        pts.push_back({rx[i], ry[i], 1.0});
    }
    return pearson(pts);
}

}  // namespace emlaw
