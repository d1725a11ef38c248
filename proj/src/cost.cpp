#include "shiftlab/cost.hpp"

#include <algorithm>
#include <cmath>

namespace shiftlab {

namespace {

void check_range(int start, int end_exclusive, int series_len, const CostModel& model) {
    if (start < 1 || end_exclusive > series_len + 1 || start >= end_exclusive) {
        fail(Errc::InvalidRange, "segment [" + std::to_string(start) + ", " +
                                     std::to_string(end_exclusive) + ") invalid for T=" +
                                     std::to_string(series_len));
    }
    if (end_exclusive - start < model.min_segment_len()) {
        fail(Errc::SegmentTooShort, model.name() + " needs segments of length >= " +
                                        std::to_string(model.min_segment_len()));
    }
}

void check_poisson_value(double v, int index_1based) {
    if (v < 0.0) {
        fail(Errc::NegativeCount, "Poisson cost needs non-negative counts, got " +
                                      std::to_string(v) + " at index " +
                                      std::to_string(index_1based));
    }
}

// L2 and NormalMeanVar reduce to the within-segment sum of squared
// deviations; Poisson needs the raw segment sum.
double cost_from_sse(double len, double sse, const CostModel& model) {
    sse = std::max(0.0, sse);
    if (model.kind == CostKind::L2) {
        return sse;
    }
    double var_hat = sse / len;
    return len * std::log(std::max(var_hat, model.var_floor));
}

double poisson_cost(double len, double sum, const CostModel& model) {
    double rate_hat = std::max(sum / len, model.rate_floor);
    return 2.0 * (len * rate_hat - sum * std::log(rate_hat));
}

}  // namespace

std::string CostModel::name() const {
    switch (kind) {
        case CostKind::L2: return "l2";
        case CostKind::NormalMeanVar: return "normal";
        case CostKind::Poisson: return "poisson";
    }
    return "?";
}

CostModel cost_model_from_name(const std::string& name) {
    if (name == "l2") return CostModel::l2();
    if (name == "normal") return CostModel::normal_meanvar();
    if (name == "poisson") return CostModel::poisson();
    fail(Errc::InvalidArgument, "unknown cost model '" + name + "' (expected l2|normal|poisson)");
}

double segment_cost(const TimeSeries& series, int start, int end_exclusive,
                    const CostModel& model) {
    check_range(start, end_exclusive, series.length(), model);
    const auto& v = series.values();
    const double len = static_cast<double>(end_exclusive - start);

    if (model.kind == CostKind::Poisson) {
        double sum = 0.0;
        for (int t = start; t < end_exclusive; ++t) {
            double x = v[static_cast<std::size_t>(t - 1)];
            check_poisson_value(x, t);
            sum += x;
        }
        return poisson_cost(len, sum, model);
    }

    // two-pass SSE: immune to the cancellation a raw sum-of-squares suffers
    // on series with a large offset
    double mean = 0.0;
    for (int t = start; t < end_exclusive; ++t) {
        mean += v[static_cast<std::size_t>(t - 1)];
    }
    mean /= len;
    double sse = 0.0;
    for (int t = start; t < end_exclusive; ++t) {
        double d = v[static_cast<std::size_t>(t - 1)] - mean;
        sse += d * d;
    }
    return cost_from_sse(len, sse, model);
}

CostCache::CostCache(const TimeSeries& series, const CostModel& model) : model_(model) {
    const auto& v = series.values();

    // Center L2/Normal moments on the series mean so the prefix-difference
    // SSE keeps its precision on offset-heavy data; segment costs are
    // translation invariant, so the value is unchanged. Poisson uses the
    // raw sums (its cost is not translation invariant).
    center_ = 0.0;
    if (model_.kind != CostKind::Poisson) {
        for (double x : v) center_ += x;
        center_ /= static_cast<double>(v.size());
    }

    prefix_sum_.resize(v.size() + 1, 0.0);
    prefix_sumsq_.resize(v.size() + 1, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (model_.kind == CostKind::Poisson) {
            check_poisson_value(v[i], static_cast<int>(i) + 1);
        }
        double c = v[i] - center_;
        prefix_sum_[i + 1] = prefix_sum_[i] + c;
        prefix_sumsq_[i + 1] = prefix_sumsq_[i] + c * c;
    }
}

double CostCache::cost(int start, int end_exclusive) const {
    check_range(start, end_exclusive, series_len(), model_);
    const double len = static_cast<double>(end_exclusive - start);
    double sum = prefix_sum_[static_cast<std::size_t>(end_exclusive - 1)] -
                 prefix_sum_[static_cast<std::size_t>(start - 1)];
    if (model_.kind == CostKind::Poisson) {
        return poisson_cost(len, sum, model_);
    }
    double sumsq = prefix_sumsq_[static_cast<std::size_t>(end_exclusive - 1)] -
                   prefix_sumsq_[static_cast<std::size_t>(start - 1)];
    return cost_from_sse(len, sumsq - sum * sum / len, model_);
}

}  // namespace shiftlab
