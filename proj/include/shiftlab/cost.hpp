#pragma once

#include <string>
#include <vector>

#include "shiftlab/core.hpp"

namespace shiftlab {

// Segment cost families usable by both segmentation solvers. Costs are
// defined up to model-specific additive constants; only differences matter
// to the solvers, so the constants are dropped.
enum class CostKind {
    L2,             // within-segment sum of squared deviations from the mean
    NormalMeanVar,  // Gaussian profile likelihood, per-segment mean and variance
    Poisson,        // Poisson deviance for non-negative count data
};

struct CostModel {
    CostKind kind = CostKind::L2;
    double var_floor = 1e-8;   // keeps log var finite on constant segments
    double rate_floor = 1e-8;  // keeps log rate finite on all-zero segments

    static CostModel l2() { return {CostKind::L2, 1e-8, 1e-8}; }
    static CostModel normal_meanvar(double var_floor = 1e-8) {
        return {CostKind::NormalMeanVar, var_floor, 1e-8};
    }
    static CostModel poisson(double rate_floor = 1e-8) {
        return {CostKind::Poisson, 1e-8, rate_floor};
    }

    // Shortest segment on which the cost is defined (2 for NormalMeanVar,
    // which needs a variance estimate).
    int min_segment_len() const { return kind == CostKind::NormalMeanVar ? 2 : 1; }

    // Free parameters estimated per segment; drives the BIC/AIC penalty.
    int params_per_segment() const { return kind == CostKind::NormalMeanVar ? 2 : 1; }

    std::string name() const;
};

CostModel cost_model_from_name(const std::string& name);

// Cost of the half-open 1-based index range [start, end_exclusive), computed
// directly from the segment values.
double segment_cost(const TimeSeries& series, int start, int end_exclusive,
                    const CostModel& model);

// Prefix-sum tables giving O(1) segment-cost queries; used by the solvers.
// Query results agree with segment_cost on every valid range.
class CostCache {
  public:
    CostCache(const TimeSeries& series, const CostModel& model);

    double cost(int start, int end_exclusive) const;
    int series_len() const { return static_cast<int>(prefix_sum_.size()) - 1; }
    const CostModel& model() const { return model_; }

  private:
    CostModel model_;
    double center_ = 0.0;
    std::vector<double> prefix_sum_;
    std::vector<double> prefix_sumsq_;
};

inline CostCache prefix_tables(const TimeSeries& series, const CostModel& model) {
    return CostCache(series, model);
}

}  // namespace shiftlab
