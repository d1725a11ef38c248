#pragma once

#include <string>
#include <vector>

#include "shiftlab/core.hpp"
#include "shiftlab/cost.hpp"

namespace shiftlab {

enum class PenaltyRule { Manual, BIC, AIC };

// The per-change-point penalty beta, either given directly or resolved from
// an information-criterion rule against the series at hand.
class PenaltySpec {
  public:
    static PenaltySpec manual(double beta);
    static PenaltySpec bic() { return PenaltySpec(PenaltyRule::BIC, 0.0); }
    static PenaltySpec aic() { return PenaltySpec(PenaltyRule::AIC, 0.0); }

    PenaltyRule rule() const { return rule_; }

    // Resolved beta; always > 0.
    double resolve(const TimeSeries& series, const CostModel& model) const;

    std::string describe() const;

  private:
    PenaltySpec(PenaltyRule rule, double beta) : rule_(rule), beta_(beta) {}
    PenaltyRule rule_;
    double beta_;
};

enum class SolverKind { Exact, Pelt };

struct DetectionResult {
    Segmentation segmentation;
    double objective = 0.0;  // sum(per_segment_costs) + beta * K
    std::vector<double> per_segment_costs;
    SolverKind solver = SolverKind::Exact;
    double beta = 0.0;  // resolved penalty actually used
    // Mean size of the pruned candidate set per step (PELT diagnostics;
    // equals the unpruned count for the exact solver).
    double mean_candidates = 0.0;
};

// Objective value of a given segmentation: total segment cost plus
// beta * (number of breaks), under the half-open segment convention.
double evaluate_segmentation(const TimeSeries& series, const Segmentation& seg,
                             const CostModel& model, double beta);

// Global minimizer of the penalized objective over all segmentations with
// segment lengths >= min_seg_len, by O(T^2) dynamic programming. Ties are
// broken toward fewer change-points, then lexicographically earliest breaks.
DetectionResult detect_exact(const TimeSeries& series, const CostModel& model,
                             const PenaltySpec& penalty, int min_seg_len = 2);

// Same optimum as detect_exact (identical tie-breaking), with the candidate
// set pruned by the PELT condition. The pruning argument needs segment costs
// where splitting never increases cost; that holds for L2 and NormalMeanVar,
// and for Poisson whenever the rate floor is inactive (all-positive-count
// segments). Use detect_exact if that caveat matters.
DetectionResult detect_pelt(const TimeSeries& series, const CostModel& model,
                            const PenaltySpec& penalty, int min_seg_len = 2);

// BIC: p * log(T) * scale; AIC: 2 * p * scale. p is the per-segment
// parameter count of the model. For L2 the scale is a robust noise-variance
// estimate from successive differences; 1 otherwise.
double default_penalty(const TimeSeries& series, const CostModel& model, PenaltyRule rule);

}  // namespace shiftlab
