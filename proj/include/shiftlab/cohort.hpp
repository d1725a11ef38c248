#pragma once

#include <optional>
#include <string>
#include <vector>

#include "shiftlab/core.hpp"
#include "shiftlab/rng.hpp"

namespace shiftlab {

// Weighted event counts per group of one factor, in the two windows
// [anchor - w, anchor) and [anchor, anchor + w).
struct WindowCounts {
    std::string factor;
    Date anchor;
    int window_days = 0;
    std::vector<std::string> groups;  // sorted level names seen in either window
    std::vector<double> before_count;
    std::vector<double> after_count;

    double before_total() const;
    double after_total() const;
};

WindowCounts window_counts(const std::vector<EventRecord>& events, const Date& anchor,
                           int window_days, const std::string& factor);

struct CiPair {
    double low = 0.0;
    double high = 0.0;
};

// Before/after change for one group: daily-mean count change and share
// change, optionally seasonally adjusted against the prior year and
// optionally annotated with bootstrap confidence intervals.
struct CohortDelta {
    std::string group;
    int window_days = 0;
    double count_delta = 0.0;  // after - before, daily means
    double share_delta = 0.0;  // after share - before share, in [-1, 1]
    std::optional<CiPair> count_ci;
    std::optional<CiPair> share_ci;
    bool insufficient_data = false;
    bool seasonally_adjusted = false;
};

// Raw deltas, or seasonally adjusted ones when the same-calendar-window
// counts of the prior year are supplied: adjusted = raw - prior-year raw.
// Groups missing on either side are imputed as zero counts.
std::vector<CohortDelta> cohort_deltas(const WindowCounts& current,
                                       const WindowCounts* prior_year = nullptr);

struct GroupCi {
    std::string group;
    std::optional<CiPair> count_ci;
    std::optional<CiPair> share_ci;
    bool insufficient_data = false;
};

// Percentile bootstrap resampling whole days within each window
// independently (a day is the i.i.d. unit; empty days count). Groups with
// fewer than 5 events across the current-year windows get undefined
// intervals. Deterministic under the seed for any thread count.
std::vector<GroupCi> bootstrap_ci(const std::vector<EventRecord>& events, const Date& anchor,
                                  int window_days, const std::string& factor, double level,
                                  int n_boot, RngSeed seed,
                                  std::optional<Date> prior_anchor = std::nullopt,
                                  int max_threads = 0);

// window_counts + cohort_deltas + bootstrap_ci in one call.
std::vector<CohortDelta> analyze_cohort(const std::vector<EventRecord>& events,
                                        const Date& anchor, int window_days,
                                        const std::string& factor, double level, int n_boot,
                                        RngSeed seed,
                                        std::optional<Date> prior_anchor = std::nullopt,
                                        int max_threads = 0);

// Severity analysis stratified by transportation mode: cohort deltas over
// severity levels within each mode, plus the no-injury share per window.
struct SeverityStratum {
    std::string mode;
    std::vector<CohortDelta> severity_deltas;
    double no_injury_share_before = 0.0;
    double no_injury_share_after = 0.0;
};

std::vector<SeverityStratum> severity_split(const std::vector<EventRecord>& events,
                                            const Date& anchor, int window_days,
                                            const std::string& no_injury_level = "no_injury");

// Anchor auto-detection: first change-point of the daily total-count series
// (L2 cost, BIC penalty, PELT solver).
Date auto_anchor(const std::vector<EventRecord>& events, int min_seg_len = 2);

}  // namespace shiftlab
