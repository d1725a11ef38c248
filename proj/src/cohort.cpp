#include "shiftlab/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include "shiftlab/changepoint.hpp"

namespace shiftlab {

namespace {

double sorted_quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 1) return v[0];
    double h = p * static_cast<double>(n - 1);
    std::size_t lo = static_cast<std::size_t>(h);
    if (lo >= n - 1) return v[n - 1];
    double frac = h - static_cast<double>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

const std::string& attribute_of(const EventRecord& e, const std::string& factor) {
    auto it = e.attributes.find(factor);
    if (it == e.attributes.end()) {
        fail(Errc::FactorMissing, "event on " + e.date.to_string() + " lacks attribute '" +
                                      factor + "'");
    }
    return it->second;
}

// (group label, weight) of events inside [from, to).
struct WindowEvents {
    std::vector<std::string> group;
    std::vector<double> weight;
    std::size_t size() const { return group.size(); }
};

WindowEvents collect_window(const std::vector<EventRecord>& events, const Date& from,
                            const Date& to_exclusive, const std::string& factor) {
    WindowEvents out;
    for (const auto& e : events) {
        if (e.date >= from && e.date < to_exclusive) {
            out.group.push_back(attribute_of(e, factor));
            out.weight.push_back(e.weight);
        }
    }
    return out;
}

void check_window_range(const std::vector<EventRecord>& events, const Date& anchor,
                        int window_days) {
    if (window_days < 1) {
        fail(Errc::InvalidArgument, "window length must be at least one day");
    }
    if (events.empty()) {
        fail(Errc::EmptyData, "no events");
    }
    Date lo = events.front().date, hi = events.front().date;
    for (const auto& e : events) {
        lo = std::min(lo, e.date);
        hi = std::max(hi, e.date);
    }
    Date want_lo = anchor.plus_days(-window_days);
    Date want_hi = anchor.plus_days(window_days - 1);
    if (want_lo < lo || want_hi > hi) {
        fail(Errc::WindowOutOfRange, "windows [" + want_lo.to_string() + ", " +
                                         anchor.plus_days(window_days).to_string() +
                                         ") exceed the data range [" + lo.to_string() + ", " +
                                         hi.to_string() + "]");
    }
}

WindowCounts counts_from_windows(const WindowEvents& before, const WindowEvents& after,
                                 const std::string& factor, const Date& anchor,
                                 int window_days) {
    std::set<std::string> names(before.group.begin(), before.group.end());
    names.insert(after.group.begin(), after.group.end());

    WindowCounts out;
    out.factor = factor;
    out.anchor = anchor;
    out.window_days = window_days;
    out.groups.assign(names.begin(), names.end());
    out.before_count.assign(out.groups.size(), 0.0);
    out.after_count.assign(out.groups.size(), 0.0);

    auto index_of = [&](const std::string& g) {
        return static_cast<std::size_t>(
            std::lower_bound(out.groups.begin(), out.groups.end(), g) - out.groups.begin());
    };
    for (std::size_t i = 0; i < before.size(); ++i) {
        out.before_count[index_of(before.group[i])] += before.weight[i];
    }
    for (std::size_t i = 0; i < after.size(); ++i) {
        out.after_count[index_of(after.group[i])] += after.weight[i];
    }
    return out;
}

struct DeltaPair {
    double count = 0.0;
    double share = 0.0;
};

// Per-group (count delta, share delta) of one before/after count table,
// aligned to an external sorted group list.
std::vector<DeltaPair> deltas_for(const WindowCounts& wc,
                                  const std::vector<std::string>& groups) {
    double bt = wc.before_total();
    double at = wc.after_total();
    std::vector<DeltaPair> out(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto it = std::lower_bound(wc.groups.begin(), wc.groups.end(), groups[g]);
        double b = 0.0, a = 0.0;
        if (it != wc.groups.end() && *it == groups[g]) {
            std::size_t i = static_cast<std::size_t>(it - wc.groups.begin());
            b = wc.before_count[i];
            a = wc.after_count[i];
        }
        double w = static_cast<double>(wc.window_days);
        out[g].count = a / w - b / w;
        out[g].share = (at > 0.0 ? a / at : 0.0) - (bt > 0.0 ? b / bt : 0.0);
    }
    return out;
}

std::vector<std::string> merged_groups(const WindowCounts& a, const WindowCounts* b) {
    std::set<std::string> names(a.groups.begin(), a.groups.end());
    if (b != nullptr) {
        names.insert(b->groups.begin(), b->groups.end());
    }
    return {names.begin(), names.end()};
}

int resolve_threads(int max_threads, int jobs) {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    int t = max_threads > 0 ? std::min(max_threads, hw) : hw;
    return std::max(1, std::min(t, jobs));
}

// Window events bucketed by calendar day, the bootstrap resampling unit.
// Empty days count as units; a fixed-size event resample would hold the
// window totals constant and degenerate the count-delta distribution.
struct DayBuckets {
    std::vector<std::vector<std::pair<std::string, double>>> days;
};

DayBuckets bucket_window(const std::vector<EventRecord>& events, const Date& from,
                         int window_days, const std::string& factor) {
    DayBuckets out;
    out.days.resize(static_cast<std::size_t>(window_days));
    Date to_exclusive = from.plus_days(window_days);
    for (const auto& e : events) {
        if (e.date >= from && e.date < to_exclusive) {
            out.days[static_cast<std::size_t>(from.days_until(e.date))].emplace_back(
                attribute_of(e, factor), e.weight);
        }
    }
    return out;
}

WindowEvents resample_days(const DayBuckets& src, std::mt19937_64& gen) {
    WindowEvents out;
    const std::size_t w = src.days.size();
    for (std::size_t i = 0; i < w; ++i) {
        std::size_t j = static_cast<std::size_t>(rng::bounded(gen, w));
        for (const auto& [group, weight] : src.days[j]) {
            out.group.push_back(group);
            out.weight.push_back(weight);
        }
    }
    return out;
}

}  // namespace

double WindowCounts::before_total() const {
    return std::accumulate(before_count.begin(), before_count.end(), 0.0);
}

double WindowCounts::after_total() const {
    return std::accumulate(after_count.begin(), after_count.end(), 0.0);
}

WindowCounts window_counts(const std::vector<EventRecord>& events, const Date& anchor,
                           int window_days, const std::string& factor) {
    check_window_range(events, anchor, window_days);
    WindowEvents before =
        collect_window(events, anchor.plus_days(-window_days), anchor, factor);
    WindowEvents after =
        collect_window(events, anchor, anchor.plus_days(window_days), factor);
    return counts_from_windows(before, after, factor, anchor, window_days);
}

std::vector<CohortDelta> cohort_deltas(const WindowCounts& current,
                                       const WindowCounts* prior_year) {
    if (prior_year != nullptr) {
        if (prior_year->factor != current.factor ||
            prior_year->window_days != current.window_days) {
            fail(Errc::InvalidArgument,
                 "prior-year counts must use the same factor and window length");
        }
    }
    std::vector<std::string> groups = merged_groups(current, prior_year);
    std::vector<DeltaPair> raw = deltas_for(current, groups);
    std::vector<DeltaPair> prior;
    if (prior_year != nullptr) {
        prior = deltas_for(*prior_year, groups);
    }

    std::vector<CohortDelta> out(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        out[g].group = groups[g];
        out[g].window_days = current.window_days;
        out[g].count_delta = raw[g].count;
        out[g].share_delta = raw[g].share;
        if (prior_year != nullptr) {
            out[g].count_delta -= prior[g].count;
            out[g].share_delta -= prior[g].share;
            out[g].seasonally_adjusted = true;
        }
    }
    return out;
}

std::vector<GroupCi> bootstrap_ci(const std::vector<EventRecord>& events, const Date& anchor,
                                  int window_days, const std::string& factor, double level,
                                  int n_boot, RngSeed seed, std::optional<Date> prior_anchor,
                                  int max_threads) {
    if (n_boot < 200) {
        fail(Errc::InvalidArgument, "need at least 200 bootstrap resamples");
    }
    if (!(level > 0.0 && level < 1.0)) {
        fail(Errc::InvalidArgument, "confidence level must be in (0, 1)");
    }
    check_window_range(events, anchor, window_days);
    if (prior_anchor) {
        check_window_range(events, *prior_anchor, window_days);
    }

    WindowEvents before =
        collect_window(events, anchor.plus_days(-window_days), anchor, factor);
    WindowEvents after = collect_window(events, anchor, anchor.plus_days(window_days), factor);
    DayBuckets before_days = bucket_window(events, anchor.plus_days(-window_days), window_days, factor);
    DayBuckets after_days = bucket_window(events, anchor, window_days, factor);
    DayBuckets prior_before_days, prior_after_days;
    if (prior_anchor) {
        prior_before_days =
            bucket_window(events, prior_anchor->plus_days(-window_days), window_days, factor);
        prior_after_days = bucket_window(events, *prior_anchor, window_days, factor);
    }

    WindowCounts current = counts_from_windows(before, after, factor, anchor, window_days);
    WindowCounts prior;
    if (prior_anchor) {
        prior = counts_from_windows(
            collect_window(events, prior_anchor->plus_days(-window_days), *prior_anchor, factor),
            collect_window(events, *prior_anchor, prior_anchor->plus_days(window_days), factor),
            factor, *prior_anchor, window_days);
    }
    std::vector<std::string> groups =
        merged_groups(current, prior_anchor ? &prior : nullptr);
    const std::size_t ng = groups.size();

    // Unweighted event tallies drive the small-group cutoff.
    std::map<std::string, int> tally;
    for (const auto& g : before.group) ++tally[g];
    for (const auto& g : after.group) ++tally[g];

    std::vector<std::vector<double>> count_reps(ng), share_reps(ng);
    for (auto& v : count_reps) v.resize(static_cast<std::size_t>(n_boot));
    for (auto& v : share_reps) v.resize(static_cast<std::size_t>(n_boot));

    auto one_replicate = [&](int r) {
        auto gen = rng::make_engine(rng::substream_seed(seed, static_cast<std::uint64_t>(r)));
        WindowCounts cur =
            counts_from_windows(resample_days(before_days, gen), resample_days(after_days, gen),
                                factor, anchor, window_days);
        std::vector<DeltaPair> d = deltas_for(cur, groups);
        if (prior_anchor) {
            WindowCounts pri = counts_from_windows(resample_days(prior_before_days, gen),
                                                   resample_days(prior_after_days, gen),
                                                   factor, *prior_anchor, window_days);
            std::vector<DeltaPair> pd = deltas_for(pri, groups);
            for (std::size_t g = 0; g < ng; ++g) {
                d[g].count -= pd[g].count;
                d[g].share -= pd[g].share;
            }
        }
        for (std::size_t g = 0; g < ng; ++g) {
            count_reps[g][static_cast<std::size_t>(r)] = d[g].count;
            share_reps[g][static_cast<std::size_t>(r)] = d[g].share;
        }
    };

    const int threads = resolve_threads(max_threads, n_boot);
    if (threads == 1) {
        for (int r = 0; r < n_boot; ++r) one_replicate(r);
    } else {
        std::vector<std::thread> pool;
        int chunk = (n_boot + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            int first = t * chunk;
            int last = std::min(n_boot, first + chunk);
            if (first < last) {
                pool.emplace_back([&, first, last] {
                    for (int r = first; r < last; ++r) one_replicate(r);
                });
            }
        }
        for (auto& th : pool) th.join();
    }

    const double alpha = 1.0 - level;
    std::vector<GroupCi> out(ng);
    for (std::size_t g = 0; g < ng; ++g) {
        out[g].group = groups[g];
        auto it = tally.find(groups[g]);
        int n_events = it == tally.end() ? 0 : it->second;
        if (n_events < 5) {
            out[g].insufficient_data = true;
            continue;
        }
        out[g].count_ci = CiPair{sorted_quantile(count_reps[g], alpha / 2.0),
                                 sorted_quantile(count_reps[g], 1.0 - alpha / 2.0)};
        out[g].share_ci = CiPair{sorted_quantile(share_reps[g], alpha / 2.0),
                                 sorted_quantile(share_reps[g], 1.0 - alpha / 2.0)};
    }
    return out;
}

std::vector<CohortDelta> analyze_cohort(const std::vector<EventRecord>& events,
                                        const Date& anchor, int window_days,
                                        const std::string& factor, double level, int n_boot,
                                        RngSeed seed, std::optional<Date> prior_anchor,
                                        int max_threads) {
    WindowCounts current = window_counts(events, anchor, window_days, factor);
    std::optional<WindowCounts> prior;
    if (prior_anchor) {
        prior = window_counts(events, *prior_anchor, window_days, factor);
    }
    std::vector<CohortDelta> deltas =
        cohort_deltas(current, prior ? &*prior : nullptr);
    std::vector<GroupCi> cis = bootstrap_ci(events, anchor, window_days, factor, level, n_boot,
                                            seed, prior_anchor, max_threads);
    for (auto& d : deltas) {
        auto it = std::find_if(cis.begin(), cis.end(),
                               [&](const GroupCi& c) { return c.group == d.group; });
        if (it != cis.end()) {
            d.count_ci = it->count_ci;
            d.share_ci = it->share_ci;
            d.insufficient_data = it->insufficient_data;
        }
    }
    return deltas;
}

std::vector<SeverityStratum> severity_split(const std::vector<EventRecord>& events,
                                            const Date& anchor, int window_days,
                                            const std::string& no_injury_level) {
    check_window_range(events, anchor, window_days);

    const Date from = anchor.plus_days(-window_days);
    const Date to = anchor.plus_days(window_days);
    std::set<std::string> modes;
    for (const auto& e : events) {
        if (e.date >= from && e.date < to) {
            attribute_of(e, "severity");
            modes.insert(attribute_of(e, "mode"));
        }
    }

    std::vector<SeverityStratum> out;
    for (const auto& mode : modes) {
        std::vector<EventRecord> subset;
        for (const auto& e : events) {
            if (e.date >= from && e.date < to && attribute_of(e, "mode") == mode) {
                subset.push_back(e);
            }
        }
        WindowEvents before = collect_window(subset, from, anchor, "severity");
        WindowEvents after = collect_window(subset, anchor, to, "severity");
        WindowCounts wc = counts_from_windows(before, after, "severity", anchor, window_days);

        SeverityStratum stratum;
        stratum.mode = mode;
        stratum.severity_deltas = cohort_deltas(wc);
        double bt = wc.before_total(), at = wc.after_total();
        auto it = std::lower_bound(wc.groups.begin(), wc.groups.end(), no_injury_level);
        if (it != wc.groups.end() && *it == no_injury_level) {
            std::size_t i = static_cast<std::size_t>(it - wc.groups.begin());
            stratum.no_injury_share_before = bt > 0.0 ? wc.before_count[i] / bt : 0.0;
            stratum.no_injury_share_after = at > 0.0 ? wc.after_count[i] / at : 0.0;
        }
        out.push_back(std::move(stratum));
    }
    return out;
}

Date auto_anchor(const std::vector<EventRecord>& events, int min_seg_len) {
    if (events.empty()) {
        fail(Errc::EmptyData, "no events");
    }
    Date lo = events.front().date, hi = events.front().date;
    for (const auto& e : events) {
        lo = std::min(lo, e.date);
        hi = std::max(hi, e.date);
    }
    long span = lo.days_until(hi) + 1;
    std::vector<double> daily(static_cast<std::size_t>(span), 0.0);
    for (const auto& e : events) {
        daily[static_cast<std::size_t>(lo.days_until(e.date))] += e.weight;
    }
    TimeSeries series(std::move(daily), lo, "daily event count");
    DetectionResult res =
        detect_pelt(series, CostModel::l2(), PenaltySpec::bic(), min_seg_len);
    if (res.segmentation.num_breaks() == 0) {
        fail(Errc::InvalidArgument,
             "no change-point found in the daily counts; supply an explicit anchor");
    }
    return series.date_of(res.segmentation.breaks().front());
}

}  // namespace shiftlab
