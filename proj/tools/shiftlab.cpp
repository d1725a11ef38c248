// shiftlab: change-point, difference-in-differences, KDE shift, and cohort
// analyses over CSV inputs, with canonical JSON reports.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shiftlab/changepoint.hpp"
#include "shiftlab/cohort.hpp"
#include "shiftlab/did.hpp"
#include "shiftlab/io.hpp"
#include "shiftlab/kdeshift.hpp"

namespace {

using namespace shiftlab;
using nlohmann::json;

struct GlobalArgs {
    std::string output;
    std::uint64_t seed = 0;
    bool quiet = false;
};

int max_threads_from_env() {
    const char* raw = std::getenv("SHIFTLAB_MAX_THREADS");
    if (raw == nullptr || *raw == '\0') return 0;  // auto
    char* end = nullptr;
    long v = std::strtol(raw, &end, 10);
    if (end == raw || *end != '\0' || v < 1) {
        fail(Errc::InvalidArgument, "SHIFTLAB_MAX_THREADS must be a positive integer");
    }
    return static_cast<int>(v);
}

void deliver(const AnalysisReport& report, const GlobalArgs& global) {
    if (global.output.empty()) {
        std::cout << canonical_json(report_to_json(report));
    } else {
        emit_report(report, global.output);
        if (!global.quiet) {
            std::cerr << "wrote " << report.kind << " report to " << global.output << "\n";
        }
    }
}

PenaltySpec parse_penalty(const std::string& text) {
    if (text == "bic") return PenaltySpec::bic();
    if (text == "aic") return PenaltySpec::aic();
    try {
        std::size_t pos = 0;
        double beta = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return PenaltySpec::manual(beta);
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        fail(Errc::InvalidArgument, "--penalty expects bic, aic, or a positive number, got '" +
                                        text + "'");
    }
}

json ci_json(const std::optional<CiPair>& ci) {
    if (!ci) return nullptr;
    return json::array({ci->low, ci->high});
}

json events_digest(const std::string& path, const EventLoadResult& loaded) {
    json digest = {{"path", path}, {"rows", static_cast<int>(loaded.events.size())}};
    if (!loaded.events.empty()) {
        Date lo = loaded.events.front().date, hi = lo;
        for (const auto& e : loaded.events) {
            lo = std::min(lo, e.date);
            hi = std::max(hi, e.date);
        }
        digest["date_range"] = {{"start", lo.to_string()}, {"end", hi.to_string()}};
    }
    json levels = json::object();
    for (const auto& [name, lv] : loaded.levels) levels[name] = lv;
    digest["attribute_levels"] = levels;
    return digest;
}

// ---------------------------------------------------------------------------

struct ChangepointArgs {
    std::string input, value_col = "value", date_col, cost = "l2", penalty = "bic",
                solver = "pelt", series_out;
    int min_seg_len = 2;
};

void run_changepoint(const ChangepointArgs& args, const GlobalArgs& global) {
    std::optional<std::string> date_col;
    if (!args.date_col.empty()) date_col = args.date_col;
    TimeSeries series = load_series_csv(args.input, args.value_col, date_col);
    CostModel model = cost_model_from_name(args.cost);
    PenaltySpec penalty = parse_penalty(args.penalty);

    DetectionResult result =
        args.solver == "exact"
            ? detect_exact(series, model, penalty, args.min_seg_len)
            : detect_pelt(series, model, penalty, args.min_seg_len);

    AnalysisReport report;
    report.kind = "changepoint";
    report.input_digest = {{"path", args.input},
                           {"rows", series.length()},
                           {"value_col", args.value_col}};
    if (series.start_date()) {
        report.input_digest["date_range"] = {
            {"start", series.start_date()->to_string()},
            {"end", series.date_of(series.length()).to_string()}};
    }
    report.parameters = {{"cost", args.cost},
                         {"penalty", args.penalty},
                         {"solver", args.solver},
                         {"min_seg_len", args.min_seg_len}};
    if (model.kind == CostKind::Poisson && args.solver != "exact") {
        report.warnings.push_back(
            "PELT pruning assumes the splitting inequality, which the Poisson cost can "
            "violate when the rate floor engages; use --solver exact to be safe");
    }

    json segments = json::array();
    for (auto [a, b] : result.segmentation.segments()) {
        double mean = 0.0;
        for (int t = a; t < b; ++t) mean += series.at(t);
        mean /= static_cast<double>(b - a);
        json seg = {{"start", a}, {"end_exclusive", b}, {"length", b - a}, {"mean", mean}};
        if (series.start_date()) seg["start_date"] = series.date_of(a).to_string();
        segments.push_back(seg);
    }
    json breaks = json::array();
    json break_dates = json::array();
    for (int b : result.segmentation.breaks()) {
        breaks.push_back(b);
        if (series.start_date()) break_dates.push_back(series.date_of(b).to_string());
    }
    report.results = {{"beta", result.beta},
                      {"objective", result.objective},
                      {"num_breaks", result.segmentation.num_breaks()},
                      {"breaks", breaks},
                      {"per_segment_costs", result.per_segment_costs},
                      {"segments", segments},
                      {"mean_candidates", result.mean_candidates}};
    if (series.start_date()) report.results["break_dates"] = break_dates;

    if (!args.series_out.empty()) {
        write_series_csv(args.series_out, series, result.segmentation);
    }
    deliver(report, global);
}

// ---------------------------------------------------------------------------

struct DidArgs {
    std::string input, y_col = "y", time_col = "time", lockdown_col = "lockdown", x_col = "x";
    std::string vcov = "classical";
    std::vector<std::string> time_levels, x_levels;
    bool x_numeric = false;
    double level = 0.95;
};

void run_did(const DidArgs& args, const GlobalArgs& global) {
    CsvTable table = read_csv(args.input);
    std::size_t yi = table.require_column(args.y_col);
    std::size_t ti = table.require_column(args.time_col);
    std::size_t li = table.require_column(args.lockdown_col);
    std::size_t xi = table.require_column(args.x_col);

    std::vector<DidRecord> records;
    records.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        DidRecord rec;
        try {
            std::size_t pos = 0;
            rec.y = std::stod(row[yi], &pos);
            if (pos != row[yi].size()) throw std::invalid_argument(row[yi]);
        } catch (const std::exception&) {
            fail(Errc::ParseError, "row " + std::to_string(r + 1) + ", column '" + args.y_col +
                                       "': '" + row[yi] + "' is not a number");
        }
        if (row[li] == "0") {
            rec.lockdown = 0;
        } else if (row[li] == "1") {
            rec.lockdown = 1;
        } else {
            fail(Errc::ParseError, "row " + std::to_string(r + 1) + ", column '" +
                                       args.lockdown_col + "': expected 0 or 1, got '" +
                                       row[li] + "'");
        }
        rec.time = row[ti];
        rec.x = row[xi];
        records.push_back(std::move(rec));
    }

    if (args.x_numeric && !args.x_levels.empty()) {
        fail(Errc::InvalidArgument, "--x-levels conflicts with --x-numeric");
    }
    DidSchema schema;
    schema.time_name = args.time_col;
    schema.lockdown_name = args.lockdown_col;
    schema.x_name = args.x_col;
    schema.time_levels = args.time_levels;
    schema.x_levels = args.x_levels;
    if (schema.time_levels.empty()) {
        std::set<std::string> times;
        for (const auto& rec : records) times.insert(rec.time);
        schema.time_levels.assign(times.begin(), times.end());
    }
    if (!args.x_numeric && schema.x_levels.empty()) {
        std::set<std::string> xs;
        for (const auto& rec : records) xs.insert(rec.x);
        schema.x_levels.assign(xs.begin(), xs.end());
    }

    DesignMatrix design = build_design(records, schema);
    VcovKind vcov = args.vcov == "hc1" ? VcovKind::HC1 : VcovKind::Classical;
    DidFit fit = fit_ols(design, vcov);
    DidReport summary = did_report(fit, schema.lockdown_name, args.level);

    AnalysisReport report;
    report.kind = "did";
    report.input_digest = {{"path", args.input},
                           {"rows", static_cast<int>(records.size())},
                           {"columns", {args.y_col, args.time_col, args.lockdown_col, args.x_col}}};
    report.parameters = {{"y", args.y_col},
                         {"time", args.time_col},
                         {"lockdown", args.lockdown_col},
                         {"x", args.x_col},
                         {"x_numeric", args.x_numeric},
                         {"vcov", args.vcov},
                         {"level", args.level},
                         {"time_levels", schema.time_levels},
                         {"x_levels", schema.x_levels}};
    report.warnings.push_back(
        "estimator is OLS on the supplied response; interaction coefficients are "
        "treatment-coded against the first declared level of each factor");

    json coefficients = json::array();
    for (std::size_t j = 0; j < fit.column_names.size(); ++j) {
        int i = static_cast<int>(j);
        coefficients.push_back({{"term", fit.column_names[j]},
                                {"estimate", fit.coefficients(i)},
                                {"se", fit.stderrs(i)},
                                {"t", fit.t_stats(i)},
                                {"p", fit.p_values(i)}});
    }
    json lockdown_terms = json::array();
    for (const auto& term : summary.lockdown_terms) {
        json ci_low = term.ci_low ? json(*term.ci_low) : json(nullptr);
        json ci_high = term.ci_high ? json(*term.ci_high) : json(nullptr);
        lockdown_terms.push_back({{"term", term.term},
                                  {"estimate", term.estimate},
                                  {"se", term.se},
                                  {"ci_low", ci_low},
                                  {"ci_high", ci_high},
                                  {"p", term.p_value},
                                  {"significant", term.significant}});
    }
    report.results = {{"n", design.n()},
                      {"k", design.k()},
                      {"residual_df", fit.residual_df},
                      {"sigma2", fit.sigma2},
                      {"r_squared", fit.r_squared},
                      {"coefficients", coefficients},
                      {"lockdown_terms", lockdown_terms}};
    deliver(report, global);
}

// ---------------------------------------------------------------------------

struct KdeShiftArgs {
    std::string input, anchor, date_col = "date", x_col = "x", y_col = "y", density_out;
    int window = 30;
    int grid = 128;
    double pad = 3.0;
    int permutations = 999;
};

void run_kde_shift(const KdeShiftArgs& args, const GlobalArgs& global) {
    EventSchema schema;
    schema.date_col = args.date_col;
    schema.x_col = args.x_col;
    schema.y_col = args.y_col;
    EventLoadResult loaded = load_events_csv(args.input, schema);
    Date anchor = Date::parse(args.anchor);

    GridSpec spec;
    spec.nx = args.grid;
    spec.ny = args.grid;
    spec.pad_bandwidths = args.pad;

    auto [before, after] = windowed_densities(loaded.events, anchor, args.window, spec);

    std::vector<Point2> before_pts, after_pts;
    for (const auto& e : loaded.events) {
        if (!e.location) continue;
        Point2 p{e.location->first, e.location->second};
        if (e.date >= anchor.plus_days(-args.window) && e.date < anchor) {
            before_pts.push_back(p);
        } else if (e.date >= anchor && e.date < anchor.plus_days(args.window)) {
            after_pts.push_back(p);
        }
    }
    ShiftTestResult test = permutation_test(before_pts, after_pts, spec, args.permutations,
                                            RngSeed{global.seed}, max_threads_from_env());

    AnalysisReport report;
    report.kind = "kde-shift";
    report.input_digest = events_digest(args.input, loaded);
    report.parameters = {{"anchor", anchor.to_string()},
                         {"window_days", args.window},
                         {"grid", args.grid},
                         {"pad_bandwidths", args.pad},
                         {"permutations", args.permutations},
                         {"seed", global.seed}};
    report.warnings = loaded.warnings;

    const Grid2D& g = before.grid();
    json quantiles = json::array();
    for (const auto& q : test.null_quantiles) {
        quantiles.push_back({{"prob", q.prob}, {"value", q.value}});
    }
    report.results = {{"n_before", before.n_points()},
                      {"n_after", after.n_points()},
                      {"bandwidth", {{"hx", before.bandwidth().hx}, {"hy", before.bandwidth().hy}}},
                      {"grid", {{"nx", g.nx}, {"ny", g.ny}, {"x0", g.x0}, {"y0", g.y0},
                                {"dx", g.dx}, {"dy", g.dy}}},
                      {"ise", test.ise},
                      {"p_value", test.p_value},
                      {"null_quantiles", quantiles},
                      {"mass_before", before.mass()},
                      {"mass_after", after.mass()}};

    if (!args.density_out.empty()) {
        write_density_csv(args.density_out, before, after);
        if (!global.quiet) {
            std::cerr << "wrote density grid to " << args.density_out << "\n";
        }
    }
    deliver(report, global);
}

// ---------------------------------------------------------------------------

struct CohortArgs {
    std::string input, anchor = "auto", factor, prior_anchor, date_col = "date";
    std::vector<int> windows = {15, 30, 60};
    int boot = 999;
    double level = 0.95;
};

void run_cohort(const CohortArgs& args, const GlobalArgs& global) {
    EventSchema schema;
    schema.date_col = args.date_col;
    EventLoadResult loaded = load_events_csv(args.input, schema);
    if (args.windows.empty()) {
        fail(Errc::InvalidArgument, "--windows must name at least one window length");
    }

    bool auto_mode = args.anchor == "auto";
    Date anchor = auto_mode ? auto_anchor(loaded.events) : Date::parse(args.anchor);
    std::optional<Date> prior;
    if (!args.prior_anchor.empty()) prior = Date::parse(args.prior_anchor);

    AnalysisReport report;
    report.kind = "cohort";
    report.input_digest = events_digest(args.input, loaded);
    report.parameters = {{"anchor", anchor.to_string()},
                         {"anchor_mode", auto_mode ? "auto" : "given"},
                         {"factor", args.factor},
                         {"windows", args.windows},
                         {"boot", args.boot},
                         {"level", args.level},
                         {"seed", global.seed}};
    if (prior) report.parameters["prior_anchor"] = prior->to_string();
    report.warnings = loaded.warnings;

    json windows = json::array();
    for (int w : args.windows) {
        WindowCounts counts = window_counts(loaded.events, anchor, w, args.factor);
        std::vector<CohortDelta> deltas =
            analyze_cohort(loaded.events, anchor, w, args.factor, args.level, args.boot,
                           RngSeed{global.seed}, prior, max_threads_from_env());
        double bt = counts.before_total();
        double at = counts.after_total();
        json groups = json::array();
        for (const auto& d : deltas) {
            double before_count = 0.0, after_count = 0.0;
            for (std::size_t gidx = 0; gidx < counts.groups.size(); ++gidx) {
                if (counts.groups[gidx] == d.group) {
                    before_count = counts.before_count[gidx];
                    after_count = counts.after_count[gidx];
                }
            }
            groups.push_back({{"group", d.group},
                              {"before_count", before_count},
                              {"after_count", after_count},
                              {"before_daily_mean", before_count / w},
                              {"after_daily_mean", after_count / w},
                              {"before_share", bt > 0.0 ? before_count / bt : 0.0},
                              {"after_share", at > 0.0 ? after_count / at : 0.0},
                              {"count_delta", d.count_delta},
                              {"share_delta", d.share_delta},
                              {"count_ci", ci_json(d.count_ci)},
                              {"share_ci", ci_json(d.share_ci)},
                              {"insufficient_data", d.insufficient_data},
                              {"seasonally_adjusted", d.seasonally_adjusted}});
        }
        windows.push_back({{"window_days", w},
                           {"before_total", bt},
                           {"after_total", at},
                           {"groups", groups}});
    }
    report.results = {{"windows", windows}};
    deliver(report, global);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shiftlab: before/after shift analyses for event and series data"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs global;
    app.add_option("--output", global.output, "report path (stdout when omitted)");
    app.add_option("--seed", global.seed, "seed for randomized analyses");
    app.add_flag("--quiet", global.quiet, "suppress progress messages");

    ChangepointArgs cp;
    CLI::App* cp_cmd = app.add_subcommand("changepoint", "detect change-points in a series");
    cp_cmd->add_option("--input", cp.input, "series csv")->required();
    cp_cmd->add_option("--value-col", cp.value_col, "value column name");
    cp_cmd->add_option("--date-col", cp.date_col, "date column name (consecutive days)");
    cp_cmd->add_option("--cost", cp.cost, "l2|normal|poisson")
        ->check(CLI::IsMember({"l2", "normal", "poisson"}));
    cp_cmd->add_option("--penalty", cp.penalty, "bic|aic|<float>");
    cp_cmd->add_option("--solver", cp.solver, "exact|pelt")
        ->check(CLI::IsMember({"exact", "pelt"}));
    cp_cmd->add_option("--min-seg-len", cp.min_seg_len, "minimum segment length")
        ->check(CLI::PositiveNumber);
    cp_cmd->add_option("--series-out", cp.series_out, "plot-ready series csv with breaks");

    DidArgs did;
    CLI::App* did_cmd = app.add_subcommand("did", "difference-in-differences regression");
    did_cmd->add_option("--input", did.input, "records csv")->required();
    did_cmd->add_option("--y", did.y_col, "response column");
    did_cmd->add_option("--time", did.time_col, "year indicator column");
    did_cmd->add_option("--lockdown", did.lockdown_col, "0/1 lockdown column");
    did_cmd->add_option("--x", did.x_col, "covariate column");
    did_cmd->add_flag("--x-numeric", did.x_numeric, "treat x as a numeric covariate");
    did_cmd->add_option("--time-levels", did.time_levels,
                        "declared time levels, reference first")
        ->delimiter(',');
    did_cmd->add_option("--x-levels", did.x_levels, "declared x levels, reference first")
        ->delimiter(',');
    did_cmd->add_option("--vcov", did.vcov, "classical|hc1")
        ->check(CLI::IsMember({"classical", "hc1"}));
    did_cmd->add_option("--level", did.level, "confidence level");

    KdeShiftArgs kde;
    CLI::App* kde_cmd = app.add_subcommand("kde-shift", "spatial distribution shift test");
    kde_cmd->add_option("--input", kde.input, "events csv")->required();
    kde_cmd->add_option("--anchor", kde.anchor, "split date YYYY-MM-DD")->required();
    kde_cmd->add_option("--window", kde.window, "window length in days")
        ->check(CLI::PositiveNumber);
    kde_cmd->add_option("--grid", kde.grid, "grid nodes per axis")->check(CLI::PositiveNumber);
    kde_cmd->add_option("--pad", kde.pad, "grid padding in bandwidths (>= 3)");
    kde_cmd->add_option("--permutations", kde.permutations, "permutation count (>= 99)");
    kde_cmd->add_option("--date-col", kde.date_col, "date column name");
    kde_cmd->add_option("--x-col", kde.x_col, "x coordinate column");
    kde_cmd->add_option("--y-col", kde.y_col, "y coordinate column");
    kde_cmd->add_option("--density-out", kde.density_out, "plot-ready density grid csv");

    CohortArgs cohort;
    CLI::App* cohort_cmd = app.add_subcommand("cohort", "per-group before/after deltas");
    cohort_cmd->add_option("--input", cohort.input, "events csv")->required();
    cohort_cmd->add_option("--anchor", cohort.anchor, "auto or YYYY-MM-DD");
    cohort_cmd->add_option("--windows", cohort.windows, "window lengths in days")
        ->delimiter(',');
    cohort_cmd->add_option("--factor", cohort.factor, "attribute column to group by")
        ->required();
    cohort_cmd->add_option("--prior-anchor", cohort.prior_anchor,
                           "same-calendar anchor in the prior year for seasonal adjustment");
    cohort_cmd->add_option("--boot", cohort.boot, "bootstrap resamples (>= 200)");
    cohort_cmd->add_option("--level", cohort.level, "confidence level");
    cohort_cmd->add_option("--date-col", cohort.date_col, "date column name");

    try {
        app.parse(argc, argv);
        if (cp_cmd->parsed()) run_changepoint(cp, global);
        if (did_cmd->parsed()) run_did(did, global);
        if (kde_cmd->parsed()) run_kde_shift(kde, global);
        if (cohort_cmd->parsed()) run_cohort(cohort, global);
        return 0;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return is_input_error(e.code()) ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
