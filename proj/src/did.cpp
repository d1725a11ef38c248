#include "shiftlab/did.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <set>

namespace shiftlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int level_index(const std::vector<std::string>& levels, const std::string& value,
                const std::string& factor) {
    auto it = std::find(levels.begin(), levels.end(), value);
    if (it == levels.end()) {
        fail(Errc::UnknownLevel,
             "level '" + value + "' of factor '" + factor + "' was not declared");
    }
    return static_cast<int>(it - levels.begin());
}

double parse_numeric(const std::string& text, const std::string& factor) {
    try {
        std::size_t pos = 0;
        double v = std::stod(text, &pos);
        if (pos != text.size() || !std::isfinite(v)) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception&) {
        fail(Errc::ParseError, "value '" + text + "' of numeric covariate '" + factor +
                                   "' is not a finite number");
    }
}

}  // namespace

DidSchema infer_schema(const std::vector<DidRecord>& records, DidSchema base) {
    std::set<std::string> times;
    std::set<std::string> xs;
    for (const auto& r : records) {
        times.insert(r.time);
        xs.insert(r.x);
    }
    if (base.time_levels.empty()) {
        base.time_levels.assign(times.begin(), times.end());
    }
    if (base.x_levels.empty()) {
        base.x_levels.assign(xs.begin(), xs.end());
    }
    return base;
}

DesignMatrix build_design(const std::vector<DidRecord>& records, const DidSchema& schema) {
    if (records.empty()) {
        fail(Errc::EmptyData, "no records to build a design from");
    }
    if (schema.time_levels.size() < 2) {
        fail(Errc::InvalidArgument, "factor '" + schema.time_name +
                                        "' needs at least two declared levels");
    }
    if (!schema.x_is_numeric() && schema.x_levels.size() < 2) {
        fail(Errc::InvalidArgument,
             "factor '" + schema.x_name + "' needs at least two declared levels (or none for numeric)");
    }

    const int n = static_cast<int>(records.size());
    const int nt = static_cast<int>(schema.time_levels.size()) - 1;  // dummies
    const int nx = schema.x_is_numeric() ? 1 : static_cast<int>(schema.x_levels.size()) - 1;
    const int k = 1 + nt + 1 + nx + nt + nt * nx + nx + nt * nx;

    DesignMatrix out;
    out.schema = schema;
    out.X.resize(n, k);
    out.y.resize(n);

    // Per-record encoded pieces.
    Eigen::MatrixXd tcols(n, nt);  // time dummies
    Eigen::VectorXd lock(n);
    Eigen::MatrixXd xcols(n, nx);  // x dummies or the numeric covariate

    for (int i = 0; i < n; ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        if (!std::isfinite(r.y)) {
            fail(Errc::NonFiniteValue, "y must be finite (record " + std::to_string(i + 1) + ")");
        }
        if (r.lockdown != 0 && r.lockdown != 1) {
            fail(Errc::InvalidArgument, "'" + schema.lockdown_name + "' must be 0 or 1 (record " +
                                            std::to_string(i + 1) + ")");
        }
        out.y(i) = r.y;
        lock(i) = static_cast<double>(r.lockdown);
        int ti = level_index(schema.time_levels, r.time, schema.time_name);
        tcols.row(i).setZero();
        if (ti > 0) tcols(i, ti - 1) = 1.0;
        if (schema.x_is_numeric()) {
            xcols(i, 0) = parse_numeric(r.x, schema.x_name);
        } else {
            int xi = level_index(schema.x_levels, r.x, schema.x_name);
            xcols.row(i).setZero();
            if (xi > 0) xcols(i, xi - 1) = 1.0;
        }
    }

    auto time_col_name = [&](int j) { return schema.time_name + "[" + schema.time_levels[static_cast<std::size_t>(j + 1)] + "]"; };
    auto x_col_name = [&](int j) {
        return schema.x_is_numeric()
                   ? schema.x_name
                   : schema.x_name + "[" + schema.x_levels[static_cast<std::size_t>(j + 1)] + "]";
    };

    int c = 0;
    out.X.col(c).setOnes();
    out.column_names.push_back("(Intercept)");
    ++c;
    for (int j = 0; j < nt; ++j, ++c) {
        out.X.col(c) = tcols.col(j);
        out.column_names.push_back(time_col_name(j));
    }
    out.X.col(c) = lock;
    out.column_names.push_back(schema.lockdown_name);
    ++c;
    for (int j = 0; j < nx; ++j, ++c) {
        out.X.col(c) = xcols.col(j);
        out.column_names.push_back(x_col_name(j));
    }
    for (int j = 0; j < nt; ++j, ++c) {
        out.X.col(c) = tcols.col(j).cwiseProduct(lock);
        out.column_names.push_back(time_col_name(j) + ":" + schema.lockdown_name);
    }
    for (int j = 0; j < nt; ++j) {
        for (int m = 0; m < nx; ++m, ++c) {
            out.X.col(c) = tcols.col(j).cwiseProduct(xcols.col(m));
            out.column_names.push_back(time_col_name(j) + ":" + x_col_name(m));
        }
    }
    for (int m = 0; m < nx; ++m, ++c) {
        out.X.col(c) = lock.cwiseProduct(xcols.col(m));
        out.column_names.push_back(schema.lockdown_name + ":" + x_col_name(m));
    }
    for (int j = 0; j < nt; ++j) {
        for (int m = 0; m < nx; ++m, ++c) {
            out.X.col(c) = tcols.col(j).cwiseProduct(lock).cwiseProduct(xcols.col(m));
            out.column_names.push_back(time_col_name(j) + ":" + schema.lockdown_name + ":" +
                                       x_col_name(m));
        }
    }

    return out;
}

std::optional<int> DidFit::column_index(const std::string& name) const {
    auto it = std::find(column_names.begin(), column_names.end(), name);
    if (it == column_names.end()) return std::nullopt;
    return static_cast<int>(it - column_names.begin());
}

DidFit fit_ols(const DesignMatrix& design, VcovKind vcov) {
    const int n = design.n();
    const int k = design.k();
    if (n < k) {
        fail(Errc::InsufficientData, "n=" + std::to_string(n) + " rows < k=" +
                                         std::to_string(k) + " regressors");
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.X);
    const int rank = static_cast<int>(qr.rank());
    if (rank < k) {
        // The pivoting pushes the dependent columns to the back; name them.
        std::string names;
        const auto& perm = qr.colsPermutation().indices();
        for (int j = rank; j < k; ++j) {
            if (!names.empty()) names += ", ";
            names += design.column_names[static_cast<std::size_t>(perm(j))];
        }
        fail(Errc::RankDeficient, "collinear columns: " + names);
    }

    DidFit fit;
    fit.column_names = design.column_names;
    fit.vcov_kind = vcov;
    fit.coefficients = qr.solve(design.y);

    Eigen::VectorXd resid = design.y - design.X * fit.coefficients;
    const double rss = resid.squaredNorm();
    fit.residual_df = n - rank;

    // (X'X)^-1 from the R factor: X P = Q R  =>  (X'X)^-1 = P R^-1 R^-T P'.
    Eigen::MatrixXd rinv = qr.matrixR()
                               .topLeftCorner(k, k)
                               .template triangularView<Eigen::Upper>()
                               .solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd xtx_inv = qr.colsPermutation() * (rinv * rinv.transpose()) *
                              qr.colsPermutation().transpose();

    if (fit.residual_df > 0) {
        fit.sigma2 = rss / static_cast<double>(fit.residual_df);
    } else {
        fit.sigma2 = kNaN;
    }

    if (vcov == VcovKind::Classical) {
        fit.vcov = fit.sigma2 * xtx_inv;
    } else {
        Eigen::MatrixXd meat =
            design.X.transpose() * resid.array().square().matrix().asDiagonal() * design.X;
        double adjust = fit.residual_df > 0
                            ? static_cast<double>(n) / static_cast<double>(fit.residual_df)
                            : kNaN;
        fit.vcov = adjust * (xtx_inv * meat * xtx_inv);
    }

    fit.stderrs = fit.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
    fit.t_stats.resize(k);
    fit.p_values.resize(k);
    for (int j = 0; j < k; ++j) {
        double se = fit.stderrs(j);
        if (fit.residual_df > 0 && se > 0.0 && std::isfinite(se)) {
            fit.t_stats(j) = fit.coefficients(j) / se;
            boost::math::students_t dist(static_cast<double>(fit.residual_df));
            fit.p_values(j) =
                2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(fit.t_stats(j))));
        } else {
            fit.t_stats(j) = kNaN;
            fit.p_values(j) = kNaN;
        }
    }

    double ymean = design.y.mean();
    double tss = (design.y.array() - ymean).matrix().squaredNorm();
    fit.r_squared = tss > 0.0 ? 1.0 - rss / tss : kNaN;
    return fit;
}

DidReport did_report(const DidFit& fit, const std::string& lockdown_name, double level) {
    if (!(level > 0.0 && level < 1.0)) {
        fail(Errc::InvalidArgument, "confidence level must be in (0, 1)");
    }
    DidReport report;
    report.level = level;

    double tcrit = kNaN;
    if (fit.residual_df > 0) {
        boost::math::students_t dist(static_cast<double>(fit.residual_df));
        tcrit = boost::math::quantile(dist, 1.0 - (1.0 - level) / 2.0);
    }

    for (std::size_t j = 0; j < fit.column_names.size(); ++j) {
        // A term involves lockdown iff one of its ':'-separated components
        // is exactly the lockdown column.
        const std::string& name = fit.column_names[j];
        bool involves = false;
        std::size_t pos = 0;
        while (pos <= name.size()) {
            std::size_t next = name.find(':', pos);
            std::string part = name.substr(pos, next == std::string::npos ? next : next - pos);
            if (part == lockdown_name) involves = true;
            if (next == std::string::npos) break;
            pos = next + 1;
        }
        if (!involves) continue;

        DidTermSummary term;
        term.term = name;
        term.estimate = fit.coefficients(static_cast<int>(j));
        term.se = fit.stderrs(static_cast<int>(j));
        term.p_value = fit.p_values(static_cast<int>(j));
        if (fit.residual_df > 0 && std::isfinite(term.se)) {
            term.ci_low = term.estimate - tcrit * term.se;
            term.ci_high = term.estimate + tcrit * term.se;
            term.significant = std::isfinite(term.p_value) && term.p_value < 1.0 - level;
        }
        report.lockdown_terms.push_back(std::move(term));
    }
    return report;
}

}  // namespace shiftlab
