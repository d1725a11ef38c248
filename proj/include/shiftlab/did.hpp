#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "shiftlab/error.hpp"

namespace shiftlab {

enum class VcovKind { Classical, HC1 };

// One observation for the interaction regression y ~ time*lockdown*x.
// `time` and `x` hold level text; when the schema declares x numeric the
// text is parsed as a real covariate.
struct DidRecord {
    double y = 0.0;
    std::string time;
    int lockdown = 0;
    std::string x;
};

// Declared level sets with treatment coding: the first declared level of
// each factor is the dropped reference. An empty x level set means x enters
// as a single numeric regressor.
struct DidSchema {
    std::string time_name = "time";
    std::string lockdown_name = "lockdown";
    std::string x_name = "x";
    std::vector<std::string> time_levels;
    std::vector<std::string> x_levels;

    bool x_is_numeric() const { return x_levels.empty(); }
};

// Sorted-unique level sets observed in the data, for callers that do not
// declare them up front.
DidSchema infer_schema(const std::vector<DidRecord>& records, DidSchema base = {});

struct DesignMatrix {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> column_names;
    DidSchema schema;

    int n() const { return static_cast<int>(X.rows()); }
    int k() const { return static_cast<int>(X.cols()); }
};

// Treatment-coded design with intercept, in the fixed column order:
// intercept, time, lockdown, x, time:lockdown, time:x, lockdown:x,
// time:lockdown:x.
DesignMatrix build_design(const std::vector<DidRecord>& records, const DidSchema& schema);

struct DidFit {
    std::vector<std::string> column_names;
    Eigen::VectorXd coefficients;
    Eigen::VectorXd stderrs;
    Eigen::VectorXd t_stats;
    Eigen::VectorXd p_values;
    Eigen::MatrixXd vcov;
    int residual_df = 0;
    double sigma2 = 0.0;     // NaN when residual_df == 0
    double r_squared = 0.0;  // NaN when y is constant
    VcovKind vcov_kind = VcovKind::Classical;

    std::optional<int> column_index(const std::string& name) const;
};

// OLS via column-pivoted QR (never normal-equation inversion), with
// classical or HC1 heteroskedasticity-robust covariance and Student-t
// p-values on n - k degrees of freedom.
DidFit fit_ols(const DesignMatrix& design, VcovKind vcov = VcovKind::Classical);

struct DidTermSummary {
    std::string term;
    double estimate = 0.0;
    double se = 0.0;  // NaN when undefined
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    double p_value = 0.0;  // NaN when undefined
    bool significant = false;
};

struct DidReport {
    double level = 0.95;
    std::vector<DidTermSummary> lockdown_terms;
};

// The lockdown main effect and every lockdown-involving interaction, with
// confidence intervals at the given level. With zero residual df the
// intervals are reported as undefined rather than NaN.
DidReport did_report(const DidFit& fit, const std::string& lockdown_name = "lockdown",
                     double level = 0.95);

}  // namespace shiftlab
