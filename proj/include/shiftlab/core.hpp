#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shiftlab/error.hpp"

namespace shiftlab {

// Calendar date with exact day arithmetic (std::chrono civil calendar).
class Date {
  public:
    Date() : days_(std::chrono::sys_days{std::chrono::year{1970} / 1 / 1}) {}
    Date(int year, unsigned month, unsigned day);

    // "YYYY-MM-DD"; throws Errc::ParseError on malformed or invalid dates.
    static Date parse(const std::string& text);

    std::string to_string() const;

    Date plus_days(long n) const;
    long days_until(const Date& other) const;  // other - *this, in days

    int year() const;
    unsigned month() const;
    unsigned day() const;

    auto operator<=>(const Date&) const = default;

  private:
    explicit Date(std::chrono::sys_days d) : days_(d) {}
    std::chrono::sys_days days_;
};

// Ordered scalar observations m_1..m_T. Public indexing is 1-based to match
// the usual time-series convention; values are validated finite on entry.
class TimeSeries {
  public:
    TimeSeries(std::vector<double> values, std::optional<Date> start_date = std::nullopt,
               std::string label = {});

    int length() const { return static_cast<int>(values_.size()); }
    double at(int t) const;  // 1-based
    const std::vector<double>& values() const { return values_; }
    const std::optional<Date>& start_date() const { return start_date_; }
    const std::string& label() const { return label_; }

    // Date of 1-based index t; requires start_date.
    Date date_of(int t) const;

  private:
    std::vector<double> values_;
    std::optional<Date> start_date_;
    std::string label_;
};

inline TimeSeries make_series(std::vector<double> values,
                              std::optional<Date> start_date = std::nullopt) {
    return TimeSeries(std::move(values), std::move(start_date));
}

// Interior break indices t_1 < ... < t_K with 1 < t_k < T. Segment k
// (k = 0..K) spans the half-open index range [t_k, t_{k+1}) with sentinels
// t_0 = 1 and t_{K+1} = T + 1, so the segments partition 1..T.
class Segmentation {
  public:
    Segmentation(std::vector<int> breaks, int series_len);

    const std::vector<int>& breaks() const { return breaks_; }
    int series_len() const { return series_len_; }
    int num_breaks() const { return static_cast<int>(breaks_.size()); }

    // (start, end_exclusive) pairs, 1-based, covering 1..T exactly once.
    std::vector<std::pair<int, int>> segments() const;

  private:
    std::vector<int> breaks_;
    int series_len_;
};

// One observed event (e.g. an accident record): date, optional planar
// location, categorical attributes, positive weight.
struct EventRecord {
    Date date;
    std::optional<std::pair<double, double>> location;
    std::map<std::string, std::string> attributes;
    double weight = 1.0;

    void validate() const;
};

}  // namespace shiftlab
