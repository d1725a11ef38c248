#include "shiftlab/core.hpp"

#include <cmath>
#include <cstdio>

namespace shiftlab {

namespace {

std::chrono::year_month_day to_ymd(std::chrono::sys_days d) {
    return std::chrono::year_month_day{d};
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day) {
    std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                    std::chrono::day{day}};
    if (!ymd.ok()) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", year, month, day);
        fail(Errc::ParseError, std::string("invalid calendar date ") + buf);
    }
    days_ = std::chrono::sys_days{ymd};
}

Date Date::parse(const std::string& text) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3) {
        fail(Errc::ParseError, "expected YYYY-MM-DD, got '" + text + "'");
    }
    return Date(y, m, d);
}

std::string Date::to_string() const {
    auto ymd = to_ymd(days_);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

Date Date::plus_days(long n) const { return Date(days_ + std::chrono::days{n}); }

long Date::days_until(const Date& other) const {
    return (other.days_ - days_).count();
}

int Date::year() const { return static_cast<int>(to_ymd(days_).year()); }
unsigned Date::month() const { return static_cast<unsigned>(to_ymd(days_).month()); }
unsigned Date::day() const { return static_cast<unsigned>(to_ymd(days_).day()); }

TimeSeries::TimeSeries(std::vector<double> values, std::optional<Date> start_date,
                       std::string label)
    : values_(std::move(values)), start_date_(std::move(start_date)), label_(std::move(label)) {
    if (values_.empty()) {
        fail(Errc::EmptySeries, "a time series needs at least one observation");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            fail(Errc::NonFiniteValue,
                 "non-finite value at index " + std::to_string(i + 1));
        }
    }
}

double TimeSeries::at(int t) const {
    if (t < 1 || t > length()) {
        fail(Errc::InvalidRange, "index " + std::to_string(t) + " outside 1.." +
                                     std::to_string(length()));
    }
    return values_[static_cast<std::size_t>(t - 1)];
}

Date TimeSeries::date_of(int t) const {
    if (!start_date_) {
        fail(Errc::InvalidArgument, "series has no start date");
    }
    if (t < 1 || t > length()) {
        fail(Errc::InvalidRange, "index " + std::to_string(t) + " outside 1.." +
                                     std::to_string(length()));
    }
    return start_date_->plus_days(t - 1);
}

Segmentation::Segmentation(std::vector<int> breaks, int series_len)
    : breaks_(std::move(breaks)), series_len_(series_len) {
    if (series_len_ < 1) {
        fail(Errc::InvalidSegmentation, "series length must be >= 1");
    }
    int prev = 1;
    for (int b : breaks_) {
        if (b <= 1 || b >= series_len_) {
            fail(Errc::InvalidSegmentation,
                 "break " + std::to_string(b) + " outside the open interval (1, " +
                     std::to_string(series_len_) + ")");
        }
        if (b <= prev) {
            fail(Errc::InvalidSegmentation, "breaks must be strictly increasing");
        }
        prev = b;
    }
}

std::vector<std::pair<int, int>> Segmentation::segments() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(breaks_.size() + 1);
    int start = 1;
    for (int b : breaks_) {
        out.emplace_back(start, b);
        start = b;
    }
    out.emplace_back(start, series_len_ + 1);
    return out;
}

void EventRecord::validate() const {
    for (const auto& [key, value] : attributes) {
        if (key.empty() || value.empty()) {
            fail(Errc::InvalidArgument, "attribute names and levels must be non-empty");
        }
    }
    if (!(weight > 0.0) || !std::isfinite(weight)) {
        fail(Errc::InvalidArgument, "event weight must be positive and finite");
    }
    if (location) {
        if (!std::isfinite(location->first) || !std::isfinite(location->second)) {
            fail(Errc::NonFiniteValue, "event location must be finite");
        }
    }
}

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::EmptySeries: return "EmptySeries";
        case Errc::NonFiniteValue: return "NonFiniteValue";
        case Errc::InvalidRange: return "InvalidRange";
        case Errc::SegmentTooShort: return "SegmentTooShort";
        case Errc::NegativeCount: return "NegativeCount";
        case Errc::InvalidSegmentation: return "InvalidSegmentation";
        case Errc::SeriesTooShort: return "SeriesTooShort";
        case Errc::UnknownLevel: return "UnknownLevel";
        case Errc::EmptyData: return "EmptyData";
        case Errc::RankDeficient: return "RankDeficient";
        case Errc::InsufficientData: return "InsufficientData";
        case Errc::DegenerateSpread: return "DegenerateSpread";
        case Errc::GridTooSmall: return "GridTooSmall";
        case Errc::GridTooCoarse: return "GridTooCoarse";
        case Errc::GridMismatch: return "GridMismatch";
        case Errc::EmptySample: return "EmptySample";
        case Errc::EmptyWindow: return "EmptyWindow";
        case Errc::FactorMissing: return "FactorMissing";
        case Errc::WindowOutOfRange: return "WindowOutOfRange";
        case Errc::ParseError: return "ParseError";
        case Errc::DateGap: return "DateGap";
        case Errc::MissingColumn: return "MissingColumn";
        case Errc::IoError: return "IoError";
        case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "UnknownError";
}

bool is_input_error(Errc code) {
    switch (code) {
        case Errc::EmptySeries:
        case Errc::NonFiniteValue:
        case Errc::UnknownLevel:
        case Errc::EmptyData:
        case Errc::ParseError:
        case Errc::DateGap:
        case Errc::MissingColumn:
        case Errc::IoError:
        case Errc::InvalidArgument:
            return true;
        default:
            return false;
    }
}

}  // namespace shiftlab
