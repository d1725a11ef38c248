#pragma once

#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shiftlab/core.hpp"

namespace shiftlab {

inline constexpr const char* kToolVersion = "0.1.0";

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column_index(const std::string& name) const;
    std::size_t require_column(const std::string& name) const;  // MissingColumn
};

// RFC-4180-style reader: quoted fields, embedded commas and quotes, CRLF.
CsvTable read_csv(const std::string& path);

// Series loader. Values come from value_col in row order; when date_col is
// given the rows must be consecutive calendar days (a gap is an error, never
// silently imputed).
TimeSeries load_series_csv(const std::string& path, const std::string& value_col,
                           const std::optional<std::string>& date_col = std::nullopt);

struct EventSchema {
    std::string date_col = "date";
    std::optional<std::string> x_col;
    std::optional<std::string> y_col;
    std::optional<std::string> weight_col;
    // Empty means: every column other than date/x/y/weight is an attribute.
    std::vector<std::string> attribute_cols;
};

struct EventLoadResult {
    std::vector<EventRecord> events;
    // Inferred level sets per attribute column, sorted.
    std::map<std::string, std::vector<std::string>> levels;
    std::vector<std::string> warnings;
};

EventLoadResult load_events_csv(const std::string& path, const EventSchema& schema = {});

// Analysis report emitted as canonical JSON: sorted keys, floats at 17
// significant digits, newline-terminated; byte-stable across reruns.
struct AnalysisReport {
    std::string kind;
    nlohmann::json input_digest = nlohmann::json::object();
    nlohmann::json parameters = nlohmann::json::object();
    nlohmann::json results = nlohmann::json::object();
    std::vector<std::string> warnings;
};

nlohmann::json report_to_json(const AnalysisReport& report);
std::string canonical_json(const nlohmann::json& value);
void emit_report(const AnalysisReport& report, const std::string& path);

// Plot-ready density export: x, y, f_before, f_after rows over the shared
// grid, plus a header line.
void write_density_csv(const std::string& path, const class Density2D& before,
                       const class Density2D& after);

// Plot-ready series export: index, optional date, value, 0-based segment id,
// and a break marker at each detected segment start.
void write_series_csv(const std::string& path, const TimeSeries& series,
                      const Segmentation& seg);

}  // namespace shiftlab
