#include "shiftlab/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "shiftlab/kdeshift.hpp"

namespace shiftlab {

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            if (!cur.empty()) {
                fail(Errc::ParseError,
                     "stray quote in line " + std::to_string(line_no));
            }
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) {
        fail(Errc::ParseError, "unterminated quote in line " + std::to_string(line_no));
    }
    fields.push_back(cur);
    return fields;
}

double parse_double_cell(const std::string& text, std::size_t row, const std::string& col) {
    try {
        std::size_t pos = 0;
        double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        fail(Errc::ParseError, "row " + std::to_string(row) + ", column '" + col +
                                   "': '" + text + "' is not a number");
    }
}

Date parse_date_cell(const std::string& text, std::size_t row, const std::string& col) {
    try {
        return Date::parse(text);
    } catch (const Error&) {
        fail(Errc::ParseError, "row " + std::to_string(row) + ", column '" + col +
                                   "': '" + text + "' is not a YYYY-MM-DD date");
    }
}

std::string format_double(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void dump_canonical(const nlohmann::json& v, std::string& out) {
    switch (v.type()) {
        case nlohmann::json::value_t::object: {
            out += '{';
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out += ',';
                first = false;
                out += nlohmann::json(it.key()).dump();
                out += ':';
                dump_canonical(it.value(), out);
            }
            out += '}';
            break;
        }
        case nlohmann::json::value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i > 0) out += ',';
                dump_canonical(v[i], out);
            }
            out += ']';
            break;
        }
        case nlohmann::json::value_t::number_float:
            out += format_double(v.get<double>());
            break;
        default:
            // strings get escaped, integers/booleans/null print exactly
            out += v.dump();
            break;
    }
}

}  // namespace

std::optional<std::size_t> CsvTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    return std::nullopt;
}

std::size_t CsvTable::require_column(const std::string& name) const {
    auto idx = column_index(name);
    if (!idx) {
        fail(Errc::MissingColumn, "column '" + name + "' not found in header");
    }
    return *idx;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(Errc::IoError, "cannot open '" + path + "' for reading");
    }
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            table.columns = split_csv_line(line, line_no);
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> fields = split_csv_line(line, line_no);
        if (fields.size() != table.columns.size()) {
            fail(Errc::ParseError, "line " + std::to_string(line_no) + " has " +
                                       std::to_string(fields.size()) + " fields, header has " +
                                       std::to_string(table.columns.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    if (table.columns.empty()) {
        fail(Errc::ParseError, "'" + path + "' has no header row");
    }
    return table;
}

TimeSeries load_series_csv(const std::string& path, const std::string& value_col,
                           const std::optional<std::string>& date_col) {
    CsvTable table = read_csv(path);
    std::size_t vi = table.require_column(value_col);
    std::optional<std::size_t> di;
    if (date_col) di = table.require_column(*date_col);

    std::vector<double> values;
    values.reserve(table.rows.size());
    std::optional<Date> start;
    std::optional<Date> prev;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        values.push_back(parse_double_cell(row[vi], r + 1, value_col));
        if (di) {
            Date d = parse_date_cell(row[*di], r + 1, *date_col);
            if (!start) start = d;
            if (prev) {
                Date expect = prev->plus_days(1);
                if (d != expect) {
                    fail(Errc::DateGap, "expected " + expect.to_string() + " after " +
                                            prev->to_string() + ", got " + d.to_string());
                }
            }
            prev = d;
        }
    }
    return TimeSeries(std::move(values), start);
}

EventLoadResult load_events_csv(const std::string& path, const EventSchema& schema) {
    CsvTable table = read_csv(path);
    EventLoadResult out;

    std::size_t date_i = table.require_column(schema.date_col);
    if (schema.x_col.has_value() != schema.y_col.has_value()) {
        fail(Errc::InvalidArgument, "x and y columns must be mapped together");
    }
    std::optional<std::size_t> x_i, y_i, w_i;
    if (schema.x_col) x_i = table.require_column(*schema.x_col);
    if (schema.y_col) y_i = table.require_column(*schema.y_col);
    if (schema.weight_col) w_i = table.require_column(*schema.weight_col);

    std::vector<std::pair<std::string, std::size_t>> attrs;
    if (schema.attribute_cols.empty()) {
        for (std::size_t i = 0; i < table.columns.size(); ++i) {
            if (i == date_i || (x_i && i == *x_i) || (y_i && i == *y_i) || (w_i && i == *w_i)) {
                continue;
            }
            attrs.emplace_back(table.columns[i], i);
        }
    } else {
        for (const auto& name : schema.attribute_cols) {
            attrs.emplace_back(name, table.require_column(name));
        }
    }

    std::map<std::string, std::set<std::string>> level_sets;
    std::map<std::string, std::size_t> empty_cells;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        EventRecord e;
        e.date = parse_date_cell(row[date_i], r + 1, schema.date_col);
        if (x_i) {
            const std::string& xs = row[*x_i];
            const std::string& ys = row[*y_i];
            if (!xs.empty() || !ys.empty()) {
                e.location = {parse_double_cell(xs, r + 1, *schema.x_col),
                              parse_double_cell(ys, r + 1, *schema.y_col)};
            }
        }
        if (w_i) {
            e.weight = parse_double_cell(row[*w_i], r + 1, *schema.weight_col);
        }
        for (const auto& [name, idx] : attrs) {
            const std::string& cell = row[idx];
            if (cell.empty()) {
                ++empty_cells[name];
                continue;
            }
            e.attributes[name] = cell;
            level_sets[name].insert(cell);
        }
        e.validate();
        out.events.push_back(std::move(e));
    }

    for (const auto& [name, set] : level_sets) {
        out.levels[name].assign(set.begin(), set.end());
    }
    for (const auto& [name, count] : empty_cells) {
        out.warnings.push_back("column '" + name + "': " + std::to_string(count) +
                               " empty cells treated as missing attribute");
    }
    if (out.events.empty()) {
        out.warnings.push_back("no event rows in '" + path + "'");
    }
    return out;
}

nlohmann::json report_to_json(const AnalysisReport& report) {
    nlohmann::json j;
    j["tool_version"] = kToolVersion;
    j["kind"] = report.kind;
    j["input"] = report.input_digest;
    j["parameters"] = report.parameters;
    j["results"] = report.results;
    j["warnings"] = report.warnings;
    return j;
}

std::string canonical_json(const nlohmann::json& value) {
    std::string out;
    dump_canonical(value, out);
    out += '\n';
    return out;
}

void emit_report(const AnalysisReport& report, const std::string& path) {
    std::string payload = canonical_json(report_to_json(report));
    std::ofstream outfile(path, std::ios::binary);
    if (!outfile) {
        fail(Errc::IoError, "cannot open '" + path + "' for writing");
    }
    outfile.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!outfile) {
        fail(Errc::IoError, "failed writing '" + path + "'");
    }
}

void write_density_csv(const std::string& path, const Density2D& before,
                       const Density2D& after) {
    if (!before.grid().same_geometry(after.grid())) {
        fail(Errc::GridMismatch, "density export needs a shared grid");
    }
    std::ofstream outfile(path, std::ios::binary);
    if (!outfile) {
        fail(Errc::IoError, "cannot open '" + path + "' for writing");
    }
    outfile << "x,y,f_before,f_after\n";
    const Grid2D& g = before.grid();
    char buf[200];
    for (int iy = 0; iy < g.ny; ++iy) {
        for (int ix = 0; ix < g.nx; ++ix) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", g.node_x(ix),
                          g.node_y(iy), before.value(ix, iy), after.value(ix, iy));
            outfile << buf;
        }
    }
    if (!outfile) {
        fail(Errc::IoError, "failed writing '" + path + "'");
    }
}

void write_series_csv(const std::string& path, const TimeSeries& series,
                      const Segmentation& seg) {
    std::ofstream outfile(path, std::ios::binary);
    if (!outfile) {
        fail(Errc::IoError, "cannot open '" + path + "' for writing");
    }
    bool dated = series.start_date().has_value();
    outfile << (dated ? "t,date,value,segment,is_break\n" : "t,value,segment,is_break\n");
    auto segments = seg.segments();
    std::size_t k = 0;
    for (int t = 1; t <= series.length(); ++t) {
        while (k + 1 < segments.size() && t >= segments[k].second) ++k;
        bool is_break = k > 0 && t == segments[k].first;
        outfile << t << ',';
        if (dated) outfile << series.date_of(t).to_string() << ',';
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", series.at(t));
        outfile << buf << ',' << k << ',' << (is_break ? 1 : 0) << '\n';
    }
    if (!outfile) {
        fail(Errc::IoError, "failed writing '" + path + "'");
    }
}

}  // namespace shiftlab
