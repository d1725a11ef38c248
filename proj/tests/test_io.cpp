#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "shiftlab/io.hpp"
#include "shiftlab/kdeshift.hpp"

using namespace shiftlab;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("shiftlab_io_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("series loader reads values in row order") {
    TempDir tmp;
    write_file(tmp.file("s.csv"), "date,value\n2020-03-01,1.5\n2020-03-02,2\n2020-03-03,-3\n");
    TimeSeries s = load_series_csv(tmp.file("s.csv"), "value", std::string("date"));
    CHECK(s.length() == 3);
    CHECK(s.at(1) == 1.5);
    CHECK(s.at(3) == -3.0);
    REQUIRE(s.start_date().has_value());
    CHECK(*s.start_date() == Date(2020, 3, 1));
}

TEST_CASE("series loader reports parse errors with a 1-based row") {
    TempDir tmp;
    write_file(tmp.file("s.csv"), "value\n1.0\nbanana\n");
    try {
        load_series_csv(tmp.file("s.csv"), "value");
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ParseError);
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
}

TEST_CASE("series loader rejects date gaps") {
    TempDir tmp;
    write_file(tmp.file("s.csv"), "date,value\n2020-03-01,1\n2020-03-03,2\n");
    try {
        load_series_csv(tmp.file("s.csv"), "value", std::string("date"));
        FAIL("expected DateGap");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DateGap);
        CHECK(std::string(e.what()).find("2020-03-02") != std::string::npos);
    }
}

TEST_CASE("series loader flags missing columns and files") {
    TempDir tmp;
    write_file(tmp.file("s.csv"), "value\n1\n");
    CHECK_THROWS_AS(load_series_csv(tmp.file("s.csv"), "flow"), Error);
    CHECK_THROWS_AS(load_series_csv(tmp.file("missing.csv"), "value"), Error);
}

TEST_CASE("event loader infers attributes and level sets") {
    TempDir tmp;
    write_file(tmp.file("e.csv"),
               "date,x,y,age,gender\n"
               "2020-03-01,1.0,2.0,20-29,m\n"
               "2020-03-02,1.5,2.5,30-39,f\n"
               "2020-03-02,-1.5,0.5,20-29,f\n");
    EventSchema schema;
    schema.x_col = "x";
    schema.y_col = "y";
    auto result = load_events_csv(tmp.file("e.csv"), schema);
    REQUIRE(result.events.size() == 3);
    CHECK(result.events[0].attributes.size() == 2);
    CHECK(result.events[0].location->first == 1.0);
    CHECK(result.levels.at("age") == std::vector<std::string>{"20-29", "30-39"});
    CHECK(result.levels.at("gender") == std::vector<std::string>{"f", "m"});
}

TEST_CASE("event loader tolerates a header-only file with a warning") {
    TempDir tmp;
    write_file(tmp.file("e.csv"), "date,age\n");
    auto result = load_events_csv(tmp.file("e.csv"));
    CHECK(result.events.empty());
    CHECK(!result.warnings.empty());
}

TEST_CASE("event loader rejects malformed dates with the row number") {
    TempDir tmp;
    write_file(tmp.file("e.csv"), "date,age\n2020-03-01,a\nsoon,b\n");
    try {
        load_events_csv(tmp.file("e.csv"));
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ParseError);
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
}

TEST_CASE("quoted csv fields are handled") {
    TempDir tmp;
    write_file(tmp.file("e.csv"),
               "date,note\n2020-03-01,\"a, quoted \"\"cell\"\"\"\n");
    auto result = load_events_csv(tmp.file("e.csv"));
    REQUIRE(result.events.size() == 1);
    CHECK(result.events[0].attributes.at("note") == "a, quoted \"cell\"");
}

TEST_CASE("report emission is canonical and byte-stable") {
    TempDir tmp;
    AnalysisReport report;
    report.kind = "changepoint";
    report.parameters = {{"seed", 42u}, {"beta", 3.5}, {"cost", "l2"}};
    report.results = {{"breaks", {21, 55}}, {"objective", 0.1}};
    report.warnings = {"w1"};

    emit_report(report, tmp.file("r1.json"));
    emit_report(report, tmp.file("r2.json"));
    std::string a = read_file(tmp.file("r1.json"));
    std::string b = read_file(tmp.file("r2.json"));
    CHECK(a == b);
    CHECK(!a.empty());
    CHECK(a.back() == '\n');
    CHECK(a.find("\"seed\":42") != std::string::npos);
    // floats carry 17 significant digits
    CHECK(a.find("0.10000000000000001") != std::string::npos);
    // keys are sorted within each object
    CHECK(a.find("\"beta\"") < a.find("\"cost\""));
    CHECK(a.find("\"cost\"") < a.find("\"seed\""));
    // the emitted file is valid json
    auto parsed = nlohmann::json::parse(a);
    CHECK(parsed["results"]["breaks"][0] == 21);
}

TEST_CASE("emit to an unwritable path raises IoError") {
    AnalysisReport report;
    report.kind = "x";
    CHECK_THROWS_AS(emit_report(report, "/nonexistent_dir_zzz/report.json"), Error);
}

TEST_CASE("nan results serialize as null") {
    AnalysisReport report;
    report.kind = "did";
    report.results = {{"sigma2", std::nan("")}};
    std::string s = canonical_json(report_to_json(report));
    CHECK(s.find("\"sigma2\":null") != std::string::npos);
}

TEST_CASE("density export writes a shared-grid table") {
    TempDir tmp;
    std::vector<Point2> a = {{0.0, 0.0}, {1.0, 0.5}, {0.5, 1.0}, {0.2, 0.8}};
    std::vector<Point2> b = {{0.1, 0.1}, {0.9, 0.4}, {0.4, 0.9}, {0.3, 0.7}};
    std::vector<Point2> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    Bandwidth2D bw = bandwidth_rule(pooled);
    Grid2D grid = make_grid(pooled, bw, GridSpec{24, 24, 3.0, std::nullopt});
    Density2D da = estimate_density(a, bw, grid);
    Density2D db = estimate_density(b, bw, grid);
    write_density_csv(tmp.file("g.csv"), da, db);
    std::string text = read_file(tmp.file("g.csv"));
    CHECK(text.rfind("x,y,f_before,f_after\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 24 * 24);
}

TEST_CASE("series export marks detected breaks") {
    TempDir tmp;
    TimeSeries s = make_series({0, 0, 0, 5, 5, 5}, Date(2020, 3, 1));
    Segmentation seg({4}, 6);
    write_series_csv(tmp.file("s.csv"), s, seg);
    std::string text = read_file(tmp.file("s.csv"));
    CHECK(text.rfind("t,date,value,segment,is_break\n", 0) == 0);
    CHECK(text.find("4,2020-03-04,5,1,1\n") != std::string::npos);
    CHECK(text.find("3,2020-03-03,0,0,0\n") != std::string::npos);
}
