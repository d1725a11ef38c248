#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <unistd.h>

#include "shiftlab/core.hpp"

// End-to-end checks of the installed binary; the path comes from the
// SHIFTLAB_CLI environment variable set by ctest.

namespace {

namespace fs = std::filesystem;

std::string cli_path() {
    const char* p = std::getenv("SHIFTLAB_CLI");
    REQUIRE_MESSAGE(p != nullptr, "SHIFTLAB_CLI must point at the shiftlab binary");
    return p;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("shiftlab_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& cmd) {
    int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_series(const std::string& path) {
    std::ofstream out(path);
    out << "date,value\n";
    shiftlab::Date start(2020, 1, 1);
    for (int i = 0; i < 60; ++i) {
        out << start.plus_days(i).to_string() << "," << (i < 30 ? 1.0 : 9.0) << "\n";
    }
}

void write_events(const std::string& path) {
    std::ofstream out(path);
    out << "date,x,y,age\n";
    unsigned state = 12345;
    auto next = [&state]() {
        state = state * 1103515245u + 12345u;
        return (state >> 16) % 1000;
    };
    shiftlab::Date anchor(2020, 3, 15);
    for (int off = -40; off < 40; ++off) {
        for (int k = 0; k < 6; ++k) {
            double cx = off < 0 ? 0.0 : 2.0;
            double px = cx + (static_cast<double>(next()) / 1000.0 - 0.5) * 2.0;
            double py = (static_cast<double>(next()) / 1000.0 - 0.5) * 2.0;
            out << anchor.plus_days(off).to_string() << "," << px << "," << py << ","
                << (k % 2 ? "young" : "old") << "\n";
        }
    }
}

}  // namespace

TEST_CASE("changepoint subcommand finds the planted break and is deterministic") {
    TempDir tmp;
    write_series(tmp.file("s.csv"));
    std::string base = cli_path() + " changepoint --input " + tmp.file("s.csv") +
                       " --date-col date --cost l2 --penalty bic --solver pelt --quiet";
    CHECK(run(base + " --output " + tmp.file("r1.json")) == 0);
    CHECK(run(base + " --output " + tmp.file("r2.json")) == 0);
    std::string a = slurp(tmp.file("r1.json"));
    CHECK(a == slurp(tmp.file("r2.json")));
    auto j = nlohmann::json::parse(a);
    REQUIRE(j["results"]["num_breaks"].get<int>() >= 1);
    CHECK(j["results"]["breaks"][0].get<int>() == 31);
    CHECK(j["results"]["break_dates"][0].get<std::string>() == "2020-01-31");
}

TEST_CASE("kde-shift and cohort run end to end with seeds") {
    TempDir tmp;
    write_events(tmp.file("e.csv"));
    std::string kde = cli_path() + " kde-shift --input " + tmp.file("e.csv") +
                      " --anchor 2020-03-15 --window 30 --grid 48 --permutations 99 "
                      "--seed 4 --quiet --output " +
                      tmp.file("k.json") + " --density-out " + tmp.file("g.csv");
    CHECK(run(kde) == 0);
    auto j = nlohmann::json::parse(slurp(tmp.file("k.json")));
    CHECK(j["results"]["p_value"].get<double>() <= 0.05);  // planted shift
    CHECK(fs::exists(tmp.file("g.csv")));

    std::string cohort = cli_path() + " cohort --input " + tmp.file("e.csv") +
                         " --anchor 2020-03-15 --windows 15,30 --factor age --boot 299 "
                         "--seed 4 --quiet --output " +
                         tmp.file("c.json");
    CHECK(run(cohort) == 0);
    auto c = nlohmann::json::parse(slurp(tmp.file("c.json")));
    CHECK(c["results"]["windows"].size() == 2);
}

TEST_CASE("did subcommand fits a numeric-x interaction model") {
    TempDir tmp;
    {
        std::ofstream out(tmp.file("d.csv"));
        out << "y,time,lockdown,age\n";
        unsigned state = 777;
        auto uniform = [&state]() {
            state = state * 1103515245u + 12345u;
            return static_cast<double>((state >> 16) % 10000) / 10000.0;
        };
        for (int i = 0; i < 200; ++i) {
            int lock = i % 2;
            double age = 20.0 + 50.0 * uniform();
            double y = 0.5 * lock + 0.02 * age + uniform() - 0.5;
            out << y << "," << (i % 4 < 2 ? "2019" : "2020") << "," << lock << "," << age
                << "\n";
        }
    }
    std::string cmd = cli_path() + " did --input " + tmp.file("d.csv") +
                      " --y y --time time --lockdown lockdown --x age --x-numeric "
                      "--vcov hc1 --quiet --output " +
                      tmp.file("r.json");
    CHECK(run(cmd) == 0);
    auto j = nlohmann::json::parse(slurp(tmp.file("r.json")));
    CHECK(j["results"]["k"].get<int>() == 8);
    CHECK(j["results"]["lockdown_terms"].size() == 4);
    CHECK(j["results"]["coefficients"][3]["term"].get<std::string>() == "age");
}

TEST_CASE("input errors exit 2, analysis errors exit 3") {
    TempDir tmp;
    CHECK(run(cli_path() + " changepoint --input " + tmp.file("missing.csv") + " --quiet") == 2);

    // collinear did design: x duplicates lockdown
    std::ofstream out(tmp.file("d.csv"));
    out << "y,time,lockdown,x\n";
    for (int i = 0; i < 32; ++i) {
        int lock = i % 2;
        out << i << "," << (i % 4 < 2 ? "2019" : "2020") << "," << lock << ","
            << (lock ? "b" : "a") << "\n";
    }
    out.close();
    CHECK(run(cli_path() + " did --input " + tmp.file("d.csv") + " --quiet") == 3);

    CHECK(run(cli_path() + " changepoint --input " + tmp.file("missing.csv") +
              " --cost bogus --quiet") == 2);
}
