#pragma once

#include <stdexcept>
#include <string>

namespace shiftlab {

// Every failure the library can raise, usable for exact matching in tests
// and for CLI exit-code classification.
enum class Errc {
    // core / cost / changepoint
    EmptySeries,
    NonFiniteValue,
    InvalidRange,
    SegmentTooShort,
    NegativeCount,
    InvalidSegmentation,
    SeriesTooShort,
    // did
    UnknownLevel,
    EmptyData,
    RankDeficient,
    InsufficientData,
    // kdeshift
    DegenerateSpread,
    GridTooSmall,
    GridTooCoarse,
    GridMismatch,
    EmptySample,
    EmptyWindow,
    // cohort
    FactorMissing,
    WindowOutOfRange,
    // io
    ParseError,
    DateGap,
    MissingColumn,
    IoError,
    // parameter validation everywhere
    InvalidArgument,
};

const char* errc_name(Errc code);

// Input errors are caller mistakes (bad files, bad flags); analysis errors
// are data conditions discovered mid-computation. The CLI maps them to
// exit codes 2 and 3 respectively.
bool is_input_error(Errc code);

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const { return code_; }

  private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace shiftlab
