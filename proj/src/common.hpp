#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qploc {

inline constexpr const char* kVersion = "0.3.0";

enum class ErrorCode : int {
    Ok = 0,
    InvalidArgument = 1,
    NearSingular = 2,
    CapExceeded = 3,
    BoundaryLeak = 4,
    StepTooLarge = 5,
    Config = 6,
    Io = 7,
    Replay = 8,
    Internal = 99,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) fail(ErrorCode::InvalidArgument, msg);
}

// dense storage limit shared by operators, greens and spectral
inline constexpr int kDenseCap = 4000;

}  // namespace qploc
