#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace pdnsense {

/// Error categories surfaced to the CLI as machine-readable codes.
enum class ErrorCode {
    InvalidArgument,
    InvalidNetwork,
    SolveFailure,
    DegenerateCell,
    GridMismatch,
    Replay,
    Duplicate,
    Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what, std::string parameter = {})
        : std::runtime_error(what), code_(code), parameter_(std::move(parameter)) {}

    ErrorCode code() const noexcept { return code_; }
    /// Name of the offending input, when the failure is attributable to one.
    const std::string& parameter() const noexcept { return parameter_; }

private:
    ErrorCode code_;
    std::string parameter_;
};

class SolveError : public Error {
public:
    SolveError(double frequency_hz, const std::string& reason);
    double frequency() const noexcept { return frequency_hz_; }

private:
    double frequency_hz_;
};

class ReplayError : public Error {
public:
    explicit ReplayError(const std::string& what) : Error(ErrorCode::Replay, what) {}
};

/// splitmix64 finalizer; used to derive independent sub-stream seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Seed for sub-stream `index` of `seed`. Stable across runs and platforms.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Runs fn(i) for i in [0, count). Work is spread over hardware threads;
/// callers must make fn(i) independent of evaluation order.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace pdnsense
