#include "pdnsense/common.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

namespace pdnsense {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid_argument";
        case ErrorCode::InvalidNetwork: return "invalid_network";
        case ErrorCode::SolveFailure: return "solve_failure";
        case ErrorCode::DegenerateCell: return "degenerate_cell";
        case ErrorCode::GridMismatch: return "grid_mismatch";
        case ErrorCode::Replay: return "replay";
        case ErrorCode::Duplicate: return "duplicate";
        case ErrorCode::Io: return "io";
    }
    return "unknown";
}

namespace {

std::string solve_message(double f, const std::string& reason) {
    std::ostringstream os;
    os.precision(12);
    os << "admittance solve failed at " << f << " Hz: " << reason;
    return os.str();
}

}  // namespace

SolveError::SolveError(double frequency_hz, const std::string& reason)
    : Error(ErrorCode::SolveFailure, solve_message(frequency_hz, reason), "frequency"),
      frequency_hz_(frequency_hz) {}

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return mix_seed(mix_seed(seed) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min(hw, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace pdnsense
