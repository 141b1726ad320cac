#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace poly {

enum class errc {
    ok = 0,
    invalid_argument,
    io,
    format,
    state,
    corrupt,
    version,
    internal,
};

/// Exception carrying an error class usable across the C boundary.
class error : public std::runtime_error {
public:
    error(errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) {
    throw error(code, msg);
}

inline void require(bool cond, errc code, const std::string& msg) {
    if (!cond) fail(code, msg);
}

/// Seedable RNG with portable draw helpers. The std:: distributions are not
/// bit-reproducible across standard libraries, so index and unit draws are
/// implemented directly on the engine output.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t u64() { return gen_(); }

    /// Uniform double in [0, 1), 53-bit resolution.
    double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

private:
    std::mt19937_64 gen_;
};

inline unsigned default_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

/// Runs fn(begin, end) over disjoint chunks of [0, n) on `threads` threads.
/// Chunk boundaries depend only on (n, threads), so per-chunk results can be
/// combined deterministically by the caller.
void parallel_chunks(std::size_t n, unsigned threads,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace poly
