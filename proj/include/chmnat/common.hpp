#pragma once

#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace chmnat {

// Formats a double with the shortest representation that round-trips.
inline std::string format_double(double v) {
    std::array<char, 32> buf;
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file. Carries the 1-based line number where parsing failed
// (0 when no line applies).
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line = 0)
        : Error(line ? msg + " (line " + std::to_string(line) + ")" : msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class BoundsError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// API misuse (e.g. feature dimension mismatch against a trained model).
class ContractError : public Error {
public:
    using Error::Error;
};

// A region of interest failed one of the data-quality filters. The reason is
// kept machine-readable so pipelines can report per-reason discard counts.
enum class RejectReason {
    no_pixels,        // polygon covers no pixel center of the raster
    chm_incomplete,   // nodata pixel inside the region mask
    too_small,        // geometric area below the minimum
    no_trees,         // no pixel reaches the minimum tree height
    degenerate_region // region too thin/small for texture evaluation
};

inline const char* to_string(RejectReason r) {
    switch (r) {
    case RejectReason::no_pixels: return "no-pixels";
    case RejectReason::chm_incomplete: return "chm-incomplete";
    case RejectReason::too_small: return "too-small";
    case RejectReason::no_trees: return "no-trees";
    case RejectReason::degenerate_region: return "degenerate-region";
    }
    return "unknown";
}

class RegionRejected : public Error {
public:
    RegionRejected(RejectReason reason, const std::string& detail = "")
        : Error(std::string("region rejected: ") + to_string(reason) +
                (detail.empty() ? "" : ": " + detail)),
          reason_(reason) {}
    RejectReason reason() const { return reason_; }

private:
    RejectReason reason_;
};

// ---------------------------------------------------------------------------
// Basic statistics
// ---------------------------------------------------------------------------

inline double mean_of(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// Population standard deviation; well-defined for a single element (0).
// Uses the sum-of-squares form: for integer-valued inputs below 2^26 both
// accumulators are exact, so the result does not depend on element order
// (pixel permutations of a region give bit-identical statistics).
inline double pop_stddev(std::span<const double> xs) {
    double s = 0.0, ss = 0.0;
    for (double x : xs) {
        s += x;
        ss += x * x;
    }
    double n = static_cast<double>(xs.size());
    double mean = s / n;
    double var = ss / n - mean * mean;
    return var > 0.0 ? std::sqrt(var) : 0.0;
}

// ---------------------------------------------------------------------------
// Deterministic random numbers
//
// A small xoshiro-free generator built on splitmix64. All draws go through
// explicit arithmetic rather than <random> distributions so that a given
// seed produces the same stream on any platform or standard library.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    int uniform_int(int lo, int hi) { // inclusive bounds
        return lo + static_cast<int>(uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // Box-Muller; draws two uniforms per call.
    double normal(double mu = 0.0, double sigma = 1.0) {
        double u1 = 1.0 - uniform(); // (0, 1]
        double u2 = uniform();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        return mu + sigma * z;
    }

    // Knuth multiplication in chunks so large lambdas do not underflow.
    std::uint64_t poisson(double lambda) {
        std::uint64_t total = 0;
        while (lambda > 0) {
            double step = std::min(lambda, 500.0);
            double limit = std::exp(-step);
            double p = 1.0;
            std::uint64_t k = 0;
            do {
                ++k;
                p *= uniform();
            } while (p > limit);
            total += k - 1;
            lambda -= step;
        }
        return total;
    }

    // Fisher-Yates, hand-rolled so the permutation is seed-stable everywhere.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Misc
// ---------------------------------------------------------------------------

// FNV-1a over a byte sequence; used for run-manifest input fingerprints.
inline std::uint64_t fnv1a64(std::span<const char> bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Callers index into
// pre-sized output buffers, so results are position-stable regardless of
// scheduling.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    unsigned nthreads = std::min<unsigned>(jobs, static_cast<unsigned>(n));
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

} // namespace chmnat
