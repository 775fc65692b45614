#pragma once

// Shared numeric plumbing: tolerances, error types, binomials, and the
// deterministic random source used by every sampled simulation.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace qpkid {

/// Tolerance for constructor-time checks (normalization, unitarity, hermiticity).
inline constexpr double kConstructionTol = 1e-12;
/// Tolerance for comparing independently computed quantities.
inline constexpr double kCompareTol = 1e-9;
/// Smallest eigenvalue accepted for a density operator.
inline constexpr double kPsdTol = 1e-10;
/// Hermiticity slack accepted by trace_norm and the eigensolver.
inline constexpr double kHermitianTol = 1e-10;
/// Relative off-diagonal norm at which the Jacobi sweep stops.
inline constexpr double kEigenTol = 1e-12;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class InvalidBasis : public Error {
public:
    using Error::Error;
};

class NonUnitaryGate : public Error {
public:
    using Error::Error;
};

/// The honest prover has used up its r sessions for this private key.
class UsageExhausted : public Error {
public:
    using Error::Error;
};

/// A register handle was sent twice, or sent after being moved from.
class NoCloningViolation : public Error {
public:
    using Error::Error;
};

class NumericalFailure : public Error {
public:
    using Error::Error;
};

// Binomials -----------------------------------------------------------------

/// Largest n for which binomial() is evaluated in exact integer arithmetic.
inline constexpr int kExactBinomialMax = 50;

/// C(n, k) exactly for n <= 62 (returned as double; exact up to 2^53).
inline double binomial(int n, int k) {
    if (n < 0 || k < 0 || k > n) return 0.0;
    if (n > 62) throw InvalidArgument("binomial: n > 62 overflows; use log_binomial");
    if (k > n - k) k = n - k;
    std::uint64_t c = 1;
    for (int i = 1; i <= k; ++i) {
        // c holds C(n-k+i-1, i-1); the product is divisible by i.
        c = c * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    }
    return static_cast<double>(c);
}

/// ln C(n, k) via log-gamma.
inline double log_binomial(int n, int k) {
    if (n < 0 || k < 0 || k > n) return -std::numeric_limits<double>::infinity();
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Randomness ----------------------------------------------------------------

/// One step of the SplitMix64 generator (Steele, Lea, Flood 2014).
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Child seed for stream `index` under `master`: the (index+1)-th SplitMix64
/// output started from `master`. Used to give each session or trial its own
/// stream so that sweeps are order-independent.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t state = master + index * 0x9E3779B97F4A7C15ULL;
    return splitmix64(state);
}

/// Deterministic PRNG: std::mt19937_64 (bit-exact by the standard) with
/// hand-written uniform mappings, since the std distributions are
/// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n) by rejection; n > 0.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw InvalidArgument("Rng::below: empty range");
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

private:
    std::mt19937_64 engine_;
};

// Formatting ----------------------------------------------------------------

/// `v` rounded to `digits` significant decimal digits (via printf's %.*g),
/// so serialized numbers are stable across runs and platforms.
inline double round_significant(double v, int digits) {
    if (!std::isfinite(v) || v == 0.0) return v;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return std::strtod(buf, nullptr);
}

}  // namespace qpkid
