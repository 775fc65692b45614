#pragma once

// Private keys over discrete phases, public-key states, and the
// phase-averaging identities that make the discrete key look continuous.

#include <array>
#include <bit>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpkid/numeric.hpp"
#include "qpkid/qsim.hpp"

namespace qpkid::keys {

using qsim::Complex;
using qsim::DensityOperator;
using qsim::Matrix;
using qsim::PureState;

enum class Variant { standard, hardened };

inline std::string_view to_string(Variant v) { return v == Variant::standard ? "standard" : "hardened"; }

inline Variant parse_variant(std::string_view s) {
    if (s == "standard") return Variant::standard;
    if (s == "hardened") return Variant::hardened;
    throw InvalidArgument("unknown variant: " + std::string(s));
}

/// Global protocol parameters. The phase modulus is r+1 for the standard
/// protocol and 2r+1 for the variant that tolerates an honest-but-curious
/// verifier extracting up to r extra copies.
class ProtocolParams {
public:
    ProtocolParams(int r, int s, Variant variant = Variant::standard) : r_(r), s_(s), variant_(variant) {
        if (r < 1) throw InvalidArgument("ProtocolParams: r must be >= 1");
        if (s < 1) throw InvalidArgument("ProtocolParams: s must be >= 1");
    }

    int r() const { return r_; }
    int s() const { return s_; }
    Variant variant() const { return variant_; }
    int phase_modulus() const { return variant_ == Variant::standard ? r_ + 1 : 2 * r_ + 1; }

    friend bool operator==(const ProtocolParams&, const ProtocolParams&) = default;

private:
    int r_;
    int s_;
    Variant variant_;
};

/// The angle 2*pi*k/p held as the exact pair (k, p), 1 <= k <= p.
class PhaseFraction {
public:
    PhaseFraction(int k, int p) : k_(k), p_(p) {
        if (p < 2) throw InvalidArgument("PhaseFraction: modulus must be >= 2");
        if (k < 1 || k > p) throw InvalidArgument("PhaseFraction: k outside [1, p]");
    }

    int k() const { return k_; }
    int p() const { return p_; }

    /// e^{2 pi i m k / p}, reduced mod p before converting to floating point.
    Complex phase_power(long long m) const { return unit_root(m * k_, p_); }
    Complex phase() const { return phase_power(1); }
    double angle() const { return 2.0 * std::numbers::pi * static_cast<double>(k_ % p_) / p_; }

    /// e^{2 pi i a / p}
    static Complex unit_root(long long a, int p) {
        long long r = a % p;
        if (r < 0) r += p;
        if (r == 0) return 1.0;
        if (2 * r == p) return -1.0;
        if (4 * r == p) return Complex{0.0, 1.0};
        if (4 * r == 3LL * p) return Complex{0.0, -1.0};
        return std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(r) / p);
    }

    friend bool operator==(const PhaseFraction&, const PhaseFraction&) = default;

private:
    int k_;
    int p_;
};

/// Alice's s-tuple (x_1, ..., x_s); x_j is used only in round j.
class PrivateKey {
public:
    explicit PrivateKey(std::vector<PhaseFraction> xs) : xs_(std::move(xs)) {
        if (xs_.empty()) throw InvalidArgument("PrivateKey: empty key");
        for (const auto& x : xs_)
            if (x.p() != xs_.front().p()) throw InvalidArgument("PrivateKey: mixed phase moduli");
    }

    std::size_t size() const { return xs_.size(); }
    int modulus() const { return xs_.front().p(); }
    const PhaseFraction& operator[](std::size_t j) const { return xs_.at(j); }
    const std::vector<PhaseFraction>& elements() const { return xs_; }

    friend bool operator==(const PrivateKey&, const PrivateKey&) = default;

private:
    std::vector<PhaseFraction> xs_;
};

/// One round's public-key qubit (|0> + e^{2 pi i k/p}|1>)/sqrt2.
struct PublicKeyElement {
    PureState state;
};

/// s independent uniform draws from {1..p}; the i-th draw is rng.below(p)+1
/// with Rng seeded by `seed`.
inline PrivateKey generate_private_key(const ProtocolParams& params, std::uint64_t seed) {
    Rng rng(seed);
    const int p = params.phase_modulus();
    std::vector<PhaseFraction> xs;
    xs.reserve(static_cast<std::size_t>(params.s()));
    for (int j = 0; j < params.s(); ++j) xs.emplace_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(p))) + 1, p);
    return PrivateKey(std::move(xs));
}

inline PublicKeyElement public_key_state(const PhaseFraction& x) { return {PureState::qubit(1.0, x.phase())}; }

/// One copy of the public key: one qubit per round.
inline std::vector<PublicKeyElement> public_key_copy(const PrivateKey& key) {
    std::vector<PublicKeyElement> out;
    for (const auto& x : key.elements()) out.push_back(public_key_state(x));
    return out;
}

/// The basis {|0> + e^{i phi}|1>, |0> - e^{i phi}|1>} Alice measures in.
inline std::array<PureState, 2> phase_basis(const PhaseFraction& x) {
    return {PureState::qubit(1.0, x.phase()), PureState::qubit(1.0, -x.phase())};
}

// Symmetric subspace ---------------------------------------------------------

inline constexpr int kMaxEnumeratedQubits = 20;
/// Dense n-qubit operators are validated by a full eigendecomposition.
inline constexpr int kMaxOperatorQubits = 8;

inline int popcount(std::size_t v) { return std::popcount(v); }

/// |S^n_w>: uniform superposition of the n-qubit labels of Hamming weight w.
struct SymmetricBasisState {
    int n;
    int w;
    PureState state;
};

inline SymmetricBasisState symmetric_basis_state(int n, int w) {
    if (n < 1 || n > kMaxEnumeratedQubits) throw InvalidArgument("symmetric_basis_state: n outside [1, 20]");
    if (w < 0 || w > n) throw InvalidArgument("symmetric_basis_state: weight outside [0, n]");
    const std::size_t dim = std::size_t{1} << n;
    qsim::ComplexVector v(dim);
    for (std::size_t a = 0; a < dim; ++a)
        if (popcount(a) == w) v[a] = 1.0;
    return {n, w, PureState(qsim::Dims(static_cast<std::size_t>(n), 2), std::move(v))};
}

/// (1/2^n) sum_w C(n,w) |S^n_w><S^n_w|
inline DensityOperator symmetric_mixture(int n) {
    if (n < 1 || n > kMaxOperatorQubits) throw InvalidArgument("symmetric_mixture: n outside [1, 8]");
    const std::size_t dim = std::size_t{1} << n;
    Matrix m(dim, dim);
    const double scale = std::ldexp(1.0, -n);
    for (int w = 0; w <= n; ++w) {
        const auto s = symmetric_basis_state(n, w);
        m += s.state.projector() * Complex{binomial(n, w) * scale};
    }
    return DensityOperator(qsim::Dims(static_cast<std::size_t>(n), 2), std::move(m));
}

/// (1/p) sum_{k=1}^{p} (|psi_k><psi_k|)^{(x) n}, psi_k = (|0> + e^{2 pi i k/p}|1>)/sqrt2.
inline DensityOperator averaged_key_operator_discrete(int p, int n) {
    if (p < 2) throw InvalidArgument("averaged_key_operator_discrete: p must be >= 2");
    if (n < 1 || n > kMaxOperatorQubits) throw InvalidArgument("averaged_key_operator_discrete: n outside [1, 8]");
    const std::size_t dim = std::size_t{1} << n;
    const double amp = std::ldexp(1.0, -n);  // |amplitude|^2 of every label
    Matrix m(dim, dim);
    for (int k = 1; k <= p; ++k) {
        // <a|psi^n> <psi^n|b> = 2^-n e^{i phi (|a| - |b|)}
        for (std::size_t a = 0; a < dim; ++a)
            for (std::size_t b = 0; b < dim; ++b)
                m(a, b) += amp * PhaseFraction::unit_root(static_cast<long long>(k) * (popcount(a) - popcount(b)), p);
    }
    m *= Complex{1.0 / p};
    return DensityOperator(qsim::Dims(static_cast<std::size_t>(n), 2), std::move(m));
}

/// (1/p) sum_{k=1}^{p} e^{2 pi i a k / p}: 1 when p divides a, else 0.
inline double phase_average_exponential(long long a, int p) {
    if (p < 2) throw InvalidArgument("phase_average_exponential: p must be >= 2");
    Complex sum = 0.0;
    for (int k = 1; k <= p; ++k) sum += std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>((a % p) * k % p) / p);
    sum /= static_cast<double>(p);
    if (std::abs(sum.imag()) >= kConstructionTol) throw NumericalFailure("phase_average_exponential: imaginary residue");
    if (std::abs(sum.real()) < kConstructionTol) return 0.0;
    if (std::abs(sum.real() - 1.0) < kConstructionTol) return 1.0;
    throw NumericalFailure("phase_average_exponential: sum is neither 0 nor 1");
}

// Key files ------------------------------------------------------------------

using ordered_json = nlohmann::ordered_json;

struct KeyFile {
    ProtocolParams params;
    std::uint64_t seed;
    PrivateKey key;
};

inline ordered_json private_key_json(const ProtocolParams& params, std::uint64_t seed, const PrivateKey& key) {
    ordered_json j;
    j["r"] = params.r();
    j["s"] = params.s();
    j["variant"] = to_string(params.variant());
    j["seed"] = seed;
    auto xs = ordered_json::array();
    for (const auto& x : key.elements()) xs.push_back(x.k());
    j["xs"] = std::move(xs);
    j["p"] = params.phase_modulus();
    return j;
}

/// Public description; the phases stay redacted unless `expose_phases`.
inline ordered_json public_key_json(const ProtocolParams& params, const PrivateKey& key, bool expose_phases) {
    ordered_json j;
    j["p"] = params.phase_modulus();
    j["xs_redacted"] = !expose_phases;
    j["elements"] = params.s();
    if (expose_phases) {
        auto xs = ordered_json::array();
        for (const auto& x : key.elements()) xs.push_back(x.k());
        j["xs"] = std::move(xs);
    }
    return j;
}

inline KeyFile parse_private_key(const nlohmann::json& j) {
    try {
        ProtocolParams params(j.at("r").get<int>(), j.at("s").get<int>(), parse_variant(j.at("variant").get<std::string>()));
        const int p = j.at("p").get<int>();
        if (p != params.phase_modulus()) throw InvalidArgument("key file: p inconsistent with r and variant");
        std::vector<PhaseFraction> xs;
        for (const auto& v : j.at("xs")) xs.emplace_back(v.get<int>(), p);
        if (static_cast<int>(xs.size()) != params.s()) throw InvalidArgument("key file: xs length differs from s");
        return {params, j.at("seed").get<std::uint64_t>(), PrivateKey(std::move(xs))};
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("key file: ") + e.what());
    }
}

}  // namespace qpkid::keys
