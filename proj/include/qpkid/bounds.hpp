#pragma once

// Protocol-level security arithmetic: the union bound over Eve's remaining
// attempts, the resulting break probability, and the smallest s meeting a
// target.

#include <cmath>
#include <vector>

#include "qpkid/adversary.hpp"
#include "qpkid/keys.hpp"
#include "qpkid/numeric.hpp"

namespace qpkid::bounds {

using keys::Variant;

/// 8 for the standard protocol, 16 for the hardened one.
inline int security_constant(Variant v) { return v == Variant::standard ? 8 : 16; }

/// Copies Eve effectively holds on attempt l (1-based) when she starts with t.
/// Each earlier attempt costs one copy to simulate; in the hardened variant
/// she may also have extracted r copies as an honest verifier.
inline int effective_copies(int t, int l, int r, Variant v) {
    return t + l - 1 + (v == Variant::hardened ? r : 0);
}

struct SecurityEstimate {
    int r;
    int s;
    int t;
    Variant variant;
    std::vector<double> per_attempt;  ///< term l-1 bounds the l-th attempt
    double chain_sum;                 ///< sum of per_attempt
    double chain_bound;               ///< (r - t) (1 - 1/(c r))^s
    double p_break_bound;             ///< r (1 - 1/(c r))^s
};

inline void check_rs(int r, int s) {
    if (r < 1) throw InvalidArgument("r must be >= 1");
    if (s < 1) throw InvalidArgument("s must be >= 1");
}

/// r (1 - 1/(c r))^s
inline double p_break_bound(int r, int s, Variant v) {
    check_rs(r, s);
    return r * std::pow(1.0 - 1.0 / (security_constant(v) * static_cast<double>(r)), s);
}

inline SecurityEstimate union_bound_chain(int t, int r, int s, Variant v) {
    check_rs(r, s);
    if (t < 0 || t >= r) throw InvalidArgument("union_bound_chain: need 0 <= t < r");
    SecurityEstimate e{r, s, t, v, {}, 0.0, 0.0, p_break_bound(r, s, v)};
    for (int l = 1; l <= r - t; ++l) {
        e.per_attempt.push_back(adversary::fool_first_attempt_bound(effective_copies(t, l, r, v), s));
        e.chain_sum += e.per_attempt.back();
    }
    e.chain_bound = (r - t) * std::pow(1.0 - 1.0 / (security_constant(v) * static_cast<double>(r)), s);
    return e;
}

/// Smallest s with p_break_bound(r, s) <= epsilon, by direct iteration.
inline int min_security_parameter(int r, double epsilon, Variant v) {
    if (r < 1) throw InvalidArgument("r must be >= 1");
    // epsilon >= 1 is allowed; any epsilon >= r(1 - 1/(c r)) gives s = 1.
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("epsilon must be positive");
    const double base = 1.0 - 1.0 / (security_constant(v) * static_cast<double>(r));
    double bound = r * base;
    int s = 1;
    while (bound > epsilon) {
        bound *= base;
        ++s;
    }
    // Iterated products drift; settle the boundary with the direct power.
    while (s > 1 && p_break_bound(r, s - 1, v) <= epsilon) --s;
    while (p_break_bound(r, s, v) > epsilon) ++s;
    return s;
}

}  // namespace qpkid::bounds
