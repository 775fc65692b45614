#pragma once

// Eve's side: the weight-basis phase reference built from her t public-key
// copies, the closed-form guessing probability, the Helstrom oracle that
// checks it, and the attack round that ties cheating to guessing.
//
// t copies of (|0> + e^{i phi}|1>)/sqrt2 live in the symmetric subspace,
// which a phase-invariant unitary maps onto one (t+1)-level mode:
//   |b_t(phi)> = sum_w sqrt(C(t,w)/2^t) e^{i w phi} |w>.

#include <cmath>
#include <cstdint>
#include <vector>

#include "qpkid/keys.hpp"
#include "qpkid/numeric.hpp"
#include "qpkid/protocol.hpp"
#include "qpkid/qsim.hpp"

namespace qpkid::adversary {

using keys::PhaseFraction;
using qsim::Complex;
using qsim::DensityOperator;
using qsim::Matrix;
using qsim::PureState;

/// sqrt(C(t,w) / 2^t); log-space above the exact-binomial range.
inline double frame_amplitude(int t, int w) {
    if (w < 0 || w > t) return 0.0;
    if (t <= kExactBinomialMax) return std::sqrt(std::ldexp(binomial(t, w), -t));
    return std::exp(0.5 * (log_binomial(t, w) - t * std::numbers::ln2));
}

struct EveFrame {
    int t;
    PureState state;  ///< dims {t+1}
};

/// Eve's reference at the frame phase 2*pi*m*k/p (phase 0 when `phase` is empty).
inline EveFrame binomial_frame(int t, std::optional<PhaseFraction> phase = std::nullopt) {
    if (t < 0) throw InvalidArgument("binomial_frame: t must be >= 0");
    qsim::ComplexVector v(static_cast<std::size_t>(t) + 1);
    for (int w = 0; w <= t; ++w) v[static_cast<std::size_t>(w)] = frame_amplitude(t, w) * (phase ? phase->phase_power(w) : Complex{1.0});
    return {t, PureState({static_cast<std::size_t>(t) + 1}, std::move(v))};
}

/// (1/2^t) sum_{m=0}^{t-1} sqrt(C(t,m) C(t,m+1)), exact binomials up to t = 50.
inline double adjacent_weight_overlap(int t) {
    if (t < 0) throw InvalidArgument("adjacent_weight_overlap: t must be >= 0");
    double s = 0.0;
    for (int m = 0; m < t; ++m) s += frame_amplitude(t, m) * frame_amplitude(t, m + 1);
    return s;
}

/// The same sum evaluated entirely in log space.
inline double adjacent_weight_overlap_log_space(int t) {
    if (t < 0) throw InvalidArgument("adjacent_weight_overlap_log_space: t must be >= 0");
    double s = 0.0;
    for (int m = 0; m < t; ++m)
        s += std::exp(0.5 * (log_binomial(t, m) + log_binomial(t, m + 1)) - t * std::numbers::ln2);
    return s;
}

/// Optimal probability of telling |0>+|1> from |0>-|1> with a t-copy frame:
/// 1/2 + (1/2) * adjacent_weight_overlap(t).
inline double psucc_formula(int t) { return 0.5 + 0.5 * adjacent_weight_overlap(t); }

/// Right-hand side of the overlap inequality: 1 - 1/(2(t+1)) - 1/2^{t+1}.
inline double cheung_sum_bound(int t) {
    if (t < 1) throw InvalidArgument("cheung_sum_bound: t must be >= 1");
    return 1.0 - 1.0 / (2.0 * (t + 1)) - std::ldexp(1.0, -(t + 1));
}

/// Guessing bound 1 - 1/(4(t+1)).
inline double cheung_bound(int t) {
    if (t < 1) throw InvalidArgument("cheung_bound: t must be >= 1");
    return 1.0 - 1.0 / (4.0 * (t + 1));
}

/// Per-round pass bound 1 - 1/(8(t+1)).
inline double pass_bound(int t) {
    if (t < 0) throw InvalidArgument("pass_bound: t must be >= 0");
    return 1.0 - 1.0 / (8.0 * (t + 1));
}

/// Bound on Eve fooling Bob in one s-round session with t copies: pass_bound(t)^s.
inline double fool_first_attempt_bound(int t, int s) {
    if (s < 1) throw InvalidArgument("fool_first_attempt_bound: s must be >= 1");
    return std::pow(pass_bound(t), s);
}

// Discrimination -------------------------------------------------------------

/// Phase-averaged states of (challenge qubit (x) frame) for the two hypotheses.
struct DiscriminationPair {
    int t;
    int grid;  ///< number of phase points averaged over
    DensityOperator rho_plus;
    DensityOperator rho_minus;
};

/// Smallest grid used by build_discrimination_pair; entries have phase degree <= t+1.
inline int default_pair_grid(int t) { return 2 * t + 5; }

/// rho_pm = (1/p) sum_k |chi_pm(phi_k)><chi_pm(phi_k)|,
/// chi_pm(phi) = ((|0> +- e^{i phi}|1>)/sqrt2) (x) |b_t(phi)>, phi_k = 2 pi k/p.
inline DiscriminationPair build_discrimination_pair(int t, int grid) {
    if (t < 0) throw InvalidArgument("build_discrimination_pair: t must be >= 0");
    if (grid < t + 2) throw InvalidArgument("build_discrimination_pair: grid must exceed the phase degree t+1");
    const std::size_t d = 2 * (static_cast<std::size_t>(t) + 1);
    Matrix plus(d, d), minus(d, d);
    for (int k = 1; k <= grid; ++k) {
        const PhaseFraction phi(k, grid);
        const auto frame = binomial_frame(t, phi).state;
        const auto chi_plus = qsim::tensor(PureState::qubit(1.0, phi.phase()), frame);
        const auto chi_minus = qsim::tensor(PureState::qubit(1.0, -phi.phase()), frame);
        plus += chi_plus.projector();
        minus += chi_minus.projector();
    }
    plus *= Complex{1.0 / grid};
    minus *= Complex{1.0 / grid};
    const qsim::Dims dims{2, static_cast<std::size_t>(t) + 1};
    return {t, grid, DensityOperator(dims, std::move(plus)), DensityOperator(dims, std::move(minus))};
}

inline DiscriminationPair build_discrimination_pair(int t) { return build_discrimination_pair(t, default_pair_grid(t)); }

/// Independent check of psucc_formula: 1/2 + (1/4) ||rho_+ - rho_-||_1.
inline double helstrom_psucc_oracle(int t) {
    const auto pair = build_discrimination_pair(t);
    return 0.5 + 0.25 * qsim::trace_norm(pair.rho_plus.matrix() - pair.rho_minus.matrix());
}

/// Binary measurement on (received qubit (x) frame): outcome 0 guesses "+".
struct HelstromStrategy {
    int t;
    Matrix projector_plus;
    Matrix projector_minus;
    double psucc;
};

/// Projector onto the nonnegative eigenspace of rho_+ - rho_- (zero
/// eigenvalues go to "+").
inline HelstromStrategy helstrom_strategy(const DiscriminationPair& pair) {
    const Matrix delta = pair.rho_plus.matrix() - pair.rho_minus.matrix();
    const auto eig = qsim::hermitian_eigen(delta);
    const std::size_t d = delta.rows();
    Matrix proj(d, d);
    for (std::size_t k = 0; k < d; ++k) {
        if (eig.values[k] < -kConstructionTol) continue;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) proj(i, j) += eig.vectors(i, k) * std::conj(eig.vectors(j, k));
    }
    Matrix complement = Matrix::identity(d) - proj;
    const double psucc =
        0.5 * ((proj * pair.rho_plus.matrix()).trace().real() + (complement * pair.rho_minus.matrix()).trace().real());
    return {pair.t, std::move(proj), std::move(complement), psucc};
}

inline HelstromStrategy helstrom_strategy(int t) { return helstrom_strategy(build_discrimination_pair(t)); }

// The attack -----------------------------------------------------------------

/// Eve acting as prover: she appends her t-copy frame (at the key's phase)
/// and answers with the outcome of her binary measurement.
class EveProver final : public protocol::Prover {
public:
    EveProver(HelstromStrategy strategy, keys::PrivateKey key) : strategy_(std::move(strategy)), key_(std::move(key)) {}

    protocol::ProverTag tag() const override { return protocol::ProverTag::adversary; }

    const HelstromStrategy& strategy() const { return strategy_; }

    std::vector<protocol::ResponseBranch> respond(std::size_t round, const PureState& joint,
                                                  protocol::RegisterHandle received, protocol::Mode mode,
                                                  Rng& rng) override {
        return respond_with_phase(key_[round], joint, received, mode, rng);
    }

    std::vector<protocol::ResponseBranch> respond_with_phase(const PhaseFraction& phase, const PureState& joint,
                                                             const protocol::RegisterHandle& received,
                                                             protocol::Mode mode, Rng& rng) const {
        const auto frame = binomial_frame(strategy_.t, phase);
        const auto state = qsim::tensor(joint, frame.state);
        const qsim::ProjectiveMeasurement measurement({strategy_.projector_plus, strategy_.projector_minus},
                                                      {received.register_index(), state.registers() - 1});
        std::vector<protocol::ResponseBranch> out;
        if (mode == protocol::Mode::exact) {
            for (auto& r : measurement.exact(state))
                out.push_back({r.probability, protocol::ResponseBit::from_outcome(r.outcome), std::move(r.post_state)});
        } else {
            auto r = measurement.sample(state, rng);
            out.push_back({1.0, protocol::ResponseBit::from_outcome(r.outcome), std::move(r.post_state)});
        }
        return out;
    }

private:
    HelstromStrategy strategy_;
    keys::PrivateKey key_;
};

struct CheatGuessReport {
    int t;
    double p_pass_exact;
    double psucc_strategy;
};

/// Grid for the attack average; the pass probability has phase degree <= 2t+4.
inline int default_attack_grid(int t) { return 4 * (t + 3); }

/// Exact pass probability of one kernel round with Eve as prover, at key phase `phase`.
inline double attack_pass_probability(const EveProver& eve, const PhaseFraction& phase) {
    Rng unused(0);
    auto challenge = protocol::bob_prepare_challenge();
    protocol::Transport channel;
    channel.send(std::move(challenge.sent));
    const auto handle = channel.receive_register();
    const auto pk = keys::public_key_state(phase);
    double pass = 0.0;
    for (auto& b : eve.respond_with_phase(phase, challenge.joint_state, handle, protocol::Mode::exact, unused)) {
        channel.send(b.response);
        const auto bit = channel.receive_bit();
        pass += b.probability *
                protocol::bob_verify_step(b.joint_state, challenge.kept_register, bit, pk, protocol::Mode::exact, unused)
                    .pass_probability;
    }
    return pass;
}

/// One kernel round with Eve as prover, averaged exactly over the private phase.
inline CheatGuessReport eve_attack_round(int t, const HelstromStrategy& strategy, int grid) {
    if (strategy.t != t || strategy.projector_plus.rows() != 2 * (static_cast<std::size_t>(t) + 1))
        throw DimensionMismatch("eve_attack_round: strategy was built for a different t");
    if (grid <= 2 * t + 4) throw InvalidArgument("eve_attack_round: grid must exceed the phase degree 2t+4");
    // The key only fixes the modulus here; phases are iterated explicitly.
    const EveProver eve(strategy, keys::PrivateKey({PhaseFraction(1, grid)}));
    double total = 0.0;
    for (int k = 1; k <= grid; ++k) total += attack_pass_probability(eve, PhaseFraction(k, grid));
    return {t, total / grid, strategy.psucc};
}

inline CheatGuessReport eve_attack_round(int t, const HelstromStrategy& strategy) {
    return eve_attack_round(t, strategy, default_attack_grid(t));
}

/// One sampled kernel round: the key phase is drawn uniformly from the
/// attack grid, then Eve's measurement and Bob's SWAP test are sampled.
inline bool sample_attack_round(const EveProver& eve, int grid, Rng& rng) {
    const PhaseFraction phase(static_cast<int>(rng.below(static_cast<std::uint64_t>(grid))) + 1, grid);
    auto challenge = protocol::bob_prepare_challenge();
    protocol::Transport channel;
    channel.send(std::move(challenge.sent));
    const auto handle = channel.receive_register();
    auto branch = eve.respond_with_phase(phase, challenge.joint_state, handle, protocol::Mode::sampled, rng);
    channel.send(branch.front().response);
    const auto bit = channel.receive_bit();
    const auto outcome = protocol::bob_verify_step(branch.front().joint_state, challenge.kept_register, bit,
                                                   keys::public_key_state(phase), protocol::Mode::sampled, rng);
    return *outcome.passed;
}

}  // namespace qpkid::adversary
