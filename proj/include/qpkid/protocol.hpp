#pragma once

// Prover/verifier roles, the three-step kernel, s-round sessions and their
// JSON-lines transcripts.
//
// A round lives in its own joint state. Bob holds register 0 and sends
// register 1; a prover may append registers of its own after those two.
// Registers change hands only through RegisterHandle, which is move-only,
// and the Transport refuses any handle it has already carried.

#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpkid/keys.hpp"
#include "qpkid/numeric.hpp"
#include "qpkid/qsim.hpp"

namespace qpkid::protocol {

using keys::PhaseFraction;
using keys::PrivateKey;
using keys::ProtocolParams;
using keys::PublicKeyElement;
using qsim::PureState;

enum class Mode { exact, sampled };
enum class ProverTag { honest, adversary };
enum class Verdict { accept, reject };

inline std::string_view to_string(Mode m) { return m == Mode::exact ? "exact" : "sampled"; }
inline std::string_view to_string(ProverTag t) { return t == ProverTag::honest ? "honest" : "adversary"; }
inline std::string_view to_string(Verdict v) { return v == Verdict::accept ? "accept" : "reject"; }

inline Mode parse_mode(std::string_view s) {
    if (s == "exact") return Mode::exact;
    if (s == "sampled") return Mode::sampled;
    throw InvalidArgument("unknown mode: " + std::string(s));
}

/// The classical bit the prover announces: 0 for the "+" outcome, 1 for "-".
struct ResponseBit {
    std::uint8_t value = 0;

    static ResponseBit from_outcome(std::size_t outcome) {
        if (outcome > 1) throw InvalidArgument("ResponseBit: outcome must be 0 or 1");
        return {static_cast<std::uint8_t>(outcome)};
    }
    friend bool operator==(ResponseBit, ResponseBit) = default;
};

// Transport ------------------------------------------------------------------

/// Ownership token for one register of a round's joint state.
class RegisterHandle {
public:
    static RegisterHandle issue(std::size_t register_index) {
        static std::atomic<std::uint64_t> next_id{1};
        return RegisterHandle(next_id.fetch_add(1, std::memory_order_relaxed), register_index);
    }

    RegisterHandle(RegisterHandle&& o) noexcept : id_(std::exchange(o.id_, 0)), index_(o.index_) {}
    RegisterHandle& operator=(RegisterHandle&& o) noexcept {
        id_ = std::exchange(o.id_, 0);
        index_ = o.index_;
        return *this;
    }
    RegisterHandle(const RegisterHandle&) = delete;
    RegisterHandle& operator=(const RegisterHandle&) = delete;

    bool valid() const { return id_ != 0; }
    std::uint64_t id() const { return id_; }
    std::size_t register_index() const {
        if (!valid()) throw NoCloningViolation("RegisterHandle: use after move");
        return index_;
    }

private:
    RegisterHandle(std::uint64_t id, std::size_t index) : id_(id), index_(index) {}

    std::uint64_t id_;
    std::size_t index_;
};

using Message = std::variant<RegisterHandle, ResponseBit>;

/// FIFO channel between the two roles of a session.
class Transport {
public:
    void send(RegisterHandle handle) {
        if (!handle.valid()) throw NoCloningViolation("Transport: sending a moved-from register handle");
        if (!carried_.insert(handle.id()).second)
            throw NoCloningViolation("Transport: register handle already transported");
        queue_.emplace_back(std::move(handle));
    }

    void send(ResponseBit bit) { queue_.emplace_back(bit); }

    RegisterHandle receive_register() {
        auto m = pop();
        if (!std::holds_alternative<RegisterHandle>(m)) throw InvalidArgument("Transport: expected a register");
        return std::get<RegisterHandle>(std::move(m));
    }

    ResponseBit receive_bit() {
        auto m = pop();
        if (!std::holds_alternative<ResponseBit>(m)) throw InvalidArgument("Transport: expected a classical bit");
        return std::get<ResponseBit>(m);
    }

    bool empty() const { return queue_.empty(); }
    std::size_t pending() const { return queue_.size(); }

private:
    Message pop() {
        if (queue_.empty()) throw InvalidArgument("Transport: receive on empty channel");
        Message m = std::move(queue_.front());
        queue_.pop_front();
        return m;
    }

    std::deque<Message> queue_;
    std::unordered_set<std::uint64_t> carried_;
};

// Kernel ---------------------------------------------------------------------

inline constexpr std::size_t kKeptRegister = 0;
inline constexpr std::size_t kSentRegister = 1;

struct KernelChallenge {
    PureState joint_state;
    std::size_t kept_register;
    RegisterHandle sent;
};

/// Step 1: Bob prepares (|01> + |10>)/sqrt2 and hands out register 1.
inline KernelChallenge bob_prepare_challenge() {
    return {PureState({2, 2}, {0.0, 1.0, 1.0, 0.0}), kKeptRegister, RegisterHandle::issue(kSentRegister)};
}

/// One branch of a prover's response, with its probability and the joint
/// state after the prover's measurement. Sampled mode yields one branch of
/// probability 1.
struct ResponseBranch {
    double probability;
    ResponseBit response;
    PureState joint_state;
};

/// Step 2: Alice measures the received register in {|0> +- e^{i phi_x}|1>}.
inline std::vector<ResponseBranch> alice_respond(const PureState& joint, const RegisterHandle& received,
                                                 const PhaseFraction& x, Mode mode, Rng& rng) {
    const auto basis = keys::phase_basis(x);
    std::vector<ResponseBranch> out;
    if (mode == Mode::exact) {
        for (auto& r : qsim::measure_in_basis(joint, received.register_index(), basis))
            out.push_back({r.probability, ResponseBit::from_outcome(r.outcome), std::move(r.post_state)});
    } else {
        auto r = qsim::measure_in_basis(joint, received.register_index(), basis, rng);
        out.push_back({1.0, ResponseBit::from_outcome(r.outcome), std::move(r.post_state)});
    }
    return out;
}

struct KernelOutcome {
    ResponseBit response;
    double pass_probability;     ///< exact SWAP-test pass probability for this branch
    std::optional<bool> passed;  ///< sampled mode only
};

/// Step 3: Bob applies Z to his register if the response is 1, then
/// SWAP-tests it against his fresh public-key element.
inline KernelOutcome bob_verify_step(const PureState& joint, std::size_t kept, ResponseBit response,
                                     const PublicKeyElement& pk, Mode mode, Rng& rng) {
    const PureState corrected = response.value == 1 ? qsim::apply_gate(joint, qsim::gates::pauli_z(), {kept}) : joint;
    const auto reduced = qsim::partial_trace(corrected, {kept});
    KernelOutcome out{response, qsim::swap_test_pass_probability_mixed(
                                    reduced, qsim::DensityOperator::from_pure(pk.state)), std::nullopt};
    if (mode == Mode::sampled) {
        const auto with_key = qsim::tensor(corrected, pk.state);
        const auto circuit = qsim::swap_test_circuit(with_key, kept, with_key.registers() - 1);
        out.passed = circuit.control_readout.sample(circuit.pre_measurement, rng).outcome == 0;
    }
    return out;
}

// Provers --------------------------------------------------------------------

class Prover {
public:
    virtual ~Prover() = default;
    virtual ProverTag tag() const = 0;
    /// Called once before the first round; may refuse by throwing.
    virtual void begin_session() {}
    virtual std::vector<ResponseBranch> respond(std::size_t round, const PureState& joint, RegisterHandle received,
                                                Mode mode, Rng& rng) = 0;
};

/// Alice's r-use allowance for one private key.
class UsageCounter {
public:
    explicit UsageCounter(int uses) : remaining_(uses) {
        if (uses < 0) throw InvalidArgument("UsageCounter: negative allowance");
    }
    int remaining() const { return remaining_; }
    void consume() {
        if (remaining_ == 0) throw UsageExhausted("prover refuses: private key already used r times");
        --remaining_;
    }

private:
    int remaining_;
};

class HonestProver final : public Prover {
public:
    HonestProver(PrivateKey key, int max_uses) : key_(std::move(key)), counter_(max_uses) {}

    ProverTag tag() const override { return ProverTag::honest; }
    void begin_session() override { counter_.consume(); }
    const UsageCounter& usage() const { return counter_; }

    std::vector<ResponseBranch> respond(std::size_t round, const PureState& joint, RegisterHandle received, Mode mode,
                                        Rng& rng) override {
        return alice_respond(joint, received, key_[round], mode, rng);
    }

private:
    PrivateKey key_;
    UsageCounter counter_;
};

// Sessions -------------------------------------------------------------------

struct RoundRecord {
    std::size_t j;                        ///< 1-based round index
    std::optional<ResponseBit> response;  ///< sampled mode
    double p_response0;                   ///< probability the response was 0
    double pass_probability;              ///< exact per-round pass probability
    std::optional<bool> passed;           ///< sampled mode
};

struct SessionTranscript {
    std::string session_id;
    ProtocolParams params;
    Mode mode;
    std::uint64_t seed;
    ProverTag prover_tag;
    std::vector<RoundRecord> rounds;
    Verdict verdict;
    double accept_probability;  ///< product of per-round pass probabilities

    bool round_passed(const RoundRecord& r) const {
        return mode == Mode::sampled ? r.passed.value_or(false) : r.pass_probability >= 1.0 - kConstructionTol;
    }
};

/// Runs the kernel s times. Round j uses x_j and the j-th public-key qubit.
/// All rounds are completed; the verdict is accept iff every round passed
/// (pass probability 1 in exact mode, a passing SWAP test in sampled mode).
inline SessionTranscript run_session(const ProtocolParams& params, const PrivateKey& key, Prover& prover, Mode mode,
                                     std::uint64_t seed, std::string session_id = "0") {
    if (static_cast<int>(key.size()) != params.s() || key.modulus() != params.phase_modulus())
        throw InvalidArgument("run_session: key does not match params");
    prover.begin_session();

    Rng rng(seed);
    Transport channel;
    const auto public_key = keys::public_key_copy(key);
    SessionTranscript t{std::move(session_id), params, mode, seed, prover.tag(), {}, Verdict::accept, 1.0};

    for (std::size_t j = 0; j < key.size(); ++j) {
        auto challenge = bob_prepare_challenge();
        channel.send(std::move(challenge.sent));

        auto branches = prover.respond(j, challenge.joint_state, channel.receive_register(), mode, rng);

        RoundRecord rec{j + 1, std::nullopt, 0.0, 0.0, std::nullopt};
        for (auto& b : branches) {
            channel.send(b.response);
            const auto bit = channel.receive_bit();
            const auto outcome = bob_verify_step(b.joint_state, challenge.kept_register, bit, public_key[j], mode, rng);
            if (bit.value == 0) rec.p_response0 += b.probability;
            rec.pass_probability += b.probability * outcome.pass_probability;
            if (mode == Mode::sampled) {
                rec.response = bit;
                rec.passed = outcome.passed;
            }
        }
        t.accept_probability *= rec.pass_probability;
        if (!t.round_passed(rec)) t.verdict = Verdict::reject;
        t.rounds.push_back(rec);
    }
    return t;
}

// Transcript format ----------------------------------------------------------

inline constexpr int kJsonDigits = 12;

/// Header line, one line per round, then the verdict line.
inline std::string transcript_jsonl(const SessionTranscript& t) {
    using nlohmann::ordered_json;
    auto num = [](double v) { return round_significant(v, kJsonDigits); };
    std::ostringstream out;

    ordered_json header;
    header["session_id"] = t.session_id;
    header["r"] = t.params.r();
    header["s"] = t.params.s();
    header["p"] = t.params.phase_modulus();
    header["variant"] = keys::to_string(t.params.variant());
    header["mode"] = to_string(t.mode);
    header["seed"] = t.seed;
    header["prover_tag"] = to_string(t.prover_tag);
    out << header.dump() << '\n';

    for (const auto& r : t.rounds) {
        ordered_json row;
        row["j"] = r.j;
        if (t.mode == Mode::sampled) {
            row["response_bit"] = r.response->value;
            row["pass"] = *r.passed;
        } else {
            row["response_bit"] = nullptr;
            row["p_response_0"] = num(r.p_response0);
            row["pass_probability"] = num(r.pass_probability);
        }
        out << row.dump() << '\n';
    }

    ordered_json verdict;
    verdict["verdict"] = to_string(t.verdict);
    if (t.mode == Mode::exact) verdict["accept_probability"] = num(t.accept_probability);
    out << verdict.dump() << '\n';
    return out.str();
}

}  // namespace qpkid::protocol
