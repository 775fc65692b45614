#include <gtest/gtest.h>

#include <algorithm>

#include "qpkid/protocol.hpp"

using namespace qpkid;
using namespace qpkid::protocol;
using keys::PhaseFraction;
using qsim::Complex;
using qsim::PureState;

TEST(Transport, FifoOrder) {
    Transport t;
    t.send(ResponseBit{1});
    t.send(RegisterHandle::issue(3));
    t.send(ResponseBit{0});
    EXPECT_EQ(t.receive_bit().value, 1);
    EXPECT_EQ(t.receive_register().register_index(), 3u);
    EXPECT_EQ(t.receive_bit().value, 0);
    EXPECT_TRUE(t.empty());
    EXPECT_THROW(t.receive_bit(), InvalidArgument);
}

TEST(Transport, RegisterHandleIsConsumedOnce) {
    Transport t;
    auto h = RegisterHandle::issue(1);
    t.send(std::move(h));
    EXPECT_FALSE(h.valid());  // NOLINT(bugprone-use-after-move)
    EXPECT_THROW(t.send(std::move(h)), NoCloningViolation);
    auto received = t.receive_register();
    EXPECT_THROW(t.send(std::move(received)), NoCloningViolation);
}

TEST(Transport, WrongMessageKind) {
    Transport t;
    t.send(ResponseBit{0});
    EXPECT_THROW(t.receive_register(), InvalidArgument);
}

TEST(Challenge, EntangledPair) {
    const auto c = bob_prepare_challenge();
    const double h = 1.0 / std::sqrt(2.0);
    const double expect[] = {0.0, h, h, 0.0};
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(c.joint_state[i] - Complex{expect[i]}), 0.0, 1e-15);
    EXPECT_EQ(c.kept_register, 0u);
    EXPECT_EQ(c.sent.register_index(), 1u);
    for (std::size_t reg : {0u, 1u})
        EXPECT_LT(qsim::partial_trace(c.joint_state, {reg}).matrix().max_abs_diff(qsim::Matrix::identity(2) * Complex{0.5}),
                  1e-15);
    // (|++> - |-->)/sqrt2 up to global phase
    const auto plus = PureState::qubit(1.0, 1.0);
    const auto minus = PureState::qubit(1.0, -1.0);
    const auto pp = qsim::tensor(plus, plus), mm = qsim::tensor(minus, minus);
    qsim::ComplexVector v(4);
    for (std::size_t i = 0; i < 4; ++i) v[i] = pp[i] - mm[i];
    EXPECT_NEAR(qsim::overlap(c.joint_state, PureState({2, 2}, v)), 1.0, 1e-12);
}

TEST(AliceRespond, UniformBitsAndCollapse) {
    Rng rng(1);
    for (int p : {2, 3, 5, 8})
        for (int k = 1; k <= p; ++k) {
            const PhaseFraction x(k, p);
            auto c = bob_prepare_challenge();
            const auto branches = alice_respond(c.joint_state, c.sent, x, Mode::exact, rng);
            ASSERT_EQ(branches.size(), 2u);
            const auto basis = keys::phase_basis(x);
            for (const auto& b : branches) {
                EXPECT_NEAR(b.probability, 0.5, 1e-12);
                auto kept = qsim::partial_trace(b.joint_state, {0});
                // bit 0: kept register is |0> + e^{i phi}|1>; bit 1: |0> - e^{i phi}|1>.
                EXPECT_NEAR(kept.expectation(basis[b.response.value]), 1.0, 1e-12);
                // After Z the bit-1 branch also matches the public key.
                const auto corrected =
                    b.response.value ? qsim::apply_gate(b.joint_state, qsim::gates::pauli_z(), {0}) : b.joint_state;
                EXPECT_NEAR(qsim::partial_trace(corrected, {0}).expectation(basis[0]), 1.0, 1e-12);
            }
        }
}

TEST(BobVerifyStep, Examples) {
    Rng rng(2);
    const PhaseFraction x(1, 3);
    const auto pk = keys::public_key_state(x);
    // Honest branch: kept register equals pk.
    auto honest = qsim::tensor(pk.state, PureState::basis({2}, 0));
    EXPECT_NEAR(bob_verify_step(honest, 0, {0}, pk, Mode::exact, rng).pass_probability, 1.0, 1e-12);
    // Orthogonal after correction.
    auto orth = qsim::tensor(PureState::qubit(1.0, -x.phase()), PureState::basis({2}, 0));
    EXPECT_NEAR(bob_verify_step(orth, 0, {0}, pk, Mode::exact, rng).pass_probability, 0.5, 1e-12);
    // Maximally mixed kept register.
    const PureState bell({2, 2}, {0.0, 1.0, 1.0, 0.0});
    EXPECT_NEAR(bob_verify_step(bell, 0, {0}, pk, Mode::exact, rng).pass_probability, 0.75, 1e-12);
    EXPECT_NEAR(bob_verify_step(bell, 0, {1}, pk, Mode::exact, rng).pass_probability, 0.75, 1e-12);
}

TEST(RunSession, HonestExactAlwaysAccepts) {
    for (int r = 1; r <= 4; ++r)
        for (int s = 1; s <= 4; ++s) {
            const keys::ProtocolParams params(r, s);
            const auto key = keys::generate_private_key(params, 100 * r + s);
            HonestProver alice(key, r);
            const auto t = run_session(params, key, alice, Mode::exact, 5);
            EXPECT_EQ(t.verdict, Verdict::accept);
            ASSERT_EQ(t.rounds.size(), static_cast<std::size_t>(s));
            for (const auto& rec : t.rounds) {
                EXPECT_NEAR(rec.pass_probability, 1.0, 1e-12);
                EXPECT_NEAR(rec.p_response0, 0.5, 1e-12);
            }
        }
}

TEST(RunSession, HonestSampledAccepts) {
    const keys::ProtocolParams params(2, 6, keys::Variant::hardened);
    int zeros = 0, rounds = 0;
    for (int i = 0; i < 200; ++i) {
        const auto key = keys::generate_private_key(params, derive_seed(3, i));
        HonestProver alice(key, params.r());
        const auto t = run_session(params, key, alice, Mode::sampled, derive_seed(4, i));
        EXPECT_EQ(t.verdict, Verdict::accept);
        for (const auto& rec : t.rounds) {
            ASSERT_TRUE(rec.passed.has_value());
            zeros += rec.response->value == 0;
            ++rounds;
        }
    }
    const double sigma = std::sqrt(0.25 / rounds);
    EXPECT_NEAR(static_cast<double>(zeros) / rounds, 0.5, 4 * sigma);
}

TEST(RunSession, RefusesAfterRUses) {
    const keys::ProtocolParams params(3, 2);
    const auto key = keys::generate_private_key(params, 8);
    HonestProver alice(key, params.r());
    for (int i = 0; i < 3; ++i) EXPECT_EQ(run_session(params, key, alice, Mode::exact, i).verdict, Verdict::accept);
    EXPECT_EQ(alice.usage().remaining(), 0);
    EXPECT_THROW(run_session(params, key, alice, Mode::exact, 9), UsageExhausted);
}

TEST(RunSession, RejectsMismatchedKey) {
    const keys::ProtocolParams params(3, 2);
    const auto key = keys::generate_private_key(keys::ProtocolParams(4, 2), 8);
    HonestProver alice(key, 3);
    EXPECT_THROW(run_session(params, key, alice, Mode::exact, 0), InvalidArgument);
}

namespace {

// Answers every round with a fixed bit without measuring.
class GuessingProver final : public Prover {
public:
    explicit GuessingProver(std::uint8_t bit) : bit_(bit) {}
    ProverTag tag() const override { return ProverTag::adversary; }
    std::vector<ResponseBranch> respond(std::size_t, const PureState& joint, RegisterHandle, Mode, Rng&) override {
        return {{1.0, {bit_}, joint}};
    }

private:
    std::uint8_t bit_;
};

}  // namespace

TEST(RunSession, BlindGuessingPassesThreeQuarters) {
    const keys::ProtocolParams params(2, 3);
    const auto key = keys::generate_private_key(params, 1);
    GuessingProver eve(0);
    const auto t = run_session(params, key, eve, Mode::exact, 1);
    for (const auto& rec : t.rounds) EXPECT_NEAR(rec.pass_probability, 0.75, 1e-12);
    EXPECT_EQ(t.verdict, Verdict::reject);
    EXPECT_NEAR(t.accept_probability, std::pow(0.75, 3), 1e-12);
}

TEST(RunSession, RoundsDependOnlyOnTheirOwnKeyElement) {
    const keys::ProtocolParams params(4, 5);
    const auto key = keys::generate_private_key(params, 12);
    auto xs = key.elements();
    std::reverse(xs.begin(), xs.end());
    const keys::PrivateKey reversed(xs);

    GuessingProver eve_a(1), eve_b(1);
    const auto a = run_session(params, key, eve_a, Mode::exact, 0);
    const auto b = run_session(params, reversed, eve_b, Mode::exact, 0);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(a.rounds[j].pass_probability, b.rounds[4 - j].pass_probability, 1e-15);
}

TEST(RunSession, VerdictIsConjunctionOfRounds) {
    const keys::ProtocolParams params(2, 4);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto key = keys::generate_private_key(params, seed);
        GuessingProver eve(seed % 2);
        const auto t = run_session(params, key, eve, Mode::sampled, seed);
        const bool all = std::all_of(t.rounds.begin(), t.rounds.end(), [](const RoundRecord& r) { return *r.passed; });
        EXPECT_EQ(t.verdict == Verdict::accept, all);
    }
}

TEST(Transcript, JsonLinesShape) {
    const keys::ProtocolParams params(2, 2);
    const auto key = keys::generate_private_key(params, 3);
    HonestProver alice(key, 2);
    const auto text = transcript_jsonl(run_session(params, key, alice, Mode::sampled, 99, "abc"));
    std::vector<nlohmann::json> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) lines.push_back(nlohmann::json::parse(line));
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0]["session_id"], "abc");
    EXPECT_EQ(lines[0]["p"], 3);
    EXPECT_EQ(lines[0]["mode"], "sampled");
    EXPECT_EQ(lines[0]["prover_tag"], "honest");
    EXPECT_EQ(lines[1]["j"], 1);
    EXPECT_TRUE(lines[1]["pass"].get<bool>());
    EXPECT_EQ(lines[3]["verdict"], "accept");

    HonestProver alice2(key, 2);
    EXPECT_EQ(text, transcript_jsonl(run_session(params, key, alice2, Mode::sampled, 99, "abc")));
}
