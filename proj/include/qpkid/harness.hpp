#pragma once

// Command implementations behind the `qpkid` binary. Each command maps a
// RunConfig to its full textual output and an exit code, so the CLI only
// parses flags and writes files.
//
// Exit codes: 0 success/accept, 2 reject, 3 refusal (usage limit),
// 4 invalid config, 5 internal numerical failure.
//
// Seeds: trial i uses derive_seed(seed, i) as its key seed, and session k
// under that key uses derive_seed(key_seed, k + 1). Sampled attack rows use
// derive_seed(seed, t).

#include <array>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpkid/adversary.hpp"
#include "qpkid/bounds.hpp"
#include "qpkid/keys.hpp"
#include "qpkid/numeric.hpp"
#include "qpkid/protocol.hpp"

namespace qpkid::harness {

enum ExitCode : int { kSuccess = 0, kReject = 2, kRefusal = 3, kInvalidConfig = 4, kNumericalFailure = 5 };

enum class OutputFormat { json, csv };

struct RunConfig {
    std::string command;
    std::optional<int> r;
    std::optional<int> s;
    std::optional<int> s_max;
    std::optional<int> t;
    std::optional<int> t_max;
    keys::Variant variant = keys::Variant::standard;
    protocol::Mode mode = protocol::Mode::exact;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<int> sessions;
    std::optional<double> epsilon;
    std::optional<std::string> key_json;  ///< contents of --key
    bool public_only = false;
    bool expose_phases = false;
    std::string output_path;
    std::optional<OutputFormat> output_format;
};

struct CommandResult {
    int exit_code = kSuccess;
    std::string output;
    std::string message;  ///< human-readable status for stderr
};

class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

// Tables ---------------------------------------------------------------------

inline constexpr int kCsvDigits = 9;

using Cell = std::variant<long long, double, std::string, bool>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    std::string csv() const {
        std::ostringstream out;
        for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
        out << '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out << ',';
                std::visit(
                    [&](const auto& v) {
                        using T = std::decay_t<decltype(v)>;
                        if constexpr (std::is_same_v<T, double>) {
                            char buf[64];
                            std::snprintf(buf, sizeof buf, "%.*g", kCsvDigits, v);
                            out << buf;
                        } else if constexpr (std::is_same_v<T, bool>) {
                            out << (v ? "true" : "false");
                        } else {
                            out << v;
                        }
                    },
                    row[i]);
            }
            out << '\n';
        }
        return out.str();
    }

    std::string json() const {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& row : rows) {
            nlohmann::ordered_json o;
            for (std::size_t i = 0; i < row.size(); ++i) {
                std::visit(
                    [&](const auto& v) {
                        using T = std::decay_t<decltype(v)>;
                        if constexpr (std::is_same_v<T, double>)
                            o[columns[i]] = round_significant(v, protocol::kJsonDigits);
                        else
                            o[columns[i]] = v;
                    },
                    row[i]);
            }
            arr.push_back(std::move(o));
        }
        return arr.dump(2) + "\n";
    }

    std::string render(OutputFormat f) const { return f == OutputFormat::csv ? csv() : json(); }
};

// Validation helpers ---------------------------------------------------------

inline int require(const std::optional<int>& v, const char* flag) {
    if (!v) throw ConfigError(std::string("missing required flag ") + flag);
    return *v;
}

inline int require_positive(const std::optional<int>& v, const char* flag) {
    const int x = require(v, flag);
    if (x < 1) throw ConfigError(std::string(flag) + " must be >= 1");
    return x;
}

inline std::uint64_t require_seed(const RunConfig& c) {
    if (!c.seed) throw ConfigError("missing required flag --seed");
    return *c.seed;
}

// Commands -------------------------------------------------------------------

inline CommandResult cmd_keygen(const RunConfig& c) {
    const keys::ProtocolParams params(require_positive(c.r, "--r"), require_positive(c.s, "--s"), c.variant);
    const auto seed = require_seed(c);
    const auto key = keys::generate_private_key(params, seed);
    const auto doc = c.public_only ? keys::public_key_json(params, key, c.expose_phases)
                                   : keys::private_key_json(params, seed, key);
    return {kSuccess, doc.dump() + "\n", "key generated"};
}

inline CommandResult cmd_run_honest(const RunConfig& c) {
    const int trials = c.trials.value_or(1);
    const int sessions = c.sessions.value_or(1);
    if (trials < 1 || sessions < 1) throw ConfigError("--trials and --sessions must be >= 1");
    const auto seed = require_seed(c);

    std::vector<keys::KeyFile> key_files;
    if (c.key_json) {
        if (trials != 1) throw ConfigError("--key runs a single key; --trials must be 1");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(*c.key_json);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("key file: ") + e.what());
        }
        key_files.push_back(keys::parse_private_key(j));
    } else {
        const keys::ProtocolParams params(require_positive(c.r, "--r"), require_positive(c.s, "--s"), c.variant);
        for (int i = 0; i < trials; ++i) {
            const auto key_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
            key_files.push_back({params, key_seed, keys::generate_private_key(params, key_seed)});
        }
    }

    CommandResult res{kSuccess, "", ""};
    int accepted = 0, total = 0;
    for (std::size_t i = 0; i < key_files.size(); ++i) {
        const auto& kf = key_files[i];
        protocol::HonestProver alice(kf.key, kf.params.r());
        for (int k = 0; k < sessions; ++k) {
            const std::string id = "trial-" + std::to_string(i) + "/session-" + std::to_string(k);
            try {
                const auto t = protocol::run_session(kf.params, kf.key, alice, c.mode,
                                                     derive_seed(kf.seed, static_cast<std::uint64_t>(k) + 1), id);
                res.output += protocol::transcript_jsonl(t);
                ++total;
                if (t.verdict == protocol::Verdict::accept) ++accepted;
            } catch (const UsageExhausted& e) {
                nlohmann::ordered_json refusal;
                refusal["session_id"] = id;
                refusal["refusal"] = e.what();
                res.output += refusal.dump() + "\n";
                res.exit_code = kRefusal;
                res.message = std::string("refused: ") + e.what();
                return res;
            }
        }
    }
    res.message = std::to_string(accepted) + "/" + std::to_string(total) + " sessions accepted";
    if (accepted != total) res.exit_code = kReject;
    return res;
}

inline std::vector<int> t_range(const RunConfig& c) {
    if (c.t && c.t_max) throw ConfigError("give either --t or --t-max, not both");
    if (c.t) {
        if (*c.t < 0) throw ConfigError("--t must be >= 0");
        return {*c.t};
    }
    const int t_max = c.t_max.value_or(8);
    if (t_max < 1) throw ConfigError("--t-max must be >= 1");
    std::vector<int> ts;
    for (int t = 1; t <= t_max; ++t) ts.push_back(t);
    return ts;
}

inline constexpr int kMaxOracleT = 64;

inline CommandResult cmd_run_attack(const RunConfig& c) {
    const auto ts = t_range(c);
    const int s = c.s ? require_positive(c.s, "--s") : 1;
    for (int t : ts)
        if (t > kMaxOracleT) throw ConfigError("--t above 64 exceeds the simulated dimension limit");
    Table table;
    if (c.mode == protocol::Mode::exact) {
        table.columns = {"t", "p_pass", "cheat_guess", "bound", "fool_prob_s"};
    } else {
        table.columns = {"t", "trials", "p_pass", "sigma", "p_pass_exact", "cheat_guess", "bound", "fool_prob_s"};
    }
    const int trials = c.trials.value_or(10000);
    if (trials < 1) throw ConfigError("--trials must be >= 1");
    const std::uint64_t seed = c.mode == protocol::Mode::sampled ? require_seed(c) : c.seed.value_or(0);

    for (int t : ts) {
        const auto strategy = adversary::helstrom_strategy(t);
        const auto report = adversary::eve_attack_round(t, strategy);
        const double cheat_guess = 0.5 * (1.0 + report.psucc_strategy);
        const double bound = adversary::pass_bound(t);
        const double fool = adversary::fool_first_attempt_bound(t, s);
        if (c.mode == protocol::Mode::exact) {
            table.rows.push_back({static_cast<long long>(t), report.p_pass_exact, cheat_guess, bound, fool});
        } else {
            const int grid = adversary::default_attack_grid(t);
            const adversary::EveProver eve(strategy, keys::PrivateKey({keys::PhaseFraction(1, grid)}));
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
            long long passes = 0;
            for (int i = 0; i < trials; ++i) passes += adversary::sample_attack_round(eve, grid, rng) ? 1 : 0;
            const double rate = static_cast<double>(passes) / trials;
            const double sigma = std::sqrt(report.p_pass_exact * (1.0 - report.p_pass_exact) / trials);
            table.rows.push_back({static_cast<long long>(t), static_cast<long long>(trials), rate, sigma,
                                  report.p_pass_exact, cheat_guess, bound, fool});
        }
    }
    return {kSuccess, table.render(c.output_format.value_or(OutputFormat::csv)), "attack table written"};
}

inline CommandResult cmd_psucc_table(const RunConfig& c) {
    const auto ts = t_range(c);
    Table table{{"t", "formula", "oracle", "cheung"}, {}};
    for (int t : ts) {
        if (t < 1 || t > kMaxOracleT) throw ConfigError("psucc-table supports 1 <= t <= 64");
        table.rows.push_back({static_cast<long long>(t), adversary::psucc_formula(t), adversary::helstrom_psucc_oracle(t),
                              adversary::cheung_bound(t)});
    }
    return {kSuccess, table.render(c.output_format.value_or(OutputFormat::csv)), "psucc table written"};
}

inline CommandResult cmd_bounds(const RunConfig& c) {
    const int r = require_positive(c.r, "--r");
    const auto variant_name = std::string(keys::to_string(c.variant));
    const auto fmt = c.output_format.value_or(OutputFormat::csv);
    Table table;
    if (c.epsilon) {
        if (c.s || c.s_max || c.t) throw ConfigError("--epsilon cannot be combined with --s, --s-max or --t");
        table.columns = {"r", "epsilon", "variant", "s_min"};
        table.rows.push_back({static_cast<long long>(r), *c.epsilon, variant_name,
                              static_cast<long long>(bounds::min_security_parameter(r, *c.epsilon, c.variant))});
        return {kSuccess, table.render(fmt), "advisor row written"};
    }
    if (c.s && c.s_max) throw ConfigError("give either --s or --s-max, not both");
    std::vector<int> ss;
    if (c.s) {
        ss.push_back(require_positive(c.s, "--s"));
    } else {
        for (int s = 1; s <= require_positive(c.s_max, "--s or --s-max"); ++s) ss.push_back(s);
    }
    if (c.t) {
        table.columns = {"r", "s", "t", "variant", "chain_sum", "chain_bound", "bound"};
        for (int s : ss) {
            const auto e = bounds::union_bound_chain(*c.t, r, s, c.variant);
            table.rows.push_back({static_cast<long long>(r), static_cast<long long>(s), static_cast<long long>(*c.t),
                                  variant_name, e.chain_sum, e.chain_bound, e.p_break_bound});
        }
    } else {
        table.columns = {"r", "s", "variant", "bound"};
        for (int s : ss)
            table.rows.push_back({static_cast<long long>(r), static_cast<long long>(s), variant_name,
                                  bounds::p_break_bound(r, s, c.variant)});
    }
    return {kSuccess, table.render(fmt), "bounds written"};
}

/// One checked identity: name, worst deviation seen, and the allowed slack.
struct IdentityCheck {
    std::string name;
    double deviation;
    double tolerance;
    bool passed() const { return deviation <= tolerance; }
};

inline std::vector<IdentityCheck> verify_identities(int n_max) {
    std::vector<IdentityCheck> checks;

    // Discrete and continuous phase averages agree once p > n.
    for (int n = 1; n <= n_max; ++n) {
        const auto target = keys::symmetric_mixture(n);
        double worst = 0.0;
        for (int p = n + 1; p <= n + 4; ++p)
            worst = std::max(worst, keys::averaged_key_operator_discrete(p, n).matrix().max_abs_diff(target.matrix()));
        checks.push_back({"averaging n=" + std::to_string(n) + " p=n+1..n+4", worst, kConstructionTol});
    }

    // (1/p) sum_k e^{2 pi i a k/p} is 1 exactly when p | a.
    {
        double worst = 0.0;
        for (int p = 2; p <= 12; ++p)
            for (long long a = -30; a <= 30; ++a)
                worst = std::max(worst, std::abs(keys::phase_average_exponential(a, p) - (a % p == 0 ? 1.0 : 0.0)));
        checks.push_back({"phase average table p=2..12 a=-30..30", worst, 0.0});
    }

    // |01>+|10> equals (|0>+e^{i phi}|1>)^2 - (|0>-e^{i phi}|1>)^2 up to global phase.
    {
        double worst = 0.0;
        const auto bell = qsim::PureState({2, 2}, {0.0, 1.0, 1.0, 0.0});
        for (int p = 2; p <= n_max + 1; ++p)
            for (int k = 1; k <= p; ++k) {
                const auto e = keys::PhaseFraction(k, p).phase();
                const std::array<qsim::Complex, 2> plus{1.0, e}, minus{1.0, -e};
                qsim::ComplexVector v(4);
                for (std::size_t i = 0; i < 2; ++i)
                    for (std::size_t j = 0; j < 2; ++j) v[2 * i + j] = plus[i] * plus[j] - minus[i] * minus[j];
                worst = std::max(worst, std::abs(1.0 - qsim::overlap(bell, qsim::PureState({2, 2}, v))));
            }
        checks.push_back({"bell expansion p=2.." + std::to_string(n_max + 1), worst, kConstructionTol});
    }

    // Honest rounds pass with probability 1 for every key value.
    {
        double worst = 0.0;
        Rng rng(0);
        for (int p = 2; p <= n_max + 1; ++p)
            for (int k = 1; k <= p; ++k) {
                const keys::PhaseFraction x(k, p);
                auto ch = protocol::bob_prepare_challenge();
                for (auto& b : protocol::alice_respond(ch.joint_state, ch.sent, x, protocol::Mode::exact, rng)) {
                    const auto o = protocol::bob_verify_step(b.joint_state, ch.kept_register, b.response,
                                                             keys::public_key_state(x), protocol::Mode::exact, rng);
                    worst = std::max(worst, std::abs(1.0 - o.pass_probability));
                }
            }
        checks.push_back({"honest round pass probability", worst, kConstructionTol});
    }
    return checks;
}

inline CommandResult cmd_verify_identities(const RunConfig& c) {
    const int n_max = c.r.value_or(6);
    if (n_max < 1 || n_max > keys::kMaxOperatorQubits) throw ConfigError("--r must lie in [1, 8] for verify-identities");
    CommandResult res{kSuccess, "", ""};
    int failed = 0;
    for (const auto& chk : verify_identities(n_max)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3g", chk.deviation);
        res.output += std::string(chk.passed() ? "PASS " : "FAIL ") + chk.name + " max_deviation=" + buf + "\n";
        if (!chk.passed()) ++failed;
    }
    if (failed) {
        res.exit_code = kNumericalFailure;
        res.message = std::to_string(failed) + " identities failed";
    } else {
        res.message = "all identities hold";
    }
    return res;
}

/// Dispatches on config.command; maps library errors to exit codes.
inline CommandResult run(const RunConfig& c) {
    try {
        if (c.command == "keygen") return cmd_keygen(c);
        if (c.command == "run-honest") return cmd_run_honest(c);
        if (c.command == "run-attack") return cmd_run_attack(c);
        if (c.command == "psucc-table") return cmd_psucc_table(c);
        if (c.command == "bounds") return cmd_bounds(c);
        if (c.command == "verify-identities") return cmd_verify_identities(c);
        return {kInvalidConfig, "", "unknown command: " + c.command};
    } catch (const NumericalFailure& e) {
        return {kNumericalFailure, "", e.what()};
    } catch (const InvalidArgument& e) {
        return {kInvalidConfig, "", e.what()};
    } catch (const Error& e) {
        return {kNumericalFailure, "", e.what()};
    }
}

}  // namespace qpkid::harness
