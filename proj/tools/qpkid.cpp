// qpkid: command-line front end for the identification-scheme simulator.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qpkid/harness.hpp"

namespace {

using qpkid::harness::RunConfig;

struct Flags {
    int r = 0, s = 0, s_max = 0, t = 0, t_max = 0, trials = 0, sessions = 0;
    std::uint64_t seed = 0;
    double epsilon = 0.0;
    std::string variant = "standard";
    std::string mode = "exact";
    std::string format;
    std::string out;
    std::string key_path;
    bool public_only = false;
    bool expose_phases = false;
};

// Registers the flags a subcommand accepts; `names` lists them by long name.
void add_flags(CLI::App* sub, Flags& f, std::initializer_list<std::string_view> names) {
    for (auto n : names) {
        if (n == "r") sub->add_option("--r", f.r, "reusability parameter r");
        if (n == "s") sub->add_option("--s", f.s, "security parameter s (kernel rounds)");
        if (n == "s-max") sub->add_option("--s-max", f.s_max, "sweep s = 1..s-max");
        if (n == "t") sub->add_option("--t", f.t, "public-key copies held by the adversary");
        if (n == "t-max") sub->add_option("--t-max", f.t_max, "sweep t = 1..t-max");
        if (n == "variant")
            sub->add_option("--variant", f.variant, "standard | hardened")->check(CLI::IsMember({"standard", "hardened"}));
        if (n == "mode") sub->add_option("--mode", f.mode, "exact | sampled")->check(CLI::IsMember({"exact", "sampled"}));
        if (n == "trials") sub->add_option("--trials", f.trials, "independent trials");
        if (n == "sessions") sub->add_option("--sessions", f.sessions, "sessions per private key");
        if (n == "seed") sub->add_option("--seed", f.seed, "master seed");
        if (n == "epsilon") sub->add_option("--epsilon", f.epsilon, "target break probability");
        if (n == "key") sub->add_option("--key", f.key_path, "private key JSON from keygen");
        if (n == "public") sub->add_flag("--public", f.public_only, "emit the public description instead");
        if (n == "expose-phases") sub->add_flag("--expose-phases", f.expose_phases, "debug: include phases in --public");
        if (n == "format") sub->add_option("--format", f.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
    }
    sub->add_option("--out", f.out, "output file (default: stdout)");
}

RunConfig to_config(const CLI::App& sub, const Flags& f) {
    RunConfig c;
    c.command = sub.get_name();
    auto given = [&](const char* flag) { return sub.get_option_no_throw(flag) && sub.count(flag) > 0; };
    if (given("--r")) c.r = f.r;
    if (given("--s")) c.s = f.s;
    if (given("--s-max")) c.s_max = f.s_max;
    if (given("--t")) c.t = f.t;
    if (given("--t-max")) c.t_max = f.t_max;
    if (given("--trials")) c.trials = f.trials;
    if (given("--sessions")) c.sessions = f.sessions;
    if (given("--seed")) c.seed = f.seed;
    if (given("--epsilon")) c.epsilon = f.epsilon;
    c.variant = qpkid::keys::parse_variant(f.variant);
    c.mode = qpkid::protocol::parse_mode(f.mode);
    if (!f.format.empty())
        c.output_format = f.format == "json" ? qpkid::harness::OutputFormat::json : qpkid::harness::OutputFormat::csv;
    c.public_only = f.public_only;
    c.expose_phases = f.expose_phases;
    c.output_path = f.out;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator and verifier for a quantum-public-key identification scheme"};
    app.require_subcommand(1);
    Flags f;

    auto* keygen = app.add_subcommand("keygen", "generate a private key (or its public description)");
    add_flags(keygen, f, {"r", "s", "variant", "seed", "public", "expose-phases"});
    auto* honest = app.add_subcommand("run-honest", "run honest sessions and write JSON-lines transcripts");
    add_flags(honest, f, {"r", "s", "variant", "mode", "seed", "trials", "sessions", "key"});
    auto* attack = app.add_subcommand("run-attack", "tabulate the optimal attack's pass probability");
    add_flags(attack, f, {"t", "t-max", "s", "mode", "trials", "seed", "format"});
    auto* psucc = app.add_subcommand("psucc-table", "guessing probability: formula, oracle, bound");
    add_flags(psucc, f, {"t", "t-max", "format"});
    auto* bounds = app.add_subcommand("bounds", "break-probability bounds and the s advisor");
    add_flags(bounds, f, {"r", "s", "s-max", "t", "variant", "epsilon", "format"});
    auto* verify = app.add_subcommand("verify-identities", "check the algebraic identities numerically");
    add_flags(verify, f, {"r"});

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return qpkid::harness::kInvalidConfig;
    }

    const CLI::App* sub = app.get_subcommands().front();
    RunConfig config = to_config(*sub, f);
    if (!f.key_path.empty()) {
        std::ifstream in(f.key_path);
        if (!in) {
            std::cerr << "cannot read key file " << f.key_path << "\n";
            return qpkid::harness::kInvalidConfig;
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        config.key_json = buf.str();
    }

    const auto result = qpkid::harness::run(config);
    if (config.output_path.empty()) {
        std::cout << result.output;
    } else {
        std::ofstream out(config.output_path, std::ios::binary);
        if (!out) {
            std::cerr << "cannot write " << config.output_path << "\n";
            return qpkid::harness::kInvalidConfig;
        }
        out << result.output;
    }
    if (!result.message.empty()) std::cerr << result.message << "\n";
    return result.exit_code;
}
