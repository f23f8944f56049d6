// mgstab: small-signal stability and critical-cluster analysis for
// droop-controlled inverter microgrids.
//
// Exit codes: 0 stable / success, 1 unstable, 2 invalid input, 3 numerical failure.

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "microgrid/microgrid.hpp"

namespace {

using namespace microgrid;

constexpr int kExitStable = 0;
constexpr int kExitUnstable = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

struct GlobalFlags {
    std::string out;
    bool pretty = false;
    double cluster_threshold = kDefaultClusterThreshold;
    std::optional<double> omega_c;
    std::uint64_t seed = 1;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("UNREADABLE_INPUT", "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Writes to --out when given, stdout otherwise.
template <typename Fn>
void emit(const GlobalFlags& g, Fn&& write) {
    if (g.out.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream os(g.out);
    if (!os) throw ValidationError("UNWRITABLE_OUTPUT", "cannot write '" + g.out + "'");
    write(os);
}

NetworkModel load_model(const std::string& path, const GlobalFlags& g, std::string* text_out = nullptr) {
    auto text = read_file(path);
    auto model = parse_network(text);
    if (g.omega_c) model = with_cutoff(std::move(model), *g.omega_c);
    if (text_out) *text_out = std::move(text);
    return model;
}

int cmd_analyze(const GlobalFlags& g, const std::string& input) {
    std::string text;
    const auto model = load_model(input, g, &text);
    const auto rep = analyze(model, {g.cluster_threshold, text});
    emit(g, [&](std::ostream& os) {
        if (g.pretty)
            write_report_text(os, rep);
        else
            os << report_to_json(rep).dump(2) << '\n';
    });
    if (!rep.oracle_agrees)
        std::cerr << "WARNING: state-matrix oracle verdict disagrees with the mu/mu_cr verdict\n";
    if (rep.oracle.status == CheckStatus::fail)
        std::cerr << "WARNING: eigenvalue equivalence check FAILED (max distance " << rep.oracle.max_distance
                  << ")\n";
    return rep.unstable ? kExitUnstable : kExitStable;
}

int cmd_sweep(const GlobalFlags& g, const std::string& input, const std::string& param, double lo, double hi,
              int count) {
    const auto model = load_model(input, g);
    const auto result = sweep(model, parse_sweep_spec(param), lo, hi, count);
    emit(g, [&](std::ostream& os) { write_sweep_csv(os, result); });
    std::cerr << sweep_to_json(result).dump(g.pretty ? 2 : -1) << '\n';
    return kExitStable;
}

int cmd_mucr(const GlobalFlags& g, double rho_lo, double rho_hi, int rho_n, double k_lo, double k_hi, int k_n,
             double frequency) {
    const double omega_c = g.omega_c.value_or(kDefaultCutoffRadPerSec);
    const auto surface = mu_critical_surface(rho_lo, rho_hi, rho_n, k_lo, k_hi, k_n, 1.0 / omega_c,
                                             2.0 * std::numbers::pi * frequency);
    emit(g, [&](std::ostream& os) { write_surface_csv(os, surface); });
    std::cerr << "# grid " << rho_n << "x" << k_n << ", minimum mu_cr = " << surface.minimum
              << ", failures = " << surface.failures << '\n';
    return kExitStable;
}

int cmd_oracle(const GlobalFlags& g, const std::string& input, int random_m, bool nonuniform_k) {
    NetworkModel model;
    if (random_m > 0) {
        RandomNetworkOptions opt;
        opt.inverters = random_m;
        opt.nonuniform_k = nonuniform_k;
        opt.omega_c = g.omega_c.value_or(kDefaultCutoffRadPerSec);
        model = random_network(g.seed, opt);
    } else {
        if (input.empty()) throw ValidationError("NO_INPUT", "give an input document or --random <m>");
        model = parse_network_document(read_file(input));
        if (g.omega_c) model = with_cutoff(std::move(model), *g.omega_c);
    }

    // Hypothesis violations are reported as SKIPPED; anything else must validate.
    std::vector<Violation> fatal;
    for (auto& v : validate(model))
        if (v.code != "NONUNIFORM_K" && v.code != "NONUNIFORM_RHO") fatal.push_back(std::move(v));
    if (!fatal.empty()) throw ValidationError(std::move(fatal));

    const auto cp = CharPolyModel::from_network(model);
    const auto sus = susceptance_set(model);
    const auto spectrum = weighted_spectrum(model, sus);
    const auto rep = equivalence_check(model, spectrum, cp);

    emit(g, [&](std::ostream& os) {
        os << "equivalence: " << to_string(rep.status) << '\n';
        if (rep.status == CheckStatus::skipped) {
            os << rep.notice << '\n';
            return;
        }
        os.precision(10);
        os << "mu,quintic_re,quintic_im,eig_re,eig_im,distance\n";
        for (const auto& p : rep.pairs)
            os << p.mu << ',' << p.quintic_root.real() << ',' << p.quintic_root.imag() << ','
               << p.state_eigenvalue.real() << ',' << p.state_eigenvalue.imag() << ','
               << std::abs(p.quintic_root - p.state_eigenvalue) << '\n';
        os << "max_distance: " << rep.max_distance << '\n'
           << "tolerance: " << rep.tolerance << " (1e-6 x spectral radius " << rep.spectral_radius << ")\n"
           << "max_eigenvector_cosine_distance: " << rep.max_eigenvector_distance << " over "
           << rep.eigenvectors_checked << " vectors\n";
    });
    return rep.status == CheckStatus::fail ? kExitNumerical : kExitStable;
}

int cmd_rootlocus(const GlobalFlags& g, double rho, double k, double frequency, double mu_lo, double mu_hi,
                  int count) {
    const CharPolyModel cp{rho, k, 1.0 / g.omega_c.value_or(kDefaultCutoffRadPerSec),
                           2.0 * std::numbers::pi * frequency};
    const auto rl = root_locus(cp, mu_lo, mu_hi, count);
    emit(g, [&](std::ostream& os) { write_root_locus_csv(os, rl); });
    if (!rl.dominant_monotone) std::cerr << "note: dominant real part is not monotone over this mu range\n";
    return kExitStable;
}

int cmd_trace(const GlobalFlags& g, const std::string& input, const std::string& bus, double angle,
              double horizon, double dt) {
    const auto model = load_model(input, g);
    const auto ss = assemble_state_matrix(model, susceptance_set(model).prime);
    VectorXd x0 = VectorXd::Zero(ss.A.rows());
    const auto idx = model.bus_index(bus);
    if (!idx || *idx >= model.inverter_count())
        throw ValidationError("UNKNOWN_BUS", "no inverter at bus '" + bus + "'");
    x0(static_cast<Index>(*idx)) = angle;
    const auto trace = time_response(ss, x0, horizon, dt);
    emit(g, [&](std::ostream& os) { write_trace_csv(os, trace); });
    std::cerr << "# method: " << trace.method << (trace.truncated ? " (truncated)" : "") << '\n';
    return kExitStable;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Small-signal stability and critical clusters of droop-controlled inverter microgrids"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags g;
    double omega_c = 0.0;
    app.add_option("--out", g.out, "Write the result to this file instead of stdout");
    app.add_flag("--pretty", g.pretty, "Human-readable output");
    app.add_option("--cluster-threshold", g.cluster_threshold, "Cluster membership cut, fraction of max |u|")
        ->check(CLI::Range(0.0, 1.0));
    auto* omega_opt = app.add_option("--omega-c", omega_c, "Power filter cutoff [rad/s]")->check(CLI::PositiveNumber);
    app.add_option("--seed", g.seed, "Seed for randomized networks");

    std::string input;
    auto* analyze_cmd = app.add_subcommand("analyze", "Full stability report for a network document");
    analyze_cmd->add_option("input", input, "Network JSON document")->required();

    std::string param;
    double from = 0.0, to = 0.0;
    int count = 50;
    auto* sweep_cmd = app.add_subcommand("sweep", "Sweep a line length [km] or a frequency droop [%]");
    sweep_cmd->add_option("input", input, "Network JSON document")->required();
    sweep_cmd->add_option("--param", param, "line-length:<line-id> or droop-m:<bus-id>")->required();
    sweep_cmd->add_option("--from", from, "Range start")->required();
    sweep_cmd->add_option("--to", to, "Range end")->required();
    sweep_cmd->add_option("--count", count, "Grid points");

    double rho_lo = 0.7, rho_hi = 3.0, k_lo = 0.5, k_hi = 5.0, frequency = 50.0;
    int rho_n = 20, k_n = 20;
    auto* mucr_cmd = app.add_subcommand("mucr", "mu_cr over a (rho, k) grid as CSV");
    mucr_cmd->add_option("--rho-min", rho_lo);
    mucr_cmd->add_option("--rho-max", rho_hi);
    mucr_cmd->add_option("--rho-count", rho_n);
    mucr_cmd->add_option("--k-min", k_lo);
    mucr_cmd->add_option("--k-max", k_hi);
    mucr_cmd->add_option("--k-count", k_n);
    mucr_cmd->add_option("--frequency", frequency, "Nominal frequency [Hz]");

    int random_m = 0;
    bool nonuniform_k = false;
    auto* oracle_cmd = app.add_subcommand("oracle", "Compare per-mode quintic roots with eig(A)");
    oracle_cmd->add_option("input", input, "Network JSON document");
    oracle_cmd->add_option("--random", random_m, "Use a random connected network with this many inverters");
    oracle_cmd->add_flag("--nonuniform-k", nonuniform_k, "Break the uniform m/n hypothesis (random networks)");

    double rho = 1.4, k = 1.0, mu_lo = 60.0, mu_hi = 1000.0;
    int rl_count = 100;
    auto* rl_cmd = app.add_subcommand("rootlocus", "Roots of the per-mode quintic over a mu range as CSV");
    rl_cmd->add_option("--rho", rho);
    rl_cmd->add_option("--k", k);
    rl_cmd->add_option("--frequency", frequency, "Nominal frequency [Hz]");
    rl_cmd->add_option("--mu-min", mu_lo);
    rl_cmd->add_option("--mu-max", mu_hi);
    rl_cmd->add_option("--count", rl_count);

    std::string bus;
    double angle = 0.01, horizon = 2.0, dt = 1e-3;
    auto* trace_cmd = app.add_subcommand("trace", "Linear time response to an angle kick as CSV");
    trace_cmd->add_option("input", input, "Network JSON document")->required();
    trace_cmd->add_option("--bus", bus, "Inverter bus receiving the kick")->required();
    trace_cmd->add_option("--angle", angle, "Initial angle deviation [rad]");
    trace_cmd->add_option("--horizon", horizon, "Simulated time [s]");
    trace_cmd->add_option("--dt", dt, "Output step [s]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitInvalid;
    }
    if (omega_opt->count() > 0) g.omega_c = omega_c;

    try {
        if (*analyze_cmd) return cmd_analyze(g, input);
        if (*sweep_cmd) return cmd_sweep(g, input, param, from, to, count);
        if (*mucr_cmd) return cmd_mucr(g, rho_lo, rho_hi, rho_n, k_lo, k_hi, k_n, frequency);
        if (*oracle_cmd) return cmd_oracle(g, input, random_m, nonuniform_k);
        if (*rl_cmd) return cmd_rootlocus(g, rho, k, frequency, mu_lo, mu_hi, rl_count);
        if (*trace_cmd) return cmd_trace(g, input, bus, angle, horizon, dt);
    } catch (const ParseError& e) {
        std::cerr << e.what() << '\n';
        return kExitInvalid;
    } catch (const ValidationError& e) {
        std::cerr << e.what() << '\n';
        return kExitInvalid;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const ConsistencyError& e) {
        std::cerr << "internal consistency failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitInvalid;
}
