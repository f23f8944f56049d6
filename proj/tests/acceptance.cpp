// Acceptance checks, one per criterion. `acceptance N` runs criterion N,
// `acceptance` runs all. Prints one [PASS]/[FAIL] line each; exit status is the
// number of failures.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"

using namespace microgrid;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const double kW0 = 2.0 * std::numbers::pi * 50.0;

NetworkModel trial_network(std::uint64_t seed) {
    RandomNetworkOptions opt;
    opt.inverters = 2 + static_cast<int>(seed % 7);  // 2..8
    opt.passive_buses = static_cast<int>(seed % 3);
    return random_network(seed, opt);
}

VectorXd droops(const NetworkModel& model) {
    const auto d = model.frequency_droops();
    return Eigen::Map<const VectorXd>(d.data(), static_cast<Index>(d.size()));
}

// Reference spectrum of the four-bus system.
const double kReferenceMu[3] = {9.68, 110.19, 215.23};

Outcome ac1() {
    const auto t0 = Clock::now();
    const auto model = fixtures::four_bus();
    const auto s = weighted_spectrum(model, susceptance_set(model));
    const double elapsed = seconds_since(t0);

    const double scale = kReferenceMu[2] / s.mu(3);
    double worst = 0.0;
    for (int i = 0; i < 2; ++i)
        worst = std::max(worst, std::abs(scale * s.mu(i + 1) - kReferenceMu[i]) / kReferenceMu[i]);
    const bool ok = s.is_trivial(0) && worst < 0.015 && elapsed < 1.0;
    return {ok, fmt("mu = {%.4f, %.4f, %.4f}; calibration x%.5f; other two within %.3f%% (limit 1.5%%); %.3f s",
                    s.mu(1), s.mu(2), s.mu(3), scale, 100.0 * worst, elapsed)};
}

Outcome ac2() {
    const auto model = fixtures::four_bus();
    const auto sus = susceptance_set(model);
    const auto s = weighted_spectrum(model, sus);
    VectorXd reference(4);
    reference << -0.018, 0.056, -0.725, 0.687;
    const VectorXd u = s.U.col(3);
    const double cosine = std::abs(u.dot(reference)) / (u.norm() * reference.norm());

    const auto clusters = extract_clusters(s, model.inverter_ids(), inverter_couplings(model, sus.reduced));
    const auto& top = clusters.front();
    std::string members;
    for (const auto& m : top.members) members += (members.empty() ? "" : ",") + m.bus_id;
    const bool ok = cosine > 0.999 && members == "3,4" && top.critical_lines == std::vector<std::string>{"3-4"};
    return {ok, fmt("|cos| = %.6f; members {%s}; critical line %s", cosine, members.c_str(),
                    top.critical_lines.empty() ? "-" : top.critical_lines.front().c_str())};
}

Outcome ac3() {
    const double mu_cr = mu_critical({1.4, 1.0, 1.0 / kDefaultCutoffRadPerSec, kW0});
    const bool ok = std::abs(mu_cr - 195.0) <= 0.02 * 195.0;
    return {ok, fmt("mu_cr(rho=1.4, k=1, omega_c=%.2f rad/s) = %.4f (target 195 +- 2%%)", kDefaultCutoffRadPerSec,
                    mu_cr)};
}

Outcome ac4() {
    const auto base = analyze(fixtures::four_bus());
    const auto shorter = analyze(with_line_length(fixtures::four_bus(), "3-4", 5.0));
    const bool ok = base.unstable && base.oracle_unstable && !shorter.unstable && !shorter.oracle_unstable;
    return {ok, fmt("base: max mu %.2f vs mu_cr %.2f, max Re eig(A) %.3f; l34=5 km: max mu %.2f, max Re %.3g",
                    base.spectrum.max_mu(), base.mu_cr, base.oracle.max_real_eigenvalue, shorter.spectrum.max_mu(),
                    shorter.oracle.max_real_eigenvalue)};
}

Outcome ac5() {
    const auto model = fixtures::four_bus();
    double slowest = 0.0;
    auto timed = [&](const char* param, double lo, double hi) {
        const auto t0 = Clock::now();
        auto r = sweep(model, parse_sweep_spec(param), lo, hi, 50);
        slowest = std::max(slowest, seconds_since(t0));
        return r;
    };

    const auto l34 = timed("line-length:3-4", 1.0, 10.0);
    const bool l34_ok = l34.stability_crossings.size() == 1 && std::abs(l34.stability_crossings[0].value - 3.3) <= 0.3;

    const auto l23 = timed("line-length:2-3", 5.0, 50.0);
    const bool l23_ok = l23.stability_crossings.empty();

    const auto m1 = timed("droop-m:1", 0.1, 5.0);
    bool m1_never_stable = true;
    for (bool st : m1.stable) m1_never_stable = m1_never_stable && !st;
    double m1_cross = NAN;
    for (const auto& c : m1.mode_crossings)
        if (c.mode == 2) m1_cross = c.value;  // second largest of four
    const bool m1_ok = m1_never_stable && std::abs(m1_cross - 3.0) <= 0.5;

    const auto m3 = timed("droop-m:3", 0.1, 1.0);
    double m3_cross = NAN;
    for (const auto& c : m3.stability_crossings)
        if (c.value < 1.0) m3_cross = c.value;
    const bool m3_ok = !std::isnan(m3_cross) && m3.stable.front() && !m3.stable.back();

    const bool ok = l34_ok && l23_ok && m1_ok && m3_ok && slowest < 10.0;
    return {ok, fmt("l34 crossing %.4f km; l23 crossings %zu; m1 never stable=%d, mode crossing %.4f%%; "
                    "m3 stable below %.4f%%; slowest sweep %.3f s",
                    l34.stability_crossings.empty() ? NAN : l34.stability_crossings[0].value,
                    l23.stability_crossings.size(), m1_never_stable ? 1 : 0, m1_cross, m3_cross, slowest)};
}

Outcome ac6() {
    const auto t0 = Clock::now();
    int passed = 0;
    double worst_rel = 0.0, worst_vec = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto model = trial_network(seed);
        const auto s = weighted_spectrum(model, susceptance_set(model));
        const auto rep = equivalence_check(model, s, CharPolyModel::from_network(model));
        if (rep.status == CheckStatus::pass) ++passed;
        worst_rel = std::max(worst_rel, rep.max_distance / rep.spectral_radius);
        worst_vec = std::max(worst_vec, rep.max_eigenvector_distance);
    }
    const double elapsed = seconds_since(t0);
    const bool ok = passed == 100 && elapsed < 30.0;
    return {ok, fmt("%d/100 networks match; worst relative root distance %.2e; worst eigenvector cosine distance "
                    "%.2e; %.2f s",
                    passed, worst_rel, worst_vec, elapsed)};
}

Outcome ac7() {
    std::mt19937_64 rng(2024);
    int violations = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto model = trial_network(seed);
        const int m = static_cast<int>(model.inverter_count());
        std::uniform_int_distribution<int> pick(0, m - 1);
        const int a = pick(rng);
        int b = pick(rng);
        while (b == a) b = pick(rng);
        const double x = std::uniform_real_distribution<double>(0.02, 1.0)(rng);
        try {
            weyl_bound_check(model, model.inverters[static_cast<std::size_t>(a)].bus_id,
                             model.inverters[static_cast<std::size_t>(b)].bus_id, x);
        } catch (const ConsistencyError&) {
            ++violations;
        }
    }
    return {violations == 0, fmt("%d violations over 100 (network, added line) pairs", violations)};
}

Outcome ac8() {
    int psd_bad = 0, trivial_bad = 0, sandwich_bad = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto model = trial_network(seed);
        const auto sus = susceptance_set(model);
        const auto s = weighted_spectrum(model, sus);
        const VectorXd m = droops(model);
        const double top = s.max_mu();

        const VectorXd d = m.cwiseSqrt();
        Eigen::SelfAdjointEigenSolver<MatrixXd> sym(d.asDiagonal() * sus.prime * d.asDiagonal());
        if (sym.eigenvalues()(0) < -1e-9 * top) ++psd_bad;

        int trivial = 0;
        for (Index i = 0; i < s.size(); ++i) trivial += s.is_trivial(i) ? 1 : 0;
        if (trivial != 1) ++trivial_bad;

        Eigen::SelfAdjointEigenSolver<MatrixXd> lap(sus.prime);
        for (Index i = 0; i < s.size(); ++i) {
            const double lam = lap.eigenvalues()(i);
            if (s.mu(i) < m.minCoeff() * lam - 1e-9 * top || s.mu(i) > m.maxCoeff() * lam + 1e-9 * top) {
                ++sandwich_bad;
                break;
            }
        }
    }
    const bool ok = psd_bad == 0 && trivial_bad == 0 && sandwich_bad == 0;
    return {ok, fmt("100 trials: PSD failures %d, trivial-count failures %d, sandwich failures %d", psd_bad,
                    trivial_bad, sandwich_bad)};
}

Outcome ac9() {
    const auto t0 = Clock::now();
    const auto s = mu_critical_surface(0.7, 3.0, 20, 0.5, 5.0, 20, 1.0 / kDefaultCutoffRadPerSec, kW0);
    const double elapsed = seconds_since(t0);
    const MuCrRow* low = nullptr;
    for (const auto& r : s.rows)
        if (!std::isnan(r.mu_cr) && (!low || r.mu_cr < low->mu_cr)) low = &r;
    const bool ok = s.failures == 0 && elapsed < 60.0 && s.minimum >= 200.0;
    return {ok, fmt("20x20 grid in %.2f s, %d failed points, minimum mu_cr %.2f at rho=%.3f k=%.3f (required >= 200)",
                    elapsed, s.failures, s.minimum, low ? low->rho : NAN, low ? low->k : NAN)};
}

const std::function<Outcome()> kCriteria[] = {ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8, ac9};

const char* kTitles[] = {"four-bus spectrum",  "critical eigenvector and cluster", "critical mu",
                         "verdict cross-check", "parameter sweeps",                 "eigenvalue equivalence",
                         "line-addition bound", "structural invariants",            "mu_cr surface"};

}  // namespace

int main(int argc, char** argv) {
    int first = 1, last = 9;
    if (argc > 1) {
        first = last = std::atoi(argv[1]);
        if (first < 1 || first > 9) {
            std::cerr << "usage: acceptance [1-9]\n";
            return 2;
        }
    }
    int failures = 0;
    for (int n = first; n <= last; ++n) {
        Outcome o;
        try {
            o = kCriteria[n - 1]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "AC" << n << " " << kTitles[n - 1] << ": " << o.detail
                  << '\n';
        failures += o.pass ? 0 : 1;
    }
    return failures;
}
