#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "microgrid/netmodel.hpp"

namespace microgrid {

struct RandomNetworkOptions {
    int inverters = 4;
    int passive_buses = 0;
    double extra_edge_probability = 0.3;
    double rho_min = 0.3, rho_max = 3.0;
    double k_min = 0.5, k_max = 5.0;
    double m_pct_min = 0.2, m_pct_max = 3.0;
    double x_min = 0.02, x_max = 0.5;
    double omega_c = kDefaultCutoffRadPerSec;
    bool nonuniform_k = false;  // doubles the last inverter's voltage droop
};

/// Connected random network with uniform rho and k: a random spanning tree over
/// all buses plus extra edges. Same seed, same network.
inline NetworkModel random_network(std::uint64_t seed, const RandomNetworkOptions& opt = {}) {
    std::mt19937_64 rng(seed);
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

    NetworkModel model;
    model.base = {230.0, 10e3, 50.0};
    model.omega_c = opt.omega_c;
    const double rho = uniform(opt.rho_min, opt.rho_max);
    const double k = uniform(opt.k_min, opt.k_max);

    const int total = opt.inverters + opt.passive_buses;
    for (int i = 0; i < total; ++i) {
        const bool inverter = i < opt.inverters;
        const std::string id = std::to_string(i + 1);
        model.buses.push_back({id, inverter ? BusKind::inverter : BusKind::passive});
        if (inverter) {
            const double m = uniform(opt.m_pct_min, opt.m_pct_max) / 100.0;
            model.inverters.push_back({id, m, m / k, 1.0 / opt.omega_c});
        }
    }
    if (opt.nonuniform_k && !model.inverters.empty()) model.inverters.back().n *= 2.0;

    auto add_line = [&](int a, int b) {
        const double x = uniform(opt.x_min, opt.x_max);
        model.lines.push_back({model.buses[static_cast<std::size_t>(a)].id,
                               model.buses[static_cast<std::size_t>(b)].id, rho * x, x, std::nullopt});
    };
    for (int i = 1; i < total; ++i) add_line(std::uniform_int_distribution<int>(0, i - 1)(rng), i);
    for (int a = 0; a < total; ++a) {
        for (int b = a + 1; b < total; ++b) {
            bool present = false;
            for (const auto& l : model.lines)
                if (l.joins(model.buses[static_cast<std::size_t>(a)].id, model.buses[static_cast<std::size_t>(b)].id))
                    present = true;
            if (!present && uniform(0.0, 1.0) < opt.extra_edge_probability) add_line(a, b);
        }
    }
    refresh_ratios(model);
    return model;
}

}  // namespace microgrid
