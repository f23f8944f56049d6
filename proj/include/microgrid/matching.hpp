#pragma once

// Pairing two equally sized multisets of complex numbers so that the largest
// pairwise distance is small.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

namespace microgrid {

struct Matching {
    std::vector<std::size_t> pair;  // pair[i] = index into the second set
    double max_distance = 0.0;
};

namespace detail {

// Min-cost perfect assignment (Hungarian method, O(n^3)); cost is row-major n x n.
inline std::vector<std::size_t> hungarian(const std::vector<double>& cost, std::size_t n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> assignment(n);
    for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
    return assignment;
}

}  // namespace detail

/// Greedy nearest neighbour in order of the first set; when the greedy result
/// exceeds `tolerance`, refines with an optimal assignment on squared distance.
inline Matching match_multisets(const std::vector<std::complex<double>>& a,
                                const std::vector<std::complex<double>>& b, double tolerance) {
    const std::size_t n = a.size();
    Matching out;
    if (n != b.size()) {
        out.max_distance = std::numeric_limits<double>::infinity();
        return out;
    }
    out.pair.assign(n, 0);
    std::vector<bool> taken(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = n;
        for (std::size_t j = 0; j < n; ++j)
            if (!taken[j] && (best == n || std::abs(a[i] - b[j]) < std::abs(a[i] - b[best]))) best = j;
        taken[best] = true;
        out.pair[i] = best;
        out.max_distance = std::max(out.max_distance, std::abs(a[i] - b[best]));
    }
    if (out.max_distance <= tolerance) return out;

    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = std::norm(a[i] - b[j]);
    auto refined = detail::hungarian(cost, n);
    double refined_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) refined_max = std::max(refined_max, std::abs(a[i] - b[refined[i]]));
    if (refined_max < out.max_distance) {
        out.pair = std::move(refined);
        out.max_distance = refined_max;
    }
    return out;
}

}  // namespace microgrid
