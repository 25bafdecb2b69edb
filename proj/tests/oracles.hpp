/*
Test-only oracles and random-instance generators. Everything here is kept
independent of the implementation paths it checks: the transform matrix is
built as an explicit Kronecker power and decoder posteriors come from
exhaustive enumeration over source words.
*/

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "polarsc/codec.hpp"
#include "polarsc/joint_source.hpp"
#include "polarsc/layered.hpp"
#include "polarsc/rng.hpp"

namespace testutil {

using polarsc::BitVec;
using polarsc::CounterRng;
using polarsc::JointSource;
using polarsc::SymbolMass;

// Random valid source with the given maximum side-alphabet size. A slice of
// the masses is zeroed now and then so pruning paths stay exercised.
inline JointSource random_source(CounterRng& rng, int max_alphabet, double min_mass = 0.0) {
    const int size = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(max_alphabet));
    std::vector<SymbolMass> entries;
    double total = 0.0;
    for (int y = 0; y < size; ++y) {
        double p0 = -std::log(1.0 - rng.next_double());
        double p1 = -std::log(1.0 - rng.next_double());
        if (min_mass == 0.0 && rng.next_u64() % 8 == 0) p0 = 0.0;
        if (min_mass == 0.0 && rng.next_u64() % 8 == 0) p1 = 0.0;
        entries.push_back({static_cast<std::uint64_t>(y), p0, p1});
        total += p0 + p1;
    }
    if (total == 0.0) {
        entries[0].p0 = entries[0].p1 = 0.5;
        total = 1.0;
    }
    for (auto& e : entries) {
        e.p0 /= total;
        e.p1 /= total;
    }
    if (min_mass > 0.0) {
        // Mix toward uniform so every posterior stays far from 0 and 1 and the
        // LLR clamp never engages; used by the enumeration-oracle tests.
        const double floor_mass = min_mass;
        double rescale = 1.0 - 2.0 * size * floor_mass;
        for (auto& e : entries) {
            e.p0 = e.p0 * rescale + floor_mass;
            e.p1 = e.p1 * rescale + floor_mass;
        }
    }
    return JointSource(std::move(entries));
}

// Random valid 2^m-ary source over a side alphabet of the given size.
inline polarsc::LayeredSource random_layered(CounterRng& rng, int m, int side_size) {
    std::vector<polarsc::LayeredEntry> entries;
    double total = 0.0;
    for (std::uint32_t x = 0; x < (1u << m); ++x)
        for (std::uint64_t y = 0; y < static_cast<std::uint64_t>(side_size); ++y) {
            double mass = -std::log(1.0 - rng.next_double());
            if (rng.next_u64() % 8 == 0) mass = 0.0;
            entries.push_back({x, y, mass});
            total += mass;
        }
    if (total == 0.0) {
        entries[0].mass = 1.0;
        total = 1.0;
    }
    for (auto& e : entries) e.mass /= total;
    return polarsc::LayeredSource(m, std::move(entries));
}

// Uniform-X variant for key agreement: each symbol value gets total mass 2^-m
// spread over the side alphabet.
inline polarsc::LayeredSource random_layered_uniform_x(CounterRng& rng, int m, int side_size) {
    std::vector<polarsc::LayeredEntry> entries;
    for (std::uint32_t x = 0; x < (1u << m); ++x) {
        std::vector<double> w(side_size);
        double total = 0.0;
        for (auto& v : w) {
            v = -std::log(1.0 - rng.next_double());
            total += v;
        }
        for (std::uint64_t y = 0; y < static_cast<std::uint64_t>(side_size); ++y)
            entries.push_back({x, y, w[y] / total * std::ldexp(1.0, -m)});
    }
    return polarsc::LayeredSource(m, std::move(entries));
}

// Explicit n-th Kronecker power of [[1,1],[0,1]] as a row-major bit matrix.
inline std::vector<std::vector<std::uint8_t>> kronecker_transform_matrix(int n) {
    std::vector<std::vector<std::uint8_t>> g{{1}};
    for (int t = 0; t < n; ++t) {
        const std::size_t m = g.size();
        std::vector<std::vector<std::uint8_t>> next(2 * m, std::vector<std::uint8_t>(2 * m, 0));
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < m; ++c) {
                if (!g[r][c]) continue;
                next[r][c] = 1;          // top-left F block (1)
                next[r][c + m] = 1;      // top-right F block (1)
                next[r + m][c + m] = 1;  // bottom-right F block (1)
            }
        g = std::move(next);
    }
    return g;
}

inline BitVec matrix_apply(const std::vector<std::vector<std::uint8_t>>& g, const BitVec& x) {
    BitVec out(x.size(), 0);
    for (std::size_t r = 0; r < g.size(); ++r) {
        std::uint8_t acc = 0;
        for (std::size_t c = 0; c < g[r].size(); ++c) acc ^= static_cast<std::uint8_t>(g[r][c] & x[c]);
        out[r] = acc;
    }
    return out;
}

inline double u_weight(const std::pair<double, double>& w, std::uint8_t bit) {
    return bit ? w.second : w.first;
}

// P(u_j = 0 | weights, u^{j-1} = prefix) by summing the weights of all source
// words whose transform starts with the given prefix. Weights are per-symbol
// posteriors (w0, w1); the decoder under test must reproduce these exactly up
// to float error.
inline double enumeration_posterior(const std::vector<std::pair<double, double>>& weights,
                                    const BitVec& prefix, std::size_t j) {
    const std::size_t block = weights.size();
    const int n = static_cast<int>(std::log2(static_cast<double>(block)) + 0.5);
    const auto g = kronecker_transform_matrix(n);
    double mass0 = 0.0;
    double mass1 = 0.0;
    for (std::uint64_t word = 0; word < (std::uint64_t{1} << block); ++word) {
        BitVec u(block);
        for (std::size_t t = 0; t < block; ++t) u[t] = (word >> t) & 1u;
        bool match = true;
        for (std::size_t t = 0; t < j && match; ++t) match = (u[t] == prefix[t]);
        if (!match) continue;
        const BitVec x = matrix_apply(g, u);  // involution: x = G u
        double w = 1.0;
        for (std::size_t t = 0; t < block; ++t) w *= u_weight(weights[t], x[t]);
        (u[j] ? mass1 : mass0) += w;
    }
    return mass0 / (mass0 + mass1);
}

// Per-symbol posterior pairs implied by an LLR vector.
inline std::vector<std::pair<double, double>> weights_from_llrs(const std::vector<double>& llrs) {
    std::vector<std::pair<double, double>> w;
    w.reserve(llrs.size());
    for (double l : llrs) {
        const double p0 = 1.0 / (1.0 + std::exp(-l));
        w.push_back({p0, 1.0 - p0});
    }
    return w;
}

}  // namespace testutil
