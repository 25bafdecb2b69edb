/*
Key agreement from jointly Gaussian pairs. Terminal A quantizes X into 2^m
equiprobable cells (uniform symbol, so the layered key machinery applies);
code construction sees a degraded side channel (Y quantized into k_y cells,
the safe direction), while terminal B decodes with exact Gaussian densities.
*/

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "polarsc/gaussian.hpp"
#include "polarsc/keygen.hpp"
#include "polarsc/layered.hpp"

namespace polarsc {

struct GaussianKeyModel {
    double rho = 0.0;
    int m = 1;          // bit layers: X~ has 2^m cells
    Quantizer x_quant;  // cell index = terminal A's symbol (LSB-first layers)
    Quantizer y_quant;  // construction-side discretization of Y
    LayeredSource discretized;  // joint (X~ cell, Y~ cell) masses
};

namespace detail {

// P(X in x-cell, Y in y-cell) for a standard bivariate normal pair.
inline double bivariate_cell_mass(const Quantizer& xq, int xc, const Quantizer& yq, int yc, double rho) {
    const double s = std::sqrt(1.0 - rho * rho);
    const double x_lo = xq.boundaries[xc];
    const double x_hi = xq.boundaries[xc + 1];
    auto strip = [&](double y) {
        const double hi = std::isinf(x_hi) ? 1.0 : normal_cdf((x_hi - rho * y) / s);
        const double lo = std::isinf(x_lo) ? 0.0 : normal_cdf((x_lo - rho * y) / s);
        return normal_pdf(y) * (hi - lo);
    };
    const double y_lo = std::isinf(yq.boundaries[yc]) ? -13.0 : yq.boundaries[yc];
    const double y_hi = std::isinf(yq.boundaries[yc + 1]) ? 13.0 : yq.boundaries[yc + 1];
    return adaptive_quadrature(strip, y_lo, y_hi, 1e-13);
}

}  // namespace detail

inline GaussianKeyModel build_gaussian_key_model(double rho, int m, int k_y = 64) {
    if (std::abs(rho) >= 1.0) throw std::invalid_argument("gaussian key model: |rho| must be < 1");
    if (m < 1 || m > 8) throw std::invalid_argument("gaussian key model: m outside [1, 8]");
    if (k_y < 2) throw std::invalid_argument("gaussian key model: k_y must be >= 2");
    const int cells = 1 << m;
    Quantizer xq = build_quantizer(cells);
    Quantizer yq = build_quantizer(k_y);
    std::vector<LayeredEntry> entries;
    entries.reserve(static_cast<std::size_t>(cells) * k_y);
    double total = 0.0;
    for (int xc = 0; xc < cells; ++xc)
        for (int yc = 0; yc < k_y; ++yc) {
            const double mass = detail::bivariate_cell_mass(xq, xc, yq, yc, rho);
            entries.push_back({static_cast<std::uint32_t>(xc), static_cast<std::uint64_t>(yc), mass});
            total += mass;
        }
    for (LayeredEntry& e : entries) e.mass /= total;
    return GaussianKeyModel{rho, m, std::move(xq), std::move(yq), LayeredSource(m, std::move(entries))};
}

// Exact-density posterior log-ratio of bit `layer` of the X cell given the
// real-valued observation y and the already-decoded lower bits.
inline double gaussian_layer_llr(const GaussianKeyModel& model, double y, int layer,
                                 std::uint32_t prefix) {
    const double s = std::sqrt(1.0 - model.rho * model.rho);
    const std::uint32_t prefix_mask = (1u << (layer - 1)) - 1u;
    double mass[2] = {0.0, 0.0};
    const int cells = 1 << model.m;
    for (int c = 0; c < cells; ++c) {
        if ((static_cast<std::uint32_t>(c) & prefix_mask) != prefix) continue;
        const double hi = std::isinf(model.x_quant.boundaries[c + 1])
                              ? 1.0
                              : detail::normal_cdf((model.x_quant.boundaries[c + 1] - model.rho * y) / s);
        const double lo = std::isinf(model.x_quant.boundaries[c])
                              ? 0.0
                              : detail::normal_cdf((model.x_quant.boundaries[c] - model.rho * y) / s);
        mass[(c >> (layer - 1)) & 1] += hi - lo;
    }
    if (mass[1] <= 0.0) return kLlrClamp;
    if (mass[0] <= 0.0) return -kLlrClamp;
    return std::clamp(std::log(mass[0] / mass[1]), -kLlrClamp, kLlrClamp);
}

// Terminal B with the true channel: onion-peeling recovery of the key from
// the public material and the unquantized observations.
inline std::vector<BitVec> recover_at_b_gaussian(const LayeredSpec& spec, const GaussianKeyModel& model,
                                                 std::span<const double> y,
                                                 const std::vector<BitVec>& public_w) {
    if (static_cast<int>(public_w.size()) != spec.m)
        throw std::invalid_argument("recover_at_b_gaussian: layer count mismatch");
    std::vector<std::uint32_t> prefix(y.size(), 0);
    std::vector<BitVec> key_hat;
    key_hat.reserve(spec.m);
    ScDecoder decoder(spec.specs.empty() ? 0 : spec.specs[0].n);
    for (int layer = 1; layer <= spec.m; ++layer) {
        const CodeSpec& code = spec.specs[layer - 1];
        if (y.size() != code.block_length())
            throw std::invalid_argument("recover_at_b_gaussian: block length mismatch");
        LlrVector llr;
        llr.values.resize(y.size());
        for (std::size_t t = 0; t < y.size(); ++t)
            llr.values[t] = gaussian_layer_llr(model, y[t], layer, prefix[t]);
        const BitVec& plane = decoder.decode(llr, code, public_w[layer - 1]);
        for (std::size_t t = 0; t < y.size(); ++t)
            prefix[t] |= static_cast<std::uint32_t>(plane[t]) << (layer - 1);
        const BitVec& u = decoder.u_hat();
        BitVec kbits;
        kbits.reserve(u.size() - code.selected.size());
        std::size_t sel_pos = 0;
        for (std::uint32_t j = 0; j < u.size(); ++j) {
            if (sel_pos < code.selected.size() && code.selected[sel_pos] == j)
                ++sel_pos;
            else
                kbits.push_back(u[j]);
        }
        key_hat.push_back(std::move(kbits));
    }
    return key_hat;
}

struct GaussianKeyRun {
    double public_rate = 0.0;
    double key_rate = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t key_mismatches = 0;
};

// Monte Carlo key agreement over the true Gaussian channel: construction on
// the discretized model, recovery with exact densities.
inline GaussianKeyRun run_gaussian_keygen(const GaussianKeyModel& model, const LayeredSpec& spec,
                                          std::uint64_t trials, std::uint64_t seed) {
    const std::size_t block = spec.specs.empty() ? 0 : spec.specs[0].block_length();
    GaussianKeyRun run;
    run.trials = trials;
    for (const CodeSpec& c : spec.specs) run.public_rate += c.rate();
    run.key_rate = model.m - run.public_rate;
    std::vector<std::uint32_t> symbols(block);
    std::vector<double> ys(block);
    for (std::uint64_t t = 0; t < trials; ++t) {
        CounterRng rng(seed, t);
        const double s = std::sqrt(1.0 - model.rho * model.rho);
        for (std::size_t i = 0; i < block; ++i) {
            const double u1 = std::max(rng.next_double(), 1e-300);
            const double u2 = rng.next_double();
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double x = r * std::cos(6.283185307179586 * u2);
            const double z = r * std::sin(6.283185307179586 * u2);
            ys[i] = model.rho * x + s * z;
            symbols[i] = static_cast<std::uint32_t>(
                std::upper_bound(model.x_quant.boundaries.begin() + 1, model.x_quant.boundaries.end() - 1,
                                 x) -
                (model.x_quant.boundaries.begin() + 1));
        }
        KeyMaterial km = derive_at_a(spec, symbols);
        auto key_hat = recover_at_b_gaussian(spec, model, ys, km.public_w);
        run.key_mismatches += (key_hat != km.key_k);
    }
    return run;
}

}  // namespace polarsc
