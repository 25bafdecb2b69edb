/*
Secret-key agreement from correlated sources with uniform X on F_2^m:
terminal A publishes the unreliable transform positions of each bit layer,
both terminals keep the reliable rest as key bits. Exact secrecy auditing by
enumeration at small blocklengths.
*/

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "polarsc/layered.hpp"

namespace polarsc {

class non_uniform_marginal_error : public std::invalid_argument {
   public:
    explicit non_uniform_marginal_error(const std::string& what) : std::invalid_argument(what) {}
};

struct KeyMaterial {
    std::vector<BitVec> public_w;  // per layer, selected indices ascending
    std::vector<BitVec> key_k;     // per layer, complement indices ascending
    double public_rate = 0.0;      // bits per source symbol
    double key_rate = 0.0;
};

inline constexpr double kUniformMarginalTolerance = 1e-9;

// Per-layer construction with the public set selected by the given mode; the
// key set is the complement. Requires a uniform X-marginal; a skewed X must
// be relabeled or quantized to uniform first.
inline LayeredSpec keygen_construct(const LayeredSource& ls, int n, BinParams p,
                                    const SelectionMode& mode) {
    if (ls.x_marginal_uniformity_gap() > kUniformMarginalTolerance)
        throw non_uniform_marginal_error("keygen_construct: X marginal deviates from uniform by " +
                                         std::to_string(ls.x_marginal_uniformity_gap()));
    LayeredSpec spec;
    spec.m = ls.layers();
    spec.specs.reserve(spec.m);
    for (int layer = 1; layer <= ls.layers(); ++layer)
        spec.specs.push_back(select_indices(construct_degraded(layer_marginal(ls, layer), n, p), mode));
    return spec;
}

// Key-rate split variant per the construction rate budget: the public set of
// each layer is the rate-mode selection at (layer entropy bound + eps).
inline LayeredSpec keygen_construct(const LayeredSource& ls, int n, BinParams p, double eps) {
    if (ls.x_marginal_uniformity_gap() > kUniformMarginalTolerance)
        throw non_uniform_marginal_error("keygen_construct: X marginal deviates from uniform by " +
                                         std::to_string(ls.x_marginal_uniformity_gap()));
    return layered_construct(ls, n, p, eps);
}

// Terminal A: W and K are complementary restrictions of each layer transform.
inline KeyMaterial derive_at_a(const LayeredSpec& spec, std::span<const std::uint32_t> x) {
    KeyMaterial out;
    out.public_w.reserve(spec.m);
    out.key_k.reserve(spec.m);
    std::size_t public_bits = 0;
    std::size_t key_bits = 0;
    for (int layer = 1; layer <= spec.m; ++layer) {
        const CodeSpec& code = spec.specs[layer - 1];
        if (x.size() != code.block_length()) throw std::invalid_argument("derive_at_a: block length mismatch");
        const BitVec u = polar_transform(bit_plane(x, layer));
        BitVec w;
        BitVec k;
        w.reserve(code.selected.size());
        k.reserve(u.size() - code.selected.size());
        std::size_t sel_pos = 0;
        for (std::uint32_t j = 0; j < u.size(); ++j) {
            if (sel_pos < code.selected.size() && code.selected[sel_pos] == j) {
                w.push_back(u[j]);
                ++sel_pos;
            } else {
                k.push_back(u[j]);
            }
        }
        public_bits += w.size();
        key_bits += k.size();
        out.public_w.push_back(std::move(w));
        out.key_k.push_back(std::move(k));
    }
    out.public_rate = static_cast<double>(public_bits) / static_cast<double>(x.size());
    out.key_rate = static_cast<double>(key_bits) / static_cast<double>(x.size());
    return out;
}

// Terminal B: onion-peeling decode with W as the payload; the key estimate is
// the decoded transform restricted to the key sets.
inline std::vector<BitVec> recover_at_b(const LayeredSpec& spec, const LayeredSource& ls,
                                        std::span<const std::uint64_t> y,
                                        const std::vector<BitVec>& public_w) {
    if (static_cast<int>(public_w.size()) != spec.m)
        throw std::invalid_argument("recover_at_b: layer count mismatch");
    LayeredDecoder decoder(ls, spec);
    std::vector<BitVec> key_hat;
    key_hat.reserve(spec.m);
    std::vector<BitVec> planes;
    planes.reserve(spec.m);
    for (int layer = 1; layer <= spec.m; ++layer) {
        const CodeSpec& code = spec.specs[layer - 1];
        CompressedBlock block{code.block_length(), public_w[layer - 1]};
        planes.push_back(decoder.decode_layer(layer, block, y, planes));
        const BitVec& u = decoder.layer_u_hat(layer);
        BitVec k;
        k.reserve(u.size() - code.selected.size());
        std::size_t sel_pos = 0;
        for (std::uint32_t j = 0; j < u.size(); ++j) {
            if (sel_pos < code.selected.size() && code.selected[sel_pos] == j)
                ++sel_pos;
            else
                k.push_back(u[j]);
        }
        key_hat.push_back(std::move(k));
    }
    return key_hat;
}

struct SecrecyAudit {
    double key_entropy_bits = 0.0;
    double mi_key_public_bits = 0.0;
    std::size_t key_bits = 0;
    std::size_t public_bits = 0;
};

// Exact joint distribution of (K, W) by enumerating every x-block under the
// uniform marginal. Needs N*m <= 16.
inline SecrecyAudit secrecy_audit(const LayeredSource& ls, const LayeredSpec& spec) {
    if (ls.x_marginal_uniformity_gap() > kUniformMarginalTolerance)
        throw non_uniform_marginal_error("secrecy_audit: X marginal deviates from uniform");
    const std::size_t block = spec.specs.empty() ? 0 : spec.specs[0].block_length();
    const std::size_t total_bits = block * static_cast<std::size_t>(spec.m);
    if (total_bits > 16)
        throw alphabet_budget_error("secrecy_audit: N*m = " + std::to_string(total_bits) + " exceeds 16");

    SecrecyAudit audit;
    for (const CodeSpec& c : spec.specs) {
        audit.public_bits += c.selected.size();
        audit.key_bits += c.block_length() - c.selected.size();
    }
    std::vector<double> pk(std::size_t{1} << audit.key_bits, 0.0);
    std::vector<double> pw(std::size_t{1} << audit.public_bits, 0.0);
    std::vector<double> pkw((std::size_t{1} << audit.key_bits) << audit.public_bits, 0.0);

    const double weight = std::ldexp(1.0, -static_cast<int>(total_bits));
    std::vector<std::uint32_t> x(block);
    const std::uint64_t words = std::uint64_t{1} << total_bits;
    for (std::uint64_t word = 0; word < words; ++word) {
        for (std::size_t t = 0; t < block; ++t)
            x[t] = static_cast<std::uint32_t>((word >> (t * spec.m)) & ((1u << spec.m) - 1u));
        std::uint64_t kbitsv = 0;
        std::uint64_t wbitsv = 0;
        std::size_t kpos = 0;
        std::size_t wpos = 0;
        for (int layer = 1; layer <= spec.m; ++layer) {
            const CodeSpec& code = spec.specs[layer - 1];
            const BitVec u = polar_transform(bit_plane(x, layer));
            std::size_t sel_pos = 0;
            for (std::uint32_t j = 0; j < u.size(); ++j) {
                if (sel_pos < code.selected.size() && code.selected[sel_pos] == j) {
                    wbitsv |= static_cast<std::uint64_t>(u[j]) << wpos++;
                    ++sel_pos;
                } else {
                    kbitsv |= static_cast<std::uint64_t>(u[j]) << kpos++;
                }
            }
        }
        pk[kbitsv] += weight;
        pw[wbitsv] += weight;
        pkw[(kbitsv << audit.public_bits) | wbitsv] += weight;
    }

    auto entropy = [](const std::vector<double>& p) {
        detail::KahanSum acc;
        for (double v : p)
            if (v > 0.0) acc.add(-v * std::log2(v));
        return acc.value();
    };
    audit.key_entropy_bits = entropy(pk);
    audit.mi_key_public_bits = entropy(pk) + entropy(pw) - entropy(pkw);
    return audit;
}

}  // namespace polarsc
