/*
Onion-peeling codec for sources on alphabets of size 2^m: the symbol is split
into bit layers (layer 1 = least significant bit), layer i is coded against
side information augmented with the previously decoded layers 1..i-1.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "polarsc/codec.hpp"
#include "polarsc/construction.hpp"
#include "polarsc/joint_source.hpp"

namespace polarsc {

struct LayeredEntry {
    std::uint32_t x = 0;
    std::uint64_t y = 0;
    double mass = 0.0;
};

// Joint distribution of a 2^m-ary symbol X and side symbol Y.
class LayeredSource {
   public:
    LayeredSource(int m, std::vector<LayeredEntry> entries) : m_(m), entries_(std::move(entries)) {
        if (m < 1 || m > 20) throw std::invalid_argument("LayeredSource: m out of range");
        std::sort(entries_.begin(), entries_.end(), [](const LayeredEntry& a, const LayeredEntry& b) {
            return a.y != b.y ? a.y < b.y : a.x < b.x;
        });
        detail::KahanSum total;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const LayeredEntry& e = entries_[i];
            if (e.mass < 0.0 || !std::isfinite(e.mass))
                throw std::invalid_argument("LayeredSource: bad mass");
            if (e.x >> m) throw std::invalid_argument("LayeredSource: symbol exceeds 2^m");
            if (e.y > (std::numeric_limits<std::uint64_t>::max() >> m))
                throw std::invalid_argument("LayeredSource: side id too large for layer pairing");
            if (i > 0 && entries_[i - 1].y == e.y && entries_[i - 1].x == e.x)
                throw std::invalid_argument("LayeredSource: duplicate (x, y)");
            total.add(e.mass);
        }
        if (std::abs(total.value() - 1.0) > kMassTolerance)
            throw std::invalid_argument("LayeredSource: masses sum to " + std::to_string(total.value()));
        std::erase_if(entries_, [](const LayeredEntry& e) { return e.mass == 0.0; });
        const double inv = 1.0 / total.value();
        for (LayeredEntry& e : entries_) e.mass *= inv;
    }

    int layers() const noexcept { return m_; }
    const std::vector<LayeredEntry>& entries() const noexcept { return entries_; }

    // Largest deviation of the X-marginal from the uniform 2^-m.
    double x_marginal_uniformity_gap() const {
        std::vector<double> marg(std::size_t{1} << m_, 0.0);
        for (const LayeredEntry& e : entries_) marg[e.x] += e.mass;
        const double target = std::ldexp(1.0, -m_);
        double gap = 0.0;
        for (double p : marg) gap = std::max(gap, std::abs(p - target));
        return gap;
    }

   private:
    int m_;
    std::vector<LayeredEntry> entries_;
};

// H(X|Y) in bits of the full 2^m-ary symbol.
inline double cond_entropy(const LayeredSource& ls) {
    detail::KahanSum acc;
    std::size_t i = 0;
    const auto& entries = ls.entries();
    while (i < entries.size()) {
        std::size_t j = i;
        detail::KahanSum py;
        while (j < entries.size() && entries[j].y == entries[i].y) py.add(entries[j++].mass);
        for (std::size_t t = i; t < j; ++t)
            if (entries[t].mass > 0.0) acc.add(entries[t].mass * std::log2(py.value() / entries[t].mass));
        i = j;
    }
    return acc.value();
}

// Binary source of layer i (1-based): X = bit i-1 of the symbol, side
// information (Y, X^(1..i-1)) realized as the integer pairing
// id = y * 2^(i-1) + prefix. Higher layers are marginalized out.
inline JointSource layer_marginal(const LayeredSource& ls, int layer) {
    if (layer < 1 || layer > ls.layers()) throw std::invalid_argument("layer_marginal: layer out of range");
    const std::uint32_t prefix_mask = (1u << (layer - 1)) - 1u;
    std::unordered_map<std::uint64_t, std::pair<double, double>> acc;
    acc.reserve(ls.entries().size());
    for (const LayeredEntry& e : ls.entries()) {
        const std::uint64_t id = (e.y << (layer - 1)) | (e.x & prefix_mask);
        auto& cell = acc[id];
        if ((e.x >> (layer - 1)) & 1u)
            cell.second += e.mass;
        else
            cell.first += e.mass;
    }
    std::vector<SymbolMass> entries;
    entries.reserve(acc.size());
    for (const auto& [id, masses] : acc) entries.push_back({id, masses.first, masses.second});
    return JointSource(std::move(entries));
}

// Ordered per-layer code specs; layer 1 corresponds to the least significant
// bit of the symbol.
struct LayeredSpec {
    int m = 0;
    std::vector<CodeSpec> specs;

    double sum_rate() const noexcept {
        double r = 0.0;
        for (const CodeSpec& s : specs) r += s.rate();
        return r;
    }
};

// Per-layer selection mode: either an explicit mode applied to every layer,
// or the rate budget "layer entropy bound + eps" (the corner-point choice).
inline LayeredSpec layered_construct(const LayeredSource& ls, int n, BinParams p, double eps) {
    LayeredSpec out;
    out.m = ls.layers();
    out.specs.reserve(out.m);
    for (int layer = 1; layer <= ls.layers(); ++layer) {
        JointSource marginal = layer_marginal(ls, layer);
        CodeSpec spec = construct_degraded(marginal, n, p);
        double h_bound = 0.0;
        for (const IndexMetric& m_i : spec.metrics) h_bound += m_i.h_upper;
        h_bound /= spec.block_length();
        out.specs.push_back(select_indices(std::move(spec), RateSelection{std::min(1.0, h_bound + eps)}));
    }
    return out;
}

// Bit-plane i (1-based) of a symbol block.
inline BitVec bit_plane(std::span<const std::uint32_t> symbols, int layer) {
    BitVec bits(symbols.size());
    for (std::size_t t = 0; t < symbols.size(); ++t) bits[t] = (symbols[t] >> (layer - 1)) & 1u;
    return bits;
}

inline std::vector<CompressedBlock> layered_compress(const LayeredSpec& spec,
                                                     std::span<const std::uint32_t> symbols) {
    std::vector<CompressedBlock> blocks;
    blocks.reserve(spec.specs.size());
    for (int layer = 1; layer <= spec.m; ++layer)
        blocks.push_back(compress(bit_plane(symbols, layer), spec.specs[layer - 1]));
    return blocks;
}

// Sequential multi-layer decoder. Caches per-layer marginals and their LLR
// tables; safe to reuse across blocks on one thread.
class LayeredDecoder {
   public:
    LayeredDecoder(const LayeredSource& ls, const LayeredSpec& spec) : spec_(&spec) {
        if (ls.layers() != spec.m) throw std::invalid_argument("LayeredDecoder: layer count mismatch");
        llr_tables_.resize(spec.m);
        for (int layer = 1; layer <= spec.m; ++layer) {
            JointSource marginal = layer_marginal(ls, layer);
            auto& table = llr_tables_[layer - 1];
            table.reserve(marginal.alphabet_size());
            for (const SymbolMass& e : marginal.entries()) {
                double llr;
                if (e.p1 == 0.0)
                    llr = kLlrClamp;
                else if (e.p0 == 0.0)
                    llr = -kLlrClamp;
                else
                    llr = std::clamp(std::log(e.p0 / e.p1), -kLlrClamp, kLlrClamp);
                table.emplace(e.id, llr);
            }
        }
        for (const CodeSpec& c : spec.specs)
            decoders_.emplace_back(c.n);
    }

    // Decode one layer given side symbols and the lower bit-planes (decoded
    // estimates in normal operation, true planes in genie-aided measurement).
    // Side pairs never seen in the marginal carry zero information.
    BitVec decode_layer(int layer, const CompressedBlock& block, std::span<const std::uint64_t> y,
                        const std::vector<BitVec>& lower_planes) {
        const CodeSpec& code = spec_->specs[layer - 1];
        LlrVector llr;
        llr.values.resize(y.size());
        const auto& table = llr_tables_[layer - 1];
        for (std::size_t t = 0; t < y.size(); ++t) {
            std::uint64_t prefix = 0;
            for (int b = layer - 2; b >= 0; --b) prefix = (prefix << 1) | lower_planes[b][t];
            const std::uint64_t id = (y[t] << (layer - 1)) | prefix;
            auto it = table.find(id);
            llr.values[t] = it == table.end() ? 0.0 : it->second;
        }
        return decoders_[layer - 1].decode(llr, code, block.payload);
    }

    const BitVec& layer_u_hat(int layer) const { return decoders_[layer - 1].u_hat(); }

    // Full onion peeling: decoded estimates, not truth, feed forward.
    std::vector<std::uint32_t> decode_all(const std::vector<CompressedBlock>& blocks,
                                          std::span<const std::uint64_t> y) {
        if (static_cast<int>(blocks.size()) != spec_->m)
            throw std::invalid_argument("LayeredDecoder: block count mismatch");
        std::vector<BitVec> planes;
        planes.reserve(spec_->m);
        for (int layer = 1; layer <= spec_->m; ++layer)
            planes.push_back(decode_layer(layer, blocks[layer - 1], y, planes));
        std::vector<std::uint32_t> symbols(y.size(), 0);
        for (int layer = 1; layer <= spec_->m; ++layer)
            for (std::size_t t = 0; t < symbols.size(); ++t)
                symbols[t] |= static_cast<std::uint32_t>(planes[layer - 1][t]) << (layer - 1);
        return symbols;
    }

   private:
    const LayeredSpec* spec_;
    std::vector<std::unordered_map<std::uint64_t, double>> llr_tables_;
    std::vector<ScDecoder> decoders_;
};

inline std::vector<std::uint32_t> layered_decompress(const LayeredSource& ls, const LayeredSpec& spec,
                                                     const std::vector<CompressedBlock>& blocks,
                                                     std::span<const std::uint64_t> y) {
    LayeredDecoder decoder(ls, spec);
    return decoder.decode_all(blocks, y);
}

}  // namespace polarsc
