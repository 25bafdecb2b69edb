/*
Slepian-Wolf onion-peeling simulator: m non-cooperating encoders, one central
decoder, corner-point rate accounting. User i's code is built against side
information (Y, users 1..i-1); each encoder sees only its own block.
*/

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "polarsc/layered.hpp"

namespace polarsc {

// Joint distribution over m binary users (user i = bit i-1 of the packed
// symbol) with optional decoder side information. Absent side information is
// modeled as a singleton side alphabet, so user 1 LLRs reduce to the prior
// log-ratio (all-zero for a uniform user: pure compression).
class MultiUserSource {
   public:
    MultiUserSource(int users, std::vector<LayeredEntry> entries, bool has_side_info)
        : has_side_info_(has_side_info), joint_(users, std::move(entries)) {
        if (!has_side_info)
            for (const LayeredEntry& e : joint_.entries())
                if (e.y != 0)
                    throw std::invalid_argument("MultiUserSource: side symbols present but has_side_info=false");
    }

    int users() const noexcept { return joint_.layers(); }
    bool has_side_info() const noexcept { return has_side_info_; }
    const LayeredSource& joint() const noexcept { return joint_; }

   private:
    bool has_side_info_;
    LayeredSource joint_;
};

struct SwCode {
    std::vector<CodeSpec> user_specs;  // user i at position i-1
    std::string selection;             // which selection mode produced the sets

    double sum_rate() const noexcept {
        double r = 0.0;
        for (const CodeSpec& s : user_specs) r += s.rate();
        return r;
    }
};

// Per-user construction in decoding order: user i against (Y, users 1..i-1).
// Rates are the per-user entropy bounds plus the slack eps.
inline SwCode sw_construct(const MultiUserSource& src, int n, BinParams p, double eps) {
    LayeredSpec spec = layered_construct(src.joint(), n, p, eps);
    SwCode code;
    code.user_specs = std::move(spec.specs);
    code.selection = "rate:h_upper+" + std::to_string(eps);
    return code;
}

// Encoder for user i: a pure function of that user's block and spec only.
inline CompressedBlock sw_encode(const SwCode& code, int user, const BitVec& x_user) {
    if (user < 1 || user > static_cast<int>(code.user_specs.size()))
        throw std::invalid_argument("sw_encode: user index out of range");
    return compress(x_user, code.user_specs[user - 1]);
}

namespace detail {

inline LayeredSpec sw_spec_view(const SwCode& code) {
    LayeredSpec spec;
    spec.m = static_cast<int>(code.user_specs.size());
    spec.specs = code.user_specs;
    return spec;
}

}  // namespace detail

// Central decoder: user 1 from Y, user i from (Y, estimates of users 1..i-1);
// estimates, not truth, feed forward. Pass an empty span when the source has
// no side information.
inline std::vector<BitVec> sw_decode(const SwCode& code, const MultiUserSource& src,
                                     const std::vector<CompressedBlock>& blocks,
                                     std::span<const std::uint64_t> y) {
    const int m = static_cast<int>(code.user_specs.size());
    if (static_cast<int>(blocks.size()) != m) throw std::invalid_argument("sw_decode: block count mismatch");
    const std::size_t block_len = blocks.empty() ? 0 : blocks[0].block_length;
    std::vector<std::uint64_t> side(y.begin(), y.end());
    if (side.empty()) side.assign(block_len, 0);
    LayeredSpec spec = detail::sw_spec_view(code);
    LayeredDecoder decoder(src.joint(), spec);
    std::vector<BitVec> planes;
    planes.reserve(m);
    for (int user = 1; user <= m; ++user)
        planes.push_back(decoder.decode_layer(user, blocks[user - 1], side, planes));
    return planes;
}

// Genie-aided decode of a single user with the true lower blocks, isolating
// per-user error for union-bound measurements.
inline BitVec sw_decode_genie(const SwCode& code, const MultiUserSource& src, int user,
                              const CompressedBlock& block, std::span<const std::uint64_t> y,
                              const std::vector<BitVec>& true_lower) {
    LayeredSpec spec = detail::sw_spec_view(code);
    LayeredDecoder decoder(src.joint(), spec);
    std::vector<std::uint64_t> side(y.begin(), y.end());
    if (side.empty()) side.assign(block.block_length, 0);
    return decoder.decode_layer(user, block, side, true_lower);
}

}  // namespace polarsc
