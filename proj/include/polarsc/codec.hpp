/*
O(N log N) polar transform and successive-cancellation decoding for binary
sources with side information. Combining is exact log-domain soft-xor, not
min-sum, so decoder posteriors match brute-force enumeration.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "polarsc/construction.hpp"
#include "polarsc/joint_source.hpp"

namespace polarsc {

using BitVec = std::vector<std::uint8_t>;

// Posterior log-ratios ln P(X=0|Y=y) / P(X=1|Y=y) are clamped to this range;
// beyond it the ratio is outside double resolution anyway.
inline constexpr double kLlrClamp = 40.0;

struct LlrVector {
    std::vector<double> values;
};

namespace detail {

inline bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

// LLR of a xor b from LLRs of a and b, exact log-domain form of
// 2 atanh(tanh(a/2) tanh(b/2)):
// f = sgn(a)sgn(b) min(|a|,|b|) + log1p(e^-|a+b|) - log1p(e^-|a-b|).
inline double soft_xor(double a, double b) noexcept {
    const double aa = std::abs(a);
    const double ab = std::abs(b);
    const double m = aa < ab ? aa : ab;
    const double sign = ((a < 0.0) != (b < 0.0)) ? -1.0 : 1.0;
    return sign * m + std::log1p(std::exp(-std::abs(a + b))) - std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace detail

// u = G_N x over GF(2), G_N the n-th Kronecker power of [[1,1],[0,1]], with no
// bit-reversal permutation. Self-inverse.
inline BitVec polar_transform(BitVec x) {
    const std::size_t n = x.size();
    if (!detail::is_power_of_two(n)) throw std::invalid_argument("polar_transform: length not a power of two");
    for (std::size_t half = n >> 1; half >= 1; half >>= 1)
        for (std::size_t start = 0; start < n; start += 2 * half)
            for (std::size_t i = start; i < start + half; ++i) x[i] ^= x[i + half];
    return x;
}

// Per-symbol posterior log-ratios for an observed side sequence.
inline LlrVector llr_from_side_info(const JointSource& s, std::span<const std::uint64_t> side) {
    LlrVector out;
    out.values.reserve(side.size());
    for (std::uint64_t y : side) {
        const SymbolMass* e = s.find(y);
        if (e == nullptr || (e->p0 == 0.0 && e->p1 == 0.0))
            throw std::invalid_argument("llr_from_side_info: side symbol " + std::to_string(y) +
                                        " has no mass");
        double llr;
        if (e->p1 == 0.0)
            llr = kLlrClamp;
        else if (e->p0 == 0.0)
            llr = -kLlrClamp;
        else
            llr = std::log(e->p0 / e->p1);
        out.values.push_back(std::clamp(llr, -kLlrClamp, kLlrClamp));
    }
    return out;
}

// Transform-domain bits restricted to the transmitted (selected) index set.
struct CompressedBlock {
    std::uint64_t block_length = 0;
    BitVec payload;
};

// Successive-cancellation decoder. Holds O(N) scratch, so an instance is not
// shareable mid-decode; distinct instances decode distinct blocks concurrently.
class ScDecoder {
   public:
    explicit ScDecoder(int n) : n_(n) {
        if (n < 0 || n > 26) throw std::invalid_argument("ScDecoder: depth out of range");
        const std::size_t block = std::size_t{1} << n;
        alpha_.resize(2 * block);
        beta_.resize(2 * block);
        level_offset_.resize(n + 1);
        std::size_t off = 0;
        for (int t = 0; t <= n; ++t) {
            level_offset_[t] = off;
            off += block >> t;
        }
        u_hat_.resize(block);
        x_hat_.resize(block);
        is_selected_.resize(block);
    }

    // Records ln P(u_j=0 | y, u^{j-1}) / P(u_j=1 | y, u^{j-1}) per index when
    // enabled; used by the enumeration-oracle tests.
    void set_record_decision_llrs(bool enable) { record_ = enable; }
    const std::vector<double>& decision_llrs() const noexcept { return decision_llr_; }

    // Decodes one block: payload supplies u at the selected indices in
    // increasing order, every other index is decided by posterior sign (ties
    // to zero). Returns the source-domain estimate; u_hat() has the
    // transform-domain bits.
    const BitVec& decode(const LlrVector& llr, const CodeSpec& code, const BitVec& payload) {
        const std::size_t block = std::size_t{1} << n_;
        if (code.n != n_) throw std::invalid_argument("ScDecoder: code depth mismatch");
        if (llr.values.size() != block) throw std::invalid_argument("ScDecoder: llr length mismatch");
        if (payload.size() != code.selected.size())
            throw std::invalid_argument("ScDecoder: payload length mismatch");
        std::fill(is_selected_.begin(), is_selected_.end(), std::uint8_t{0});
        for (std::uint32_t idx : code.selected) {
            if (idx >= block) throw std::invalid_argument("ScDecoder: selected index out of range");
            is_selected_[idx] = 1;
        }
        if (record_) decision_llr_.assign(block, 0.0);
        std::copy(llr.values.begin(), llr.values.end(), alpha_.begin() + level_offset_[0]);
        payload_ = &payload;
        payload_pos_ = 0;
        next_leaf_ = 0;
        decode_node(0);
        std::copy(beta_.begin() + level_offset_[0], beta_.begin() + level_offset_[0] + block,
                  x_hat_.begin());
        payload_ = nullptr;
        return x_hat_;
    }

    const BitVec& u_hat() const noexcept { return u_hat_; }

   private:
    // One buffer per level holds the single active node of that level, which
    // keeps working memory at 2N; the left child's partial sums are stashed in
    // the parent slot while the right child reuses the child buffer.
    void decode_node(int level) {
        const std::size_t size = (std::size_t{1} << n_) >> level;
        double* alpha = alpha_.data() + level_offset_[level];
        std::uint8_t* beta = beta_.data() + level_offset_[level];
        if (size == 1) {
            const std::size_t j = next_leaf_++;
            if (record_) decision_llr_[j] = alpha[0];
            std::uint8_t bit;
            if (is_selected_[j])
                bit = (*payload_)[payload_pos_++] & 1u;
            else
                bit = alpha[0] < 0.0 ? 1 : 0;
            u_hat_[j] = bit;
            beta[0] = bit;
            return;
        }
        const std::size_t half = size / 2;
        double* child_alpha = alpha_.data() + level_offset_[level + 1];
        std::uint8_t* child_beta = beta_.data() + level_offset_[level + 1];
        for (std::size_t i = 0; i < half; ++i) child_alpha[i] = detail::soft_xor(alpha[i], alpha[i + half]);
        decode_node(level + 1);
        for (std::size_t i = 0; i < half; ++i) beta[i] = child_beta[i];
        for (std::size_t i = 0; i < half; ++i)
            child_alpha[i] = beta[i] ? alpha[i + half] - alpha[i] : alpha[i + half] + alpha[i];
        decode_node(level + 1);
        for (std::size_t i = 0; i < half; ++i) {
            beta[i] ^= child_beta[i];
            beta[i + half] = child_beta[i];
        }
    }

    int n_;
    bool record_ = false;
    std::vector<double> alpha_;
    std::vector<std::uint8_t> beta_;
    std::vector<std::size_t> level_offset_;
    BitVec u_hat_;
    BitVec x_hat_;
    std::vector<std::uint8_t> is_selected_;
    std::vector<double> decision_llr_;
    const BitVec* payload_ = nullptr;
    std::size_t payload_pos_ = 0;
    std::size_t next_leaf_ = 0;
};

inline CompressedBlock compress(const BitVec& x, const CodeSpec& code) {
    if (x.size() != code.block_length()) throw std::invalid_argument("compress: block length mismatch");
    const BitVec u = polar_transform(x);
    CompressedBlock block;
    block.block_length = u.size();
    block.payload.reserve(code.selected.size());
    for (std::uint32_t idx : code.selected) block.payload.push_back(u[idx]);
    return block;
}

inline BitVec decompress(const CompressedBlock& block, const CodeSpec& code, const LlrVector& llr) {
    if (block.block_length != code.block_length())
        throw std::invalid_argument("decompress: block length mismatch");
    ScDecoder decoder(code.n);
    return decoder.decode(llr, code, block.payload);
}

}  // namespace polarsc
