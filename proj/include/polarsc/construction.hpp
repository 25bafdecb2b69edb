/*
Polynomial-time code construction. Each minus/plus step is followed by a
degradation step that merges side symbols into entropy bins, so per-index
entropy and Bhattacharyya metrics are tracked as upper bounds. An exact
brute-force construction is kept alongside as the small-depth oracle.
*/

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <variant>
#include <vector>

#include "polarsc/joint_source.hpp"

namespace polarsc {

// Number of entropy bins per most-likely symbol; the total bin count is 2k+1
// (k bins for each most-likely value plus one bin for symmetric posteriors).
struct BinParams {
    int k = 128;
};

// y goes to the symmetric bin when its posteriors differ by at most this.
inline constexpr double kEqualityBinTolerance = 1e-12;

struct IndexMetric {
    double h_upper = 0.0;  // bits
    double z_upper = 0.0;
};

// Blocklength, per-index reliability bounds and the transmitted index set.
struct CodeSpec {
    int n = 0;
    int bin_k = 0;  // 0 means exact construction (no binning)
    std::vector<IndexMetric> metrics;
    std::vector<std::uint32_t> selected;  // sorted ascending

    std::uint32_t block_length() const noexcept { return 1u << n; }
    double rate() const noexcept {
        return static_cast<double>(selected.size()) / static_cast<double>(block_length());
    }
};

namespace detail {

inline double binary_entropy(double x) noexcept {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

// Accumulates (p0, p1) pairs into degradation bins keyed by
// 2*(entropy_bin-1) + most_likely_symbol, with id 2k for the symmetric bin.
// Dense storage with a touched list so one scratch serves a whole traversal.
class BinAccumulator {
   public:
    explicit BinAccumulator(int k) : k_(k), bins_(2 * static_cast<std::size_t>(k) + 1, {0.0, 0.0}) {}

    void add(double p0, double p1) {
        const double py = p0 + p1;
        if (py <= 0.0) return;
        std::size_t id;
        if (std::abs(p0 - p1) <= kEqualityBinTolerance * py) {
            id = 2 * static_cast<std::size_t>(k_);
        } else {
            const int j = p1 > p0 ? 1 : 0;
            const double h = binary_entropy(std::min(p0, p1) / py);
            // Half-open bins [ (i-1)/k, i/k ); h == 1 cannot reach here but
            // roundoff can, so clamp into the top bin.
            int i = static_cast<int>(h * k_) + 1;
            if (i > k_) i = k_;
            id = 2 * static_cast<std::size_t>(i - 1) + static_cast<std::size_t>(j);
        }
        auto& bin = bins_[id];
        if (bin.first == 0.0 && bin.second == 0.0) touched_.push_back(id);
        bin.first += p0;
        bin.second += p1;
    }

    // Drains the accumulated bins into a normalized JointSource and resets.
    // Bin ids are kept as side-symbol ids; the validating constructor prunes
    // and renormalizes.
    JointSource take() {
        std::sort(touched_.begin(), touched_.end());
        std::vector<SymbolMass> out;
        out.reserve(touched_.size());
        for (std::size_t id : touched_) {
            auto& bin = bins_[id];
            out.push_back({id, bin.first, bin.second});
            bin = {0.0, 0.0};
        }
        touched_.clear();
        return JointSource(std::move(out));
    }

   private:
    int k_;
    std::vector<std::pair<double, double>> bins_;
    std::vector<std::size_t> touched_;
};

}  // namespace detail

// Merges side symbols into the 2k+1 bins keyed by most-likely symbol and
// conditional-entropy interval. Degradation: H and Z can only grow.
inline JointSource degrade(const JointSource& s, BinParams p) {
    if (p.k < 1) throw std::invalid_argument("degrade: k must be >= 1");
    detail::BinAccumulator acc(p.k);
    for (const SymbolMass& e : s.entries()) acc.add(e.p0, e.p1);
    return acc.take();
}

namespace detail {

// Children of one construction node with the degradation step fused in, so the
// squared product alphabet is streamed rather than materialized.
inline void degraded_children(const JointSource& parent, BinAccumulator& acc, JointSource& minus_child,
                              JointSource& plus_child) {
    const auto& in = parent.entries();
    for (const SymbolMass& a : in)
        for (const SymbolMass& b : in)
            acc.add(a.p0 * b.p0 + a.p1 * b.p1, a.p0 * b.p1 + a.p1 * b.p0);
    minus_child = acc.take();
    for (const SymbolMass& a : in)
        for (const SymbolMass& b : in) {
            acc.add(a.p0 * b.p0, a.p1 * b.p1);
            acc.add(a.p1 * b.p0, a.p0 * b.p1);
        }
    plus_child = acc.take();
}

}  // namespace detail

// Level-order degraded construction: every transform step is followed by a
// binning step, so metrics[i] upper-bound the exact H and Z of synthetic i.
inline CodeSpec construct_degraded(const JointSource& s, int n, BinParams p) {
    if (n < 0 || n > 26) throw std::invalid_argument("construct_degraded: depth out of range");
    if (p.k < 1) throw std::invalid_argument("construct_degraded: k must be >= 1");
    std::vector<JointSource> level{s};
    detail::BinAccumulator acc(p.k);
    for (int t = 0; t < n; ++t) {
        std::vector<JointSource> next(level.size() * 2);
        for (std::size_t j = 0; j < level.size(); ++j)
            detail::degraded_children(level[j], acc, next[2 * j], next[2 * j + 1]);
        level = std::move(next);
    }
    CodeSpec spec;
    spec.n = n;
    spec.bin_k = p.k;
    spec.metrics.reserve(level.size());
    for (const JointSource& node : level) spec.metrics.push_back({cond_entropy(node), bhattacharyya(node)});
    return spec;
}

// Exact construction oracle: computes every synthetic distribution without
// degradation. Alphabets grow as |Y|^(2^n) * 2^i, so this is for small depths;
// the budget caps any single materialized alphabet.
inline CodeSpec exact_construct(const JointSource& s, int n,
                                std::size_t budget = kDefaultAlphabetBudget) {
    if (n < 0 || n > 26) throw std::invalid_argument("exact_construct: depth out of range");
    CodeSpec spec;
    spec.n = n;
    spec.bin_k = 0;
    spec.metrics.resize(1u << n);
    std::uint32_t next_index = 0;
    auto dfs = [&](auto&& self, const JointSource& node, int depth) -> void {
        if (depth == n) {
            spec.metrics[next_index++] = {cond_entropy(node), bhattacharyya(node)};
            return;
        }
        const std::size_t m = node.alphabet_size();
        if (m > 0 && (m * m) / m != m)
            throw alphabet_budget_error("exact_construct: alphabet overflow");
        if (m * m > budget || 2 * m * m > budget)
            throw alphabet_budget_error("exact_construct: alphabet exceeds budget " +
                                        std::to_string(budget));
        self(self, minus_transform(node), depth + 1);
        self(self, plus_transform(node), depth + 1);
    };
    dfs(dfs, s, 0);
    return spec;
}

// Worst-case evolution of a Bhattacharyya upper bound along a path:
// z -> z^2 on plus steps (exact) and z -> 2z - z^2 on minus steps (upper
// bound, exact for erasure-style sources). Monotone in z0.
inline double propagate_z_bounds(double z0, const TransformPath& path) {
    if (z0 < 0.0 || z0 > 1.0) throw std::invalid_argument("propagate_z_bounds: z0 outside [0,1]");
    double z = z0;
    for (Step step : path.steps) z = (step == Step::plus) ? z * z : 2.0 * z - z * z;
    return z;
}

// Transmitted-set selection. Rate mode keeps the ceil(rate*N) indices with the
// largest entropy bound; threshold mode keeps indices with z_upper >= the
// threshold (the complement is the reliable key/information set).
struct RateSelection {
    double rate = 0.0;
};
struct ThresholdSelection {
    double z_threshold = 0.0;
};
using SelectionMode = std::variant<RateSelection, ThresholdSelection>;

inline CodeSpec select_indices(CodeSpec spec, const SelectionMode& mode) {
    const std::uint32_t block = spec.block_length();
    spec.selected.clear();
    if (const auto* rs = std::get_if<RateSelection>(&mode)) {
        if (rs->rate < 0.0 || rs->rate > 1.0) throw std::invalid_argument("select_indices: rate outside [0,1]");
        const auto count =
            static_cast<std::uint32_t>(std::min<double>(block, std::ceil(rs->rate * block)));
        std::vector<std::uint32_t> order(block);
        std::iota(order.begin(), order.end(), 0u);
        // Ties on h break toward larger z, then the smaller index.
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            const IndexMetric& ma = spec.metrics[a];
            const IndexMetric& mb = spec.metrics[b];
            if (ma.h_upper != mb.h_upper) return ma.h_upper > mb.h_upper;
            if (ma.z_upper != mb.z_upper) return ma.z_upper > mb.z_upper;
            return a < b;
        });
        spec.selected.assign(order.begin(), order.begin() + count);
        std::sort(spec.selected.begin(), spec.selected.end());
    } else {
        const auto& ts = std::get<ThresholdSelection>(mode);
        if (ts.z_threshold < 0.0 || ts.z_threshold > 1.0)
            throw std::invalid_argument("select_indices: threshold outside [0,1]");
        for (std::uint32_t i = 0; i < block; ++i)
            if (spec.metrics[i].z_upper >= ts.z_threshold) spec.selected.push_back(i);
    }
    return spec;
}

// Bin count making the worst-case degradation excess of the tracked chain at
// most eps/2: k = ceil(2 n 2^n / eps). Practical only for small depths; the
// cost of one fused step grows with k^2, so deep constructions use a fixed k
// instead.
inline BinParams bin_params_for_gap(int n, double eps) {
    if (eps <= 0.0) throw std::invalid_argument("bin_params_for_gap: eps must be positive");
    const double k = std::ceil(2.0 * n * std::ldexp(1.0, n) / eps);
    if (k > 4e6) throw std::invalid_argument("bin_params_for_gap: required k is impractical");
    return BinParams{std::max(1, static_cast<int>(k))};
}

}  // namespace polarsc
