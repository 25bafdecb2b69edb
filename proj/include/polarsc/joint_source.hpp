/*
Exact algebra on finite joint distributions of a binary symbol and a discrete
side-information symbol: Bhattacharyya coefficient, conditional entropy and the
single-step minus/plus polarization transforms.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "polarsc/numeric.hpp"

namespace polarsc {

// Raised when an exact synthesis would need a larger product alphabet than the
// caller allowed.
class alphabet_budget_error : public std::runtime_error {
   public:
    explicit alphabet_budget_error(const std::string& what) : std::runtime_error(what) {}
};

// Joint mass of X=0 and X=1 with one side symbol.
struct SymbolMass {
    std::uint64_t id = 0;
    double p0 = 0.0;
    double p1 = 0.0;
};

inline constexpr double kMassTolerance = 1e-12;

class JointSource;

namespace detail {
JointSource finalize_product(std::vector<SymbolMass>&& out);
}

// Finite joint distribution P_{XY} with X binary and Y a set of integer ids.
// Zero-mass side symbols are pruned on construction; entries are kept sorted
// by id and the total mass is renormalized to exactly one. Immutable after
// construction and safe to share across threads.
class JointSource {
   public:
    JointSource() = default;

    explicit JointSource(std::vector<SymbolMass> entries) : entries_(std::move(entries)) {
        std::sort(entries_.begin(), entries_.end(),
                  [](const SymbolMass& a, const SymbolMass& b) { return a.id < b.id; });
        detail::KahanSum total;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const SymbolMass& e = entries_[i];
            if (e.p0 < 0.0 || e.p1 < 0.0 || !std::isfinite(e.p0) || !std::isfinite(e.p1))
                throw std::invalid_argument("JointSource: negative or non-finite mass");
            if (i > 0 && entries_[i - 1].id == e.id)
                throw std::invalid_argument("JointSource: duplicate side-symbol id");
            total.add(e.p0);
            total.add(e.p1);
        }
        if (std::abs(total.value() - 1.0) > kMassTolerance)
            throw std::invalid_argument("JointSource: masses sum to " + std::to_string(total.value()));
        std::erase_if(entries_, [](const SymbolMass& e) { return e.p0 == 0.0 && e.p1 == 0.0; });
        const double inv = 1.0 / total.value();
        for (SymbolMass& e : entries_) {
            e.p0 *= inv;
            e.p1 *= inv;
        }
    }

    const std::vector<SymbolMass>& entries() const noexcept { return entries_; }
    std::size_t alphabet_size() const noexcept { return entries_.size(); }

    // Lookup by side-symbol id; nullptr when absent (pruned or never present).
    const SymbolMass* find(std::uint64_t id) const noexcept {
        auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                                   [](const SymbolMass& e, std::uint64_t v) { return e.id < v; });
        return (it != entries_.end() && it->id == id) ? &*it : nullptr;
    }

   private:
    struct canonical_tag {};
    JointSource(std::vector<SymbolMass> entries, canonical_tag) : entries_(std::move(entries)) {}
    friend JointSource detail::finalize_product(std::vector<SymbolMass>&&);

    std::vector<SymbolMass> entries_;
};

// Z(X|Y) = 2 sum_y sqrt(P(0,y) P(1,y)); 0 iff Y determines X, 1 iff the two
// masses agree everywhere.
inline double bhattacharyya(const JointSource& s) {
    detail::KahanSum acc;
    for (const SymbolMass& e : s.entries()) acc.add(std::sqrt(e.p0 * e.p1));
    return std::min(1.0, 2.0 * acc.value());
}

// H(X|Y) in bits, with 0 log 0 := 0.
inline double cond_entropy(const JointSource& s) {
    detail::KahanSum acc;
    for (const SymbolMass& e : s.entries()) {
        const double py = e.p0 + e.p1;
        if (e.p0 > 0.0) acc.add(e.p0 * std::log2(py / e.p0));
        if (e.p1 > 0.0) acc.add(e.p1 * std::log2(py / e.p1));
    }
    return acc.value();
}

namespace detail {

inline JointSource finalize_product(std::vector<SymbolMass>&& out) {
    std::erase_if(out, [](const SymbolMass& e) { return e.p0 == 0.0 && e.p1 == 0.0; });
    KahanSum total;
    for (const SymbolMass& e : out) {
        total.add(e.p0);
        total.add(e.p1);
    }
    const double inv = 1.0 / total.value();
    std::uint64_t next_id = 0;
    for (SymbolMass& e : out) {
        e.id = next_id++;
        e.p0 *= inv;
        e.p1 *= inv;
    }
    // Entries are already pruned, sorted and normalized; skip revalidation.
    return JointSource(std::move(out), JointSource::canonical_tag{});
}

}  // namespace detail

// Distribution of (X1 + X2, (Y1, Y2)) for two independent copies of s. Output
// ids enumerate the occupied product alphabet in row-major (y1, y2) order.
inline JointSource minus_transform(const JointSource& s) {
    const auto& in = s.entries();
    std::vector<SymbolMass> out;
    out.reserve(in.size() * in.size());
    for (const SymbolMass& a : in)
        for (const SymbolMass& b : in)
            out.push_back({0, a.p0 * b.p0 + a.p1 * b.p1, a.p0 * b.p1 + a.p1 * b.p0});
    return detail::finalize_product(std::move(out));
}

// Distribution of (X2, (Y1, Y2, X1 + X2)); Z squares exactly under this map.
inline JointSource plus_transform(const JointSource& s) {
    const auto& in = s.entries();
    std::vector<SymbolMass> out;
    out.reserve(2 * in.size() * in.size());
    for (const SymbolMass& a : in)
        for (const SymbolMass& b : in) {
            out.push_back({0, a.p0 * b.p0, a.p1 * b.p1});  // revealed sum = 0
            out.push_back({0, a.p1 * b.p0, a.p0 * b.p1});  // revealed sum = 1
        }
    return detail::finalize_product(std::move(out));
}

enum class Step : std::uint8_t { minus = 0, plus = 1 };

// Sequence of minus/plus steps, most significant step first. The path of
// transform index i at depth n takes step plus at position t iff bit n-1-t
// of i is one (even child = minus).
struct TransformPath {
    std::vector<Step> steps;

    static TransformPath from_index(std::uint64_t index, int depth) {
        if (depth < 0 || depth > 63) throw std::invalid_argument("TransformPath: bad depth");
        if (depth < 64 && index >> depth) throw std::invalid_argument("TransformPath: index out of range");
        TransformPath p;
        p.steps.reserve(static_cast<std::size_t>(depth));
        for (int t = depth - 1; t >= 0; --t)
            p.steps.push_back(((index >> t) & 1u) ? Step::plus : Step::minus);
        return p;
    }
};

inline constexpr std::size_t kDefaultAlphabetBudget = 1'000'000;

// Exact synthetic distribution along a transform path. Alphabets square each
// step, so this is an oracle for small depths, not a construction path; the
// budget caps the largest product alphabet that may be materialized.
inline JointSource synthesize(const JointSource& s, const TransformPath& path,
                              std::size_t budget = kDefaultAlphabetBudget) {
    JointSource cur = s;
    for (Step step : path.steps) {
        const std::size_t m = cur.alphabet_size();
        const std::size_t need = (step == Step::minus) ? m * m : 2 * m * m;
        if (m > 0 && need / m < m)  // overflow
            throw alphabet_budget_error("synthesize: alphabet overflow");
        if (need > budget)
            throw alphabet_budget_error("synthesize: alphabet " + std::to_string(need) +
                                        " exceeds budget " + std::to_string(budget));
        cur = (step == Step::minus) ? minus_transform(cur) : plus_transform(cur);
    }
    return cur;
}

// X uniform, Y = X flipped with probability p (side symbols 0 and 1).
inline JointSource make_bsc_source(double p) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("make_bsc_source: p outside [0,1]");
    return JointSource({{0, (1.0 - p) / 2.0, p / 2.0}, {1, p / 2.0, (1.0 - p) / 2.0}});
}

// X uniform, Y = X with probability 1-eps, erased (symbol 2) otherwise.
inline JointSource make_erasure_source(double eps) {
    if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("make_erasure_source: eps outside [0,1]");
    return JointSource({{0, (1.0 - eps) / 2.0, 0.0}, {1, 0.0, (1.0 - eps) / 2.0}, {2, eps / 2.0, eps / 2.0}});
}

}  // namespace polarsc
