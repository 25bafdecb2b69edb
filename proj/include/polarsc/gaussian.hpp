/*
Equiprobable scalar Gaussian quantizer with conditional-mean reconstruction
levels, induced-correlation and mutual-information computations for jointly
Gaussian pairs, and the rate-loss lower bound they satisfy.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "polarsc/numeric.hpp"
#include "polarsc/rng.hpp"

namespace polarsc {

class quadrature_error : public std::runtime_error {
   public:
    explicit quadrature_error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779;

inline double normal_pdf(double x) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// Acklam's rational approximation refined with one Halley step; deterministic
// and accurate to ~1e-15 in probability.
inline double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inverse_normal_cdf: p outside (0,1)");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01, -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = normal_cdf(x) - p;
    const double u = e / normal_pdf(x);
    x -= u / (1.0 + 0.5 * x * u);  // Halley
    return x;
}

// 15-point Gauss-Kronrod pair (QUADPACK QK15 abscissae/weights on [-1,1]).
inline constexpr double kGk15Nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
inline constexpr double kGk15Weights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double kGauss7Weights[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                                             0.417959183673469};

template <typename F>
inline void gk15(const F& f, double lo, double hi, double& result, double& err_estimate) {
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double f_mid = f(mid);
    double kronrod = kGk15Weights[7] * f_mid;
    double gauss = kGauss7Weights[3] * f_mid;
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kGk15Nodes[i];
        const double sum = f(mid - dx) + f(mid + dx);
        kronrod += kGk15Weights[i] * sum;
        if (i % 2 == 1) gauss += kGauss7Weights[i / 2] * sum;
    }
    result = kronrod * half;
    err_estimate = std::abs(kronrod - gauss) * half;
}

// Plain adaptive bisection on the Kronrod/Gauss discrepancy.
template <typename F>
inline double adaptive_quadrature(const F& f, double lo, double hi, double abs_tol, int max_depth = 48) {
    struct Segment {
        double lo, hi, value, err;
        int depth;
    };
    double value;
    double err;
    gk15(f, lo, hi, value, err);
    std::vector<Segment> stack{{lo, hi, value, err, 0}};
    double total = 0.0;
    double total_err = 0.0;
    while (!stack.empty()) {
        Segment seg = stack.back();
        stack.pop_back();
        if (seg.err <= abs_tol * (seg.hi - seg.lo) / (hi - lo) || seg.depth >= max_depth) {
            if (seg.depth >= max_depth && seg.err > abs_tol)
                throw quadrature_error("adaptive_quadrature: no convergence");
            total += seg.value;
            total_err += seg.err;
            continue;
        }
        const double mid = 0.5 * (seg.lo + seg.hi);
        Segment left{seg.lo, mid, 0, 0, seg.depth + 1};
        Segment right{mid, seg.hi, 0, 0, seg.depth + 1};
        gk15(f, left.lo, left.hi, left.value, left.err);
        gk15(f, right.lo, right.hi, right.value, right.err);
        stack.push_back(left);
        stack.push_back(right);
    }
    (void)total_err;
    return total;
}

}  // namespace detail

// k equiprobable cells of the standard Gaussian; cell c covers
// [boundaries[c], boundaries[c+1]) and reconstructs to its conditional mean.
struct Quantizer {
    int k = 0;
    std::vector<double> boundaries;  // size k+1, first -inf, last +inf
    std::vector<double> levels;      // size k, strictly increasing

    double second_moment() const noexcept {
        double acc = 0.0;
        for (double v : levels) acc += v * v;
        return acc / static_cast<double>(k);
    }
};

inline Quantizer build_quantizer(int k) {
    if (k < 2) throw std::invalid_argument("build_quantizer: k must be >= 2");
    Quantizer q;
    q.k = k;
    q.boundaries.resize(k + 1);
    q.boundaries.front() = -std::numeric_limits<double>::infinity();
    q.boundaries.back() = std::numeric_limits<double>::infinity();
    for (int i = 1; i < k; ++i)
        q.boundaries[i] = detail::inverse_normal_cdf(static_cast<double>(i) / k);
    q.levels.resize(k);
    for (int c = 0; c < k; ++c) {
        const double lo = q.boundaries[c];
        const double hi = q.boundaries[c + 1];
        const double pdf_lo = std::isinf(lo) ? 0.0 : detail::normal_pdf(lo);
        const double pdf_hi = std::isinf(hi) ? 0.0 : detail::normal_pdf(hi);
        q.levels[c] = k * (pdf_lo - pdf_hi);  // E[X | cell] with cell mass 1/k
    }
    return q;
}

// Correlation of the reconstruction with the other Gaussian terminal:
// rho_tilde = rho * sqrt(E[X~^2]).
inline double induced_correlation(const Quantizer& q, double rho) {
    if (std::abs(rho) > 1.0) throw std::invalid_argument("induced_correlation: |rho| > 1");
    return rho * std::sqrt(q.second_moment());
}

// I(X;Y) for jointly Gaussian pairs, in bits.
inline double mi_gaussian(double rho) {
    if (std::abs(rho) >= 1.0) throw std::invalid_argument("mi_gaussian: |rho| must be < 1");
    return -0.5 * std::log2(1.0 - rho * rho);
}

struct QuantizedMiOptions {
    double cell_abs_tol = 1e-7;       // per-cell quadrature tolerance, bits
    int mc_threshold = 4096;          // switch to Monte Carlo above this k
    std::uint64_t mc_samples = 4'000'000;
    std::uint64_t seed = 1;
};

struct QuantizedMi {
    double bits = 0.0;
    double standard_error = 0.0;  // zero for the quadrature path
    bool monte_carlo = false;
};

// I(Y; X~) where X~ is the quantizer reconstruction of X and (X, Y) are
// jointly Gaussian with correlation rho. Evaluated per cell as
// (1/k) * int k phi(y) D_c(y) log2(k D_c(y)) dy with
// D_c(y) = Phi((b_hi - rho y)/s) - Phi((b_lo - rho y)/s), s = sqrt(1-rho^2).
inline QuantizedMi mi_quantized(const Quantizer& q, double rho, const QuantizedMiOptions& opts = {}) {
    if (std::abs(rho) >= 1.0) throw std::invalid_argument("mi_quantized: |rho| must be < 1");
    if (rho == 0.0) return {0.0, 0.0, false};
    const double s = std::sqrt(1.0 - rho * rho);

    if (q.k > opts.mc_threshold) {
        // Monte Carlo estimate of E log2(k D_cell(X)(Y)) with reported
        // standard error.
        CounterRng rng(opts.seed, 0x6d63ULL);
        double sum = 0.0;
        double sum_sq = 0.0;
        for (std::uint64_t t = 0; t < opts.mc_samples; ++t) {
            const double u1 = std::max(rng.next_double(), 1e-300);
            const double u2 = rng.next_double();
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double x = r * std::cos(6.283185307179586 * u2);
            const double z = r * std::sin(6.283185307179586 * u2);
            const double y = rho * x + s * z;
            const auto cell = static_cast<std::size_t>(
                std::upper_bound(q.boundaries.begin() + 1, q.boundaries.end() - 1, x) -
                (q.boundaries.begin() + 1));
            const double lo = q.boundaries[cell];
            const double hi = q.boundaries[cell + 1];
            const double d_hi = std::isinf(hi) ? 1.0 : detail::normal_cdf((hi - rho * y) / s);
            const double d_lo = std::isinf(lo) ? 0.0 : detail::normal_cdf((lo - rho * y) / s);
            const double v = std::log2(std::max(q.k * (d_hi - d_lo), 1e-300));
            sum += v;
            sum_sq += v * v;
        }
        const double mean = sum / static_cast<double>(opts.mc_samples);
        const double var = std::max(0.0, sum_sq / static_cast<double>(opts.mc_samples) - mean * mean);
        return {mean, std::sqrt(var / static_cast<double>(opts.mc_samples)), true};
    }

    const double span = 13.0;  // phi(13) ~ 1e-37: tails are negligible
    detail::KahanSum total;
    for (int c = 0; c < q.k; ++c) {
        const double lo = q.boundaries[c];
        const double hi = q.boundaries[c + 1];
        auto integrand = [&](double y) {
            const double d_hi = std::isinf(hi) ? 1.0 : detail::normal_cdf((hi - rho * y) / s);
            const double d_lo = std::isinf(lo) ? 0.0 : detail::normal_cdf((lo - rho * y) / s);
            const double d = d_hi - d_lo;
            if (d <= 0.0) return 0.0;
            return q.k * detail::normal_pdf(y) * d * std::log2(q.k * d);
        };
        const double cell = detail::adaptive_quadrature(integrand, -span, span, opts.cell_abs_tol);
        total.add(cell / q.k);
    }
    return {total.value(), 0.0, false};
}

// The additive constant for which the rate-loss bound is proven to hold:
// sqrt(2/pi) + 2 sqrt(2 pi), nudged upward.
inline constexpr double kLemma7DefaultC = 5.811142110064866;

// Lower bound on I(Y; X~) for the k-cell equiprobable quantizer:
// I(Y;X) - (log2 e / 2) * (rho^2 C / (1 - rho^2)) * sqrt(ln k / k).
// May be negative (vacuous) for small k; returned as-is.
inline double lemma7_bound(double rho, int k, double C = kLemma7DefaultC) {
    if (std::abs(rho) >= 1.0) throw std::invalid_argument("lemma7_bound: |rho| must be < 1");
    if (k < 2) throw std::invalid_argument("lemma7_bound: k must be >= 2");
    if (rho == 0.0) return 0.0;
    constexpr double half_log2_e = 0.7213475204444817;
    const double penalty =
        half_log2_e * (rho * rho * C / (1.0 - rho * rho)) * std::sqrt(std::log(k) / k);
    return mi_gaussian(rho) - penalty;
}

struct QuantizedSamples {
    std::vector<int> cells;      // 0-based; cell c covers [b_c, b_{c+1})
    std::vector<double> levels;  // reconstruction per sample
};

// Deterministic binary-search lookup; a sample equal to an interior boundary
// belongs to the upper cell (half-open convention).
inline QuantizedSamples quantize(const Quantizer& q, std::span<const double> samples) {
    QuantizedSamples out;
    out.cells.reserve(samples.size());
    out.levels.reserve(samples.size());
    for (double x : samples) {
        const auto cell = static_cast<int>(
            std::upper_bound(q.boundaries.begin() + 1, q.boundaries.end() - 1, x) -
            (q.boundaries.begin() + 1));
        out.cells.push_back(cell);
        out.levels.push_back(q.levels[cell]);
    }
    return out;
}

}  // namespace polarsc
