/*
Small numeric helpers shared across modules.
*/

#pragma once

namespace polarsc {
namespace detail {

// Compensated accumulator; keeps long sums exact enough for 1e-12 contracts.
class KahanSum {
   public:
    void add(double x) noexcept {
        const double y = x - carry_;
        const double t = sum_ + y;
        carry_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const noexcept { return sum_; }

   private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

}  // namespace detail
}  // namespace polarsc
