#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "polarsc/joint_source.hpp"
#include "polarsc/rng.hpp"

using namespace polarsc;

namespace {
// Frozen reference values, computed independently from the defining formulas.
constexpr double kZBsc011 = 0.625779513886481;       // 2 sqrt(0.11*0.89)
constexpr double kHBsc011 = 0.499915958164528;       // binary entropy of 0.11
constexpr double kZMinusBsc011 = 0.793630543767060;  // 2 sqrt(2pq(p^2+q^2))
}  // namespace

TEST_CASE("bhattacharyya on reference sources") {
    CHECK(bhattacharyya(make_bsc_source(0.11)) == doctest::Approx(kZBsc011).epsilon(1e-12));
    // Y = X: one of the two masses vanishes for every side symbol.
    JointSource noiseless({{0, 0.5, 0.0}, {1, 0.0, 0.5}});
    CHECK(bhattacharyya(noiseless) == 0.0);
    // Y independent of uniform X.
    JointSource useless({{0, 0.25, 0.25}, {1, 0.25, 0.25}});
    CHECK(bhattacharyya(useless) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("conditional entropy on reference sources") {
    CHECK(cond_entropy(make_bsc_source(0.11)) == doctest::Approx(kHBsc011).epsilon(1e-12));
    CHECK(cond_entropy(JointSource({{0, 0.5, 0.0}, {1, 0.0, 0.5}})) == 0.0);
    CHECK(cond_entropy(JointSource({{0, 0.25, 0.25}, {1, 0.25, 0.25}})) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("source validation") {
    CHECK_THROWS_AS(JointSource({{0, 0.6, 0.6}}), std::invalid_argument);
    CHECK_THROWS_AS(JointSource({{0, -0.1, 1.1}}), std::invalid_argument);
    CHECK_THROWS_AS(JointSource({{0, 0.5, 0.0}, {0, 0.0, 0.5}}), std::invalid_argument);
    // Zero-mass symbols are pruned eagerly.
    JointSource s({{0, 0.5, 0.5}, {7, 0.0, 0.0}});
    CHECK(s.alphabet_size() == 1);
}

TEST_CASE("minus transform: erasure exactness and zero fixpoint") {
    JointSource er = make_erasure_source(0.5);
    CHECK(bhattacharyya(minus_transform(er)) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(bhattacharyya(minus_transform(JointSource({{0, 0.5, 0.0}, {1, 0.0, 0.5}}))) == 0.0);
    const double z_minus = bhattacharyya(minus_transform(make_bsc_source(0.11)));
    CHECK(z_minus == doctest::Approx(kZMinusBsc011).epsilon(1e-12));
    CHECK(z_minus >= kZBsc011 * std::sqrt(2.0 - kZBsc011 * kZBsc011) - 1e-12);
    CHECK(z_minus <= 2.0 * kZBsc011 - kZBsc011 * kZBsc011 + 1e-12);
}

TEST_CASE("plus transform squares Z") {
    CHECK(bhattacharyya(plus_transform(make_erasure_source(0.5))) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(bhattacharyya(plus_transform(JointSource({{0, 0.5, 0.0}, {1, 0.0, 0.5}}))) == 0.0);
    CHECK(bhattacharyya(plus_transform(make_bsc_source(0.11))) ==
          doctest::Approx(kZBsc011 * kZBsc011).epsilon(1e-12));
}

TEST_CASE("transform identities over a random corpus") {
    CounterRng rng(0x5eedULL, 1);
    for (int trial = 0; trial < 2000; ++trial) {
        JointSource s = testutil::random_source(rng, 16);
        const double z = bhattacharyya(s);
        const double h = cond_entropy(s);
        JointSource sp = plus_transform(s);
        JointSource sm = minus_transform(s);
        CAPTURE(trial);
        CHECK(std::abs(bhattacharyya(sp) - z * z) <= 1e-12);
        const double zm = bhattacharyya(sm);
        CHECK(zm >= z * std::sqrt(2.0 - z * z) - 1e-12);
        CHECK(zm <= 2.0 * z - z * z + 1e-12);
        CHECK(std::abs(cond_entropy(sp) + cond_entropy(sm) - 2.0 * h) <= 1e-10);
    }
}

TEST_CASE("erasure-style minus transform is exactly 2Z - Z^2") {
    for (double eps : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
        JointSource s = make_erasure_source(eps);
        const double z = bhattacharyya(s);
        CHECK(std::abs(bhattacharyya(minus_transform(s)) - (2.0 * z - z * z)) <= 1e-12);
    }
}

TEST_CASE("derived quantities ignore id permutation and zero-mass symbols") {
    JointSource a({{0, 0.30, 0.10}, {1, 0.05, 0.25}, {2, 0.20, 0.10}});
    JointSource b({{9, 0.30, 0.10}, {4, 0.05, 0.25}, {1, 0.20, 0.10}, {77, 0.0, 0.0}});
    CHECK(bhattacharyya(a) == doctest::Approx(bhattacharyya(b)).epsilon(1e-15));
    CHECK(cond_entropy(a) == doctest::Approx(cond_entropy(b)).epsilon(1e-15));
}

TEST_CASE("synthesize follows the path recursion") {
    JointSource er = make_erasure_source(0.5);
    TransformPath pp{{Step::plus, Step::plus}};
    CHECK(bhattacharyya(synthesize(er, pp)) == doctest::Approx(0.0625).epsilon(1e-12));
    TransformPath mp{{Step::minus, Step::plus}};
    CHECK(bhattacharyya(synthesize(er, mp)) == doctest::Approx(0.75 * 0.75).epsilon(1e-12));
    // Empty path returns the source unchanged.
    JointSource same = synthesize(er, TransformPath{});
    REQUIRE(same.alphabet_size() == er.alphabet_size());
    for (std::size_t i = 0; i < same.entries().size(); ++i) {
        CHECK(same.entries()[i].id == er.entries()[i].id);
        CHECK(same.entries()[i].p0 == er.entries()[i].p0);
    }
}

TEST_CASE("synthesize honors the alphabet budget") {
    JointSource s = make_bsc_source(0.2);
    TransformPath deep = TransformPath::from_index(0, 6);
    CHECK_THROWS_AS(synthesize(s, deep, 100), alphabet_budget_error);
    CHECK_NOTHROW(synthesize(s, TransformPath::from_index(0, 2), 100));
}

TEST_CASE("path encoding matches the parity rule") {
    // Even indices take the minus branch last (least significant step).
    TransformPath p = TransformPath::from_index(2, 2);  // binary 10
    REQUIRE(p.steps.size() == 2);
    CHECK(p.steps[0] == Step::plus);
    CHECK(p.steps[1] == Step::minus);
    CHECK_THROWS_AS(TransformPath::from_index(4, 2), std::invalid_argument);
}
