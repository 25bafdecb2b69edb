#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "oracles.hpp"
#include "polarsc/construction.hpp"
#include "polarsc/rng.hpp"

using namespace polarsc;

namespace {
// Exact erasure recursion for eps = 0.5 at depth 2, in index order.
constexpr double kErasureZ[4] = {0.9375, 0.5625, 0.4375, 0.0625};

double mean_h(const CodeSpec& spec) {
    double sum = 0.0;
    for (const IndexMetric& m : spec.metrics) sum += m.h_upper;
    return sum / spec.block_length();
}
}  // namespace

TEST_CASE("degrade keeps distinguishable symbols apart") {
    // BSC posteriors share the entropy bin but differ in most-likely symbol.
    JointSource bsc = make_bsc_source(0.11);
    JointSource d = degrade(bsc, BinParams{1});
    CHECK(d.alphabet_size() == 2);
    CHECK(cond_entropy(d) == doctest::Approx(cond_entropy(bsc)).epsilon(1e-12));

    // Uniform X independent of Y collapses to the single symmetric bin.
    JointSource ind({{0, 0.2, 0.2}, {1, 0.2, 0.2}, {2, 0.1, 0.1}});
    JointSource di = degrade(ind, BinParams{7});
    CHECK(di.alphabet_size() == 1);
    CHECK(cond_entropy(di) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("degrade never lowers H or Z") {
    CounterRng rng(0xdeadULL, 2);
    for (int trial = 0; trial < 300; ++trial) {
        JointSource s = testutil::random_source(rng, 12);
        for (int k : {1, 2, 5}) {
            JointSource d = degrade(s, BinParams{k});
            CAPTURE(trial);
            CAPTURE(k);
            CHECK(d.alphabet_size() <= 2 * static_cast<std::size_t>(k) + 1);
            CHECK(cond_entropy(d) >= cond_entropy(s) - 1e-12);
            CHECK(bhattacharyya(d) >= bhattacharyya(s) - 1e-12);
        }
    }
}

TEST_CASE("exact construction at the erasure reference point") {
    CodeSpec spec = exact_construct(make_erasure_source(0.5), 2);
    REQUIRE(spec.metrics.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(spec.metrics[i].z_upper == doctest::Approx(kErasureZ[i]).epsilon(1e-12));
}

TEST_CASE("exact construction degenerate cases") {
    JointSource noiseless({{0, 0.5, 0.0}, {1, 0.0, 0.5}});
    CodeSpec spec = exact_construct(noiseless, 3);
    for (const IndexMetric& m : spec.metrics) {
        CHECK(m.h_upper == 0.0);
        CHECK(m.z_upper == 0.0);
    }
    CodeSpec base = exact_construct(make_bsc_source(0.11), 0);
    REQUIRE(base.metrics.size() == 1);
    CHECK(base.metrics[0].h_upper == doctest::Approx(0.499915958164528).epsilon(1e-12));
    CHECK(base.metrics[0].z_upper == doctest::Approx(0.625779513886481).epsilon(1e-12));
}

TEST_CASE("exact construction satisfies the chain rule") {
    CounterRng rng(0xc0deULL, 3);
    for (int trial = 0; trial < 10; ++trial) {
        JointSource s = testutil::random_source(rng, 4);
        for (int n : {1, 2, 3}) {
            CodeSpec spec = exact_construct(s, n, 40'000'000);
            CAPTURE(trial);
            CAPTURE(n);
            CHECK(std::abs(mean_h(spec) - cond_entropy(s)) <= 1e-10);
        }
    }
}

TEST_CASE("degraded construction sandwich against the exact oracle") {
    CounterRng rng(0xbeefULL, 4);
    for (int trial = 0; trial < 6; ++trial) {
        JointSource s = testutil::random_source(rng, 4);
        const double h = cond_entropy(s);
        for (int n : {1, 2, 3}) {
            CodeSpec exact = exact_construct(s, n, 40'000'000);
            for (int k : {2, 8, 32}) {
                CodeSpec deg = construct_degraded(s, n, BinParams{k});
                const double excess = mean_h(deg) - h;
                CAPTURE(trial);
                CAPTURE(n);
                CAPTURE(k);
                CHECK(excess >= -1e-9);
                CHECK(excess <= n * std::ldexp(1.0, n) / k + 1e-9);
                // Per-index upper bounds dominate the exact metrics.
                for (std::size_t i = 0; i < deg.metrics.size(); ++i) {
                    CHECK(deg.metrics[i].h_upper >= exact.metrics[i].h_upper - 1e-9);
                    CHECK(deg.metrics[i].z_upper >= exact.metrics[i].z_upper - 1e-9);
                }
            }
        }
    }
}

TEST_CASE("huge bin count reproduces the exact metrics") {
    CodeSpec exact = exact_construct(make_bsc_source(0.11), 3);
    CodeSpec deg = construct_degraded(make_bsc_source(0.11), 3, BinParams{1 << 20});
    REQUIRE(deg.metrics.size() == exact.metrics.size());
    for (std::size_t i = 0; i < deg.metrics.size(); ++i) {
        CHECK(deg.metrics[i].h_upper == doctest::Approx(exact.metrics[i].h_upper).epsilon(1e-9));
        CHECK(deg.metrics[i].z_upper == doctest::Approx(exact.metrics[i].z_upper).epsilon(1e-9));
    }
}

TEST_CASE("construction at depth zero echoes the source") {
    JointSource s = make_erasure_source(0.3);
    CodeSpec spec = construct_degraded(s, 0, BinParams{4});
    REQUIRE(spec.metrics.size() == 1);
    CHECK(spec.metrics[0].h_upper == doctest::Approx(cond_entropy(s)).epsilon(1e-12));
    CHECK(spec.metrics[0].z_upper == doctest::Approx(bhattacharyya(s)).epsilon(1e-12));
}

TEST_CASE("refining the bins never raises the entropy sum") {
    CounterRng rng(0xfeedULL, 5);
    for (int trial = 0; trial < 5; ++trial) {
        JointSource s = testutil::random_source(rng, 4);
        for (int n : {1, 2}) {
            double prev = std::numeric_limits<double>::infinity();
            for (int k : {2, 4, 8, 16}) {
                const double cur = mean_h(construct_degraded(s, n, BinParams{k}));
                CAPTURE(trial);
                CAPTURE(n);
                CAPTURE(k);
                CHECK(cur <= prev + 1e-9);
                prev = cur;
            }
        }
    }
}

TEST_CASE("z bound propagation") {
    CHECK(propagate_z_bounds(0.1, TransformPath{{Step::plus}}) == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(propagate_z_bounds(0.1, TransformPath{{Step::minus}}) == doctest::Approx(0.19).epsilon(1e-15));
    CHECK(propagate_z_bounds(0.42, TransformPath{}) == 0.42);
    // Monotone in z0.
    for (auto path : {TransformPath::from_index(5, 3), TransformPath::from_index(2, 3)}) {
        double prev = -1.0;
        for (double z0 = 0.0; z0 <= 1.0; z0 += 0.05) {
            const double v = propagate_z_bounds(z0, path);
            CHECK(v >= prev - 1e-15);
            prev = v;
        }
    }
}

TEST_CASE("z bound dominates the exact synthetic Z") {
    CounterRng rng(0xabcdULL, 6);
    for (int trial = 0; trial < 40; ++trial) {
        JointSource s = testutil::random_source(rng, 4);
        const double z0 = bhattacharyya(s);
        for (int n : {1, 2, 3}) {
            for (std::uint64_t i = 0; i < (1ull << n); ++i) {
                TransformPath path = TransformPath::from_index(i, n);
                const double bound = propagate_z_bounds(z0, path);
                const double exact = bhattacharyya(synthesize(s, path, 40'000'000));
                CAPTURE(trial);
                CAPTURE(n);
                CAPTURE(i);
                CHECK(bound >= exact - 1e-12);
            }
        }
    }
}

TEST_CASE("index selection by rate and threshold") {
    CodeSpec spec = exact_construct(make_erasure_source(0.5), 2);

    CodeSpec by_rate = select_indices(spec, RateSelection{0.5});
    CHECK(by_rate.selected == std::vector<std::uint32_t>{0, 1});
    CHECK(select_indices(spec, RateSelection{1.0}).selected.size() == 4);
    CHECK(select_indices(spec, RateSelection{0.0}).selected.empty());
    // ceil semantics: 0.3 * 4 = 1.2 -> 2 indices.
    CHECK(select_indices(spec, RateSelection{0.3}).selected.size() == 2);

    CodeSpec by_thr = select_indices(spec, ThresholdSelection{0.5});
    CHECK(by_thr.selected == std::vector<std::uint32_t>{0, 1});
    // Monotone in the threshold.
    std::size_t prev = 5;
    for (double t : {0.0, 0.1, 0.5, 0.9, 1.0}) {
        const std::size_t cnt = select_indices(spec, ThresholdSelection{t}).selected.size();
        CHECK(cnt <= prev);
        prev = cnt;
    }
}

TEST_CASE("rate selection breaks ties deterministically") {
    CodeSpec spec;
    spec.n = 2;
    spec.metrics = {{0.5, 0.3}, {0.5, 0.7}, {0.5, 0.7}, {0.2, 0.9}};
    CodeSpec sel = select_indices(spec, RateSelection{0.5});
    // Equal h everywhere in the top three: larger z wins, then smaller index.
    CHECK(sel.selected == std::vector<std::uint32_t>{1, 2});
}

TEST_CASE("bin parameters from an entropy-gap budget") {
    CHECK(bin_params_for_gap(2, 0.5).k == 32);  // ceil(2*2*4/0.5)
    CHECK_THROWS_AS(bin_params_for_gap(2, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(bin_params_for_gap(20, 1e-3), std::invalid_argument);
}
