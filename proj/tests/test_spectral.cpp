#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "shiftlab/oracles.hpp"
#include "shiftlab/rng.hpp"
#include "shiftlab/spectral.hpp"

using namespace shiftlab;

TEST_CASE("semigroup pointwise values") {
    const SpectralOperator A({1.0});
    CHECK(A.semigroup(0.0, StateVector({1.0}))[0] == 1.0);
    CHECK(A.semigroup(1.0, StateVector({1.0}))[0] == doctest::Approx(0.36787944117144233).epsilon(1e-12));

    const SpectralOperator A2({1.0, 4.0});
    const StateVector y = A2.semigroup(0.5, StateVector({2.0, 2.0}));
    CHECK(y[0] == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(2.0 * std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("semigroup property and contraction") {
    CounterRng rng(99, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 31.0);
        std::vector<double> lam(n);
        for (double& l : lam) l = 0.05 + 10.0 * rng.uniform();
        std::sort(lam.begin(), lam.end());
        const SpectralOperator A(lam);
        StateVector x(n);
        for (std::size_t k = 0; k < n; ++k) x[k] = rng.normal();
        const double s = 2.0 * rng.uniform(), t = 2.0 * rng.uniform();
        const StateVector a = A.semigroup(s, A.semigroup(t, x));
        const StateVector b = A.semigroup(s + t, x);
        for (std::size_t k = 0; k < n; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
        CHECK(norm(A.semigroup(t, x)) <= norm(x) + 1e-15);
    }
}

TEST_CASE("fractional powers") {
    CHECK(SpectralOperator({4.0}).power(0.5, StateVector({1.0}))[0] == doctest::Approx(2.0));
    CHECK(SpectralOperator({2.0}).power(0.0, StateVector({7.0}))[0] == 7.0);
    CHECK(SpectralOperator({2.0}).power(-1.0, StateVector({2.0}))[0] == doctest::Approx(1.0));

    // composition A^s A^r = A^{s+r}
    CounterRng rng(7, 0);
    const SpectralOperator A({0.5, 2.0, 9.0});
    StateVector x({1.2, -0.7, 0.3});
    for (int trial = 0; trial < 10; ++trial) {
        const double s = 2.0 * rng.uniform() - 1.0, r = 2.0 * rng.uniform() - 1.0;
        const StateVector a = A.power(s, A.power(r, x));
        const StateVector b = A.power(s + r, x);
        for (std::size_t k = 0; k < x.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
    }
}

TEST_CASE("interpolation seminorm closed form") {
    CHECK(SpectralOperator({1.0}).half_norm_sq(StateVector({1.0})) == doctest::Approx(0.5));
    CHECK(SpectralOperator({2.0}).half_norm_sq(StateVector({0.0})) == 0.0);
    CHECK(SpectralOperator({1.0, 3.0}).half_norm_sq(StateVector({1.0, 1.0})) == doctest::Approx(2.0));
}

TEST_CASE("interpolation seminorm matches the defining integral") {
    const SpectralOperator A({0.7, 2.3, 6.1});
    const StateVector x({1.0, -2.0, 0.5});
    const double horizon = 40.0 / A.spectral_gap();
    const double quad = adaptive_simpson(
        [&](double t) {
            double s = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) {
                const double v = A.eigenvalue(k) * std::exp(-t * A.eigenvalue(k)) * x[k];
                s += v * v;
            }
            return s;
        },
        0.0, horizon, 1e-12);
    CHECK(quad == doctest::Approx(A.half_norm_sq(x)).epsilon(1e-8));
}

TEST_CASE("contract violations") {
    const SpectralOperator A({1.0, 2.0});
    CHECK_THROWS_AS(A.semigroup(1.0, StateVector({1.0})), std::invalid_argument);
    CHECK_THROWS_AS(A.semigroup(-0.5, StateVector({1.0, 1.0})), std::domain_error);
    CHECK_THROWS_AS(SpectralOperator({-1.0}), std::invalid_argument);
    CHECK_THROWS_AS(SpectralOperator({2.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(SpectralOperator(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("segment grid validation") {
    const Segment s = Segment::zero(2, 0.25, 0.25 / 8.0);
    CHECK(s.nodes() == 9);
    s.validate("test");
    CHECK_THROWS_AS(Segment::zero(2, 0.25, 0.1), std::invalid_argument);

    Segment bad = s;
    bad.values.pop_back();
    CHECK_THROWS_AS(bad.validate("test"), std::invalid_argument);
}
