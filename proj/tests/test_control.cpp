#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "shiftlab/control.hpp"
#include "shiftlab/rng.hpp"

using namespace shiftlab;

namespace {

// frozen by the closed forms 2/(1-e^{-2}) and int_0^1 (3-2s)^2 e^{-2s} ds
constexpr double kMinEnergy1 = 2.3130352854993312;
constexpr double kRampEnergy1 = 2.4323323583816936;

ControlFunction constant_control(std::size_t dim, double horizon, std::size_t n, double value) {
    ControlFunction f = ControlFunction::zero(dim, horizon, n);
    for (auto& v : f.values)
        for (std::size_t k = 0; k < dim; ++k) v[k] = value;
    return f;
}

}  // namespace

TEST_CASE("apply_LT basics") {
    const SpectralOperator A({1.0});
    const StateVector B({1.0});

    const ControlFunction zero = ControlFunction::zero(1, 1.0, 64);
    CHECK(apply_LT(A, B, 1.0, zero)[0] == 0.0);

    const ControlFunction one = constant_control(1, 1.0, 1 << 12, 1.0);
    CHECK(apply_LT(A, B, 1.0, one)[0] == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-8));

    CHECK_THROWS_AS(apply_LT(A, B, 2.0, one), std::invalid_argument);
}

TEST_CASE("gramian closed form") {
    const SpectralOperator A({1.0});
    CHECK(gramian(A, StateVector({1.0}), 1.0).entries[0] == doctest::Approx(0.43233235838169365).epsilon(1e-12));
    CHECK(gramian(A, StateVector({1.0}), 100.0).entries[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(gramian(A, StateVector({2.0}), 1.0).entries[0] == doctest::Approx(1.7293294335267746).epsilon(1e-12));
    CHECK_THROWS_AS(gramian(A, StateVector({1.0}), 0.0), std::domain_error);
}

TEST_CASE("gramian matches trapezoid quadrature") {
    const double lam = 2.4, b = 0.8, T = 1.3;
    const std::size_t n = 1 << 15;
    double quad = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        const double t = T * static_cast<double>(i) / static_cast<double>(n);
        quad += w * (T / n) * b * b * std::exp(-2.0 * t * lam);
    }
    CHECK(gramian(SpectralOperator({lam}), StateVector({b}), T).entries[0] == doctest::Approx(quad).epsilon(1e-8));
}

TEST_CASE("minimal energy control: single mode") {
    const SpectralOperator A({1.0});
    const StateVector B({1.0}), x({1.0});

    CHECK(min_energy_norm_sq(A, B, 1.0, x) == doctest::Approx(kMinEnergy1).epsilon(1e-10));
    CHECK(min_energy_norm_sq(A, B, 1.0, StateVector({0.0})) == 0.0);

    const ControlFunction f = min_energy_control(A, B, 1.0, x);
    CHECK(apply_LT(A, B, 1.0, f)[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(f.l2_norm_sq() == doctest::Approx(kMinEnergy1).epsilon(1e-6));

    CHECK_THROWS_AS(min_energy_control(A, StateVector({0.0}), 1.0, x), std::invalid_argument);
}

TEST_CASE("minimal energy scaling") {
    const SpectralOperator A({1.0, 4.0, 9.0});
    const StateVector B({1.0, 1.0, 1.0});
    const StateVector x({0.3, -1.1, 0.7});
    const double base = min_energy_norm_sq(A, B, 0.7, x);
    CHECK(min_energy_norm_sq(A, B, 0.7, 3.0 * x) == doctest::Approx(9.0 * base).epsilon(1e-14));
}

TEST_CASE("ramp control: single mode values and bound") {
    const SpectralOperator A({1.0});
    const StateVector B({1.0}), x({1.0});

    const ControlFunction f = ramp_control(A, B, 1.0, x);
    // f(t) = (1+2t) e^{-(1-t)}
    CHECK(f.values[0][0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(f.values.back()[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.l2_norm_sq() == doctest::Approx(kRampEnergy1).epsilon(1e-6));
    CHECK(apply_LT(A, B, 1.0, f)[0] == doctest::Approx(1.0).epsilon(1e-6));

    const double bound = ramp_control_energy_bound(A, B, 1.0, x);
    CHECK(bound == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(f.l2_norm_sq() <= bound);

    const ControlFunction f0 = ramp_control(A, B, 1.0, StateVector({0.0}));
    CHECK(f0.l2_norm_sq() == 0.0);
}

TEST_CASE("minimality sandwich over random instances") {
    for (int trial = 0; trial < 100; ++trial) {
        CounterRng rng(11, static_cast<std::uint64_t>(trial));
        const std::size_t dim = 1 + static_cast<std::size_t>(rng.uniform() * 6.0);
        std::vector<double> lam(dim);
        for (double& l : lam) l = 0.3 + 20.0 * rng.uniform();
        std::sort(lam.begin(), lam.end());
        const SpectralOperator A(lam);
        const StateVector B(dim, 1.0);
        const double T = 0.25 + 3.75 * rng.uniform();
        StateVector x(dim);
        for (std::size_t k = 0; k < dim; ++k) x[k] = rng.normal();

        const double lower = min_energy_norm_sq(A, B, T, x);
        const double mid = ramp_control(A, B, T, x).l2_norm_sq();
        const double upper = ramp_control_energy_bound(A, B, T, x);
        CHECK(lower <= mid * (1.0 + 1e-9) + 1e-12);
        CHECK(mid <= upper * (1.0 + 1e-9) + 1e-12);
    }
}

TEST_CASE("interpolation exactness for all constructed controls") {
    for (int trial = 0; trial < 25; ++trial) {
        CounterRng rng(13, static_cast<std::uint64_t>(trial));
        const std::size_t dim = 1 + static_cast<std::size_t>(rng.uniform() * 4.0);
        std::vector<double> lam(dim);
        for (double& l : lam) l = 0.4 + 15.0 * rng.uniform();
        std::sort(lam.begin(), lam.end());
        const SpectralOperator A(lam);
        const StateVector B(dim, 1.0);
        const double T = 0.5 + 2.0 * rng.uniform();
        StateVector x(dim);
        for (std::size_t k = 0; k < dim; ++k) x[k] = rng.normal();

        const double tol = 1e-6 * (1.0 + norm(x));
        CHECK(norm(apply_LT(A, B, T, min_energy_control(A, B, T, x)) - x) <= tol);
        CHECK(norm(apply_LT(A, B, T, ramp_control(A, B, T, x)) - x) <= tol);
        CHECK(norm(apply_LT(A, StateVector(dim, 1.0), T,
                            synthesized_control(A, T, x, ScalarRamp::quadratic(T))) -
                   x) <= tol);
    }
}

TEST_CASE("synthesized control reproduces the ramp control for the linear weight") {
    const SpectralOperator A({1.0, 3.0});
    const StateVector x({1.0, -0.5});
    const double T = 1.25;
    const ControlFunction a = ramp_control(A, StateVector({1.0, 1.0}), T, x, 512);
    const ControlFunction b = synthesized_control(A, T, x, ScalarRamp::linear(T), nullptr, 512);
    REQUIRE(a.values.size() == b.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i)
        for (std::size_t k = 0; k < 2; ++k) CHECK(a.values[i][k] == doctest::Approx(b.values[i][k]).epsilon(1e-10));
}

TEST_CASE("synthesized control with a quadratic weight exceeds the minimal energy") {
    const SpectralOperator A({1.0});
    const StateVector x({1.0});
    const ControlFunction g = synthesized_control(A, 1.0, x, ScalarRamp::quadratic(1.0));
    CHECK(apply_LT(A, StateVector({1.0}), 1.0, g)[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(g.l2_norm_sq() >= kMinEnergy1 - 1e-9);

    // zero target gives the zero control
    const ControlFunction z = synthesized_control(A, 1.0, StateVector({0.0}), ScalarRamp::quadratic(1.0));
    CHECK(z.l2_norm_sq() == 0.0);
}

TEST_CASE("synthesized control endpoint validation") {
    const SpectralOperator A({1.0});
    ScalarRamp bad{[](double t) { return t; }, [](double) { return 1.0; }};  // u(T) != 1 for T != 1
    CHECK_THROWS_AS(synthesized_control(A, 2.0, StateVector({1.0}), bad), std::invalid_argument);
}

TEST_CASE("synthesized control with a forcing term still interpolates") {
    const SpectralOperator A({1.0, 2.0});
    const double T = 1.0;
    ControlFunction h = ControlFunction::zero(2, T, 1 << 10);
    for (std::size_t i = 0; i < h.values.size(); ++i) {
        const double t = h.time_at(i);
        h.values[i][0] = std::sin(3.0 * t);
        h.values[i][1] = 0.5 * t;
    }
    const StateVector x({0.7, -0.2});
    const ControlFunction g = synthesized_control(A, T, x, ScalarRamp::linear(T), &h, 1 << 10);
    const StateVector hit = apply_LT(A, StateVector({1.0, 1.0}), T, g);
    CHECK(hit[0] == doctest::Approx(x[0]).epsilon(1e-5));
    CHECK(hit[1] == doctest::Approx(x[1]).epsilon(1e-5));
}

TEST_CASE("resample flags interpolation") {
    ControlFunction f = ControlFunction::zero(1, 1.0, 8);
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i][0] = static_cast<double>(i);
    bool interp = false;
    const ControlFunction same = resample(f, f.step, interp);
    CHECK_FALSE(interp);
    CHECK(same.values.size() == f.values.size());
    const ControlFunction finer = resample(f, f.step / 2.0, interp);
    CHECK(interp);
    CHECK(finer.values.size() == 17);
    CHECK(finer.values[1][0] == doctest::Approx(0.5));
}
