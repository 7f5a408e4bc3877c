#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "shiftlab/delay.hpp"
#include "shiftlab/parallel.hpp"

using namespace shiftlab;

namespace {

const double kTau = 0.25;
const double kStep = 1.0 / 256.0;

DelayModel make_model(DelayDrift drift, double sigma0) {
    return DelayModel{SpectralOperator::power_spectrum(3, 1.0), kTau, std::move(drift), sigma0};
}

StateVector pattern(std::size_t dim, double scale) {
    StateVector v(dim);
    for (std::size_t k = 0; k < dim; ++k) v[k] = scale / static_cast<double>((k + 1) * (k + 1));
    return v;
}

// deterministic delay ODE m' = -Am + C1 m(t) + C2 m(t-tau) solved by RK4
// with a dense history table (independent of the exponential-Euler path)
std::vector<StateVector> delay_ode_rk4(const SpectralOperator& A, const StateVector& c1, const StateVector& c2,
                                       const Segment& xi, double T, double h) {
    const std::size_t dim = A.dim();
    const std::size_t n_hist = static_cast<std::size_t>(std::llround(kTau / h));
    const std::size_t n_steps = static_cast<std::size_t>(std::llround(T / h));
    std::vector<StateVector> table(n_hist + n_steps + 1, StateVector(dim));
    for (std::size_t j = 0; j <= n_hist; ++j) {
        const double s = -kTau + static_cast<double>(j) * h;
        const double pos = (s + kTau) / xi.step;
        const std::size_t i = std::min(static_cast<std::size_t>(pos), xi.values.size() - 2);
        const double w = pos - static_cast<double>(i);
        for (std::size_t k = 0; k < dim; ++k)
            table[j][k] = (1.0 - w) * xi.values[i][k] + w * xi.values[i + 1][k];
    }
    // table index of time t - tau (grid-aligned t): node (t - tau + tau)/h = t/h
    auto rhs = [&](double t, const StateVector& m, const std::vector<StateVector>& tab) {
        const std::size_t j = static_cast<std::size_t>(std::llround(t / h));
        StateVector out(dim);
        for (std::size_t k = 0; k < dim; ++k)
            out[k] = -A.eigenvalue(k) * m[k] + c1[k] * m[k] + c2[k] * tab[j][k];
        return out;
    };
    for (std::size_t n = 0; n < n_steps; ++n) {
        const double t = static_cast<double>(n) * h;
        const StateVector& m = table[n_hist + n];
        const StateVector k1 = rhs(t, m, table);
        // midpoint history: average of neighbours (second-order accurate)
        StateVector mid_hist(dim);
        {
            const std::size_t j = n;  // index of t - tau
            for (std::size_t k = 0; k < dim; ++k) mid_hist[k] = 0.5 * (table[j][k] + table[j + 1][k]);
        }
        auto rhs_mid = [&](const StateVector& y) {
            StateVector out(dim);
            for (std::size_t k = 0; k < dim; ++k)
                out[k] = -A.eigenvalue(k) * y[k] + c1[k] * y[k] + c2[k] * mid_hist[k];
            return out;
        };
        const StateVector k2 = rhs_mid(m + (h / 2.0) * k1);
        const StateVector k3 = rhs_mid(m + (h / 2.0) * k2);
        const StateVector k4 = rhs(t + h, m + h * k3, table);
        table[n_hist + n + 1] = m + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return table;
}

}  // namespace

TEST_CASE("tracking control from a raw segment") {
    const SpectralOperator A = SpectralOperator::power_spectrum(3, 1.0);

    // homogeneous profile: eta' + A eta = 0 up to O(step^2)
    const ShiftProfile decay = ShiftProfile::decay(pattern(3, 0.5));
    const Segment eta = decay.sample(A, kTau, kTau / 64.0);
    const ControlFunction psi = tracking_control_fd(A, eta);
    CHECK(std::sqrt(psi.l2_norm_sq()) < 5e-3);

    // constant profile: psi == A v
    const StateVector v = pattern(3, 1.0);
    const ControlFunction cpsi = tracking_control_fd(A, Segment::constant(v, kTau, kTau / 16.0));
    for (const auto& node : cpsi.values)
        for (std::size_t k = 0; k < 3; ++k) CHECK(node[k] == doctest::Approx(A.eigenvalue(k) * v[k]).epsilon(1e-9));

    // zero profile
    const ControlFunction zpsi = tracking_control_fd(A, Segment::zero(3, kTau, kTau / 16.0));
    CHECK(zpsi.l2_norm_sq() == 0.0);

    // too coarse
    Segment coarse = Segment::constant(v, kTau, kTau);
    CHECK_THROWS_AS(tracking_control_fd(A, coarse), std::invalid_argument);
}

TEST_CASE("exact tracking control matches the finite-difference route") {
    const SpectralOperator A = SpectralOperator::power_spectrum(3, 1.0);
    const ShiftProfile eta = ShiftProfile::poly(pattern(3, 0.4), 1.0, 0.5, -0.25);
    const ControlFunction exact = tracking_control(A, eta, kTau, kTau / 128.0);
    const ControlFunction fd = tracking_control_fd(A, eta.sample(A, kTau, kTau / 128.0));
    double worst = 0.0;
    for (std::size_t i = 0; i < exact.values.size(); ++i) worst = std::max(worst, norm(exact.values[i] - fd.values[i]));
    CHECK(worst < 1e-4);
}

TEST_CASE("shift profile endpoints and seam continuity") {
    const SpectralOperator A = SpectralOperator::power_spectrum(3, 1.0);
    const double T = 1.0;
    const ShiftProfile eta = ShiftProfile::decay(pattern(3, 0.5));
    const ShiftSpec spec = make_shift_spec(A, eta, kTau, T, kStep, ControlVariant::gramian);

    const StateVector at_T = shift_profile_at(A, spec, kTau, T, T);
    const StateVector eta0 = eta.value(A, kTau, 0.0);
    CHECK(norm(at_T - eta0) < 1e-12);

    CHECK(norm(shift_profile_at(A, spec, kTau, T, 0.0)) == 0.0);

    const double seam = T - kTau;
    const StateVector lower = shift_profile_at(A, spec, kTau, T, seam - kStep);
    const StateVector upper = shift_profile_at(A, spec, kTau, T, seam);
    const StateVector target = eta.value(A, kTau, -kTau);
    CHECK(norm(upper - target) < 1e-12);
    // one grid step below the seam: off by at most step * ||Gamma'|| there
    const double slope = norm(spec.steer.values.back()) + norm(A.power(1.0, target));
    CHECK(norm(lower - target) < 1.5 * kStep * slope);

    CHECK_THROWS_AS(shift_profile_at(A, spec, kTau, T, -0.1), std::domain_error);
    CHECK_THROWS_AS(shift_profile_at(A, spec, kTau, T, T + 0.1), std::domain_error);

    // the grid node at the seam carries exactly the target profile value
    const ShiftProfileGrid grid = shift_profile_grid(A, spec, kTau, T, kStep);
    const std::size_t seam_node = grid_steps(seam, kStep, "test");
    StateVector seam_value(3);
    for (std::size_t k = 0; k < 3; ++k) seam_value[k] = grid.at_step(seam_node)[k];
    CHECK(norm(seam_value - target) < 1e-12);
    // and the last quadrature node before it is within one drift step
    StateVector seam_minus(3);
    for (std::size_t k = 0; k < 3; ++k) seam_minus[k] = grid.at_step(seam_node - 1)[k];
    CHECK(norm(seam_minus - target) < 1.5 * kStep * slope);
}

TEST_CASE("pure semigroup decay without noise or drift") {
    const DelayModel model = make_model(DelayDrift::zero(), 0.0);
    const Segment xi = Segment::constant(pattern(3, 1.0), kTau, kStep);
    CounterRng rng(1, 0);
    const PathRecord p = simulate(model, xi, 1.0, kStep, rng);
    const StateVector expected = model.A.semigroup(1.0, xi.newest());
    const double* xT = p.state_at_step(p.n_steps);
    for (std::size_t k = 0; k < 3; ++k) CHECK(xT[k] == doctest::Approx(expected[k]).epsilon(1e-12));
}

TEST_CASE("driven noiseless path follows the displacement profile") {
    const DelayModel model = make_model(DelayDrift::zero(), 0.0);
    const SpectralOperator& A = model.A;
    const double T = 1.0;
    const ShiftProfile eta = ShiftProfile::decay(pattern(3, 0.5));
    const ShiftSpec spec = make_shift_spec(A, eta, kTau, T, kStep, ControlVariant::gramian);
    const ShiftProfileGrid gamma = shift_profile_grid(A, spec, kTau, T, kStep);
    const std::vector<double> branch = branch_drift_nodes(spec, T, kStep);

    const Segment xi = Segment::zero(3, kTau, kStep);
    CounterRng rng(1, 0);
    const PathRecord p = simulate(model, xi, T, kStep, rng, branch);
    double worst = 0.0;
    for (std::size_t n = 0; n <= p.n_steps; ++n) {
        double d = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            const double diff = p.state_at_step(n)[k] - gamma.at_step(n)[k];
            d += diff * diff;
        }
        worst = std::max(worst, std::sqrt(d));
    }
    const double scale = std::sqrt(spec.steer.l2_norm_sq()) + std::sqrt(spec.track.l2_norm_sq());
    CHECK(worst <= 5.0 * kStep * (1.0 + scale));
}

TEST_CASE("noisy mean matches the deterministic delay ODE") {
    const StateVector c1(3, 0.2), c2(3, 0.4);
    const DelayModel model = make_model(DelayDrift::linear(c1, c2), 0.5);
    const Segment xi = Segment::constant(pattern(3, 0.8), kTau, kStep);
    const double T = 1.0;

    const auto table = delay_ode_rk4(model.A, c1, c2, xi, T, kStep / 8.0);
    const StateVector ode_mean = table.back();

    const std::size_t n_paths = 10000;
    ObservableMatrix obs = ensemble_map(n_paths, 3, 1, [&](std::size_t i, std::span<double> row) {
        CounterRng rng(404, i);
        const PathRecord p = simulate(model, xi, T, kStep, rng);
        for (std::size_t k = 0; k < 3; ++k) row[k] = p.state_at_step(p.n_steps)[k];
    });
    for (std::size_t k = 0; k < 3; ++k) {
        const double mean = column_mean(obs, k);
        const double se = std::sqrt(column_cov(obs, k, k) / static_cast<double>(n_paths));
        CHECK(std::abs(mean - ode_mean[k]) <= 3.0 * se + 1e-3);
    }
}

TEST_CASE("simulation determinism and input validation") {
    const DelayModel model = make_model(DelayDrift::bounded_smooth(0.5), 1.0);
    const Segment xi = Segment::constant(pattern(3, 0.6), kTau, kStep);
    CounterRng r1(77, 5), r2(77, 5);
    const PathRecord a = simulate(model, xi, 1.0, kStep, r1);
    const PathRecord b = simulate(model, xi, 1.0, kStep, r2);
    CHECK(a.states == b.states);
    CHECK(a.noise == b.noise);

    CounterRng r3(77, 6);
    const PathRecord c = simulate(model, xi, 1.0, kStep, r3);
    CHECK(a.states != c.states);

    CounterRng r4(77, 5);
    CHECK_THROWS_AS(simulate(model, xi, 1.0, 1.0 / 300.0, r4), std::invalid_argument);
}

TEST_CASE("coupled pair separates by exactly the target profile") {
    const DelayModel model = make_model(DelayDrift::bounded_smooth(0.5), 1.0);
    const SpectralOperator& A = model.A;
    const double T = 1.0, eps = 0.75;
    const ShiftProfile eta = ShiftProfile::poly(pattern(3, 0.4), 1.0, 0.5, -0.25);
    const ShiftSpec spec = make_shift_spec(A, eta, kTau, T, kStep, ControlVariant::gramian);
    const ShiftProfileGrid gamma = shift_profile_grid(A, spec, kTau, T, kStep);
    std::vector<double> branch = branch_drift_nodes(spec, T, kStep);
    for (double& v : branch) v *= eps;

    const Segment xi = Segment::constant(pattern(3, 0.7), kTau, kStep);
    CounterRng r1(909, 3), r2(909, 3);
    const PathRecord x = simulate(model, xi, T, kStep, r1);

    // y runs with the same noise and the drift frozen at x's history
    DelayModel frozen = make_model(DelayDrift::zero(), 1.0);
    std::vector<double> extra((x.n_steps + 1) * 3, 0.0);
    {
        std::vector<double> fx(3);
        for (std::size_t n = 0; n <= x.n_steps; ++n) {
            model.F.eval(x.segment_at_step(n), fx.data());
            for (std::size_t k = 0; k < 3; ++k) extra[n * 3 + k] = fx[k] + branch[n * 3 + k];
        }
    }
    const PathRecord y = simulate(frozen, xi, T, kStep, r2, extra);

    const double scale = std::sqrt(spec.steer.l2_norm_sq()) + std::sqrt(spec.track.l2_norm_sq());
    double worst = 0.0;
    for (std::size_t n = 0; n <= x.n_steps; ++n) {
        double d = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            const double diff = y.state_at_step(n)[k] - x.state_at_step(n)[k] - eps * gamma.at_step(n)[k];
            d += diff * diff;
        }
        worst = std::max(worst, std::sqrt(d));
    }
    CHECK(worst <= 5.0 * kStep * (1.0 + eps * scale));

    // final segment displacement equals eps * eta nodewise (same tolerance)
    const Segment xT = x.final_segment(), yT = y.final_segment();
    for (std::size_t j = 0; j <= x.n_hist; ++j) {
        const StateVector ev = eta.value(A, kTau, -kTau + static_cast<double>(j) * kStep);
        CHECK(norm(yT.values[j] - xT.values[j] - eps * ev) <= 5.0 * kStep * (1.0 + eps * scale));
    }
}

TEST_CASE("girsanov log weight: identities") {
    const DelayModel model = make_model(DelayDrift::zero(), 1.0);
    const Segment xi = Segment::zero(3, kTau, kStep);
    const double T = 0.5;

    CounterRng rng(31, 0);
    const PathRecord p = simulate(model, xi, T, kStep, rng);
    const std::vector<double> zero_h((p.n_steps + 1) * 3, 0.0);
    CHECK(log_girsanov_weight(p, zero_h) == 0.0);

    // deterministic h: E R = 1 and E log R = -1/2 int ||h||^2
    std::vector<double> h((p.n_steps + 1) * 3);
    for (std::size_t n = 0; n <= p.n_steps; ++n)
        for (std::size_t k = 0; k < 3; ++k)
            h[n * 3 + k] = 0.4 * std::sin(1.0 + static_cast<double>(n) * kStep + static_cast<double>(k));
    double quad = 0.0;
    for (std::size_t n = 0; n < p.n_steps; ++n)
        for (std::size_t k = 0; k < 3; ++k) quad += h[n * 3 + k] * h[n * 3 + k] * kStep;

    const std::size_t n_paths = 20000;
    ObservableMatrix obs = ensemble_map(n_paths, 2, 1, [&](std::size_t i, std::span<double> row) {
        CounterRng r(32, i);
        const PathRecord q = simulate(model, xi, T, kStep, r);
        const double lw = log_girsanov_weight(q, h);
        row[0] = std::exp(lw);
        row[1] = lw;
    });
    const double mean_r = column_mean(obs, 0);
    const double se_r = std::sqrt(column_cov(obs, 0, 0) / static_cast<double>(n_paths));
    CHECK(std::abs(mean_r - 1.0) <= 3.0 * se_r);
    const double mean_lr = column_mean(obs, 1);
    const double se_lr = std::sqrt(column_cov(obs, 1, 1) / static_cast<double>(n_paths));
    CHECK(std::abs(mean_lr + 0.5 * quad) <= 3.0 * se_lr);
}

TEST_CASE("drift lipschitz constants bound sampled difference quotients") {
    const std::size_t dim = 3;
    std::vector<DelayDrift> drifts;
    drifts.push_back(DelayDrift::linear(StateVector(dim, 0.2), StateVector(dim, 0.4)));
    drifts.push_back(DelayDrift::bounded_smooth(0.7));
    for (const auto& drift : drifts) {
        const double L = drift.lipschitz();
        for (int trial = 0; trial < 50; ++trial) {
            CounterRng rng(515, static_cast<std::uint64_t>(trial));
            Segment a = Segment::zero(dim, kTau, kTau / 8.0), b = a;
            for (auto& v : a.values)
                for (std::size_t k = 0; k < dim; ++k) v[k] = rng.normal();
            for (auto& v : b.values)
                for (std::size_t k = 0; k < dim; ++k) v[k] = rng.normal();
            StateVector fa(dim), fb(dim);
            drift.eval(SegmentRef::of(a), fa.data());
            drift.eval(SegmentRef::of(b), fb.data());
            double sup = 0.0;
            for (std::size_t j = 0; j < a.values.size(); ++j) sup = std::max(sup, norm(a.values[j] - b.values[j]));
            if (sup > 0.0) CHECK(norm(fa - fb) <= L * sup * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("modulus drift obeys its continuity modulus") {
    const std::size_t dim = 3;
    const DelayDrift drift = DelayDrift::modulus(0.8, pattern(dim, 1.0));
    CHECK_FALSE(drift.differentiable());
    for (int trial = 0; trial < 50; ++trial) {
        CounterRng rng(616, static_cast<std::uint64_t>(trial));
        Segment a = Segment::zero(dim, kTau, kTau / 8.0), b = a;
        for (auto& v : a.values)
            for (std::size_t k = 0; k < dim; ++k) v[k] = 2.0 * rng.normal();
        for (auto& v : b.values)
            for (std::size_t k = 0; k < dim; ++k) v[k] = 2.0 * rng.normal();
        StateVector fa(dim), fb(dim);
        drift.eval(SegmentRef::of(a), fa.data());
        drift.eval(SegmentRef::of(b), fb.data());
        double sup = 0.0;
        for (std::size_t j = 0; j < a.values.size(); ++j) sup = std::max(sup, norm(a.values[j] - b.values[j]));
        CHECK(norm(fa - fb) <= drift.modulus_gamma(sup) * (1.0 + 1e-12));
    }
}

TEST_CASE("harnack exponent: trivial, ordering, closed forms, errors") {
    const DelayModel model = make_model(DelayDrift::bounded_smooth(0.5), 1.0);
    const SpectralOperator& A = model.A;
    const double T = 1.0;

    const ShiftSpec zero = make_shift_spec(A, ShiftProfile::zero(3), kTau, T, kStep, ControlVariant::gramian);
    CHECK(harnack_exponent_delay(model, zero, T, 2.0, HarnackVariant::gramian) == 0.0);

    const ShiftSpec spec =
        make_shift_spec(A, ShiftProfile::decay(pattern(3, 0.5)), kTau, T, kStep, ControlVariant::gramian);
    const double exact = harnack_exponent_delay(model, spec, T, 2.0, HarnackVariant::gramian);
    const double energy = harnack_exponent_delay(model, spec, T, 2.0, HarnackVariant::energy);
    const double selfadj = harnack_exponent_delay(model, spec, T, 2.0, HarnackVariant::selfadjoint);
    CHECK(exact > 0.0);
    CHECK(exact <= energy * (1.0 + 1e-12));
    CHECK(exact <= selfadj * (1.0 + 1e-12));

    CHECK_THROWS_AS(harnack_exponent_delay(model, spec, T, 1.0, HarnackVariant::gramian), std::domain_error);
    CHECK_THROWS_AS(harnack_exponent_delay(model, spec, kTau, 2.0, HarnackVariant::gramian), std::domain_error);

    // single-mode selfadjoint bound: 2 ||A^{1/2} x||^2 / (1 - e^{-2 (T-tau)})
    const DelayModel one{SpectralOperator({1.0}), 0.5, DelayDrift::zero(), 1.0};
    const ShiftSpec sone = make_shift_spec(one.A, ShiftProfile::constant(StateVector({1.0})), 0.5, 1.5,
                                           1.0 / 256.0, ControlVariant::gramian);
    const double expected_energy = 2.0 / (-std::expm1(-2.0));
    const double got = harnack_exponent_delay(one, sone, 1.5, 2.0, HarnackVariant::selfadjoint);
    // strip the psi and sup terms by reconstructing the bracket
    const double psi_sq = sone.track.l2_norm_sq();
    const double sup_sq = sone.eta.sup_norm() * sone.eta.sup_norm();
    const double bracket = got / (2.0 * 1.0 / (2.0 - 1.0));
    const double energy_term = bracket - psi_sq - 0.5 * std::max(1.0 * expected_energy, sup_sq);
    CHECK(energy_term == doctest::Approx(0.5 * 2.0 * expected_energy).epsilon(1e-9));

    // in one mode the gramian and selfadjoint brackets coincide
    const double g1 = harnack_exponent_delay(one, sone, 1.5, 2.0, HarnackVariant::gramian);
    CHECK(g1 == doctest::Approx(got).epsilon(1e-12));
}

TEST_CASE("modulus exponent uses the drift modulus") {
    const DelayModel model = make_model(DelayDrift::modulus(0.8, pattern(3, 1.0)), 1.0);
    const double T = 1.0;
    const ShiftSpec spec =
        make_shift_spec(model.A, ShiftProfile::decay(pattern(3, 0.5)), kTau, T, kStep, ControlVariant::gramian);
    const double span = T - kTau;
    const StateVector target = spec.eta.oldest();
    const double E = min_energy_norm_sq(model.A, StateVector(3, 1.0), span, target);
    const double arg = std::max(spec.eta.sup_norm(), std::sqrt(span * E));
    const double g = model.F.modulus_gamma(arg);
    const double expected = (1.0 * 2.0 / (2.0 - 1.0)) * (E + T * g * g + spec.track.l2_norm_sq());
    CHECK(harnack_exponent_delay(model, spec, T, 2.0, HarnackVariant::modulus) ==
          doctest::Approx(expected).epsilon(1e-12));

    // Lipschitz-bracket variants are rejected for the non-Lipschitz drift
    CHECK_THROWS_AS(harnack_exponent_delay(model, spec, T, 2.0, HarnackVariant::gramian), std::invalid_argument);
}

TEST_CASE("coupling drift branches and trivial cases") {
    const DelayModel model = make_model(DelayDrift::bounded_smooth(0.5), 2.0);
    const double T = 1.0;
    const ShiftSpec spec =
        make_shift_spec(model.A, ShiftProfile::decay(pattern(3, 0.5)), kTau, T, kStep, ControlVariant::gramian);
    const Segment seg = Segment::constant(pattern(3, 0.3), kTau, kStep);

    // eps = 0, identical segments: no drift
    const StateVector h0 = coupling_drift(model, spec, 0.0, T, 0.5, seg, seg);
    CHECK(norm(h0) == 0.0);

    // zero-drift model: pure branch value scaled by eps / sigma
    const DelayModel pure = make_model(DelayDrift::zero(), 2.0);
    const StateVector h1 = coupling_drift(pure, spec, 0.5, T, 0.0, seg, seg);
    const StateVector expect = (0.5 / 2.0) * spec.steer.values[0];
    CHECK(norm(h1 - expect) < 1e-12);

    // tracking branch at t >= T - tau
    const StateVector h2 = coupling_drift(pure, spec, 1.0, T, T - kTau, seg, seg);
    CHECK(norm(h2 - (1.0 / 2.0) * spec.track.values[0]) < 1e-12);

    Segment misaligned = Segment::constant(pattern(3, 0.3), kTau, kStep / 2.0);
    CHECK_THROWS_AS(coupling_drift(model, spec, 0.5, T, 0.5, seg, misaligned), std::invalid_argument);
}
