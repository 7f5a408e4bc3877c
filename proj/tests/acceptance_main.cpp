// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one pass/fail line per criterion.  Exits nonzero when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "shiftlab/config.hpp"
#include "shiftlab/oracles.hpp"
#include "shiftlab/parallel.hpp"
#include "shiftlab/report.hpp"
#include "shiftlab/suites.hpp"
#include "shiftlab/verify.hpp"

using namespace shiftlab;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %-34s %s\n", pass ? "PASS" : "FAIL", criterion, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

StateVector pattern(std::size_t dim, double scale, double power = 2.0) {
    StateVector v(dim);
    for (std::size_t k = 0; k < dim; ++k) v[k] = scale / std::pow(static_cast<double>(k + 1), power);
    return v;
}

StateVector low_mode(std::size_t dim, double scale) {
    StateVector e(dim);
    for (std::size_t k = 0; k < std::min<std::size_t>(dim, 4); ++k)
        e[k] = scale / static_cast<double>((k + 1) * (k + 1));
    return e;
}

constexpr double kTau = 0.25;
constexpr double kStep = 1.0 / 256.0;
constexpr std::size_t kDim = 8;

DelayModel default_linear_model() {
    return DelayModel{SpectralOperator::power_spectrum(kDim, 1.0), kTau,
                      DelayDrift::linear(StateVector(kDim, 0.2), StateVector(kDim, 0.3)), 1.0};
}

DelayModel default_smooth_model() {
    return DelayModel{SpectralOperator::power_spectrum(kDim, 1.0), kTau, DelayDrift::bounded_smooth(0.5), 1.0};
}

EvolutionModel default_burgers_model() {
    return make_evolution_model(16, 1.5, 0.5, 0.25, EvolutionModel::Nonlinearity::burgers);
}

EvolutionModel default_gaussian_model() {
    return make_evolution_model(16, 1.5, 0.5, 0.25, EvolutionModel::Nonlinearity::zero);
}

// ---------------------------------------------------------------------------

void criterion_1_control_exactness() {
    const auto t0 = std::chrono::steady_clock::now();
    const SpectralOperator A = SpectralOperator::power_spectrum(kDim, 1.0);
    const StateVector B(kDim, 1.0);
    bool ok = true;
    std::string detail;

    for (int trial = 0; trial < 5 && ok; ++trial) {
        CounterRng rng(1000, static_cast<std::uint64_t>(trial));
        StateVector x(kDim);
        for (std::size_t k = 0; k < kDim; ++k) x[k] = rng.normal();
        const double err = norm(apply_LT(A, B, 1.0, min_energy_control(A, B, 1.0, x)) - x);
        if (err > 1e-6 * (1.0 + norm(x))) {
            ok = false;
            detail = "steering residual " + fmt(err);
        }
        double closed = 0.0;
        for (std::size_t k = 0; k < kDim; ++k)
            closed += x[k] * x[k] * 2.0 * A.eigenvalue(k) / (-std::expm1(-2.0 * A.eigenvalue(k)));
        const double lib = min_energy_norm_sq(A, B, 1.0, x);
        if (std::abs(lib - closed) > 1e-10 * std::abs(closed)) {
            ok = false;
            detail = "closed-form mismatch " + fmt(lib - closed);
        }
    }
    const double single = min_energy_norm_sq(SpectralOperator({1.0}), StateVector({1.0}), 1.0, StateVector({1.0}));
    if (std::abs(single - 2.313035) > 1e-5) {
        ok = false;
        detail = "single-mode value " + fmt(single);
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (dt > 1.0) {
        ok = false;
        detail = "runtime " + fmt(dt) + " s";
    }
    if (ok) detail = "residuals within 1e-6, closed form to 1e-10, single mode " + fmt(single) + ", " + fmt(dt) + " s";
    report(1, "control exactness", ok, detail);
}

void criterion_2_minimality_sandwich() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        CounterRng rng(1100, static_cast<std::uint64_t>(trial));
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
        if (!(lower <= mid * (1.0 + 1e-9) + 1e-12 && mid <= upper * (1.0 + 1e-9) + 1e-12)) {
            ok = false;
            detail = "sandwich violated at trial " + std::to_string(trial);
        }
    }
    const SpectralOperator A1({1.0});
    const StateVector B1({1.0}), x1({1.0});
    const double lo = min_energy_norm_sq(A1, B1, 1.0, x1);
    const double mid = ramp_control(A1, B1, 1.0, x1).l2_norm_sq();
    const double hi = ramp_control_energy_bound(A1, B1, 1.0, x1);
    if (std::abs(lo - 2.313035) > 1e-5 || std::abs(mid - 2.432332) > 1e-5 || std::abs(hi - 4.0) > 1e-12) {
        ok = false;
        detail = "frozen values " + fmt(lo) + " / " + fmt(mid) + " / " + fmt(hi);
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (dt > 5.0) {
        ok = false;
        detail = "runtime " + fmt(dt) + " s";
    }
    if (ok)
        detail = fmt(lo) + " <= " + fmt(mid) + " <= " + fmt(hi) + " and 100 random instances, " + fmt(dt) + " s";
    report(2, "minimality sandwich", ok, detail);
}

void criterion_3_girsanov() {
    RunParams run;
    run.T = 1.0;
    run.step = kStep;
    run.n_paths = 20000;
    run.seed = 1300;

    const DelayModel model = default_smooth_model();
    const Segment xi = Segment::constant(pattern(kDim, 0.4), kTau, kStep);
    const ShiftSpec shift =
        make_shift_spec(model.A, ShiftProfile::decay(pattern(kDim, 0.2)), kTau, run.T, kStep,
                        ControlVariant::gramian);
    const CheckReport delay_rep = check_girsanov_delay(model, shift, xi, run);

    const EvolutionModel evo = default_burgers_model();
    const EvolutionShift eshift =
        make_evolution_shift(evo.A, run.T, low_mode(16, 0.05), grid_steps(run.T, run.step, "acc"));
    const CheckReport evo_rep = check_girsanov_evolution(evo, eshift, pattern(16, 0.5), run);

    const bool ok = delay_rep.verdict == Verdict::pass && evo_rep.verdict == Verdict::pass;
    report(3, "girsanov normalization", ok,
           "delay |E R - 1| z=" + fmt(delay_rep.z) + ", evolution z=" + fmt(evo_rep.z) + " at 2e4 paths");
}

void criterion_4_gaussian_oracles() {
    RunParams run;
    run.T = 1.0;
    run.step = kStep;
    run.n_paths = 100000;
    run.seed = 1400;
    bool ok = true;
    std::string detail;

    // delay: dual-route discrete oracle, then MC against it
    {
        const DelayModel model = default_linear_model();
        const ShiftSpec shift = make_shift_spec(model.A, ShiftProfile::decay(pattern(kDim, 0.3)), kTau, run.T,
                                                kStep, ControlVariant::gramian);
        const TestFunction f = TestFunction::coordinate("mode1", {0.0}, {unit_vector(kDim, 0)});
        const IbpOraclePair oracle = delay_linear_ibp_oracle(model, shift, f, run.T, kStep);

        // independent route: impulse responses through the plain recursion
        double impulse = 0.0;
        {
            const std::size_t n_steps = grid_steps(run.T, kStep, "acc");
            const std::size_t m = grid_steps(kTau, kStep, "acc");
            const ShiftProfileGrid gamma = shift_profile_grid(model.A, shift, kTau, run.T, kStep);
            const std::vector<double> branch = branch_drift_nodes(shift, run.T, kStep);
            for (std::size_t k = 0; k < kDim; ++k) {
                const double lam = model.A.eigenvalue(k);
                const double decay = std::exp(-lam * kStep);
                const double kap = -std::expm1(-lam * kStep) / lam;
                const double c1 = model.F.now_coeff()[k], c2 = model.F.delay_coeff()[k];
                for (std::size_t n = 0; n < n_steps; ++n) {
                    std::vector<double> x(n_steps + 1, 0.0);
                    x[n + 1] = decay * model.sigma0;
                    for (std::size_t j = n + 1; j < n_steps; ++j) {
                        double v = decay * x[j] + kap * c1 * x[j];
                        if (j >= m) v += kap * c2 * x[j - m];
                        x[j + 1] = v;
                    }
                    const double response = f.directions[0][k] * x[n_steps];
                    const double grad_gamma =
                        c1 * gamma.at_step(n)[k] + c2 * gamma.node(gamma.n_hist + n - m)[k];
                    impulse += kStep * response * (branch[n * kDim + k] - grad_gamma) / model.sigma0;
                }
            }
        }
        if (std::abs(oracle.rhs - impulse) > 1e-8 * std::max(1.0, std::abs(impulse))) {
            ok = false;
            detail = "delay oracle routes differ by " + fmt(oracle.rhs - impulse);
        }

        const Segment xi = Segment::constant(pattern(kDim, 0.4), kTau, kStep);
        const CheckReport rep = check_ibp_delay(model, shift, f, xi, run);
        double mc_rhs = 0.0, mc_se = 0.0;
        for (const auto& e : rep.estimates)
            if (e.name == "rhs") {
                mc_rhs = e.value;
                mc_se = e.stderr_;
            }
        if (std::abs(mc_rhs - oracle.rhs) > 3.0 * mc_se) {
            ok = false;
            detail = "delay MC off oracle by " + fmt((mc_rhs - oracle.rhs) / mc_se) + " se";
        }
        if (mc_se > 0.05 * std::abs(oracle.rhs)) {
            ok = false;
            detail = "delay relative stderr " + fmt(mc_se / std::abs(oracle.rhs));
        }
    }

    // evolution: closed-form sum vs oracle, then MC
    {
        const EvolutionModel model = default_gaussian_model();
        const StateVector e = low_mode(16, 0.1);
        const std::size_t n_steps = grid_steps(run.T, kStep, "acc");
        const EvolutionShift shift = make_evolution_shift(model.A, run.T, e, n_steps);
        const TestFunction f = TestFunction::coordinate("mode1", {run.T}, {unit_vector(16, 0)});
        const IbpOraclePair oracle = evolution_linear_ibp_oracle(model, shift, f, run.T, kStep);
        bool interp = false;
        const ControlFunction phi = resample(shift.phi, kStep, interp);
        double direct = 0.0;
        for (std::size_t n = 0; n < n_steps; ++n)
            direct += kStep * std::exp(-model.A.eigenvalue(0) * (run.T - static_cast<double>(n) * kStep)) *
                      phi.values[n][0];
        if (std::abs(oracle.rhs - direct) > 1e-8 * std::max(1.0, std::abs(direct))) {
            ok = false;
            detail = "evolution oracle routes differ by " + fmt(oracle.rhs - direct);
        }
        const CheckReport rep = check_ibp_evolution(model, shift, f, pattern(16, 0.5), run);
        double mc_rhs = 0.0, mc_se = 0.0;
        for (const auto& est : rep.estimates)
            if (est.name == "rhs") {
                mc_rhs = est.value;
                mc_se = est.stderr_;
            }
        if (std::abs(mc_rhs - oracle.rhs) > 3.0 * mc_se) {
            ok = false;
            detail = "evolution MC off oracle by " + fmt((mc_rhs - oracle.rhs) / mc_se) + " se";
        }
        if (mc_se > 0.05 * std::abs(oracle.rhs)) {
            ok = false;
            detail = "evolution relative stderr " + fmt(mc_se / std::abs(oracle.rhs));
        }
    }
    if (ok) detail = "dual-route oracles to 1e-8; MC within 3 se at 1e5 paths, rel. stderr <= 5%";
    report(4, "shift identity, gaussian oracle", ok, detail);
}

void criterion_5_nonlinear_ibp() {
    bool ok = true;
    std::string detail;
    double worst_z = 0.0, worst_fd = 0.0;

    // delay, bounded-smooth drift, three seeds, with an fd cross-check
    {
        const DelayModel model = default_smooth_model();
        const double T = 1.0;
        const ShiftSpec shift = make_shift_spec(model.A, ShiftProfile::decay(pattern(kDim, 0.3)), kTau, T, kStep,
                                                ControlVariant::gramian);
        const ShiftProfileGrid gamma = shift_profile_grid(model.A, shift, kTau, T, kStep);
        const std::vector<double> branch = branch_drift_nodes(shift, T, kStep);
        const TestFunction f = TestFunction::bounded_smooth("bs", {0.0}, {pattern(kDim, 1.0)}, 0.9, 0.2);
        const Segment xi = Segment::constant(pattern(kDim, 0.4), kTau, kStep);
        const std::size_t n_steps = grid_steps(T, kStep, "acc");
        const double fd_eps = 0.05;

        for (std::uint64_t seed : {1501ull, 1502ull, 1503ull}) {
            ObservableMatrix obs = ensemble_map(100000, 3, 1, [&](std::size_t i, std::span<double> row) {
                CounterRng rng(seed, i);
                const PathRecord p = simulate(model, xi, T, kStep, rng);
                const double* xT = p.state_at_step(n_steps);
                const double* eta0 = gamma.at_step(n_steps);
                std::vector<const double*> nodes{xT};
                std::vector<const double*> dirs{eta0};
                row[0] = f.directional(nodes, dirs, kDim);
                row[1] = f.eval(nodes, kDim) * ibp_weight_delay(model, branch, gamma, p);
                std::vector<double> plus(kDim), minus(kDim);
                for (std::size_t k = 0; k < kDim; ++k) {
                    plus[k] = xT[k] + fd_eps * eta0[k];
                    minus[k] = xT[k] - fd_eps * eta0[k];
                }
                std::vector<const double*> np{plus.data()}, nm{minus.data()};
                row[2] = (f.eval(np, kDim) - f.eval(nm, kDim)) / (2.0 * fd_eps);
            });
            const double diff = column_mean(obs, 0) - column_mean(obs, 1);
            const double se = std::sqrt(std::max(0.0, column_cov(obs, 0, 0) + column_cov(obs, 1, 1) -
                                                          2.0 * column_cov(obs, 0, 1)) /
                                        100000.0);
            const double z = se > 0.0 ? std::abs(diff) / se : 0.0;
            worst_z = std::max(worst_z, z);
            if (z > 3.0) ok = false;
            // unpaired resolution: the fd route carries its own bias
            const double fd_diff = column_mean(obs, 0) - column_mean(obs, 2);
            const double fd_se =
                std::sqrt((column_cov(obs, 0, 0) + column_cov(obs, 2, 2)) / 100000.0) + 1e-300;
            const double zfd = std::abs(fd_diff) / fd_se;
            worst_fd = std::max(worst_fd, zfd);
            if (zfd > 3.0) ok = false;
        }
    }

    // evolution, burgers nonlinearity, three seeds (fd inside the check)
    {
        const EvolutionModel model = default_burgers_model();
        RunParams run;
        run.T = 1.0;
        run.step = kStep;
        run.n_paths = 100000;
        const StateVector e = low_mode(16, 0.05);
        const EvolutionShift shift = make_evolution_shift(model.A, run.T, e, grid_steps(run.T, kStep, "acc"));
        const TestFunction f = TestFunction::bounded_smooth("bs", {run.T}, {pattern(16, 0.8)}, 0.9, 0.3);
        for (std::uint64_t seed : {1504ull, 1505ull, 1506ull}) {
            run.seed = seed;
            const CheckReport rep = check_ibp_evolution(model, shift, f, pattern(16, 0.5), run);
            worst_z = std::max(worst_z, rep.z);
            if (rep.verdict != Verdict::pass) ok = false;
        }
    }
    if (ok)
        detail = "worst z=" + fmt(worst_z) + ", worst fd z=" + fmt(worst_fd) + " at 1e5 paths x 3 seeds";
    else
        detail = "worst z=" + fmt(worst_z) + ", worst fd z=" + fmt(worst_fd);
    report(5, "shift identity, nonlinear", ok, detail);
}

void criterion_6_harnack_batteries() {
    RunParams run;
    run.T = 1.0;
    run.step = kStep;
    run.n_paths = 20000;
    run.seed = 1600;
    bool ok = true;
    std::size_t n_checks = 0;
    double min_slack_sigma = 1e300;

    const DelayModel model = default_smooth_model();
    const Segment xi = Segment::constant(pattern(kDim, 0.4), kTau, kStep);
    std::vector<ShiftSpec> shifts;
    shifts.push_back(make_shift_spec(model.A, ShiftProfile::decay(pattern(kDim, 0.2)), kTau, run.T, kStep,
                                     ControlVariant::gramian));
    shifts.push_back(make_shift_spec(model.A, ShiftProfile::poly(pattern(kDim, 0.16), 1.0, 0.5, -0.25), kTau,
                                     run.T, kStep, ControlVariant::gramian));
    std::vector<TestFunction> fs;
    fs.push_back(TestFunction::positive_exp("pexp-now", {0.0}, {pattern(kDim, 1.0, 1.0)}, 0.8, 0.3));
    fs.push_back(TestFunction::positive_exp("pexp-two", {-kTau / 2.0, 0.0},
                                            {pattern(kDim, 0.6), unit_vector(kDim, 0)}, 0.4, -0.2));
    fs.push_back(TestFunction::indicator_smoothed("ind", {0.0}, {pattern(kDim, 1.0, 1.5)}, 0.1, 0.3));
    fs.push_back(TestFunction::bounded_smooth("bs", {-kTau, 0.0},
                                              {0.5 * unit_vector(kDim, 1), pattern(kDim, 0.8, 1.0)}, 0.9, 0.1));

    auto absorb = [&](const std::vector<CheckReport>& reports) {
        for (const auto& r : reports) {
            ++n_checks;
            if (r.verdict == Verdict::fail) ok = false;
            if (r.z != 0.0) min_slack_sigma = std::min(min_slack_sigma, r.z);
        }
    };
    absorb(check_shift_harnack_delay_battery(
        model, shifts, fs, {2.0, 4.0},
        {HarnackVariant::gramian, HarnackVariant::energy, HarnackVariant::selfadjoint}, xi, run));

    const DelayModel mod_model{SpectralOperator::power_spectrum(kDim, 1.0), kTau,
                               DelayDrift::modulus(0.5, pattern(kDim, 1.0, 1.5)), 1.0};
    absorb(check_shift_harnack_delay_battery(mod_model, shifts, fs, {2.0, 4.0}, {HarnackVariant::modulus}, xi, run));

    // trivial cases must pass exactly
    const TestFunction one = TestFunction::positive_exp("one", {0.0}, {StateVector(kDim)}, 0.0, 0.0);
    const auto trivial_f =
        check_shift_harnack_delay_battery(model, {shifts[0]}, {one}, {2.0}, {HarnackVariant::gramian}, xi, run);
    ok = ok && trivial_f[0].verdict == Verdict::pass && trivial_f[0].slack >= 0.0;
    const ShiftSpec zero_shift =
        make_shift_spec(model.A, ShiftProfile::zero(kDim), kTau, run.T, kStep, ControlVariant::gramian);
    const auto trivial_s =
        check_shift_harnack_delay_battery(model, {zero_shift}, {fs[0]}, {2.0}, {HarnackVariant::gramian}, xi, run);
    ok = ok && trivial_s[0].verdict == Verdict::pass && trivial_s[0].constant == 0.0;
    n_checks += 2;

    // evolution: entropy-route log-Harnack battery
    const EvolutionModel evo = default_burgers_model();
    std::vector<EvolutionShift> eshifts;
    const std::size_t n_steps = grid_steps(run.T, kStep, "acc");
    eshifts.push_back(make_evolution_shift(evo.A, run.T, low_mode(16, 0.05), n_steps));
    {
        StateVector e2(16);
        for (std::size_t k = 0; k < 4; ++k)
            e2[k] = (k % 2 == 0 ? 0.04 : -0.04) / std::pow(static_cast<double>(k + 1), 3.0);
        eshifts.push_back(make_evolution_shift(evo.A, run.T, e2, n_steps));
    }
    std::vector<TestFunction> efs;
    efs.push_back(TestFunction::positive_exp("pexp-a", {run.T}, {pattern(16, 1.0, 1.0)}, 0.8, 0.3));
    efs.push_back(TestFunction::positive_exp("pexp-b", {run.T}, {unit_vector(16, 1)}, 0.4, -0.5));
    efs.push_back(TestFunction::bounded_smooth("bs-a", {run.T}, {pattern(16, 0.7, 1.5)}, 0.5, 0.0));
    efs.push_back(TestFunction::bounded_smooth("bs-b", {run.T}, {pattern(16, 1.0)}, 0.9, 0.7));
    absorb(check_log_harnack_evolution_battery(evo, eshifts, efs, pattern(16, 0.5), run));

    report(6, "harnack and log-harnack batteries", ok,
           std::to_string(n_checks) + " checks, no violation beyond 3 se; slack recorded in reports");
}

void criterion_7_log_sobolev() {
    bool ok = true;
    std::string detail;

    // L = 0: quadrature oracle with strictly positive slack
    const DelayModel free_model{SpectralOperator::power_spectrum(kDim, 1.0), kTau, DelayDrift::zero(), 1.0};
    const Segment xi = Segment::constant(pattern(kDim, 0.4), kTau, kStep);
    const TestFunction g = TestFunction::positive_exp("g", {0.0}, {unit_vector(kDim, 0)}, 1.0, 0.0);
    const OuLaw law = ou_endpoint_law(1.0, 1.0, xi.newest()[0], 1.0);
    const GaussianEntropyPair oracle = gaussian_entropy_oracle([&](double x) { return g.profile(x); },
                                                               [&](double x) { return g.dprofile(x); }, law.mean,
                                                               law.variance);
    const double slack = 2.0 * oracle.grad_sq - oracle.entropy;
    if (!(slack > 0.0)) ok = false;

    // Lipschitz drift at 1e5 paths with the displayed constant
    RunParams run;
    run.T = 1.0;
    run.step = kStep;
    run.n_paths = 100000;
    run.seed = 1700;
    const DelayModel model = default_smooth_model();
    const TestFunction g2 = TestFunction::positive_exp("g2", {0.0}, {pattern(kDim, 1.0, 1.0)}, 0.8, 0.4);
    const CheckReport rep = check_log_sobolev(model, g2, xi, run);
    if (rep.verdict != Verdict::pass) ok = false;

    detail = "oracle slack " + fmt(slack) + " (constant 2), MC slack " + fmt(rep.slack) + " (constant " +
             fmt(rep.constant) + ")";
    report(7, "log-sobolev inequality", ok, detail);
}

void criterion_8_regularity() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    const SpectralOperator A({1.0});
    ControlFunction f = ControlFunction::zero(1, 1.0, 1 << 12);
    for (auto& v : f.values) v[0] = 1.0;
    const CheckReport rep = check_regularity(A, f, 1.0, 1.0);
    const double closed = 0.16809124072457862;
    if (std::abs(rep.estimates[0].value - closed) > 1e-6) ok = false;
    if (!(rep.estimates[0].value <= 4.0)) ok = false;

    for (int trial = 0; trial < 100 && ok; ++trial) {
        CounterRng rng(1800, static_cast<std::uint64_t>(trial));
        const std::size_t dim = 1 + static_cast<std::size_t>(rng.uniform() * 5.0);
        std::vector<double> lam(dim);
        for (double& l : lam) l = 0.3 + 25.0 * rng.uniform();
        std::sort(lam.begin(), lam.end());
        const double T = 0.5 + 1.5 * rng.uniform();
        ControlFunction rf = ControlFunction::zero(dim, T, 1 << 11);
        for (auto& v : rf.values)
            for (std::size_t k = 0; k < dim; ++k) v[k] = 2.0 * rng.uniform() - 1.0;
        if (check_regularity(SpectralOperator(lam), rf, 1.0, T).verdict != Verdict::pass) ok = false;
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (dt > 5.0) ok = false;
    report(8, "maximal-regularity estimates", ok,
           "closed form " + fmt(rep.estimates[0].value) + " <= 4; 100 random instances, " + fmt(dt) + " s");
}

void criterion_9_burgers_conditions() {
    bool ok = true;
    std::string detail;
    const EvolutionModel m = default_burgers_model();
    const std::size_t dim = m.A.dim();

    double worst_orth = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        CounterRng rng(1900, static_cast<std::uint64_t>(trial));
        StateVector u(dim);
        for (std::size_t k = 0; k < dim; ++k) u[k] = rng.normal();
        const double nu = norm(u);
        if (nu > 0.0) worst_orth = std::max(worst_orth, std::abs(dot(nonlinear_term(m, u), u)) / (nu * nu * nu));
    }
    if (worst_orth > 1e-10) ok = false;

    double worst_fd = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        CounterRng rng(1901, static_cast<std::uint64_t>(trial));
        StateVector v(dim), h(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            v[k] = rng.normal() / static_cast<double>(k + 1);
            h[k] = rng.normal() / static_cast<double>(k + 1);
        }
        const double eps = 1e-4;
        const StateVector fd =
            (1.0 / (2.0 * eps)) * (nonlinear_term(m, v + eps * h) - nonlinear_term(m, v - (eps * h)));
        worst_fd = std::max(worst_fd, norm(fd - nonlinear_gateaux(m, v, h)));
    }
    if (worst_fd > 1e-6) ok = false;

    const ConditionProbeReport probe = condition_probe(m, 200, 1902);
    if (!probe.stable) ok = false;

    detail = "orthogonality " + fmt(worst_orth) + ", fd " + fmt(worst_fd) + ", probe growth " +
             fmt(100.0 * probe.growth) + "%";
    report(9, "burgers structural conditions", ok, detail);
}

void criterion_10_density_score() {
    const EvolutionModel m = default_gaussian_model();
    const StateVector x0 = pattern(16, 0.5);
    const double T = 1.0;
    const auto bins = density_score(m, x0, T, kStep, 100000, 12, 2000);
    const OuLaw law = ou_endpoint_law(m.A.spectral_gap(), m.q[0], x0[0], T);
    const double sd = std::sqrt(law.variance);

    bool ok = true;
    std::size_t used = 0;
    double worst = 0.0;
    for (const auto& b : bins) {
        if (b.empty || std::abs(b.center - law.mean) > 2.0 * sd) continue;
        const double truth = -(b.sample_mean - law.mean) / law.variance;
        const double z = b.stderr_ > 0.0 ? std::abs(b.score - truth) / b.stderr_ : 0.0;
        worst = std::max(worst, z);
        if (z > 3.0) ok = false;
        ++used;
    }
    if (used < 4) ok = false;
    report(10, "density score (gaussian)", ok,
           std::to_string(used) + " bins inside 2 sd, worst z=" + fmt(worst) + " at 1e5 paths");
}

void criterion_11_reproducibility(const char* cli_path) {
    bool ok = true;
    std::string detail;

    ExperimentConfig cfg;
    cfg.run.n_paths = 2000;
    cfg.run.seed = 2100;
    cfg.run.step = kStep;
    cfg.output.directory = "acc-repro";

    cfg.run.jobs = 1;
    const SuiteResult a = run_suite("ibp-delay", cfg);
    cfg.run.jobs = 2;
    const SuiteResult b = run_suite("ibp-delay", cfg);
    cfg.run.jobs = 3;
    const SuiteResult c = run_suite("control", cfg);
    cfg.run.jobs = 1;
    const SuiteResult d = run_suite("control", cfg);
    if (determinism_hash(a) != determinism_hash(b)) {
        ok = false;
        detail = "mc suite hash differs across jobs";
    }
    if (determinism_hash(c) != determinism_hash(d)) {
        ok = false;
        detail = "control suite hash differs across jobs";
    }

    // end to end through the CLI: hashes agree across --jobs, and reruns
    // of the identical config are byte-identical apart from wall times
    if (ok && cli_path != nullptr) {
        auto run_cli = [&](const std::string& dir, int jobs) {
            const std::string cmd = std::string(cli_path) + " check control --seed 2100 --jobs " +
                                    std::to_string(jobs) + " --out " + dir + " > /dev/null 2>&1";
            return std::system(cmd.c_str());
        };
        auto load = [](const std::string& path) {
            std::ifstream in(path);
            nlohmann::json j;
            in >> j;
            return j;
        };
        const int r1 = run_cli("acc-cli-a", 1);
        nlohmann::json ja = r1 == 0 ? load("acc-cli-a/report.json") : nlohmann::json{};
        const int r2 = run_cli("acc-cli-b", 2);
        const int r3 = run_cli("acc-cli-a", 1);  // identical config, same directory
        if (r1 != 0 || r2 != 0 || r3 != 0) {
            ok = false;
            detail = "cli runs returned nonzero";
        } else {
            nlohmann::json jb = load("acc-cli-b/report.json");
            nlohmann::json jc = load("acc-cli-a/report.json");
            if (ja["determinism_hash"] != jb["determinism_hash"] || ja["checks"].dump() != jb["checks"].dump()) {
                ok = false;
                detail = "cli hash differs across --jobs";
            }
            ja.erase("timing");
            jc.erase("timing");
            if (ja.dump() != jc.dump() || ja.empty()) {
                ok = false;
                detail = "cli rerun not byte-identical";
            }
        }
    }
    if (ok) detail = "hashes identical across jobs (library and cli)";
    report(11, "reproducibility", ok, detail);
}

void criterion_12_refinement() {
    bool ok = true;
    std::string detail;

    // linear delay: deterministic oracle bias is non-increasing
    {
        const DelayModel model = default_linear_model();
        const TestFunction f = TestFunction::coordinate("mode1", {0.0}, {unit_vector(kDim, 0)});
        std::vector<double> diffs;
        for (double step : {1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0}) {
            const ShiftSpec shift = make_shift_spec(model.A, ShiftProfile::decay(pattern(kDim, 0.3)), kTau, 1.0,
                                                    step, ControlVariant::gramian);
            const IbpOraclePair oracle = delay_linear_ibp_oracle(model, shift, f, 1.0, step);
            diffs.push_back(std::abs(oracle.lhs - oracle.rhs));
        }
        if (!(diffs[1] <= diffs[0] && diffs[2] <= diffs[1])) {
            ok = false;
            detail = "linear-delay oracle bias not decreasing";
        }
    }

    // nonlinear delay with common driving noise across levels
    {
        const DelayModel model = default_smooth_model();
        RunParams run;
        run.T = 1.0;
        run.step = 1.0 / 32.0;
        run.n_paths = 100000;
        run.seed = 2200;
        const TestFunction f = TestFunction::bounded_smooth("bs", {0.0}, {pattern(kDim, 1.0)}, 0.9, 0.2);
        const auto levels = refinement_ibp_delay(model, ShiftProfile::decay(pattern(kDim, 0.3)),
                                                 ControlVariant::gramian, f, pattern(kDim, 0.4), run);
        for (std::size_t l = 0; l + 1 < levels.size(); ++l)
            if (levels[l + 1].diff > levels[l].diff + std::max(levels[l].stderr_, levels[l + 1].stderr_)) {
                ok = false;
                detail = "delay refinement trend violated";
            }
    }

    // burgers evolution with common driving noise across levels
    {
        const EvolutionModel model = default_burgers_model();
        RunParams run;
        run.T = 1.0;
        run.step = 1.0 / 64.0;
        run.n_paths = 20000;
        run.seed = 2201;
        const TestFunction f = TestFunction::bounded_smooth("bs", {run.T}, {pattern(16, 0.8)}, 0.9, 0.3);
        const auto levels = refinement_ibp_evolution(model, low_mode(16, 0.05), f, pattern(16, 0.5), run);
        for (std::size_t l = 0; l + 1 < levels.size(); ++l)
            if (levels[l + 1].diff > levels[l].diff + std::max(levels[l].stderr_, levels[l + 1].stderr_)) {
                ok = false;
                detail = "evolution refinement trend violated";
            }
    }
    if (ok) detail = "central |lhs-rhs| non-increasing under two halvings (1 se tolerance)";
    report(12, "refinement", ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
    const char* cli_path = argc > 1 ? argv[1] : nullptr;
    criterion_1_control_exactness();
    criterion_2_minimality_sandwich();
    criterion_3_girsanov();
    criterion_4_gaussian_oracles();
    criterion_5_nonlinear_ibp();
    criterion_6_harnack_batteries();
    criterion_7_log_sobolev();
    criterion_8_regularity();
    criterion_9_burgers_conditions();
    criterion_10_density_score();
    criterion_11_reproducibility(cli_path);
    criterion_12_refinement();

    if (g_failures == 0) {
        std::printf("acceptance: all 12 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) failed\n", g_failures);
    return 1;
}
