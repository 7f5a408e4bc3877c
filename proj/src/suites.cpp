#include "shiftlab/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "shiftlab/oracles.hpp"
#include "shiftlab/parallel.hpp"

namespace shiftlab {

namespace {

using Clock = std::chrono::steady_clock;

const std::vector<std::string> kSuites = {"control",       "ibp-delay",     "harnack-delay", "ibp-pathspace",
                                          "logsobolev",    "regularity",    "ibp-evolution", "log-harnack-evolution",
                                          "harnack-evolution", "conditions", "density"};

StateVector decay_pattern(std::size_t dim, double scale, double power) {
    StateVector v(dim);
    for (std::size_t k = 0; k < dim; ++k) v[k] = scale / std::pow(static_cast<double>(k + 1), power);
    return v;
}

CheckReport deterministic_report(std::string id, std::string statement, double lhs, double rhs, double tol,
                                 std::string note = {}) {
    CheckReport rep;
    rep.id = std::move(id);
    rep.statement = std::move(statement);
    rep.variant = "oracle";
    rep.slack = rhs - lhs;
    rep.verdict = std::abs(rhs - lhs) <= tol ? Verdict::pass : Verdict::fail;
    rep.estimates.push_back({"lhs", lhs, 0.0});
    rep.estimates.push_back({"rhs", rhs, 0.0});
    rep.estimates.push_back({"tolerance", tol, 0.0});
    if (!note.empty()) rep.notes.push_back(std::move(note));
    return rep;
}

CheckReport bound_report(std::string id, std::string statement, double value, double bound, std::string note = {}) {
    CheckReport rep;
    rep.id = std::move(id);
    rep.statement = std::move(statement);
    rep.variant = "oracle";
    rep.constant = bound;
    rep.slack = bound - value;
    rep.verdict = value <= bound ? Verdict::pass : Verdict::fail;
    rep.estimates.push_back({"value", value, 0.0});
    rep.estimates.push_back({"bound", bound, 0.0});
    if (!note.empty()) rep.notes.push_back(std::move(note));
    return rep;
}

RunParams run_params(const ExperimentConfig& cfg) {
    RunParams run;
    run.T = cfg.run.T;
    run.step = cfg.run.step;
    run.n_paths = cfg.run.n_paths;
    run.seed = cfg.run.seed;
    run.jobs = cfg.run.jobs;
    run.resolution = cfg.run.resolution;
    return run;
}

// battery of segment test functions on grid-aligned times
std::vector<TestFunction> delay_battery(const DelayModel& model) {
    const std::size_t dim = model.A.dim();
    const double tau = model.tau;
    std::vector<TestFunction> fs;
    fs.push_back(TestFunction::positive_exp("pexp-now", {0.0}, {decay_pattern(dim, 1.0, 1.0)}, 0.8, 0.3));
    fs.push_back(TestFunction::positive_exp("pexp-two-times", {-tau / 2.0, 0.0},
                                            {decay_pattern(dim, 0.6, 2.0), unit_vector(dim, 0)}, 0.4, -0.2));
    fs.push_back(TestFunction::indicator_smoothed("indicator", {0.0}, {decay_pattern(dim, 1.0, 1.5)}, 0.1, 0.3));
    fs.push_back(TestFunction::bounded_smooth("bounded-smooth", {-tau, 0.0},
                                              {0.5 * unit_vector(dim, 1), decay_pattern(dim, 0.8, 1.0)}, 0.9, 0.1));
    return fs;
}

std::vector<TestFunction> evolution_battery(const SpectralOperator& A, double T) {
    const std::size_t dim = A.dim();
    std::vector<TestFunction> fs;
    fs.push_back(TestFunction::positive_exp("pexp-a", {T}, {decay_pattern(dim, 1.0, 1.0)}, 0.8, 0.3));
    fs.push_back(TestFunction::positive_exp("pexp-b", {T}, {unit_vector(dim, 1)}, 0.4, -0.5));
    fs.push_back(TestFunction::bounded_smooth("bsmooth-a", {T}, {decay_pattern(dim, 0.7, 1.5)}, 0.5, 0.0));
    fs.push_back(TestFunction::bounded_smooth("bsmooth-b", {T}, {decay_pattern(dim, 1.0, 2.0)}, 0.9, 0.7));
    return fs;
}

ShiftProfile second_shift_profile(std::size_t dim, double scale) {
    return ShiftProfile::poly(decay_pattern(dim, 0.8 * scale, 2.0), 1.0, 0.5, -0.25);
}

StateVector evolution_shift_vector(std::size_t dim, double scale, bool alternate) {
    // supported on the first four modes so the steering control never
    // excites the stiff end of the spectrum
    StateVector e(dim);
    for (std::size_t k = 0; k < std::min<std::size_t>(dim, 4); ++k) {
        const double sign = alternate && (k % 2 == 1) ? -1.0 : 1.0;
        e[k] = sign * scale / std::pow(static_cast<double>(k + 1), alternate ? 3.0 : 2.0);
    }
    return e;
}

PathDump dump_delay_path(const DelayModel& model, const Segment& xi, const RunParams& run) {
    CounterRng rng(run.seed, 0);
    const PathRecord p = simulate(model, xi, run.T, run.step, rng);
    PathDump dump;
    for (std::size_t j = 0; j < p.n_hist + p.n_steps + 1; ++j) {
        dump.times.push_back(p.time_at_node(j));
        const double* s = p.states.data() + j * p.dim;
        dump.states.emplace_back(s, s + p.dim);
    }
    return dump;
}

PathDump dump_evolution_path(const EvolutionModel& model, const StateVector& x0, const RunParams& run) {
    CounterRng rng(run.seed, 0);
    const PathRecord p = simulate_evolution(model, x0, run.T, run.step, rng);
    PathDump dump;
    for (std::size_t j = 0; j <= p.n_steps; ++j) {
        dump.times.push_back(static_cast<double>(j) * p.step);
        const double* s = p.states.data() + j * p.dim;
        dump.states.emplace_back(s, s + p.dim);
    }
    return dump;
}

// ---------------------------------------------------------------------------
// individual suites
// ---------------------------------------------------------------------------

SuiteResult suite_control(const ExperimentConfig& cfg) {
    SuiteResult res;
    res.suite = "control";
    const SpectralOperator A = SpectralOperator::power_spectrum(cfg.model.modes, 1.0);  // lambda_k = k^2
    const StateVector B(A.dim(), 1.0);
    const double T = cfg.run.T;
    CounterRng rng(cfg.run.seed, 0x5eed);

    // interpolation exactness of the minimal-energy control on a random target
    StateVector x(A.dim());
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = rng.normal();
    const ControlFunction f_star = min_energy_control(A, B, T, x);
    const double err = norm(apply_LT(A, B, T, f_star) - x);
    res.checks.push_back(bound_report("control/steering-exactness", "gramian-steering", err,
                                      1e-6 * (1.0 + norm(x)), "||L_T f* - x|| on the default spectrum"));

    // energy of the minimizer against the diagonal closed form
    double closed = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double lam = A.eigenvalue(k);
        closed += x[k] * x[k] * 2.0 * lam / (-std::expm1(-2.0 * T * lam));
    }
    const double men = min_energy_norm_sq(A, B, T, x);
    res.checks.push_back(deterministic_report("control/min-energy-closed-form", "gramian-steering", men, closed,
                                              1e-10 * std::max(1.0, std::abs(closed))));
    // trapezoid energy needs a fine grid for the stiff end of the spectrum
    res.checks.push_back(deterministic_report("control/min-energy-quadrature", "gramian-steering",
                                              min_energy_control(A, B, T, x, 1 << 16).l2_norm_sq(), men,
                                              1e-5 * std::max(1.0, men)));

    // single-mode frozen values
    const SpectralOperator A1({1.0});
    const StateVector B1({1.0}), x1({1.0});
    res.checks.push_back(deterministic_report("control/single-mode-energy", "gramian-steering",
                                              min_energy_norm_sq(A1, B1, 1.0, x1), 2.3130352854993312, 1e-6));
    res.checks.push_back(deterministic_report("control/single-mode-gramian", "gramian-steering",
                                              gramian(A1, B1, 1.0).entries[0], 0.43233235838169365, 1e-10));
    res.checks.push_back(deterministic_report("control/single-mode-ramp-energy", "ramp-steering",
                                              ramp_control(A1, B1, 1.0, x1).l2_norm_sq(), 2.4323323583816936,
                                              1e-5));

    // minimality sandwich on random instances
    double worst_lower = 1e300, worst_upper = 1e300;
    for (int trial = 0; trial < 100; ++trial) {
        CounterRng trng(cfg.run.seed, 0x100 + static_cast<std::uint64_t>(trial));
        const std::size_t dim = 1 + static_cast<std::size_t>(trng.uniform() * 6.0);
        std::vector<double> lam(dim);
        for (double& l : lam) l = 0.3 + 20.0 * trng.uniform();
        std::sort(lam.begin(), lam.end());
        const SpectralOperator Ar(lam);
        const StateVector Br(dim, 1.0);
        const double Tr = 0.25 + 3.75 * trng.uniform();
        StateVector xr(dim);
        for (std::size_t k = 0; k < dim; ++k) xr[k] = trng.normal();
        const double lower = min_energy_norm_sq(Ar, Br, Tr, xr);
        const double mid = ramp_control(Ar, Br, Tr, xr).l2_norm_sq();
        const double upper = ramp_control_energy_bound(Ar, Br, Tr, xr);
        worst_lower = std::min(worst_lower, mid - lower);
        worst_upper = std::min(worst_upper, upper - mid);
    }
    res.checks.push_back(bound_report("control/minimality-sandwich", "steering-energy-order", 0.0,
                                      std::min(worst_lower, worst_upper),
                                      "min margin over 100 random instances (negative = violation)"));

    // gramian closed form against trapezoid quadrature
    {
        const double lam = 1.7, b = 1.3, Tq = 0.8;
        const std::size_t n = 1 << 15;
        const double h = Tq / static_cast<double>(n);
        double quad = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            const double w = (i == 0 || i == n) ? 0.5 : 1.0;
            const double t = static_cast<double>(i) * h;
            quad += w * h * b * b * std::exp(-2.0 * t * lam);
        }
        const SpectralOperator Aq({lam});
        res.checks.push_back(deterministic_report("control/gramian-quadrature", "gramian-closed-form",
                                                  gramian(Aq, StateVector({b}), Tq).entries[0], quad, 1e-8));
    }
    return res;
}

SuiteResult suite_ibp_delay(const ExperimentConfig& cfg) {
    SuiteResult res;
    res.suite = "ibp-delay";
    RunParams run = run_params(cfg);
    const std::size_t dim = cfg.model.modes;

    // linear drift: exact discrete oracle vs Monte Carlo
    {
        DelayModel model{SpectralOperator::power_spectrum(dim, cfg.model.beta), cfg.model.tau,
                         DelayDrift::linear(StateVector(dim, cfg.model.c1), StateVector(dim, cfg.model.c2)),
                         cfg.model.sigma0};
        const ShiftProfile eta = shift_profile_from_config(cfg, dim);
        const ShiftSpec shift = make_shift_spec(model.A, eta, model.tau, run.T, run.step,
                                                ControlVariant::gramian);
        const Segment xi = default_initial_segment(model, run.step);
        const TestFunction f = TestFunction::coordinate("mode1-endpoint", {0.0}, {unit_vector(dim, 0)});
        const IbpOraclePair oracle = delay_linear_ibp_oracle(model, shift, f, run.T, run.step);

        CheckReport mc = check_ibp_delay(model, shift, f, xi, run);
        mc.id = "ibp-delay/linear-gaussian-oracle";
        mc.variant = "discrete-covariance-oracle";
        mc.estimates.push_back({"oracle lhs", oracle.lhs, 0.0});
        mc.estimates.push_back({"oracle rhs", oracle.rhs, 0.0});
        // the verdict is agreement with the sampling-free oracle; the
        // residual against the continuum identity is pure discretization
        // bias and is covered by the refinement checks
        double mc_rhs = 0.0, mc_rhs_se = 0.0;
        for (const auto& e : mc.estimates)
            if (e.name == "rhs") {
                mc_rhs = e.value;
                mc_rhs_se = e.stderr_;
            }
        mc.verdict = identity_verdict(mc_rhs - oracle.rhs, mc_rhs_se, run.resolution);
        mc.z = mc_rhs_se > 0.0 ? std::abs(mc_rhs - oracle.rhs) / mc_rhs_se : 0.0;
        mc.notes.push_back("verdict: Monte Carlo rhs against the exact discrete covariance oracle");
        res.checks.push_back(std::move(mc));

        res.checks.push_back(check_girsanov_delay(model, shift, xi, run));
    }

    // nonlinear drift: paired self-consistency
    {
        const DelayModel model = delay_model_from_config(cfg);
        if (model.F.differentiable()) {
            const ShiftProfile eta = shift_profile_from_config(cfg, dim);
            const ShiftSpec shift =
                make_shift_spec(model.A, eta, model.tau, run.T, run.step, ControlVariant::gramian);
            const Segment xi = default_initial_segment(model, run.step);
            for (const TestFunction& f : delay_battery(model))
                res.checks.push_back(check_ibp_delay(model, shift, f, xi, run));
        }
    }
    return res;
}

SuiteResult suite_harnack_delay(const ExperimentConfig& cfg) {
    SuiteResult res;
    res.suite = "harnack-delay";
    RunParams run = run_params(cfg);
    const std::size_t dim = cfg.model.modes;
    const std::vector<double> ps = {cfg.run.p, 2.0 * cfg.run.p};

    const DelayModel model = delay_model_from_config(cfg);
    const ShiftProfile eta_a = shift_profile_from_config(cfg, dim);
    const ShiftProfile eta_b = second_shift_profile(dim, cfg.shift.scale);
    std::vector<ShiftSpec> shifts;
    shifts.push_back(make_shift_spec(model.A, eta_a, model.tau, run.T, run.step, ControlVariant::gramian));
    shifts.push_back(make_shift_spec(model.A, eta_b, model.tau, run.T, run.step, ControlVariant::gramian));

    std::vector<HarnackVariant> variants = {HarnackVariant::gramian, HarnackVariant::energy,
                                            HarnackVariant::selfadjoint};
    if (model.F.differentiable()) {
        auto reports =
            check_shift_harnack_delay_battery(model, shifts, delay_battery(model), ps, variants,
                                              default_initial_segment(model, run.step), run);
        for (auto& r : reports) res.checks.push_back(std::move(r));
    }

    // non-Lipschitz drift exercises the modulus exponent
    {
        DelayModel mod_model{SpectralOperator::power_spectrum(dim, cfg.model.beta), cfg.model.tau,
                             DelayDrift::modulus(cfg.model.drift_scale, decay_pattern(dim, 1.0, 1.5)),
                             cfg.model.sigma0};
        auto reports = check_shift_harnack_delay_battery(mod_model, shifts, delay_battery(mod_model), ps,
                                                         {HarnackVariant::modulus},
                                                         default_initial_segment(mod_model, run.step), run);
        for (auto& r : reports) res.checks.push_back(std::move(r));
    }

    // trivial cases pass exactly
    {
        const TestFunction one = TestFunction::positive_exp("constant-one", {0.0}, {StateVector(dim)}, 0.0, 0.0);
        auto reports = check_shift_harnack_delay_battery(model, {shifts[0]}, {one}, {cfg.run.p},
                                                         {HarnackVariant::gramian},
                                                         default_initial_segment(model, run.step), run);
        for (auto& r : reports) {
            r.notes.push_back("trivial: f == 1");
            res.checks.push_back(std::move(r));
        }
        const ShiftSpec zero_shift =
            make_shift_spec(model.A, ShiftProfile::zero(dim), model.tau, run.T, run.step, ControlVariant::gramian);
        auto zr = check_shift_harnack_delay_battery(model, {zero_shift}, {delay_battery(model)[0]}, {cfg.run.p},
                                                    {HarnackVariant::gramian},
                                                    default_initial_segment(model, run.step), run);
        for (auto& r : zr) res.checks.push_back(std::move(r));
    }
    return res;
}

SuiteResult suite_ibp_pathspace(const ExperimentConfig& cfg) {
    SuiteResult res;
    res.suite = "ibp-pathspace";
    RunParams run = run_params(cfg);
    const std::size_t dim = cfg.model.modes;
    DelayModel model = delay_model_from_config(cfg);
    model.sigma0 = 1.0;  // the path-space identity is stated for sigma = I
    const Segment xi = default_initial_segment(model, run.step);

    if (!model.F.differentiable())
        throw ConfigError("ibp-pathspace requires a differentiable drift");

    // smooth polynomial direction, two-time cylindrical functional
    const PathDirection dir = PathDirection::polynomial(model.A, model.tau, run.T, run.step,
                                                        decay_pattern(dim, 0.3, 2.0), 1.0, -0.4);
    const TestFunction g2 =
        TestFunction::bounded_smooth("two-times", {run.T / 2.0, run.T}, {unit_vector(dim, 0), unit_vector(dim, 1)},
                                     0.8, 0.2);
    res.checks.push_back(check_ibp_pathspace(model, dir, g2, xi, run));

    const TestFunction lin = TestFunction::coordinate("mode1-endpoint", {run.T}, {unit_vector(dim, 0)});
    res.checks.push_back(check_ibp_pathspace(model, dir, lin, xi, run));

    // the delay-shift direction reduces the path-space identity to the
    // delay identity: both checks on one instance
    {
        const ShiftProfile eta = shift_profile_from_config(cfg, dim);
        const ShiftSpec shift = make_shift_spec(model.A, eta, model.tau, run.T, run.step, ControlVariant::gramian);
        const PathDirection from_shift = PathDirection::from_shift(model.A, shift, model.tau, run.T, run.step);
        CheckReport via_path = check_ibp_pathspace(model, from_shift, lin, xi, run);
        const TestFunction seg_lin = TestFunction::coordinate("mode1-endpoint", {0.0}, {unit_vector(dim, 0)});
        CheckReport via_delay = check_ibp_delay(model, shift, seg_lin, xi, run);
        const double a = via_path.estimates[1].value;   // rhs means
        const double b = via_delay.estimates[1].value;
        CheckReport agree;
        agree.id = "ibp-pathspace/cross-check-delay";
        agree.statement = "shift-identity(path-space)";
        agree.variant = "cross-formula";
        agree.seed = run.seed;
        agree.n_paths = run.n_paths;
        agree.step = run.step;
        agree.estimates.push_back({"rhs via path-space", a, via_path.estimates[1].stderr_});
        agree.estimates.push_back({"rhs via delay", b, via_delay.estimates[1].stderr_});
        agree.slack = b - a;
        const double s = std::hypot(via_path.estimates[1].stderr_, via_delay.estimates[1].stderr_);
        agree.z = s > 0.0 ? std::abs(a - b) / s : 0.0;
        agree.verdict = identity_verdict(a - b, s, run.resolution);
        agree.notes.push_back("same driving noise by construction (shared seed)");
        res.checks.push_back(std::move(via_path));
        res.checks.push_back(std::move(agree));
    }
    return res;
}

SuiteResult suite_logsobolev(const ExperimentConfig& cfg) {
    SuiteResult res;
    res.suite = "logsobolev";
    RunParams run = run_params(cfg);
    const std::size_t dim = cfg.model.modes;

    // drift-free case: the mode-1 endpoint law is Gaussian and both sides
    // have quadrature oracles
    {
        DelayModel model{SpectralOperator::power_spectrum(dim, cfg.model.beta), cfg.model.tau, DelayDrift::zero(),
                         1.0};
        const Segment xi = default_initial_segment(model, run.step);
        const TestFunction g = TestFunction::positive_exp("gauss-oracle", {0.0}, {unit_vector(dim, 0)}, 1.0, 0.0);
        const double lam = model.A.spectral_gap();
        const OuLaw law = ou_endpoint_law(lam, 1.0, xi.newest()[0], run.T);
        const GaussianEntropyPair oracle = gaussian_entropy_oracle(
            [&](double x) { return g.profile(x); }, [&](double x) { return g.dprofile(x); }, law.mean, law.variance);
        const double constant = log_sobolev_constant(0.0, run.T, model.a_plus);
        res.checks.push_back(bound_report("logsobolev/gaussian-oracle", "log-sobolev(endpoint)", oracle.entropy,
                                          constant * oracle.grad_sq,
                                          "continuum Gaussian quadrature oracle; slack strictly positive"));

        // Monte Carlo against the discrete-law oracle
        CheckReport mc = check_log_sobolev(model, g, xi, run);
        const std::size_t n_steps = grid_steps(run.T, run.step, "logsobolev");
        double disc_var = 0.0;
        for (std::size_t n = 0; n < n_steps; ++n)
            disc_var += std::exp(-2.0 * lam * (run.T - static_cast<double>(n) * run.step)) * run.step;
        const GaussianEntropyPair disc = gaussian_entropy_oracle(
            [&](double x) { return g.profile(x); }, [&](double x) { return g.dprofile(x); }, law.mean, disc_var);
        mc.estimates.push_back({"oracle entropy (discrete law)", disc.entropy, 0.0});
        mc.estimates.push_back({"oracle grad term (discrete law)", disc.grad_sq, 0.0});
        mc.notes.push_back("drift-free instance; estimates admit quadrature oracles");
        res.checks.push_back(std::move(mc));
    }

    // Lipschitz drift at the configured scale
    {
        DelayModel model = delay_model_from_config(cfg);
        model.sigma0 = 1.0;
        if (model.F.differentiable() && std::isfinite(model.F.lipschitz())) {
            const Segment xi = default_initial_segment(model, run.step);
            const TestFunction g =
                TestFunction::positive_exp("lipschitz-drift", {0.0}, {decay_pattern(dim, 1.0, 1.0)}, 0.8, 0.4);
            res.checks.push_back(check_log_sobolev(model, g, xi, run));
        }
    }
    return res;
}

SuiteResult suite_regularity(const ExperimentConfig& cfg) {
    SuiteResult res;
    res.suite = "regularity";
    const double M = 1.0;  // positive self-adjoint generator

    // closed-form instance: lambda = 1, f == 1 on [0,1]
    {
        const SpectralOperator A({1.0});
        ControlFunction f = ControlFunction::zero(1, 1.0, 1 << 12);
        for (auto& v : f.values) v[0] = 1.0;
        CheckReport rep = check_regularity(A, f, M, 1.0);
        rep.id = "regularity/closed-form";
        const double expected = 0.16809124072457862;  // -1/2 + 2/e - e^{-2}/2
        double observed = rep.estimates[0].value;
        rep.estimates.push_back({"closed form int ||Av||^2", expected, 0.0});
        if (std::abs(observed - expected) > 1e-6) rep.verdict = Verdict::fail;
        res.checks.push_back(std::move(rep));
    }

    // random spectra and piecewise-linear forcings
    double worst_av = 1e300, worst_dv = 1e300;
    bool all_hold = true;
    for (int trial = 0; trial < 100; ++trial) {
        CounterRng rng(cfg.run.seed, 0x2000 + static_cast<std::uint64_t>(trial));
        const std::size_t dim = 1 + static_cast<std::size_t>(rng.uniform() * 6.0);
        std::vector<double> lam(dim);
        for (double& l : lam) l = 0.3 + 30.0 * rng.uniform();
        std::sort(lam.begin(), lam.end());
        const SpectralOperator A(lam);
        const double T = 0.5 + 1.5 * rng.uniform();
        ControlFunction f = ControlFunction::zero(dim, T, 1 << 11);
        for (auto& v : f.values)
            for (std::size_t k = 0; k < dim; ++k) v[k] = 2.0 * rng.uniform() - 1.0;
        const CheckReport rep = check_regularity(A, f, M, T);
        all_hold = all_hold && rep.verdict == Verdict::pass;
        const double int_f = rep.estimates[2].value;
        worst_av = std::min(worst_av, 4.0 * int_f - rep.estimates[0].value);
        worst_dv = std::min(worst_dv, int_f - rep.estimates[1].value);
    }
    CheckReport ens;
    ens.id = "regularity/random-ensemble";
    ens.statement = "maximal-regularity";
    ens.variant = "sampled";
    ens.estimates.push_back({"min margin int||Av||^2", worst_av, 0.0});
    ens.estimates.push_back({"min margin int||v'||^2", worst_dv, 0.0});
    ens.slack = std::min(worst_av, worst_dv);
    ens.verdict = all_hold ? Verdict::pass : Verdict::fail;
    ens.notes.push_back("100 random (spectrum, forcing) instances");
    res.checks.push_back(std::move(ens));
    return res;
}

SuiteResult suite_ibp_evolution(const ExperimentConfig& cfg) {
    SuiteResult res;
    res.suite = "ibp-evolution";
    RunParams run = run_params(cfg);

    // Gaussian instance with an exact oracle
    {
        EvolutionModel model = evolution_model_from_config(cfg);
        model.nonlinearity = EvolutionModel::Nonlinearity::zero;
        const std::size_t dim = model.A.dim();
        const StateVector x0 = default_initial_state(dim);
        const StateVector e = evolution_shift_vector(dim, cfg.shift.scale * 0.25, false);
        const EvolutionShift shift = make_evolution_shift(model.A, run.T, e, grid_steps(run.T, run.step, "suite"));
        const TestFunction f = TestFunction::coordinate("mode1-endpoint", {run.T}, {unit_vector(dim, 0)});
        const IbpOraclePair oracle = evolution_linear_ibp_oracle(model, shift, f, run.T, run.step);

        CheckReport mc = check_ibp_evolution(model, shift, f, x0, run);
        mc.id = "ibp-evolution/gaussian-oracle";
        mc.variant = "discrete-covariance-oracle";
        mc.estimates.push_back({"oracle lhs", oracle.lhs, 0.0});
        mc.estimates.push_back({"oracle rhs", oracle.rhs, 0.0});
        double mc_rhs = 0.0, mc_rhs_se = 0.0;
        for (const auto& est : mc.estimates)
            if (est.name == "rhs") {
                mc_rhs = est.value;
                mc_rhs_se = est.stderr_;
            }
        mc.verdict = identity_verdict(mc_rhs - oracle.rhs, mc_rhs_se, run.resolution);
        mc.z = mc_rhs_se > 0.0 ? std::abs(mc_rhs - oracle.rhs) / mc_rhs_se : 0.0;
        mc.notes.push_back("verdict: Monte Carlo rhs against the exact discrete covariance oracle");
        res.checks.push_back(std::move(mc));
    }

    // nonlinear instance
    {
        const EvolutionModel model = evolution_model_from_config(cfg);
        if (model.nonlinearity == EvolutionModel::Nonlinearity::burgers) {
            const std::size_t dim = model.A.dim();
            const StateVector x0 = default_initial_state(dim);
            const StateVector e = evolution_shift_vector(dim, cfg.shift.scale * 0.25, false);
            const EvolutionShift shift =
                make_evolution_shift(model.A, run.T, e, grid_steps(run.T, run.step, "suite"));
            for (const TestFunction& f : evolution_battery(model.A, run.T)) {
                if (f.kind == TestFunction::Kind::positive_exp || f.kind == TestFunction::Kind::bounded_smooth) {
                    res.checks.push_back(check_ibp_evolution(model, shift, f, x0, run));
                    if (res.checks.size() >= 4) break;
                }
            }
        }
    }
    return res;
}

SuiteResult suite_log_harnack_evolution(const ExperimentConfig& cfg) {
    SuiteResult res;
    res.suite = "log-harnack-evolution";
    RunParams run = run_params(cfg);
    const EvolutionModel model = evolution_model_from_config(cfg);
    const std::size_t dim = model.A.dim();
    const StateVector x0 = default_initial_state(dim);
    const std::size_t n_steps = grid_steps(run.T, run.step, "suite");

    std::vector<EvolutionShift> shifts;
    shifts.push_back(make_evolution_shift(model.A, run.T, evolution_shift_vector(dim, 0.05, false), n_steps));
    shifts.push_back(make_evolution_shift(model.A, run.T, evolution_shift_vector(dim, 0.04, true), n_steps));

    auto reports = check_log_harnack_evolution_battery(model, shifts, evolution_battery(model.A, run.T), x0, run);
    for (auto& r : reports) res.checks.push_back(std::move(r));

    res.checks.push_back(check_girsanov_evolution(model, shifts[0], x0, run));

    // trivial shift and the psi annotation
    {
        const EvolutionShift zero_shift = make_evolution_shift(model.A, run.T, StateVector(dim), n_steps);
        res.checks.push_back(check_log_harnack_evolution(model, zero_shift,
                                                         evolution_battery(model.A, run.T)[0], x0, run,
                                                         cfg.run.c_psi));
    }
    return res;
}

SuiteResult suite_harnack_evolution(const ExperimentConfig& cfg) {
    SuiteResult res;
    res.suite = "harnack-evolution";
    RunParams run = run_params(cfg);
    EvolutionModel model = evolution_model_from_config(cfg);
    if (model.nonlinearity != EvolutionModel::Nonlinearity::burgers)
        throw ConfigError("harnack-evolution requires the burgers nonlinearity");
    const std::size_t dim = model.A.dim();

    // fit the structural constants on this truncation, then fix them
    const ConditionProbeReport probe = condition_probe(model, 200, cfg.run.seed);
    model.k4 = probe.k4_fit;
    model.c_beta = probe.c_beta_fit;
    model.k1 = probe.k1_fit;
    model.k2 = probe.k2_fit;
    model.k5 = 0.0;

    const StateVector x0 = default_initial_state(dim);
    const StateVector e = evolution_shift_vector(dim, 0.05, false);

    CheckReport radius = check_shift_harnack_evolution(model, x0, e, cfg.run.r, cfg.run.p, run);
    radius.estimates.push_back({"delta_e", harnack_delta(model, run.T, e), 0.0});
    radius.estimates.push_back({"p threshold", harnack_p_threshold(harnack_delta(model, run.T, e), cfg.run.r), 0.0});
    res.checks.push_back(std::move(radius));
    res.checks.push_back(check_shift_harnack_evolution_beta(model, x0, e, cfg.run.p, run));
    return res;
}

SuiteResult suite_conditions(const ExperimentConfig& cfg) {
    SuiteResult res;
    res.suite = "conditions";
    EvolutionModel model = evolution_model_from_config(cfg);
    model.nonlinearity = EvolutionModel::Nonlinearity::burgers;
    const std::size_t dim = model.A.dim();

    // orthogonality <B(u),u> = 0 in the truncation
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        CounterRng rng(cfg.run.seed, 0x3000 + static_cast<std::uint64_t>(trial));
        StateVector u(dim);
        for (std::size_t k = 0; k < dim; ++k) u[k] = rng.normal();
        const double nu = norm(u);
        if (nu > 0.0) worst = std::max(worst, std::abs(dot(nonlinear_term(model, u), u)) / (nu * nu * nu));
    }
    res.checks.push_back(bound_report("conditions/orthogonality", "energy-conservation", worst, 1e-10,
                                      "|<B(u),u>| / ||u||^3 over 200 random fields"));

    // derivative against central differences
    double worst_fd = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        CounterRng rng(cfg.run.seed, 0x4000 + static_cast<std::uint64_t>(trial));
        StateVector v(dim), h(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            v[k] = rng.normal() / static_cast<double>(k + 1);
            h[k] = rng.normal() / static_cast<double>(k + 1);
        }
        const double eps = 1e-4;
        const StateVector fd =
            (1.0 / (2.0 * eps)) * (nonlinear_term(model, v + eps * h) - nonlinear_term(model, v - (eps * h)));
        worst_fd = std::max(worst_fd, norm(fd - nonlinear_gateaux(model, v, h)));
    }
    res.checks.push_back(bound_report("conditions/gateaux-fd", "derivative-consistency", worst_fd, 1e-6,
                                      "central differences at eps = 1e-4"));

    const ConditionProbeReport probe = condition_probe(model, 200, cfg.run.seed);
    CheckReport pr;
    pr.id = "conditions/probe-stability";
    pr.statement = "structural-conditions";
    pr.variant = "sampled-ratios";
    pr.estimates.push_back({"K1 fit", probe.k1_fit, 0.0});
    pr.estimates.push_back({"K2 fit", probe.k2_fit, 0.0});
    pr.estimates.push_back({"K4 fit", probe.k4_fit, 0.0});
    pr.estimates.push_back({"c_beta fit", probe.c_beta_fit, 0.0});
    pr.estimates.push_back({"K5 ratio", probe.k5_max_ratio, 0.0});
    pr.estimates.push_back({"growth under doubling", probe.growth, 0.0});
    pr.slack = 0.05 - probe.growth;
    pr.verdict = probe.stable ? Verdict::pass : Verdict::fail;
    pr.notes.push_back("fitted constants are truncation-dependent; recorded, not asserted against external values");
    res.checks.push_back(std::move(pr));
    return res;
}

SuiteResult suite_density(const ExperimentConfig& cfg) {
    SuiteResult res;
    res.suite = "density";
    RunParams run = run_params(cfg);

    // Gaussian model: the conditional score has a closed form
    {
        EvolutionModel model = evolution_model_from_config(cfg);
        model.nonlinearity = EvolutionModel::Nonlinearity::zero;
        const std::size_t dim = model.A.dim();
        const StateVector x0 = default_initial_state(dim);
        const auto bins = density_score(model, x0, run.T, run.step, run.n_paths, 12, run.seed, run.jobs);
        const OuLaw law = ou_endpoint_law(model.A.spectral_gap(), model.q[0], x0[0], run.T);
        const double sd = std::sqrt(law.variance);

        double max_z = 0.0;
        std::size_t used = 0;
        for (const auto& b : bins) {
            if (b.empty || std::abs(b.center - law.mean) > 2.0 * sd) continue;
            const double truth = -(b.sample_mean - law.mean) / law.variance;
            if (b.stderr_ > 0.0) max_z = std::max(max_z, std::abs(b.score - truth) / b.stderr_);
            ++used;
        }
        CheckReport rep;
        rep.id = "density/gaussian-score";
        rep.statement = "density-score";
        rep.variant = "binned-conditional";
        rep.seed = run.seed;
        rep.n_paths = run.n_paths;
        rep.step = run.step;
        rep.estimates.push_back({"max |z| over bins", max_z, 0.0});
        rep.estimates.push_back({"bins used", static_cast<double>(used), 0.0});
        rep.z = max_z;
        rep.slack = 3.0 - max_z;
        rep.verdict = (used > 0 && max_z <= 3.0) ? Verdict::pass : Verdict::fail;
        rep.notes.push_back("closed-form score -(x-m)/s^2 evaluated at the per-bin sample mean");
        res.checks.push_back(std::move(rep));
    }

    // nonlinear model: informational unimodality smoke test
    {
        const EvolutionModel model = evolution_model_from_config(cfg);
        if (model.nonlinearity == EvolutionModel::Nonlinearity::burgers) {
            const std::size_t dim = model.A.dim();
            const StateVector x0 = default_initial_state(dim);
            const auto bins =
                density_score(model, x0, run.T, run.step, std::min<std::size_t>(run.n_paths, 20000), 10, run.seed,
                              run.jobs);
            std::size_t inversions = 0, used = 0;
            double prev = 0.0;
            bool have_prev = false;
            for (const auto& b : bins) {
                if (b.empty) continue;
                if (have_prev && b.score > prev + 3.0 * b.stderr_) ++inversions;
                prev = b.score;
                have_prev = true;
                ++used;
            }
            CheckReport rep;
            rep.id = "density/nonlinear-smoke";
            rep.statement = "density-score";
            rep.variant = "informational";
            rep.seed = run.seed;
            rep.n_paths = std::min<std::size_t>(run.n_paths, 20000);
            rep.step = run.step;
            rep.estimates.push_back({"monotonicity inversions", static_cast<double>(inversions), 0.0});
            rep.estimates.push_back({"bins used", static_cast<double>(used), 0.0});
            rep.verdict = Verdict::pass;
            rep.notes.push_back("informational smoke test; never gates the suite");
            res.checks.push_back(std::move(rep));
        }
    }
    return res;
}

}  // namespace

std::vector<std::string> suite_names() {
    std::vector<std::string> names = kSuites;
    names.push_back("all");
    return names;
}

bool is_suite_name(const std::string& name) {
    if (name == "all") return true;
    return std::find(kSuites.begin(), kSuites.end(), name) != kSuites.end();
}

DelayModel delay_model_from_config(const ExperimentConfig& cfg) {
    const std::size_t dim = cfg.model.modes;
    DelayDrift drift = DelayDrift::zero();
    if (cfg.model.drift == "linear")
        drift = DelayDrift::linear(StateVector(dim, cfg.model.c1), StateVector(dim, cfg.model.c2));
    else if (cfg.model.drift == "bounded-smooth")
        drift = DelayDrift::bounded_smooth(cfg.model.drift_scale);
    else if (cfg.model.drift == "modulus")
        drift = DelayDrift::modulus(cfg.model.drift_scale, decay_pattern(dim, 1.0, 1.5));
    return DelayModel{SpectralOperator::power_spectrum(dim, cfg.model.beta), cfg.model.tau, std::move(drift),
                      cfg.model.sigma0, cfg.model.a_plus};
}

EvolutionModel evolution_model_from_config(const ExperimentConfig& cfg) {
    const auto kind = cfg.model.nonlinearity == "burgers" ? EvolutionModel::Nonlinearity::burgers
                                                          : EvolutionModel::Nonlinearity::zero;
    const std::size_t modes = cfg.model.kind == "evolution" ? cfg.model.modes : 16;
    EvolutionModel m = make_evolution_model(modes, std::max(cfg.model.beta, 1.5), cfg.model.theta, cfg.model.q0, kind);
    return m;
}

Segment default_initial_segment(const DelayModel& model, double step) {
    return Segment::constant(decay_pattern(model.A.dim(), 0.4, 2.0), model.tau, step);
}

StateVector default_initial_state(std::size_t dim) { return decay_pattern(dim, 0.5, 2.0); }

ShiftProfile shift_profile_from_config(const ExperimentConfig& cfg, std::size_t dim) {
    const StateVector v = decay_pattern(dim, cfg.shift.scale, 2.0);
    if (cfg.shift.profile == "zero") return ShiftProfile::zero(dim);
    if (cfg.shift.profile == "constant") return ShiftProfile::constant(v);
    if (cfg.shift.profile == "poly") return ShiftProfile::poly(v, 1.0, 0.5, -0.25);
    return ShiftProfile::decay(v);
}

SuiteResult run_suite(const std::string& name, const ExperimentConfig& cfg) {
    if (name == "all") {
        SuiteResult all;
        all.suite = "all";
        for (const auto& s : kSuites) {
            SuiteResult one = run_suite(s, cfg);
            for (auto& c : one.checks) all.checks.push_back(std::move(c));
            if (one.has_path_dump && !all.has_path_dump) {
                all.path_dump = std::move(one.path_dump);
                all.has_path_dump = true;
            }
        }
        return all;
    }

    SuiteResult res;
    if (name == "control")
        res = suite_control(cfg);
    else if (name == "ibp-delay")
        res = suite_ibp_delay(cfg);
    else if (name == "harnack-delay")
        res = suite_harnack_delay(cfg);
    else if (name == "ibp-pathspace")
        res = suite_ibp_pathspace(cfg);
    else if (name == "logsobolev")
        res = suite_logsobolev(cfg);
    else if (name == "regularity")
        res = suite_regularity(cfg);
    else if (name == "ibp-evolution")
        res = suite_ibp_evolution(cfg);
    else if (name == "log-harnack-evolution")
        res = suite_log_harnack_evolution(cfg);
    else if (name == "harnack-evolution")
        res = suite_harnack_evolution(cfg);
    else if (name == "conditions")
        res = suite_conditions(cfg);
    else if (name == "density")
        res = suite_density(cfg);
    else
        throw ConfigError("unknown suite '" + name + "'");

    if (cfg.output.dump_paths) {
        RunParams run = run_params(cfg);
        if (cfg.model.kind == "delay") {
            const DelayModel model = delay_model_from_config(cfg);
            res.path_dump = dump_delay_path(model, default_initial_segment(model, run.step), run);
        } else {
            const EvolutionModel model = evolution_model_from_config(cfg);
            res.path_dump = dump_evolution_path(model, default_initial_state(model.A.dim()), run);
        }
        res.has_path_dump = true;
    }
    return res;
}

std::string oracle_table(const ExperimentConfig& cfg) {
    std::ostringstream out;
    const SpectralOperator A1({1.0});
    const StateVector B1({1.0}), x1({1.0});
    out << "single-mode steering (lambda=1, T=1, x=1)\n";
    out << "  minimal energy          " << min_energy_norm_sq(A1, B1, 1.0, x1) << "\n";
    out << "  ramp-control energy     " << ramp_control(A1, B1, 1.0, x1).l2_norm_sq() << "\n";
    out << "  ramp energy bound       " << ramp_control_energy_bound(A1, B1, 1.0, x1) << "\n";
    out << "  gramian entry           " << gramian(A1, B1, 1.0).entries[0] << "\n";
    out << "log-sobolev constants\n";
    out << "  c(L=0, T=" << cfg.run.T << ", a+=0)      " << log_sobolev_constant(0.0, cfg.run.T, 0.0) << "\n";
    out << "  c(L=1, T=1, a+=0)       " << log_sobolev_constant(1.0, 1.0, 0.0) << "\n";
    const DelayModel model = delay_model_from_config(cfg);
    if (model.F.differentiable() && std::isfinite(model.F.lipschitz()))
        out << "  c(L=" << model.F.lipschitz() << ", T=" << cfg.run.T << ", a+=" << model.a_plus << ")  "
            << log_sobolev_constant(model.F.lipschitz(), cfg.run.T, model.a_plus) << "\n";
    const ShiftProfile eta = shift_profile_from_config(cfg, model.A.dim());
    const ShiftSpec shift = make_shift_spec(model.A, eta, model.tau, cfg.run.T, cfg.run.step,
                                            ControlVariant::gramian);
    out << "delay shift-harnack exponents (p=" << cfg.run.p << ")\n";
    if (model.F.differentiable()) {
        out << "  gramian                 "
            << harnack_exponent_delay(model, shift, cfg.run.T, cfg.run.p, HarnackVariant::gramian) << "\n";
        out << "  energy-bound            "
            << harnack_exponent_delay(model, shift, cfg.run.T, cfg.run.p, HarnackVariant::energy) << "\n";
        out << "  selfadjoint             "
            << harnack_exponent_delay(model, shift, cfg.run.T, cfg.run.p, HarnackVariant::selfadjoint) << "\n";
    }
    return out.str();
}

}  // namespace shiftlab
