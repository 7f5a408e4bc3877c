#include "shiftlab/delay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace shiftlab {

namespace {

// (1 - e^{-lambda h}) / lambda.
inline double kappa_factor(double lambda, double h) { return -std::expm1(-lambda * h) / lambda; }

inline double h_norm(const double* a, std::size_t dim) {
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) s += a[k] * a[k];
    return std::sqrt(s);
}

}  // namespace

SegmentRef SegmentRef::of(const Segment& s) {
    SegmentRef ref(nullptr, s.values.size(), s.values.empty() ? 0 : s.values.front().size());
    ref.boxed_ = s.values.data();
    return ref;
}

double SegmentRef::sup_norm() const {
    double m = 0.0;
    for (std::size_t i = 0; i < n_nodes_; ++i) m = std::max(m, h_norm(node(i), dim_));
    return m;
}

DelayDrift DelayDrift::zero() { return DelayDrift{}; }

DelayDrift DelayDrift::linear(StateVector now_coeff, StateVector delay_coeff) {
    if (now_coeff.size() != delay_coeff.size())
        throw std::invalid_argument("DelayDrift::linear: coefficient dimension mismatch");
    DelayDrift d;
    d.kind_ = Kind::linear;
    d.c_now_ = std::move(now_coeff);
    d.c_delay_ = std::move(delay_coeff);
    return d;
}

DelayDrift DelayDrift::bounded_smooth(double amplitude) {
    DelayDrift d;
    d.kind_ = Kind::bounded_smooth;
    d.amp_ = amplitude;
    return d;
}

DelayDrift DelayDrift::modulus(double amplitude, StateVector direction) {
    DelayDrift d;
    d.kind_ = Kind::modulus;
    d.amp_ = amplitude;
    d.dir_ = std::move(direction);
    return d;
}

void DelayDrift::eval(const SegmentRef& seg, double* out) const {
    const std::size_t dim = seg.dim();
    switch (kind_) {
        case Kind::zero:
            std::fill(out, out + dim, 0.0);
            return;
        case Kind::linear: {
            const double* now = seg.newest();
            const double* old = seg.oldest();
            for (std::size_t k = 0; k < dim; ++k) out[k] = c_now_[k] * now[k] + c_delay_[k] * old[k];
            return;
        }
        case Kind::bounded_smooth: {
            const double* old = seg.oldest();
            for (std::size_t k = 0; k < dim; ++k) out[k] = amp_ * std::sin(old[k]);
            return;
        }
        case Kind::modulus: {
            const double scale = amp_ * std::sqrt(std::min(1.0, seg.sup_norm()));
            for (std::size_t k = 0; k < dim; ++k) out[k] = scale * dir_[k];
            return;
        }
    }
}

void DelayDrift::gateaux(const SegmentRef& x, const SegmentRef& dir, double* out) const {
    const std::size_t dim = x.dim();
    switch (kind_) {
        case Kind::zero:
            std::fill(out, out + dim, 0.0);
            return;
        case Kind::linear: {
            const double* dn = dir.newest();
            const double* dd = dir.oldest();
            for (std::size_t k = 0; k < dim; ++k) out[k] = c_now_[k] * dn[k] + c_delay_[k] * dd[k];
            return;
        }
        case Kind::bounded_smooth: {
            const double* old = x.oldest();
            const double* dd = dir.oldest();
            for (std::size_t k = 0; k < dim; ++k) out[k] = amp_ * std::cos(old[k]) * dd[k];
            return;
        }
        case Kind::modulus:
            throw std::invalid_argument("DelayDrift::gateaux: modulus drift has no derivative descriptor");
    }
}

double DelayDrift::lipschitz() const {
    switch (kind_) {
        case Kind::zero:
            return 0.0;
        case Kind::linear: {
            double l1 = 0.0, l2 = 0.0;
            for (double c : c_now_.c) l1 = std::max(l1, std::abs(c));
            for (double c : c_delay_.c) l2 = std::max(l2, std::abs(c));
            return l1 + l2;
        }
        case Kind::bounded_smooth:
            return std::abs(amp_);
        case Kind::modulus:
            return std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

double DelayDrift::modulus_gamma(double r) const {
    switch (kind_) {
        case Kind::modulus:
            return std::abs(amp_) * norm(dir_) * std::min(1.0, std::sqrt(std::max(0.0, r)));
        default:
            return lipschitz() * r;
    }
}

void DelayModel::validate(const char* where) const {
    if (!(tau > 0.0)) throw std::invalid_argument(std::string(where) + ": delay tau must be positive");
    if (!(sigma0 >= 0.0)) throw std::invalid_argument(std::string(where) + ": sigma0 must be nonnegative");
    if (a_plus < 0.0) throw std::invalid_argument(std::string(where) + ": a_plus must be nonnegative");
}

ShiftProfile ShiftProfile::zero(std::size_t dim) {
    ShiftProfile p;
    p.kind = Kind::zero;
    p.v = StateVector(dim);
    return p;
}

ShiftProfile ShiftProfile::decay(StateVector v) {
    ShiftProfile p;
    p.kind = Kind::decay;
    p.v = std::move(v);
    return p;
}

ShiftProfile ShiftProfile::constant(StateVector v) {
    ShiftProfile p;
    p.kind = Kind::constant;
    p.v = std::move(v);
    return p;
}

ShiftProfile ShiftProfile::poly(StateVector v, double c0, double c1, double c2) {
    ShiftProfile p;
    p.kind = Kind::poly;
    p.v = std::move(v);
    p.c0 = c0;
    p.c1 = c1;
    p.c2 = c2;
    return p;
}

StateVector ShiftProfile::value(const SpectralOperator& A, double tau, double s) const {
    switch (kind) {
        case Kind::zero:
            return StateVector(v.size());
        case Kind::decay:
            return A.semigroup(s + tau, v);
        case Kind::constant:
            return v;
        case Kind::poly: {
            const double r = s / tau;
            return (c0 + c1 * r + c2 * r * r) * v;
        }
    }
    return StateVector(v.size());
}

StateVector ShiftProfile::deriv(const SpectralOperator& A, double tau, double s) const {
    switch (kind) {
        case Kind::zero:
        case Kind::constant:
            return StateVector(v.size());
        case Kind::decay: {
            StateVector d = A.power(1.0, A.semigroup(s + tau, v));
            return -1.0 * d;
        }
        case Kind::poly:
            return (c1 / tau + 2.0 * c2 * s / (tau * tau)) * v;
    }
    return StateVector(v.size());
}

Segment ShiftProfile::sample(const SpectralOperator& A, double tau, double step) const {
    const std::size_t n = grid_steps(tau, step, "ShiftProfile::sample");
    Segment s;
    s.tau = tau;
    s.step = step;
    s.values.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) s.values.push_back(value(A, tau, -tau + static_cast<double>(i) * step));
    return s;
}

bool ShiftSpec::is_zero() const {
    for (const auto& v : eta.values)
        if (norm_sq(v) != 0.0) return false;
    return true;
}

ControlFunction tracking_control_fd(const SpectralOperator& A, const Segment& eta) {
    eta.validate("tracking_control_fd");
    const std::size_t n = eta.values.size();
    if (n < 3) throw std::invalid_argument("tracking_control_fd: segment grid too coarse (need >= 3 nodes)");
    const double h = eta.step;
    ControlFunction psi;
    psi.horizon = eta.tau;
    psi.step = h;
    psi.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        StateVector d(eta.values[i].size());
        if (i == 0)
            d = (1.0 / (2.0 * h)) * (-3.0 * eta.values[0] + 4.0 * eta.values[1] - eta.values[2]);
        else if (i + 1 == n)
            d = (1.0 / (2.0 * h)) * (3.0 * eta.values[n - 1] - 4.0 * eta.values[n - 2] + eta.values[n - 3]);
        else
            d = (1.0 / (2.0 * h)) * (eta.values[i + 1] - eta.values[i - 1]);
        psi.values.push_back(d + A.power(1.0, eta.values[i]));
    }
    return psi;
}

ControlFunction tracking_control(const SpectralOperator& A, const ShiftProfile& eta, double tau, double step) {
    const std::size_t n = grid_steps(tau, step, "tracking_control");
    ControlFunction psi;
    psi.horizon = tau;
    psi.step = step;
    psi.values.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double s = -tau + static_cast<double>(i) * step;
        psi.values.push_back(eta.deriv(A, tau, s) + A.power(1.0, eta.value(A, tau, s)));
    }
    return psi;
}

ShiftSpec make_shift_spec(const SpectralOperator& A, const ShiftProfile& eta, double tau, double T, double step,
                          ControlVariant variant, const ScalarRamp* u, const ControlFunction* h) {
    if (!(T > tau)) throw std::domain_error("make_shift_spec: requires T > tau");
    ShiftSpec spec;
    spec.eta = eta.sample(A, tau, step);
    const StateVector target = eta.value(A, tau, -tau);

    const double span = T - tau;
    const std::size_t n_steer = grid_steps(span, step, "make_shift_spec");
    const StateVector identity_map(A.dim(), 1.0);
    switch (variant) {
        case ControlVariant::gramian:
            spec.steer = min_energy_control(A, identity_map, span, target, n_steer);
            break;
        case ControlVariant::ramp:
            spec.steer = ramp_control(A, identity_map, span, target, n_steer);
            break;
        case ControlVariant::synthesized: {
            const ScalarRamp ramp = (u != nullptr) ? *u : ScalarRamp::linear(span);
            spec.steer = synthesized_control(A, span, target, ramp, h, n_steer);
            break;
        }
    }
    spec.track = tracking_control(A, eta, tau, step);
    return spec;
}

std::vector<double> branch_drift_nodes(const ShiftSpec& shift, double T, double step, bool* interpolated) {
    const double tau = shift.track.horizon;
    const std::size_t n_steps = grid_steps(T, step, "branch_drift_nodes");
    const std::size_t n_boundary = grid_steps(T - tau, step, "branch_drift_nodes");
    bool interp_steer = false, interp_track = false;
    const ControlFunction steer = resample(shift.steer, step, interp_steer);
    const ControlFunction track = resample(shift.track, step, interp_track);
    if (interpolated != nullptr) *interpolated = interp_steer || interp_track;

    const std::size_t dim = track.values.front().size();
    std::vector<double> out((n_steps + 1) * dim, 0.0);
    for (std::size_t n = 0; n <= n_steps; ++n) {
        const StateVector& v = (n < n_boundary) ? steer.values[n] : track.values[n - n_boundary];
        std::copy(v.c.begin(), v.c.end(), out.begin() + n * dim);
    }
    return out;
}

ShiftProfileGrid shift_profile_grid(const SpectralOperator& A, const ShiftSpec& shift, double tau, double T,
                                    double step) {
    ShiftProfileGrid g;
    g.step = step;
    g.n_hist = grid_steps(tau, step, "shift_profile_grid");
    g.n_steps = grid_steps(T, step, "shift_profile_grid");
    g.dim = A.dim();
    g.flat.assign((g.n_hist + g.n_steps + 1) * g.dim, 0.0);

    bool interp = false;
    const ControlFunction steer = resample(shift.steer, step, interp);
    Segment eta = shift.eta;
    if (std::abs(eta.step - step) > 1e-12 * step) {
        // resample the target profile onto the simulation grid
        Segment r;
        r.tau = eta.tau;
        r.step = step;
        const std::size_t n = g.n_hist;
        r.values.reserve(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            const double s = -tau + static_cast<double>(i) * step;
            const double pos = (s + tau) / eta.step;
            std::size_t j = std::min(static_cast<std::size_t>(pos), eta.values.size() - 2);
            const double w = pos - static_cast<double>(j);
            StateVector v = eta.values[j];
            for (std::size_t k = 0; k < v.size(); ++k) v[k] = (1.0 - w) * v[k] + w * eta.values[j + 1][k];
            r.values.push_back(std::move(v));
        }
        eta = std::move(r);
    }

    const std::size_t n_boundary = grid_steps(T - tau, step, "shift_profile_grid");
    // Lower branch: Gamma' = -A Gamma + steer, Gamma(0) = 0, integrated by
    // the semigroup recursion with trapezoid increments (composes to the
    // composite-trapezoid Duhamel quadrature).
    for (std::size_t k = 0; k < g.dim; ++k) {
        const double lam = A.eigenvalue(k);
        const double decay = std::exp(-step * lam);
        double acc = 0.0;
        g.flat[g.n_hist * g.dim + k] = 0.0;
        for (std::size_t n = 1; n <= n_boundary; ++n) {
            acc = decay * acc + 0.5 * step * (decay * steer.values[n - 1][k] + steer.values[n][k]);
            g.flat[(g.n_hist + n) * g.dim + k] = acc;
        }
    }
    // Upper branch: Gamma(t) = eta(t - T).
    for (std::size_t n = n_boundary; n <= g.n_steps; ++n) {
        const StateVector& v = eta.values[n - n_boundary];
        std::copy(v.c.begin(), v.c.end(), g.flat.begin() + (g.n_hist + n) * g.dim);
    }
    return g;
}

StateVector shift_profile_at(const SpectralOperator& A, const ShiftSpec& shift, double tau, double T, double t) {
    if (t < -1e-12 || t > T + 1e-12) throw std::domain_error("shift_profile_at: t outside [0,T]");
    t = std::clamp(t, 0.0, T);
    const double step = shift.eta.step;
    const ShiftProfileGrid g = shift_profile_grid(A, shift, tau, T, step);
    const double pos = t / step;
    const std::size_t j = std::min(static_cast<std::size_t>(pos), g.n_steps - 1);
    const double w = pos - static_cast<double>(j);
    StateVector out(g.dim);
    const double* a = g.at_step(j);
    const double* b = g.at_step(j + 1);
    for (std::size_t k = 0; k < g.dim; ++k) out[k] = (1.0 - w) * a[k] + w * b[k];
    return out;
}

Segment PathRecord::final_segment() const {
    Segment s;
    s.tau = tau;
    s.step = step;
    s.values.reserve(n_hist + 1);
    for (std::size_t i = 0; i <= n_hist; ++i) {
        const double* p = states.data() + (n_steps + i) * dim;
        StateVector v(dim);
        std::copy(p, p + dim, v.c.begin());
        s.values.push_back(std::move(v));
    }
    return s;
}

PathRecord simulate_with_noise(const DelayModel& model, const Segment& xi, double T, double step,
                               std::span<const double> noise, std::span<const double> extra) {
    model.validate("simulate");
    xi.validate("simulate");
    const std::size_t dim = model.A.dim();
    if (xi.values.front().size() != dim) throw std::invalid_argument("simulate: initial segment dimension mismatch");
    if (std::abs(xi.tau - model.tau) > 1e-12) throw std::invalid_argument("simulate: initial segment has wrong delay");

    PathRecord p;
    p.step = step;
    p.tau = model.tau;
    p.dim = dim;
    p.n_hist = grid_steps(model.tau, step, "simulate");
    p.n_steps = grid_steps(T, step, "simulate");
    if (std::abs(xi.step - step) > 1e-12) throw std::invalid_argument("simulate: step does not match initial segment grid");
    if (noise.size() != p.n_steps * dim) throw std::invalid_argument("simulate: noise buffer size mismatch");
    if (!extra.empty() && extra.size() != (p.n_steps + 1) * dim)
        throw std::invalid_argument("simulate: extra drift buffer size mismatch");

    p.states.assign((p.n_hist + p.n_steps + 1) * dim, 0.0);
    p.noise.assign(noise.begin(), noise.end());
    for (std::size_t i = 0; i <= p.n_hist; ++i)
        std::copy(xi.values[i].c.begin(), xi.values[i].c.end(), p.states.begin() + i * dim);

    std::vector<double> decay(dim), kappa(dim), drift(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        decay[k] = std::exp(-model.A.eigenvalue(k) * step);
        kappa[k] = kappa_factor(model.A.eigenvalue(k), step);
    }

    for (std::size_t n = 0; n < p.n_steps; ++n) {
        const SegmentRef seg = p.segment_at_step(n);
        model.F.eval(seg, drift.data());
        const double* x = p.state_at_step(n);
        const double* dw = p.dW(n);
        double* y = p.states.data() + (p.n_hist + n + 1) * dim;
        const double* ex = extra.empty() ? nullptr : extra.data() + n * dim;
        bool finite = true;
        for (std::size_t k = 0; k < dim; ++k) {
            double d = drift[k];
            if (ex != nullptr) d += ex[k];
            y[k] = decay[k] * x[k] + kappa[k] * d + decay[k] * model.sigma0 * dw[k];
            finite = finite && std::isfinite(y[k]);
        }
        if (!finite)
            throw std::runtime_error("simulate: non-finite state at t = " + std::to_string((n + 1) * step));
    }
    return p;
}

PathRecord simulate(const DelayModel& model, const Segment& xi, double T, double step, CounterRng& rng,
                    std::span<const double> extra) {
    const std::size_t dim = model.A.dim();
    const std::size_t n_steps = grid_steps(T, step, "simulate");
    std::vector<double> noise(n_steps * dim);
    const double sqrt_step = std::sqrt(step);
    for (double& v : noise) v = sqrt_step * rng.normal();
    return simulate_with_noise(model, xi, T, step, noise, extra);
}

StateVector coupling_drift(const DelayModel& model, const ShiftSpec& shift, double eps, double T, double t,
                           const Segment& x_seg, const Segment& y_seg) {
    if (x_seg.values.size() != y_seg.values.size() || std::abs(x_seg.step - y_seg.step) > 1e-12)
        throw std::invalid_argument("coupling_drift: misaligned segments");
    const std::size_t dim = x_seg.values.front().size();
    const double inv_sigma = model.inv_sigma();
    StateVector h(dim);

    const double boundary = T - model.tau;
    if (t < boundary) {
        const double pos = t / shift.steer.step;
        const std::size_t j = static_cast<std::size_t>(std::llround(pos));
        if (std::abs(pos - static_cast<double>(j)) > 1e-9 || j >= shift.steer.values.size())
            throw std::invalid_argument("coupling_drift: t not aligned to the steering grid");
        h = shift.steer.values[j];
    } else {
        const double pos = (t - boundary) / shift.track.step;
        const std::size_t j = static_cast<std::size_t>(std::llround(pos));
        if (std::abs(pos - static_cast<double>(j)) > 1e-9 || j >= shift.track.values.size())
            throw std::invalid_argument("coupling_drift: t not aligned to the tracking grid");
        h = shift.track.values[j];
    }
    h *= eps * inv_sigma;

    std::vector<double> fx(dim), fy(dim);
    model.F.eval(SegmentRef::of(x_seg), fx.data());
    model.F.eval(SegmentRef::of(y_seg), fy.data());
    for (std::size_t k = 0; k < dim; ++k) h[k] += inv_sigma * (fx[k] - fy[k]);
    return h;
}

double log_girsanov_weight(const PathRecord& path, std::span<const double> h_nodes) {
    if (h_nodes.size() != (path.n_steps + 1) * path.dim)
        throw std::invalid_argument("log_girsanov_weight: drift record size mismatch");
    double ito = 0.0, quad = 0.0;
    for (std::size_t n = 0; n < path.n_steps; ++n) {
        const double* h = h_nodes.data() + n * path.dim;
        const double* dw = path.dW(n);
        for (std::size_t k = 0; k < path.dim; ++k) {
            ito += h[k] * dw[k];
            quad += h[k] * h[k];
        }
    }
    return -ito - 0.5 * quad * path.step;
}

double ibp_weight_delay(const DelayModel& model, const ShiftSpec& shift, const ShiftProfileGrid& gamma,
                        const PathRecord& path) {
    const double T = static_cast<double>(path.n_steps) * path.step;
    const std::vector<double> branch = branch_drift_nodes(shift, T, path.step);
    return ibp_weight_delay(model, std::span<const double>(branch), gamma, path);
}

double ibp_weight_delay(const DelayModel& model, std::span<const double> branch_nodes, const ShiftProfileGrid& gamma,
                        const PathRecord& path) {
    if (!model.F.differentiable())
        throw std::invalid_argument("ibp_weight_delay: drift lacks a derivative descriptor");
    const std::size_t dim = path.dim;
    if (branch_nodes.size() != (path.n_steps + 1) * dim)
        throw std::invalid_argument("ibp_weight_delay: branch drift size mismatch");

    const double inv_sigma = model.inv_sigma();
    std::vector<double> grad(dim);
    double sum = 0.0;
    for (std::size_t n = 0; n < path.n_steps; ++n) {
        model.F.gateaux(path.segment_at_step(n), gamma.segment_at_step(n), grad.data());
        const double* b = branch_nodes.data() + n * dim;
        const double* dw = path.dW(n);
        for (std::size_t k = 0; k < dim; ++k) sum += inv_sigma * (b[k] - grad[k]) * dw[k];
    }
    return sum;
}

double harnack_exponent_delay(const DelayModel& model, const ShiftSpec& shift, double T, double p, HarnackVariant v) {
    if (!(p > 1.0)) throw std::domain_error("harnack_exponent_delay: requires p > 1");
    if (!(T > model.tau)) throw std::domain_error("harnack_exponent_delay: requires T > tau");
    const double span = T - model.tau;
    const double M = model.inv_sigma();
    const StateVector identity_map(model.A.dim(), 1.0);
    const StateVector& target = shift.eta.oldest();  // eta(-tau)

    const double psi_sq = shift.track.l2_norm_sq();
    const double eta_sup = shift.eta.sup_norm();

    double energy = 0.0;
    switch (v) {
        case HarnackVariant::gramian:
        case HarnackVariant::modulus:
            energy = min_energy_norm_sq(model.A, identity_map, span, target);
            break;
        case HarnackVariant::energy:
            energy = 2.0 * (norm_sq(target) / span + 2.0 * model.A.half_norm_sq(target));
            break;
        case HarnackVariant::selfadjoint:
            energy = 2.0 * model.A.theta_norm_sq(1.0, target) / (-std::expm1(-2.0 * span * model.A.spectral_gap()));
            break;
    }

    if (v == HarnackVariant::modulus) {
        const double arg = std::max(eta_sup, std::sqrt(span * energy));
        const double g = model.F.modulus_gamma(arg);
        return (M * M * p / (p - 1.0)) * (energy + T * g * g + psi_sq);
    }

    const double L = model.F.lipschitz();
    if (!std::isfinite(L))
        throw std::invalid_argument("harnack_exponent_delay: Lipschitz variant requested for non-Lipschitz drift");
    const double bracket = 0.5 * (2.0 + L * L * span * span) * energy + psi_sq +
                           model.tau * std::max(span * energy, eta_sup * eta_sup);
    return (p * M * M / (p - 1.0)) * bracket;
}

}  // namespace shiftlab
