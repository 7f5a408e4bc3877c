#include "shiftlab/control.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace shiftlab {

namespace {

void require_same_dim(const SpectralOperator& A, const StateVector& B, const char* where) {
    A.require_dim(B, where);
    for (double b : B.c)
        if (!std::isfinite(b)) throw std::invalid_argument(std::string(where) + ": non-finite input map entry");
}

void require_positive_diag(const StateVector& B, const char* where) {
    for (double b : B.c)
        if (!(b > 0.0)) throw std::invalid_argument(std::string(where) + ": singular or non-positive diagonal entry");
}

}  // namespace

ControlFunction ControlFunction::zero(std::size_t dim, double horizon, std::size_t n_steps) {
    ControlFunction f;
    f.horizon = horizon;
    f.step = horizon / static_cast<double>(n_steps);
    f.values.assign(n_steps + 1, StateVector(dim));
    return f;
}

double ControlFunction::l2_norm_sq() const {
    if (values.size() < 2) return 0.0;
    double s = 0.5 * (norm_sq(values.front()) + norm_sq(values.back()));
    for (std::size_t i = 1; i + 1 < values.size(); ++i) s += norm_sq(values[i]);
    return s * step;
}

void ControlFunction::validate(const char* where) const {
    const std::size_t n = grid_steps(horizon, step, where);
    if (values.size() != n + 1)
        throw std::invalid_argument(std::string(where) + ": control has " + std::to_string(values.size()) +
                                    " nodes, expected " + std::to_string(n + 1));
    const std::size_t dim = values.empty() ? 0 : values.front().size();
    for (const auto& v : values)
        if (v.size() != dim) throw std::invalid_argument(std::string(where) + ": inconsistent node dimension");
    if (!std::isfinite(l2_norm_sq())) throw std::invalid_argument(std::string(where) + ": non-finite control energy");
}

ControlFunction resample(const ControlFunction& f, double new_step, bool& interpolated) {
    interpolated = false;
    if (std::abs(new_step - f.step) <= 1e-12 * f.step) return f;
    interpolated = true;
    const std::size_t n = grid_steps(f.horizon, new_step, "resample");
    ControlFunction g;
    g.horizon = f.horizon;
    g.step = new_step;
    g.values.reserve(n + 1);
    const std::size_t last = f.values.size() - 1;
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) * new_step;
        double pos = t / f.step;
        std::size_t j = static_cast<std::size_t>(pos);
        if (j >= last) {
            g.values.push_back(f.values[last]);
            continue;
        }
        const double w = pos - static_cast<double>(j);
        StateVector v = f.values[j];
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = (1.0 - w) * v[k] + w * f.values[j + 1][k];
        g.values.push_back(std::move(v));
    }
    return g;
}

namespace {

// Moments J_q = int_0^H u^q e^{-lam (H - u)} du, stable for any lam*H >= 0.
struct KernelMoments {
    double j0, j1, j2;
};

KernelMoments kernel_moments(double lam, double H) {
    const double z = lam * H;
    KernelMoments m;
    if (z < 1e-4) {
        // series in z keeps cancellation out of the small-step regime
        m.j0 = H * (1.0 - z / 2.0 + z * z / 6.0);
        m.j1 = H * H * (0.5 - z / 3.0 + z * z / 8.0);
        m.j2 = H * H * H * (1.0 / 3.0 - z / 4.0 + z * z / 10.0);
        return m;
    }
    const double e = std::exp(-z);
    const double g1 = (1.0 - e * (1.0 + z)) / (lam * lam);               // int v e^{-lam v}
    const double g2 = (2.0 - e * (2.0 + 2.0 * z + z * z)) / (lam * lam * lam);  // int v^2 e^{-lam v}
    m.j0 = (1.0 - e) / lam;
    m.j1 = H * m.j0 - g1;
    m.j2 = H * H * m.j0 - 2.0 * H * g1 + g2;
    return m;
}

}  // namespace

StateVector apply_LT(const SpectralOperator& A, const StateVector& B, double T, const ControlFunction& f) {
    require_same_dim(A, B, "apply_LT");
    if (std::abs(f.horizon - T) > 1e-12 * std::max(1.0, T))
        throw std::invalid_argument("apply_LT: control horizon does not match T");
    f.validate("apply_LT");
    if (!f.values.empty()) A.require_dim(f.values.front(), "apply_LT");

    // Product integration: the exponential kernel is integrated exactly
    // against a piecewise-quadratic interpolant of f (piecewise-linear on
    // a trailing odd interval).  Plain trapezoid weights cannot reach the
    // steering tolerances once lambda * step is not small.
    const std::size_t n = f.values.size() - 1;  // intervals
    const double h = f.step;
    StateVector out(B.size());
    for (std::size_t k = 0; k < B.size(); ++k) {
        const double lam = A.eigenvalue(k);
        double acc = 0.0;
        std::size_t i = 0;
        for (; i + 2 <= n; i += 2) {
            // interval pair [t_i, t_{i+2}], local coordinate u in [0, 2h]
            const double b = f.time_at(i + 2);
            const KernelMoments m = kernel_moments(lam, 2.0 * h);
            const double tail = std::exp(-(T - b) * lam);
            const double f0 = f.values[i][k], f1 = f.values[i + 1][k], f2 = f.values[i + 2][k];
            const double c0 = (m.j2 - 3.0 * h * m.j1 + 2.0 * h * h * m.j0) / (2.0 * h * h);
            const double c1 = -(m.j2 - 2.0 * h * m.j1) / (h * h);
            const double c2 = (m.j2 - h * m.j1) / (2.0 * h * h);
            acc += tail * (f0 * c0 + f1 * c1 + f2 * c2);
        }
        if (i < n) {  // one linear interval remains
            const double b = f.time_at(i + 1);
            const KernelMoments m = kernel_moments(lam, h);
            const double tail = std::exp(-(T - b) * lam);
            acc += tail * (f.values[i][k] * (m.j0 - m.j1 / h) + f.values[i + 1][k] * (m.j1 / h));
        }
        out[k] = acc * B[k];
    }
    return out;
}

DiagonalGramian gramian(const SpectralOperator& A, const StateVector& B, double T) {
    require_same_dim(A, B, "gramian");
    if (!(T > 0.0)) throw std::domain_error("gramian: T must be positive");
    DiagonalGramian R;
    R.entries.resize(B.size());
    for (std::size_t k = 0; k < B.size(); ++k) {
        const double lam = A.eigenvalue(k);
        R.entries[k] = B[k] * B[k] * (-std::expm1(-2.0 * T * lam)) / (2.0 * lam);
    }
    return R;
}

double min_energy_norm_sq(const SpectralOperator& A, const StateVector& B, double T, const StateVector& x) {
    A.require_dim(x, "min_energy_norm_sq");
    require_positive_diag(B, "min_energy_norm_sq");
    const DiagonalGramian R = gramian(A, B, T);
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * x[k] / R.entries[k];
    return s;
}

ControlFunction min_energy_control(const SpectralOperator& A, const StateVector& B, double T, const StateVector& x,
                                   std::size_t n_steps) {
    A.require_dim(x, "min_energy_control");
    require_positive_diag(B, "min_energy_control");
    const DiagonalGramian R = gramian(A, B, T);

    ControlFunction f = ControlFunction::zero(x.size(), T, n_steps);
    for (std::size_t i = 0; i <= n_steps; ++i) {
        const double t = f.time_at(i);
        for (std::size_t k = 0; k < x.size(); ++k)
            f.values[i][k] = B[k] * std::exp(-(T - t) * A.eigenvalue(k)) * x[k] / R.entries[k];
    }
    return f;
}

ControlFunction ramp_control(const SpectralOperator& A, const StateVector& B, double T, const StateVector& x,
                             std::size_t n_steps) {
    A.require_dim(x, "ramp_control");
    require_positive_diag(B, "ramp_control");

    ControlFunction f = ControlFunction::zero(x.size(), T, n_steps);
    for (std::size_t i = 0; i <= n_steps; ++i) {
        const double t = f.time_at(i);
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double lam = A.eigenvalue(k);
            f.values[i][k] = std::exp(-(T - t) * lam) * x[k] * (1.0 + 2.0 * t * lam) / (T * B[k]);
        }
    }
    return f;
}

double ramp_control_energy_bound(const SpectralOperator& A, const StateVector& B, double T, const StateVector& x) {
    require_positive_diag(B, "ramp_control_energy_bound");
    double binv = 0.0;
    for (double b : B.c) binv = std::max(binv, 1.0 / b);
    return 2.0 * binv * binv * (norm_sq(x) / T + 2.0 * A.half_norm_sq(x));
}

ScalarRamp ScalarRamp::linear(double T) {
    return ScalarRamp{[T](double t) { return t / T; }, [T](double) { return 1.0 / T; }};
}

ScalarRamp ScalarRamp::quadratic(double T) {
    return ScalarRamp{[T](double t) { return (t / T) * (t / T); }, [T](double t) { return 2.0 * t / (T * T); }};
}

ControlFunction synthesized_control(const SpectralOperator& A, double T, const StateVector& x, const ScalarRamp& u,
                                    const ControlFunction* h, std::size_t n_steps) {
    A.require_dim(x, "synthesized_control");
    if (std::abs(u.value(0.0)) > 1e-12 || std::abs(u.value(T) - 1.0) > 1e-12)
        throw std::invalid_argument("synthesized_control: weight must satisfy u(0)=0, u(T)=1");

    const std::size_t dim = x.size();
    const double step = T / static_cast<double>(n_steps);

    // phi1(r) = e^{-rA} x + int_0^r e^{-(r-s)A} h(s) ds on the grid.
    std::vector<StateVector> phi1(n_steps + 1, StateVector(dim));
    const ControlFunction* hh = h;
    ControlFunction h_resampled;
    if (hh != nullptr) {
        hh->validate("synthesized_control(h)");
        bool interpolated = false;
        h_resampled = resample(*hh, step, interpolated);
        hh = &h_resampled;
    }
    for (std::size_t k = 0; k < dim; ++k) {
        const double lam = A.eigenvalue(k);
        const double decay = std::exp(-step * lam);
        double conv = 0.0;
        phi1[0][k] = x[k];
        for (std::size_t j = 1; j <= n_steps; ++j) {
            if (hh != nullptr) conv = decay * conv + 0.5 * step * (decay * hh->values[j - 1][k] + hh->values[j][k]);
            phi1[j][k] = std::exp(-static_cast<double>(j) * step * lam) * x[k] + conv;
        }
    }

    // phi(t) = u'(t) phi1(T-t) + 2 u(t) A phi1(T-t) - u(t) h(T-t).
    ControlFunction f = ControlFunction::zero(dim, T, n_steps);
    for (std::size_t i = 0; i <= n_steps; ++i) {
        const double t = f.time_at(i);
        const double uv = u.value(t);
        const double du = u.deriv(t);
        const StateVector& p = phi1[n_steps - i];
        for (std::size_t k = 0; k < dim; ++k) {
            double v = du * p[k] + 2.0 * uv * A.eigenvalue(k) * p[k];
            if (hh != nullptr) v -= uv * hh->values[n_steps - i][k];
            f.values[i][k] = v;
        }
    }
    return f;
}

}  // namespace shiftlab
