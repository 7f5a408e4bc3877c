#pragma once

#include <functional>
#include <vector>

#include "shiftlab/spectral.hpp"

namespace shiftlab {

/// Grid-sampled control f : [0,T] -> U with U = H and diagonal input map B
/// throughout.  Values live at nodes 0, step, ..., T.
struct ControlFunction {
    double horizon = 0.0;
    double step = 0.0;
    std::vector<StateVector> values;

    static ControlFunction zero(std::size_t dim, double horizon, std::size_t n_steps);

    std::size_t nodes() const { return values.size(); }
    double time_at(std::size_t i) const { return static_cast<double>(i) * step; }

    /// Squared L^2([0,T],U) norm by the composite trapezoid rule.
    double l2_norm_sq() const;

    void validate(const char* where) const;
};

/// Resample a control onto a new grid step by linear interpolation.
/// Sets `interpolated` when the grids genuinely differ, so callers can
/// surface the resampling in reports.
ControlFunction resample(const ControlFunction& f, double new_step, bool& interpolated);

/// Diagonal controllability Gramian of (A,B) over [0,T]:
/// entries r_k = b_k^2 (1 - e^{-2 T lambda_k}) / (2 lambda_k).
struct DiagonalGramian {
    std::vector<double> entries;
};

/// Default control grid resolution: step = T * 2^-12.
constexpr std::size_t kDefaultControlSteps = 4096;

/// L_T^B f = int_0^T e^{-(T-t)A} B f(t) dt by trapezoid quadrature per mode.
StateVector apply_LT(const SpectralOperator& A, const StateVector& B, double T, const ControlFunction& f);

/// Closed form of int_0^T e^{-tA} B B* e^{-tA*} dt for diagonal positive B.
DiagonalGramian gramian(const SpectralOperator& A, const StateVector& B, double T);

/// Minimal steering energy: ||(R_T^B)^{-1/2} x||^2 = sum_k x_k^2 / r_k.
double min_energy_norm_sq(const SpectralOperator& A, const StateVector& B, double T, const StateVector& x);

/// The minimizer f*(t) = B e^{-(T-t)A} (R_T^B)^{-1} x of the steering
/// energy among controls with L_T^B f = x.
ControlFunction min_energy_control(const SpectralOperator& A, const StateVector& B, double T, const StateVector& x,
                                   std::size_t n_steps = kDefaultControlSteps);

/// Linear-ramp steering control
///   f(t) = B^{-1} ( e^{-(T-t)A} x / T + (2t/T) A e^{-(T-t)A} x ),
/// which satisfies L_T^B f = x with squared energy bounded by
/// 2 ||B^{-1}||^2 ( ||x||^2/T + 2 ||x||_{1/2}^2 ), a bound independent
/// of the horizon.
ControlFunction ramp_control(const SpectralOperator& A, const StateVector& B, double T, const StateVector& x,
                             std::size_t n_steps = kDefaultControlSteps);

/// The horizon-independent energy bound attained by ramp_control.
double ramp_control_energy_bound(const SpectralOperator& A, const StateVector& B, double T, const StateVector& x);

/// Scalar weight u on [0,T] with u(0)=0, u(T)=1.
struct ScalarRamp {
    std::function<double(double)> value;
    std::function<double(double)> deriv;

    static ScalarRamp linear(double T);     // u(t) = t/T
    static ScalarRamp quadratic(double T);  // u(t) = (t/T)^2
};

/// General steering synthesis: given any weight u and forcing h, build
///   phi(t) = d/dt ( u(t) phi1(T-t) ) + u(t) A phi1(T-t),
/// where phi1(r) = e^{-rA} x + int_0^r e^{-(r-s)A} h(s) ds, so that
/// L_T^I phi = x.  With h = 0 and the linear ramp this reproduces
/// ramp_control nodewise.
ControlFunction synthesized_control(const SpectralOperator& A, double T, const StateVector& x, const ScalarRamp& u,
                                    const ControlFunction* h = nullptr, std::size_t n_steps = kDefaultControlSteps);

}  // namespace shiftlab
