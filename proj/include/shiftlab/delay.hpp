#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "shiftlab/control.hpp"
#include "shiftlab/rng.hpp"
#include "shiftlab/spectral.hpp"

namespace shiftlab {

/// Non-owning view of a history window: either a flat slice of the
/// simulation grid (stride dim) or the boxed nodes of a Segment.
/// Node 0 is the oldest sample (time t - tau), node nodes()-1 the newest.
class SegmentRef {
  public:
    SegmentRef(const double* oldest, std::size_t n_nodes, std::size_t dim)
        : flat_(oldest), n_nodes_(n_nodes), dim_(dim) {}

    static SegmentRef of(const Segment& s);

    std::size_t nodes() const { return n_nodes_; }
    std::size_t dim() const { return dim_; }
    const double* node(std::size_t i) const { return flat_ != nullptr ? flat_ + i * dim_ : boxed_[i].data(); }
    const double* oldest() const { return node(0); }
    const double* newest() const { return node(n_nodes_ - 1); }

    /// max over nodes of the H-norm.
    double sup_norm() const;

  private:
    const double* flat_ = nullptr;
    const StateVector* boxed_ = nullptr;
    std::size_t n_nodes_ = 0;
    std::size_t dim_ = 0;
};

/// Drift F acting on history segments.  The catalogue covers Lipschitz
/// differentiable drifts (with exact directional derivatives for weight
/// computations) and a non-Lipschitz modulus-continuous field.
class DelayDrift {
  public:
    enum class Kind {
        zero,
        linear,          // F(g) = C1 g(0) + C2 g(-tau), diagonal C1, C2
        bounded_smooth,  // F(g)_k = amp * sin(g(-tau)_k)
        modulus          // F(g) = amp * sqrt(min(1, ||g||_inf)) * dir
    };

    static DelayDrift zero();
    static DelayDrift linear(StateVector now_coeff, StateVector delay_coeff);
    static DelayDrift bounded_smooth(double amplitude);
    static DelayDrift modulus(double amplitude, StateVector direction);

    Kind kind() const { return kind_; }
    const StateVector& now_coeff() const { return c_now_; }
    const StateVector& delay_coeff() const { return c_delay_; }
    double amplitude() const { return amp_; }

    void eval(const SegmentRef& seg, double* out) const;

    /// Exact Gateaux derivative grad_dir F evaluated at segment x.
    /// Throws for the non-differentiable modulus kind.
    void gateaux(const SegmentRef& x, const SegmentRef& dir, double* out) const;

    bool differentiable() const { return kind_ != Kind::modulus; }

    /// Lipschitz constant w.r.t. the segment sup norm (infinite for the
    /// modulus kind).
    double lipschitz() const;

    /// Continuity modulus: ||F(x)-F(y)|| <= modulus_gamma(||x-y||_inf).
    double modulus_gamma(double r) const;

  private:
    Kind kind_ = Kind::zero;
    StateVector c_now_;
    StateVector c_delay_;
    StateVector dir_;
    double amp_ = 0.0;
};

/// The delay equation dx = -Ax dt + F(x_t) dt + sigma0 dW.
struct DelayModel {
    SpectralOperator A;
    double tau = 0.0;
    DelayDrift F;
    double sigma0 = 1.0;  // sigma(t) = sigma0 * I
    double a_plus = 0.0;  // dissipativity shift a+, 0 for positive self-adjoint A

    double inv_sigma() const { return 1.0 / sigma0; }
    void validate(const char* where) const;
};

/// Closed-form shift direction eta on [-tau, 0] with exact derivative, so
/// the tracking control psi = eta' + A eta is accurate on the grid.
struct ShiftProfile {
    enum class Kind { zero, decay, constant, poly };

    Kind kind = Kind::zero;
    StateVector v;
    double c0 = 1.0, c1 = 0.0, c2 = 0.0;  // poly: (c0 + c1 (s/tau) + c2 (s/tau)^2) v

    static ShiftProfile zero(std::size_t dim);
    static ShiftProfile decay(StateVector v);
    static ShiftProfile constant(StateVector v);
    static ShiftProfile poly(StateVector v, double c0, double c1, double c2);

    bool is_zero() const { return kind == Kind::zero; }
    StateVector value(const SpectralOperator& A, double tau, double s) const;
    StateVector deriv(const SpectralOperator& A, double tau, double s) const;
    Segment sample(const SpectralOperator& A, double tau, double step) const;
};

/// The two-leg control realizing a target displacement eta at time T:
/// `steer` lives on [0, T-tau] and drives 0 to eta(-tau); `track` lives on
/// [T-tau, T] (stored with horizon tau) and keeps the displacement on eta.
struct ShiftSpec {
    Segment eta;
    ControlFunction steer;
    ControlFunction track;

    bool is_zero() const;
};

enum class ControlVariant { gramian, ramp, synthesized };

/// Tracking control from a raw segment by finite differences:
/// psi(t) = eta'(t-T) + A eta(t-T) with central differences in the
/// interior and second-order one-sided stencils at the endpoints.
ControlFunction tracking_control_fd(const SpectralOperator& A, const Segment& eta);

/// Tracking control from a closed-form profile (exact derivative).
ControlFunction tracking_control(const SpectralOperator& A, const ShiftProfile& eta, double tau, double step);

ShiftSpec make_shift_spec(const SpectralOperator& A, const ShiftProfile& eta, double tau, double T, double step,
                          ControlVariant variant, const ScalarRamp* u = nullptr, const ControlFunction* h = nullptr);

/// phi 1_[0,T-tau) + psi 1_[T-tau,T] sampled on the simulation grid,
/// flat (n_steps+1) x dim.  Resamples (linear interpolation) when the
/// stored control grids differ from the simulation grid.
std::vector<double> branch_drift_nodes(const ShiftSpec& shift, double T, double step, bool* interpolated = nullptr);

/// Deterministic displacement profile of the coupled pair on the
/// simulation grid, aligned with PathRecord node indexing: the first
/// n_hist nodes (times < 0) are zero, then Gamma(0..T).
struct ShiftProfileGrid {
    double step = 0.0;
    std::size_t n_hist = 0, n_steps = 0, dim = 0;
    std::vector<double> flat;  // (n_hist + n_steps + 1) x dim

    const double* node(std::size_t j) const { return flat.data() + j * dim; }
    const double* at_step(std::size_t k) const { return node(n_hist + k); }
    SegmentRef segment_at_step(std::size_t k) const { return {node(k), n_hist + 1, dim}; }
};

ShiftProfileGrid shift_profile_grid(const SpectralOperator& A, const ShiftSpec& shift, double tau, double T,
                                    double step);

/// Pointwise Gamma(t): eta(t-T) for t >= T-tau, the Duhamel integral of
/// the steering control below.  t outside [0,T] is a domain error.
StateVector shift_profile_at(const SpectralOperator& A, const ShiftSpec& shift, double tau, double T, double t);

/// One simulated trajectory on [0,T] with its driving increments.
struct PathRecord {
    double step = 0.0;
    double tau = 0.0;
    std::size_t dim = 0, n_hist = 0, n_steps = 0;
    std::vector<double> states;  // (n_hist + n_steps + 1) x dim, node 0 at -tau
    std::vector<double> noise;   // n_steps x dim Brownian increments

    double time_at_node(std::size_t j) const { return -tau + static_cast<double>(j) * step; }
    const double* state_at_step(std::size_t k) const { return states.data() + (n_hist + k) * dim; }
    const double* dW(std::size_t n) const { return noise.data() + n * dim; }
    SegmentRef segment_at_step(std::size_t k) const { return {states.data() + k * dim, n_hist + 1, dim}; }
    Segment final_segment() const;
};

/// Exponential-Euler simulation:
///   x_{n+1} = e^{-A h} x_n + kappa(h) [F(x_{t_n}) + extra(t_n)]
///             + e^{-A h} sigma0 dW_n,     kappa(h) = (1 - e^{-lambda h})/lambda.
/// `extra` is an optional flat (n_steps+1) x dim drift source (left node
/// used).  Increments are drawn from `rng` in (step, mode) order.
PathRecord simulate(const DelayModel& model, const Segment& xi, double T, double step, CounterRng& rng,
                    std::span<const double> extra = {});

/// Same scheme with externally supplied increments (flat n_steps x dim).
PathRecord simulate_with_noise(const DelayModel& model, const Segment& xi, double T, double step,
                               std::span<const double> noise, std::span<const double> extra = {});

/// h^eps(t) = eps sigma^{-1} (phi/psi branch) + sigma^{-1}(F(x_t) - F(y_t)).
StateVector coupling_drift(const DelayModel& model, const ShiftSpec& shift, double eps, double T, double t,
                           const Segment& x_seg, const Segment& y_seg);

/// log R_T = -sum <h_n, dW_n> - 1/2 sum ||h_n||^2 h by left-point sums;
/// h_nodes is flat (n_steps+1) x dim recorded on the path grid.
double log_girsanov_weight(const PathRecord& path, std::span<const double> h_nodes);

/// Stochastic weight of the shift identity: the left-point sum of
///   <sigma^{-1}[phi 1 + psi 1 - grad_{Gamma_t} F(x_t)], dW(t)>.
double ibp_weight_delay(const DelayModel& model, const ShiftSpec& shift, const ShiftProfileGrid& gamma,
                        const PathRecord& path);

/// Same weight with the branch drift already sampled on the path grid
/// (hot path for ensemble checks).
double ibp_weight_delay(const DelayModel& model, std::span<const double> branch_nodes, const ShiftProfileGrid& gamma,
                        const PathRecord& path);

enum class HarnackVariant { gramian, energy, selfadjoint, modulus };

/// Exponent C of the shift Harnack inequality (P_T f)^p <= P_T f^p(.+eta) e^C.
/// Variants differ in how the steering-energy term is bounded:
///   gramian      exact minimal energy through the Gramian,
///   energy       horizon-robust ramp-control bound,
///   selfadjoint  2 ||A^{1/2} eta(-tau)||^2 / (1 - e^{-2 (T-tau) lambda_1}),
///   modulus      non-Lipschitz form using the drift's continuity modulus.
double harnack_exponent_delay(const DelayModel& model, const ShiftSpec& shift, double T, double p, HarnackVariant v);

}  // namespace shiftlab
