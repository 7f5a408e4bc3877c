#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "shiftlab/control.hpp"
#include "shiftlab/delay.hpp"
#include "shiftlab/rng.hpp"
#include "shiftlab/spectral.hpp"

namespace shiftlab {

/// The evolution equation dx = -Ax dt + B(x) dt + Q dW on the real sine
/// basis of (0,pi): e_k(x) = sqrt(2/pi) sin(kx), A = (-Laplace)^beta with
/// eigenvalues k^{2 beta}, and B the Galerkin projection of -u u_x.
struct EvolutionModel {
    enum class Nonlinearity { zero, burgers };

    SpectralOperator A;
    double beta = 1.5;
    StateVector q;  // diagonal of Q
    double theta = 0.5;
    double k3 = 0.0;  // ||u||_Q^2 <= K3 ||u||_{V_theta}^2
    Nonlinearity nonlinearity = Nonlinearity::burgers;

    // probe/config constants of the structural conditions
    double k1 = 0.0, k2 = 0.0, k4 = 0.0, k5 = 0.0;
    double gamma_cond = 1.0, alpha_cond = 1.0;
    double c_beta = 0.0;  // beta(v) = c_beta ||v||_V

    double q_norm_sq(const StateVector& u) const;                      // ||Q^{-1} u||^2
    double v_norm_sq(const StateVector& u) const;                      // ||A^{1/2} u||^2
    double q_op_norm() const;                                          // max_k q_k
    double q_hs_norm_sq() const;                                       // sum q_k^2
    void validate(const char* where) const;
};

/// Q^{-1}-based functionals need every q_k > 0; plain simulation does not.
void require_invertible_noise(const EvolutionModel& m, const char* where);

/// Default model: q_k = q0 * lambda_k^{-theta/2}, which makes the
/// embedding constant K3 = q0^{-2} exact.
EvolutionModel make_evolution_model(std::size_t n, double beta, double theta, double q0,
                                    EvolutionModel::Nonlinearity kind);

/// Galerkin coefficients of -P_N(u v_x) in the sine basis.
void burgers_bilinear(std::span<const double> u, std::span<const double> v, std::span<double> out);

/// B(u) = -P_N(u u_x); identically zero for the `zero` nonlinearity.
StateVector nonlinear_term(const EvolutionModel& m, const StateVector& u);

/// Exact Gateaux derivative grad_h B(v) = B~(h,v) + B~(v,h).
StateVector nonlinear_gateaux(const EvolutionModel& m, const StateVector& v, const StateVector& h);

/// Shift data for the evolution coupling: target vector e and the steering
/// control phi(t) = (1/T) e^{-(T-t)A} e + (2t/T) A e^{-(T-t)A} e with
/// L_T phi = e.
struct EvolutionShift {
    StateVector e;
    ControlFunction phi;
};

ControlFunction steering_control(const SpectralOperator& A, double T, const StateVector& e, std::size_t n_steps);
EvolutionShift make_evolution_shift(const SpectralOperator& A, double T, const StateVector& e, std::size_t n_steps);

/// Gamma(t) = (t/T) e^{-(T-t)A} e; Gamma(0) = 0, Gamma(T) = e.
StateVector evolution_profile_at(const SpectralOperator& A, double T, const StateVector& e, double t);

/// Gamma on the simulation grid, flat (n_steps+1) x dim.
std::vector<double> evolution_profile_grid(const SpectralOperator& A, double T, const StateVector& e, double step);

/// Exponential-Euler simulation of the evolution equation (no history
/// window; PathRecord has n_hist = 0).
PathRecord simulate_evolution(const EvolutionModel& model, const StateVector& x0, double T, double step,
                              CounterRng& rng, std::span<const double> extra = {});
PathRecord simulate_evolution_with_noise(const EvolutionModel& model, const StateVector& x0, double T, double step,
                                         std::span<const double> noise, std::span<const double> extra = {});

/// Both path functionals of the coupling in one sweep:
///   log R_T with theta(t) = Q^{-1}(phi + B(x) - B(x + Gamma)), and the
///   weight  int <Q^{-1}(phi - grad_Gamma B(x)), dW>.
struct EvolutionWeights {
    double log_girsanov = 0.0;
    double ibp = 0.0;
};
EvolutionWeights entropy_and_ibp_weights(const EvolutionModel& model, const EvolutionShift& shift,
                                         std::span<const double> gamma_nodes, const PathRecord& path);

/// Just the shift-identity weight (skips the Girsanov pair).
double ibp_weight_evolution(const EvolutionModel& model, const EvolutionShift& shift,
                            std::span<const double> gamma_nodes, const PathRecord& path);

/// Hot-path overloads with the steering control already sampled on the
/// path grid (flat (n_steps+1) x dim); see control_grid below.
EvolutionWeights entropy_and_ibp_weights(const EvolutionModel& model, std::span<const double> phi_nodes,
                                         std::span<const double> gamma_nodes, const PathRecord& path);
double ibp_weight_evolution(const EvolutionModel& model, std::span<const double> phi_nodes,
                            std::span<const double> gamma_nodes, const PathRecord& path);

/// Control resampled onto a grid and flattened for kernel use.
std::vector<double> control_grid(const ControlFunction& f, double step);

/// The explicit entropy bound Psi(x,T,e) with caller-supplied structural
/// constant C (never defaulted):
///   C { (T+1)/T ||A^{(1+theta)/2} e||^2 + b_e
///       + b_e ((||Q||_HS^2 + ||B(0)||^2 + ||x||) T + ||e||^2/2
///              + (sqrt(2-g)/4) ||A^{1/4}e||^2 ||A^{(2a+g-2)/4}e||^{2/(2-g)})
///         exp{ C T (1 + ((2-g)/4) ||A^{(2a+g-2)/4}e||^{4/(2-g)}) } },
/// with b_e = sup_{||v||_V <= ||e||_V} beta(v) = c_beta ||e||_V.
double psi_constant(const EvolutionModel& model, const StateVector& x0, double T, const StateVector& e, double C);

/// Admissibility radius delta_e = e^{(lambda_1 - 2 K5)^- T} / (18 K4 ||Q||^2 ||e||_V^2 T).
double harnack_delta(const EvolutionModel& model, double T, const StateVector& e);

/// Smallest admissible p for the shift radius r in (0, sqrt(delta_e)).
double harnack_p_threshold(double delta_e, double r);

/// Exponent of (P_T f)^p <= P_T f^p(re + .) e^C for admissible (r, p);
/// out-of-range r or p is a domain error, never a silent clamp.
double harnack_exponent_evolution(const EvolutionModel& model, const StateVector& x0, double T, const StateVector& e,
                                  double r, double p);

/// Exponent of the beta-strengthened variant, valid for every p > 1:
///   p/(p-1) ( 2||A^{(1+theta)/2}e||^2 / (1 - e^{-2 lambda_1 T}) + int_0^T beta(Gamma(s)) ds ).
double harnack_exponent_evolution_beta(const EvolutionModel& model, double T, const StateVector& e, double p);

/// Empirical probe of the structural conditions on random pairs.
/// Ratios are nested (the 2n-sample max extends the n-sample max), so
/// `growth` is the relative increase under sample doubling.
struct ConditionProbeReport {
    double k1_fit = 0.0;      // <B(u)-B(v), u-v> <= (||v||_V + K1) ||u-v||_V ||u-v||
    double k2_fit = 0.0;      // <B(u-v), v>     <= K2 ||v||_V ||u-v||_V ||u-v||
    double k4_fit = 0.0;      // ||grad_h B(v)||_Q <= K4 ||h||_V (1 + ||v||_V)
    double c_beta_fit = 0.0;  // ||B(u)-B(v)||_Q <= c ||u-v||_V (1 + ||u||_V + ||v||_V)
    double k5_max_ratio = 0.0;  // |<B(u),u>| / ||u||^3
    double growth = 0.0;
    bool stable = false;
    std::size_t n_samples = 0;
};
ConditionProbeReport condition_probe(const EvolutionModel& model, std::size_t n_samples, std::uint64_t seed);

/// Conditional-expectation estimate of the log-density gradient of the
/// mode-1 marginal of x(T): bins mode-1 samples and reports
/// -mean(N | bin) per bin, N the shift-identity weight for the unit
/// mode-1 target.
struct DensityBin {
    double center = 0.0;
    double sample_mean = 0.0;  // mean of the binned mode-1 samples
    double score = 0.0;
    double stderr_ = 0.0;
    std::size_t count = 0;
    bool empty = true;  // fewer than 50 samples: reported, not estimated
};
std::vector<DensityBin> density_score(const EvolutionModel& model, const StateVector& x0, double T, double step,
                                      std::size_t n_paths, std::size_t n_bins, std::uint64_t seed, unsigned jobs = 1);

}  // namespace shiftlab
