#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shiftlab/delay.hpp"
#include "shiftlab/evolution.hpp"
#include "shiftlab/testfunc.hpp"

namespace shiftlab {

struct MCEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
};

enum class Verdict { pass, fail, inconclusive };

const char* verdict_name(Verdict v);

struct NamedEstimate {
    std::string name;
    double value = 0.0;
    double stderr_ = 0.0;
};

/// One verification outcome.  `slack` is RHS - LHS; a check fails only
/// when the violation exceeds three combined standard errors, and is
/// inconclusive when the attained stderr exceeds the requested resolution.
struct CheckReport {
    std::string id;
    std::string statement;
    std::string variant;
    std::vector<NamedEstimate> estimates;
    double constant = 0.0;  // bound constant / exponent used
    double slack = 0.0;
    double z = 0.0;  // |difference| in combined-stderr units (0 for exact checks)
    Verdict verdict = Verdict::pass;
    double runtime_s = 0.0;
    std::uint64_t seed = 0;
    std::size_t n_paths = 0;
    double step = 0.0;
    std::vector<std::string> notes;
};

struct RunParams {
    double T = 1.0;
    double step = 1.0 / 256.0;
    std::size_t n_paths = 20000;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    double resolution = 0.0;  // 0 = unset (never inconclusive)
};

Verdict identity_verdict(double diff, double sigma, double resolution);
Verdict inequality_verdict(double slack, double sigma, double resolution);

// ---------------------------------------------------------------------------
// shift identity (delay):  E grad_eta f(x_T) = E f(x_T) * N
// ---------------------------------------------------------------------------

CheckReport check_ibp_delay(const DelayModel& model, const ShiftSpec& shift, const TestFunction& f,
                            const Segment& xi, const RunParams& run);

/// Exact values of both sides of the discrete shift identity for linear
/// drift and a linear (coordinate) test function, by adjoint sensitivity
/// propagation through the recursion.  No sampling.
struct IbpOraclePair {
    double lhs = 0.0;
    double rhs = 0.0;
};
IbpOraclePair delay_linear_ibp_oracle(const DelayModel& model, const ShiftSpec& shift, const TestFunction& f,
                                      double T, double step);

// ---------------------------------------------------------------------------
// path-space identity:  E grad_eta G = E G * int <eta'+A eta - grad_{eta_t}F, dW>
// ---------------------------------------------------------------------------

/// Direction on the path space: eta on [0,T] with eta(0)=0, stored with a
/// zero history prefix so segments of the zero-extension are views.
struct PathDirection {
    double step = 0.0;
    std::size_t n_hist = 0, n_steps = 0, dim = 0;
    std::vector<double> value;   // (n_hist + n_steps + 1) x dim, zero prefix
    std::vector<double> source;  // (n_steps + 1) x dim: eta' + A eta

    const double* value_at_step(std::size_t k) const { return value.data() + (n_hist + k) * dim; }
    SegmentRef segment_at_step(std::size_t k) const { return {value.data() + k * dim, n_hist + 1, dim}; }

    /// eta(t) = (a2 (t/T)^2 + a3 (t/T)^3) v.
    static PathDirection polynomial(const SpectralOperator& A, double tau, double T, double step,
                                    const StateVector& v, double a2, double a3);

    /// The displacement profile of a delay shift: value = Gamma, source =
    /// the phi/psi branch drift (Gamma solves Gamma' + A Gamma = branch).
    static PathDirection from_shift(const SpectralOperator& A, const ShiftSpec& shift, double tau, double T,
                                    double step);
};

CheckReport check_ibp_pathspace(const DelayModel& model, const PathDirection& eta, const TestFunction& G,
                                const Segment& xi, const RunParams& run);

// ---------------------------------------------------------------------------
// shift Harnack (delay):  (P_T f)^p <= P_T f^p(.+eta) e^C
// ---------------------------------------------------------------------------

CheckReport check_shift_harnack_delay(const DelayModel& model, const ShiftSpec& shift, const TestFunction& f, double p,
                                      HarnackVariant variant, const Segment& xi, const RunParams& run);

/// Whole battery on one simulation ensemble: every (f, shift, p, variant)
/// combination becomes its own report, all sharing the same paths.
std::vector<CheckReport> check_shift_harnack_delay_battery(const DelayModel& model,
                                                           const std::vector<ShiftSpec>& shifts,
                                                           const std::vector<TestFunction>& fs,
                                                           const std::vector<double>& ps,
                                                           const std::vector<HarnackVariant>& variants,
                                                           const Segment& xi, const RunParams& run);

// ---------------------------------------------------------------------------
// Girsanov normalization:  E R_T = 1
// ---------------------------------------------------------------------------

CheckReport check_girsanov_delay(const DelayModel& model, const ShiftSpec& shift, const Segment& xi,
                                 const RunParams& run);
CheckReport check_girsanov_evolution(const EvolutionModel& model, const EvolutionShift& shift, const StateVector& x0,
                                     const RunParams& run);

// ---------------------------------------------------------------------------
// shift identity (evolution), with finite-difference cross-check of the LHS
// ---------------------------------------------------------------------------

CheckReport check_ibp_evolution(const EvolutionModel& model, const EvolutionShift& shift, const TestFunction& f,
                                const StateVector& x0, const RunParams& run, double fd_epsilon = 0.05);

IbpOraclePair evolution_linear_ibp_oracle(const EvolutionModel& model, const EvolutionShift& shift,
                                          const TestFunction& f, double T, double step);

// ---------------------------------------------------------------------------
// shift log-Harnack (evolution), entropy route:
//   P_T log f <= log P_T f(e+.) + E[R_T log R_T]
// ---------------------------------------------------------------------------

CheckReport check_log_harnack_evolution(const EvolutionModel& model, const EvolutionShift& shift,
                                        const TestFunction& f, const StateVector& x0, const RunParams& run,
                                        std::optional<double> c_psi = std::nullopt);

/// Battery over several test functions and shifts on one ensemble.
std::vector<CheckReport> check_log_harnack_evolution_battery(const EvolutionModel& model,
                                                             const std::vector<EvolutionShift>& shifts,
                                                             const std::vector<TestFunction>& fs,
                                                             const StateVector& x0, const RunParams& run);

// ---------------------------------------------------------------------------
// shift Harnack (evolution), radius-limited and beta-strengthened variants
// ---------------------------------------------------------------------------

CheckReport check_shift_harnack_evolution(const EvolutionModel& model, const StateVector& x0, const StateVector& e,
                                          double r, double p, const RunParams& run);
CheckReport check_shift_harnack_evolution_beta(const EvolutionModel& model, const StateVector& x0,
                                               const StateVector& e, double p, const RunParams& run);

// ---------------------------------------------------------------------------
// log-Sobolev for the endpoint law (sigma = I):
//   E g^2 log g^2 - E g^2 log E g^2 <= c(L,T,a+) E ||grad g||^2
// ---------------------------------------------------------------------------

/// c(L,T,a+) = 2 e^{2Ta+ + T^2 (a+)^2 e^{2Ta+}} (1 + L T e^{T(L+a+)});
/// the segment-functional variant carries an extra factor (T+1).
double log_sobolev_constant(double L, double T, double a_plus, bool segment_variant = false);

CheckReport check_log_sobolev(const DelayModel& model, const TestFunction& g, const Segment& xi,
                              const RunParams& run);

// ---------------------------------------------------------------------------
// maximal-regularity estimates for v' = -Av + f, v(0) = 0:
//   int ||Av||^2 <= (M+1)^2 int ||f||^2,   int ||v'||^2 <= M^2 int ||f||^2
// ---------------------------------------------------------------------------

CheckReport check_regularity(const SpectralOperator& A, const ControlFunction& f, double M_resolvent, double T);

// ---------------------------------------------------------------------------
// refinement trend helpers
// ---------------------------------------------------------------------------

/// Sum consecutive groups of `factor` fine increments into coarse ones.
std::vector<double> aggregate_noise(const std::vector<double>& fine, std::size_t factor, std::size_t dim);

struct RefinementLevel {
    double step = 0.0;
    double diff = 0.0;    // central |LHS - RHS|
    double stderr_ = 0.0;
};

/// |LHS-RHS| of the delay shift identity at step, step/2, step/4 with
/// common (aggregated) driving noise across levels.  The initial history
/// is the constant segment xi0.
std::vector<RefinementLevel> refinement_ibp_delay(const DelayModel& model, const ShiftProfile& eta,
                                                  ControlVariant variant, const TestFunction& f,
                                                  const StateVector& xi0, const RunParams& run);

/// Same for the evolution shift identity.
std::vector<RefinementLevel> refinement_ibp_evolution(const EvolutionModel& model, const StateVector& e,
                                                      const TestFunction& f, const StateVector& x0,
                                                      const RunParams& run);

}  // namespace shiftlab
