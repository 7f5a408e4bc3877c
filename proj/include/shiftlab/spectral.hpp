#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace shiftlab {

/// State in spectral coordinates: the coefficients of an element of the
/// state space against the eigenbasis of the generator.
struct StateVector {
    std::vector<double> c;

    StateVector() = default;
    explicit StateVector(std::size_t n, double fill = 0.0) : c(n, fill) {}
    StateVector(std::initializer_list<double> init) : c(init) {}

    std::size_t size() const { return c.size(); }
    double& operator[](std::size_t k) { return c[k]; }
    double operator[](std::size_t k) const { return c[k]; }
    double* data() { return c.data(); }
    const double* data() const { return c.data(); }

    StateVector& operator+=(const StateVector& o);
    StateVector& operator-=(const StateVector& o);
    StateVector& operator*=(double a);
};

StateVector operator+(StateVector a, const StateVector& b);
StateVector operator-(StateVector a, const StateVector& b);
StateVector operator*(double a, StateVector x);

double dot(const StateVector& a, const StateVector& b);
double norm(const StateVector& x);
double norm_sq(const StateVector& x);
double norm_inf(const StateVector& x);
bool all_finite(const StateVector& x);

/// Unit coordinate vector e_k (0-based mode index) of dimension n.
StateVector unit_vector(std::size_t n, std::size_t k);

/// Diagonal model of a positive self-adjoint operator A with eigenvalues
/// 0 < lambda_1 <= ... <= lambda_N.  Everything downstream (semigroup,
/// fractional powers, Gramians) is exact per mode.
class SpectralOperator {
  public:
    explicit SpectralOperator(std::vector<double> eigenvalues);

    /// lambda_k = k^(2*beta), k = 1..n.  beta > 1 models hyperdissipation.
    static SpectralOperator power_spectrum(std::size_t n, double beta);

    std::size_t dim() const { return lambda_.size(); }
    double eigenvalue(std::size_t k) const { return lambda_[k]; }
    const std::vector<double>& eigenvalues() const { return lambda_; }

    /// Smallest eigenvalue lambda_1 (the spectral gap).
    double spectral_gap() const { return lambda_.front(); }

    /// e^{-tA} x, t >= 0.
    StateVector semigroup(double t, const StateVector& x) const;

    /// A^s x for any real s (all powers bounded in finite truncation).
    StateVector power(double s, const StateVector& x) const;

    /// Squared interpolation seminorm: the closed form of
    /// int_0^inf ||A e^{-tA} x||^2 dt, which is sum_k (lambda_k/2) x_k^2.
    double half_norm_sq(const StateVector& x) const;

    /// ||A^{theta/2} x||^2.
    double theta_norm_sq(double theta, const StateVector& x) const;

    void require_dim(const StateVector& x, const char* where) const;

  private:
    std::vector<double> lambda_;
};

/// History slice on [-tau, 0] sampled on a uniform grid; the state of the
/// delay dynamics.
struct Segment {
    double tau = 0.0;
    double step = 0.0;
    std::vector<StateVector> values;  // nodes -tau, -tau+step, ..., 0

    static Segment zero(std::size_t dim, double tau, double step);
    static Segment constant(const StateVector& v, double tau, double step);

    std::size_t nodes() const { return values.size(); }
    double time_at(std::size_t i) const { return -tau + static_cast<double>(i) * step; }

    const StateVector& newest() const { return values.back(); }
    const StateVector& oldest() const { return values.front(); }

    /// max over grid nodes of ||value||.
    double sup_norm() const;

    void validate(const char* where) const;
};

/// Number of steps n with n*step == span; throws if step does not divide
/// span to within rounding.
std::size_t grid_steps(double span, double step, const char* where);

}  // namespace shiftlab
