#include "shiftlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace shiftlab {

StateVector& StateVector::operator+=(const StateVector& o) {
    for (std::size_t k = 0; k < c.size(); ++k) c[k] += o.c[k];
    return *this;
}

StateVector& StateVector::operator-=(const StateVector& o) {
    for (std::size_t k = 0; k < c.size(); ++k) c[k] -= o.c[k];
    return *this;
}

StateVector& StateVector::operator*=(double a) {
    for (double& v : c) v *= a;
    return *this;
}

StateVector operator+(StateVector a, const StateVector& b) { return a += b; }
StateVector operator-(StateVector a, const StateVector& b) { return a -= b; }
StateVector operator*(double a, StateVector x) { return x *= a; }

double dot(const StateVector& a, const StateVector& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double norm_sq(const StateVector& x) { return dot(x, x); }
double norm(const StateVector& x) { return std::sqrt(norm_sq(x)); }

double norm_inf(const StateVector& x) {
    double m = 0.0;
    for (double v : x.c) m = std::max(m, std::abs(v));
    return m;
}

bool all_finite(const StateVector& x) {
    for (double v : x.c)
        if (!std::isfinite(v)) return false;
    return true;
}

StateVector unit_vector(std::size_t n, std::size_t k) {
    StateVector e(n);
    e[k] = 1.0;
    return e;
}

SpectralOperator::SpectralOperator(std::vector<double> eigenvalues) : lambda_(std::move(eigenvalues)) {
    if (lambda_.empty()) throw std::invalid_argument("SpectralOperator: empty spectrum");
    double prev = 0.0;
    for (double lam : lambda_) {
        if (!(lam > 0.0) || !std::isfinite(lam))
            throw std::invalid_argument("SpectralOperator: eigenvalues must be positive and finite");
        if (lam < prev) throw std::invalid_argument("SpectralOperator: eigenvalues must be nondecreasing");
        prev = lam;
    }
}

SpectralOperator SpectralOperator::power_spectrum(std::size_t n, double beta) {
    if (n == 0) throw std::invalid_argument("power_spectrum: dimension must be >= 1");
    if (beta < 1.0) throw std::invalid_argument("power_spectrum: beta must be >= 1");
    std::vector<double> lam(n);
    for (std::size_t k = 0; k < n; ++k) lam[k] = std::pow(static_cast<double>(k + 1), 2.0 * beta);
    return SpectralOperator(std::move(lam));
}

void SpectralOperator::require_dim(const StateVector& x, const char* where) const {
    if (x.size() != lambda_.size())
        throw std::invalid_argument(std::string(where) + ": dimension mismatch (" + std::to_string(x.size()) +
                                    " vs operator dim " + std::to_string(lambda_.size()) + ")");
}

StateVector SpectralOperator::semigroup(double t, const StateVector& x) const {
    require_dim(x, "semigroup");
    if (t < 0.0) throw std::domain_error("semigroup: t must be >= 0");
    if (t == 0.0) return x;
    StateVector y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = std::exp(-t * lambda_[k]) * x[k];
    return y;
}

StateVector SpectralOperator::power(double s, const StateVector& x) const {
    require_dim(x, "power");
    if (s == 0.0) return x;
    StateVector y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = std::pow(lambda_[k], s) * x[k];
    return y;
}

double SpectralOperator::half_norm_sq(const StateVector& x) const {
    require_dim(x, "half_norm_sq");
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += 0.5 * lambda_[k] * x[k] * x[k];
    return s;
}

double SpectralOperator::theta_norm_sq(double theta, const StateVector& x) const {
    require_dim(x, "theta_norm_sq");
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += std::pow(lambda_[k], theta) * x[k] * x[k];
    return s;
}

std::size_t grid_steps(double span, double step, const char* where) {
    if (!(step > 0.0)) throw std::invalid_argument(std::string(where) + ": step must be positive");
    if (span < 0.0) throw std::invalid_argument(std::string(where) + ": span must be nonnegative");
    const double n_real = span / step;
    const double n_round = std::round(n_real);
    if (std::abs(n_real - n_round) > 1e-9 * std::max(1.0, n_real))
        throw std::invalid_argument(std::string(where) + ": step does not divide interval exactly");
    return static_cast<std::size_t>(n_round);
}

Segment Segment::zero(std::size_t dim, double tau, double step) {
    Segment s;
    s.tau = tau;
    s.step = step;
    s.values.assign(grid_steps(tau, step, "Segment::zero") + 1, StateVector(dim));
    return s;
}

Segment Segment::constant(const StateVector& v, double tau, double step) {
    Segment s;
    s.tau = tau;
    s.step = step;
    s.values.assign(grid_steps(tau, step, "Segment::constant") + 1, v);
    return s;
}

double Segment::sup_norm() const {
    double m = 0.0;
    for (const auto& v : values) m = std::max(m, norm(v));
    return m;
}

void Segment::validate(const char* where) const {
    const std::size_t n = grid_steps(tau, step, where);
    if (values.size() != n + 1)
        throw std::invalid_argument(std::string(where) + ": segment has " + std::to_string(values.size()) +
                                    " nodes, expected " + std::to_string(n + 1));
    const std::size_t dim = values.empty() ? 0 : values.front().size();
    for (const auto& v : values) {
        if (v.size() != dim) throw std::invalid_argument(std::string(where) + ": inconsistent node dimension");
        if (!all_finite(v)) throw std::invalid_argument(std::string(where) + ": non-finite segment entry");
    }
}

}  // namespace shiftlab
