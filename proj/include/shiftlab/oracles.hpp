#pragma once

#include <functional>

namespace shiftlab {

/// Adaptive Simpson quadrature on [a,b].
double adaptive_simpson(const std::function<double(double)>& fn, double a, double b, double tol = 1e-10);

/// Mean and variance of the scalar OU mode dx = -lambda x dt + q dW at
/// time T from x0.
struct OuLaw {
    double mean = 0.0;
    double variance = 0.0;
};
OuLaw ou_endpoint_law(double lambda, double q, double x0, double T);

/// Entropy E g^2 log g^2 - E g^2 log E g^2 and E (g')^2 under N(mean, var),
/// for a scalar profile g with derivative dg.
struct GaussianEntropyPair {
    double entropy = 0.0;
    double grad_sq = 0.0;
};
GaussianEntropyPair gaussian_entropy_oracle(const std::function<double(double)>& g,
                                            const std::function<double(double)>& dg, double mean, double var);

}  // namespace shiftlab
