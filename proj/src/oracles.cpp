#include "shiftlab/oracles.hpp"

#include <cmath>
#include <numbers>

namespace shiftlab {

namespace {

double simpson(double a, double fa, double b, double fb, double fm) { return (b - a) / 6.0 * (fa + 4.0 * fm + fb); }

double simpson_rec(const std::function<double(double)>& fn, double a, double fa, double b, double fb, double m,
                   double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = fn(lm), frm = fn(rm);
    const double left = simpson(a, fa, m, fm, flm);
    const double right = simpson(m, fm, b, fb, frm);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
    return simpson_rec(fn, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_rec(fn, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& fn, double a, double b, double tol) {
    const double m = 0.5 * (a + b);
    const double fa = fn(a), fb = fn(b), fm = fn(m);
    return simpson_rec(fn, a, fa, b, fb, m, fm, simpson(a, fa, b, fb, fm), tol, 48);
}

OuLaw ou_endpoint_law(double lambda, double q, double x0, double T) {
    OuLaw law;
    law.mean = std::exp(-lambda * T) * x0;
    law.variance = q * q * (-std::expm1(-2.0 * lambda * T)) / (2.0 * lambda);
    return law;
}

GaussianEntropyPair gaussian_entropy_oracle(const std::function<double(double)>& g,
                                            const std::function<double(double)>& dg, double mean, double var) {
    const double sd = std::sqrt(var);
    const double lo = mean - 10.0 * sd, hi = mean + 10.0 * sd;
    const double z = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi));
    auto density = [&](double x) {
        const double u = (x - mean) / sd;
        return z * std::exp(-0.5 * u * u);
    };
    const double eg2 = adaptive_simpson([&](double x) { return g(x) * g(x) * density(x); }, lo, hi);
    const double eg2l = adaptive_simpson(
        [&](double x) {
            const double v = g(x) * g(x);
            return (v > 0.0 ? v * std::log(v) : 0.0) * density(x);
        },
        lo, hi);
    GaussianEntropyPair out;
    out.entropy = eg2l - eg2 * std::log(eg2);
    out.grad_sq = adaptive_simpson([&](double x) { return dg(x) * dg(x) * density(x); }, lo, hi);
    return out;
}

}  // namespace shiftlab
