#pragma once

#include <string>
#include <vector>

#include "shiftlab/spectral.hpp"

namespace shiftlab {

/// Cylindrical test functional f(gamma) = profile( sum_i <gamma(t_i), d_i> ).
/// `times` live in [-tau,0] for segment functionals, [0,T] for path
/// functionals, or hold the single endpoint for state functionals.
/// All kinds carry exact gradients; the smoothed indicator replaces the
/// raw indicator so the gradient exists.
struct TestFunction {
    enum class Kind { coordinate, bounded_smooth, indicator_smoothed, positive_exp };

    Kind kind = Kind::coordinate;
    std::string name;
    std::vector<double> times;
    std::vector<StateVector> directions;
    double bias = 0.0;
    double amp = 1.0;    // bounded_smooth: f = 1 + amp sin(z + bias); positive_exp: f = exp(amp sin(z + bias))
    double level = 0.0;  // indicator_smoothed: f = logistic((level - z)/width)
    double width = 1.0;

    static TestFunction coordinate(std::string name, std::vector<double> times, std::vector<StateVector> dirs);
    static TestFunction bounded_smooth(std::string name, std::vector<double> times, std::vector<StateVector> dirs,
                                       double amp, double bias);
    static TestFunction indicator_smoothed(std::string name, std::vector<double> times, std::vector<StateVector> dirs,
                                           double level, double width);
    static TestFunction positive_exp(std::string name, std::vector<double> times, std::vector<StateVector> dirs,
                                     double amp, double bias);

    /// true when f >= 0 everywhere (required by Harnack checks).
    bool nonnegative() const { return kind != Kind::coordinate; }
    /// true when f is bounded away from 0 (required for log f).
    bool positive() const { return kind == Kind::positive_exp || (kind == Kind::bounded_smooth && amp < 1.0); }

    double profile(double z) const;
    double dprofile(double z) const;

    /// f evaluated on the sampled nodes (one pointer per time, each of
    /// dimension dim).
    double eval(const std::vector<const double*>& nodes, std::size_t dim) const;

    /// Directional derivative along per-node directions v_i.
    double directional(const std::vector<const double*>& nodes, const std::vector<const double*>& dirs,
                       std::size_t dim) const;

    double inner(const std::vector<const double*>& nodes, std::size_t dim) const;
};

}  // namespace shiftlab
