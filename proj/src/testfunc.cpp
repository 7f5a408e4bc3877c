#include "shiftlab/testfunc.hpp"

#include <cmath>
#include <stdexcept>

namespace shiftlab {

namespace {

void require_shape(const TestFunction& f) {
    if (f.times.empty() || f.times.size() != f.directions.size())
        throw std::invalid_argument("TestFunction: times and directions must be nonempty and match");
}

}  // namespace

TestFunction TestFunction::coordinate(std::string name, std::vector<double> times, std::vector<StateVector> dirs) {
    TestFunction f;
    f.kind = Kind::coordinate;
    f.name = std::move(name);
    f.times = std::move(times);
    f.directions = std::move(dirs);
    require_shape(f);
    return f;
}

TestFunction TestFunction::bounded_smooth(std::string name, std::vector<double> times, std::vector<StateVector> dirs,
                                          double amp, double bias) {
    TestFunction f;
    f.kind = Kind::bounded_smooth;
    f.name = std::move(name);
    f.times = std::move(times);
    f.directions = std::move(dirs);
    f.amp = amp;
    f.bias = bias;
    require_shape(f);
    return f;
}

TestFunction TestFunction::indicator_smoothed(std::string name, std::vector<double> times,
                                              std::vector<StateVector> dirs, double level, double width) {
    TestFunction f;
    f.kind = Kind::indicator_smoothed;
    f.name = std::move(name);
    f.times = std::move(times);
    f.directions = std::move(dirs);
    f.level = level;
    f.width = width;
    if (!(width > 0.0)) throw std::invalid_argument("TestFunction: indicator width must be positive");
    require_shape(f);
    return f;
}

TestFunction TestFunction::positive_exp(std::string name, std::vector<double> times, std::vector<StateVector> dirs,
                                        double amp, double bias) {
    TestFunction f;
    f.kind = Kind::positive_exp;
    f.name = std::move(name);
    f.times = std::move(times);
    f.directions = std::move(dirs);
    f.amp = amp;
    f.bias = bias;
    require_shape(f);
    return f;
}

double TestFunction::profile(double z) const {
    switch (kind) {
        case Kind::coordinate:
            return z;
        case Kind::bounded_smooth:
            return 1.0 + amp * std::sin(z + bias);
        case Kind::indicator_smoothed:
            return 1.0 / (1.0 + std::exp(-(level - z) / width));
        case Kind::positive_exp:
            return std::exp(amp * std::sin(z + bias));
    }
    return 0.0;
}

double TestFunction::dprofile(double z) const {
    switch (kind) {
        case Kind::coordinate:
            return 1.0;
        case Kind::bounded_smooth:
            return amp * std::cos(z + bias);
        case Kind::indicator_smoothed: {
            const double s = profile(z);
            return -s * (1.0 - s) / width;
        }
        case Kind::positive_exp:
            return profile(z) * amp * std::cos(z + bias);
    }
    return 0.0;
}

double TestFunction::inner(const std::vector<const double*>& nodes, std::size_t dim) const {
    if (nodes.size() != directions.size()) throw std::invalid_argument("TestFunction: node count mismatch");
    double z = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const StateVector& d = directions[i];
        if (d.size() != dim) throw std::invalid_argument("TestFunction: direction dimension mismatch");
        for (std::size_t k = 0; k < dim; ++k) z += nodes[i][k] * d[k];
    }
    return z;
}

double TestFunction::eval(const std::vector<const double*>& nodes, std::size_t dim) const {
    return profile(inner(nodes, dim));
}

double TestFunction::directional(const std::vector<const double*>& nodes, const std::vector<const double*>& dirs,
                                 std::size_t dim) const {
    const double z = inner(nodes, dim);
    double dz = 0.0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        const StateVector& d = directions[i];
        for (std::size_t k = 0; k < dim; ++k) dz += dirs[i][k] * d[k];
    }
    return dprofile(z) * dz;
}

}  // namespace shiftlab
