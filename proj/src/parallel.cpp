#include "shiftlab/parallel.hpp"

namespace shiftlab {

double column_mean(const ObservableMatrix& m, std::size_t j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) s += m.at(i, j);
    return m.rows > 0 ? s / static_cast<double>(m.rows) : 0.0;
}

double column_cov(const ObservableMatrix& m, std::size_t j, std::size_t l) {
    if (m.rows < 2) return 0.0;
    const double mj = column_mean(m, j);
    const double ml = column_mean(m, l);
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) s += (m.at(i, j) - mj) * (m.at(i, l) - ml);
    return s / static_cast<double>(m.rows - 1);
}

}  // namespace shiftlab
