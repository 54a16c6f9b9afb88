#pragma once

#include <cmath>
#include <vector>

#include "robinrd/errors.hpp"

namespace robinrd {

// Thomas solve of a tridiagonal system; diagonals passed by value since the
// sweep destroys them. sub[0] and sup[n-1] are ignored.
inline std::vector<double> solve_tridiagonal(std::vector<double> sub,
                                             std::vector<double> diag,
                                             std::vector<double> sup,
                                             std::vector<double> rhs) {
    const std::size_t n = diag.size();
    if (sub.size() != n || sup.size() != n || rhs.size() != n || n == 0)
        throw invalid_input("solve_tridiagonal: inconsistent sizes");
    for (std::size_t i = 1; i < n; ++i) {
        if (diag[i - 1] == 0.0) throw numerical_error("solve_tridiagonal: zero pivot");
        const double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    if (diag[n - 1] == 0.0) throw numerical_error("solve_tridiagonal: zero pivot");
    std::vector<double> x(n);
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - sup[i] * x[i + 1]) / diag[i];
    return x;
}

} // namespace robinrd
