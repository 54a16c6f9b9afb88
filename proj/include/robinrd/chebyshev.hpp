#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "robinrd/errors.hpp"

namespace robinrd {

// Chebyshev interpolant through values at the n+1 Lobatto points of [a, b],
// stored as a plain T_k coefficient series and evaluated by Clenshaw recurrence.
class ChebyshevSeries {
  public:
    ChebyshevSeries() = default;

    // nodes_values[j] is the value at x_j = mid + half*cos(j*pi/n), j = 0..n
    // (so nodes_values[0] belongs to x = b and nodes_values[n] to x = a).
    static ChebyshevSeries from_lobatto_values(const std::vector<double>& nodes_values,
                                               double a, double b) {
        const std::size_t n = nodes_values.size() - 1;
        if (n < 1) throw invalid_input("chebyshev fit needs at least 2 nodes");
        ChebyshevSeries s;
        s.a_ = a;
        s.b_ = b;
        s.coef_.assign(n + 1, 0.0);
        for (std::size_t k = 0; k <= n; ++k) {
            double acc = 0.5 * (nodes_values[0] + (k % 2 ? -1.0 : 1.0) * nodes_values[n]);
            for (std::size_t j = 1; j < n; ++j)
                acc += nodes_values[j] * std::cos(std::numbers::pi * double(k * j) / double(n));
            s.coef_[k] = 2.0 * acc / double(n);
        }
        s.coef_[0] *= 0.5;
        s.coef_[n] *= 0.5;
        return s;
    }

    static std::vector<double> lobatto_nodes(std::size_t n, double a, double b) {
        std::vector<double> x(n + 1);
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (std::size_t j = 0; j <= n; ++j)
            x[j] = mid + half * std::cos(std::numbers::pi * double(j) / double(n));
        x[0] = b;
        x[n] = a;
        return x;
    }

    double operator()(double x) const {
        const double t = (2.0 * x - a_ - b_) / (b_ - a_);
        double b1 = 0.0, b2 = 0.0;
        for (std::size_t k = coef_.size() - 1; k >= 1; --k) {
            double b0 = 2.0 * t * b1 - b2 + coef_[k];
            b2 = b1;
            b1 = b0;
        }
        return t * b1 - b2 + coef_[0];
    }

    double lo() const { return a_; }
    double hi() const { return b_; }
    std::size_t degree() const { return coef_.empty() ? 0 : coef_.size() - 1; }
    const std::vector<double>& coefficients() const { return coef_; }

  private:
    double a_ = 0.0, b_ = 1.0;
    std::vector<double> coef_;
};

} // namespace robinrd
