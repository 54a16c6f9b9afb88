#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "robinrd/chebyshev.hpp"
#include "robinrd/errors.hpp"
#include "robinrd/quadrature.hpp"
#include "robinrd/roots.hpp"

namespace robinrd {

// Demographic parameters of the two-population mosquito model.
struct WolbachiaParams {
    double b_u = 1.12;       // uninfected birth rate (1/day)
    double d_u = 0.27;       // uninfected death rate (1/day)
    double delta = 10.0 / 9; // lifespan reduction factor, > 1
    double s_f = 0.1;        // fecundity decrease, in [0, 1)
    double s_h = 0.8;        // CI hatching failure fraction, in (0, 1]
    double K = 1.0;          // carrying capacity

    void validate() const {
        if (!(delta > 1.0)) throw invalid_input("wolbachia params: require delta > 1");
        if (!(s_f >= 0.0 && s_f < 1.0))
            throw invalid_input("wolbachia params: require 0 <= s_f < 1");
        if (!(s_h > 0.0 && s_h <= 1.0))
            throw invalid_input("wolbachia params: require 0 < s_h <= 1");
        if (!(s_f < s_h)) throw invalid_input("wolbachia params: require s_f < s_h");
        if (!(s_f + delta * (1.0 - s_h) < 1.0))
            throw invalid_input("wolbachia params: require s_f + delta*(1 - s_h) < 1");
        if (!(b_u > 0.0)) throw invalid_input("wolbachia params: require b_u > 0");
        if (!(d_u > 0.0)) throw invalid_input("wolbachia params: require d_u > 0");
        if (!(K > 0.0)) throw invalid_input("wolbachia params: require K > 0");
    }

    double theta() const { return (s_f + delta - 1.0) / (delta * s_h); }
};

// Interior roots of f' and of the potential, plus the potential values that
// organize the phase plane.
struct Landmarks {
    double theta = 0.0;
    double alpha1 = 0.0; // root of f' in (0, theta)
    double alpha2 = 0.0; // root of f' in (theta, 1)
    double beta = 0.0;   // root of F in (theta, 1)
    double F_theta = 0.0;
    double F_zero = 0.0;
    double F_one = 0.0;
};

enum class ReactionKind { wolbachia, cubic };

struct ReactionValues {
    double f = 0.0;
    double f_prime = 0.0;
    double F = 0.0;
};

// Bistable reaction term with zeros at 0, theta, 1, its derivatives, and the
// potential F(p), anchored at F(0) = 0. Immutable after construction; all
// evaluations are pure.
class ReactionModel {
  public:
    static ReactionModel wolbachia(const WolbachiaParams& params) {
        params.validate();
        ReactionModel m;
        m.kind_ = ReactionKind::wolbachia;
        m.params_ = params;
        m.theta_ = params.theta();
        m.scale_ = params.delta * params.d_u * params.s_h;
        m.check_denominator_positive();
        m.build_antiderivative_cache();
        m.check_bistable_shape();
        return m;
    }

    static ReactionModel cubic(double theta) {
        if (!(theta > 0.0 && theta < 0.5))
            throw invalid_input("cubic reaction: require 0 < theta < 1/2 so that the "
                                "potential gain over [0,1] is positive");
        ReactionModel m;
        m.kind_ = ReactionKind::cubic;
        m.theta_ = theta;
        return m;
    }

    ReactionKind kind() const { return kind_; }
    double theta() const { return theta_; }
    const std::optional<WolbachiaParams>& params() const { return params_; }

    double f(double p) const {
        require_unit_interval(p);
        if (kind_ == ReactionKind::cubic) return p * (1.0 - p) * (p - theta_);
        return scale_ * p * (1.0 - p) * (p - theta_) / denom(p);
    }

    double fprime(double p) const {
        require_unit_interval(p);
        const double n = numer(p), dn = numer_prime(p);
        if (kind_ == ReactionKind::cubic) return dn;
        const double q = denom(p), dq = denom_prime(p);
        return (dn * q - n * dq) / (q * q);
    }

    double fsecond(double p) const {
        require_unit_interval(p);
        const double ddn = numer_second(p);
        if (kind_ == ReactionKind::cubic) return ddn;
        const double n = numer(p), dn = numer_prime(p);
        const double q = denom(p), dq = denom_prime(p), ddq = 2.0 * params_->s_h;
        return (ddn * q * q - 2.0 * dn * dq * q - n * ddq * q + 2.0 * n * dq * dq) /
               (q * q * q);
    }

    // F(p) = integral of f from 0 to p.
    double antiderivative(double p) const {
        require_unit_interval(p);
        if (kind_ == ReactionKind::cubic) {
            const double p2 = p * p;
            return p2 * (-0.25 * p2 + (1.0 + theta_) / 3.0 * p - 0.5 * theta_);
        }
        if (p == 0.0) return 0.0;
        return F_cache_(p) - F_at_zero_;
    }

    double F_theta() const { return antiderivative(theta_); }
    double F_one() const { return antiderivative(1.0); }

  private:
    void require_unit_interval(double p) const {
        if (!(p >= 0.0 && p <= 1.0))
            throw invalid_input("reaction evaluated outside [0, 1]: p = " +
                                std::to_string(p));
    }

    double numer(double p) const { // without the wolbachia scale factor
        double v = p * (1.0 - p) * (p - theta_);
        return kind_ == ReactionKind::cubic ? v : scale_ * v;
    }
    double numer_prime(double p) const {
        double v = (1.0 - 2.0 * p) * (p - theta_) + p * (1.0 - p);
        return kind_ == ReactionKind::cubic ? v : scale_ * v;
    }
    double numer_second(double p) const {
        double v = -6.0 * p + 2.0 * (1.0 + theta_);
        return kind_ == ReactionKind::cubic ? v : scale_ * v;
    }
    double denom(double p) const {
        return params_->s_h * p * p - (params_->s_f + params_->s_h) * p + 1.0;
    }
    double denom_prime(double p) const {
        return 2.0 * params_->s_h * p - (params_->s_f + params_->s_h);
    }

    void check_denominator_positive() const {
        double worst = std::min(denom(0.0), denom(1.0));
        const double vertex = (params_->s_f + params_->s_h) / (2.0 * params_->s_h);
        if (vertex > 0.0 && vertex < 1.0) worst = std::min(worst, denom(vertex));
        if (!(worst > 0.0))
            throw invalid_input("wolbachia reaction: denominator not positive on [0,1]");
    }

    // Adaptive panel quadrature of f at Lobatto nodes feeding a Chebyshev
    // interpolant of F; the degree doubles until trailing coefficients decay.
    void build_antiderivative_cache() {
        const double panel_tol = 1e-14;
        for (std::size_t n = 64; n <= 2048; n *= 2) {
            auto nodes = ChebyshevSeries::lobatto_nodes(n, 0.0, 1.0);
            std::vector<double> vals(n + 1, 0.0);
            // nodes run from b down to a; accumulate from the left end
            double acc = 0.0;
            vals[n] = 0.0;
            for (std::size_t j = n; j >= 1; --j) {
                acc += integrate_or_throw([this](double s) { return f_raw(s); },
                                          nodes[j], nodes[j - 1], panel_tol, 0.0, 200);
                vals[j - 1] = acc;
            }
            F_cache_ = ChebyshevSeries::from_lobatto_values(vals, 0.0, 1.0);
            const auto& c = F_cache_.coefficients();
            double scale = 0.0;
            for (double ck : c) scale = std::max(scale, std::fabs(ck));
            double tail = 0.0;
            for (std::size_t k = c.size() - 4; k < c.size(); ++k)
                tail = std::max(tail, std::fabs(c[k]));
            if (tail <= 1e-15 * std::max(scale, 1e-30)) break;
        }
        F_at_zero_ = F_cache_(0.0);
    }

    double f_raw(double s) const { // f without the domain check, for quadrature
        return scale_ * s * (1.0 - s) * (s - theta_) / denom(s);
    }

    void check_bistable_shape() const {
        const int n = 512;
        for (int i = 1; i < n; ++i) {
            const double p = double(i) / n;
            if (std::fabs(p - theta_) < 1e-9) continue;
            const double v = f_raw(p);
            if (p < theta_ && !(v < 0.0))
                throw invalid_input("reaction: f must be negative on (0, theta)");
            if (p > theta_ && !(v > 0.0))
                throw invalid_input("reaction: f must be positive on (theta, 1)");
        }
        if (!(antiderivative(1.0) > 0.0))
            throw invalid_input("reaction: potential gain over [0,1] must be positive");
    }

    ReactionKind kind_ = ReactionKind::cubic;
    double theta_ = 0.25;
    double scale_ = 1.0;
    std::optional<WolbachiaParams> params_;
    ChebyshevSeries F_cache_;
    double F_at_zero_ = 0.0;
};

inline ReactionModel make_wolbachia_reaction(const WolbachiaParams& params) {
    return ReactionModel::wolbachia(params);
}

inline ReactionModel make_cubic_reaction(double theta) {
    return ReactionModel::cubic(theta);
}

inline ReactionValues evaluate_reaction(const ReactionModel& model, double p) {
    return {model.f(p), model.fprime(p), model.antiderivative(p)};
}

// Locates alpha1, alpha2 (roots of f') and beta (root of F above theta), each
// bracketed by the bistable shape and solved to about 1e-12.
inline Landmarks compute_landmarks(const ReactionModel& model) {
    const double th = model.theta();
    const double eps = 1e-13;
    Landmarks lm;
    lm.theta = th;
    auto fp = [&](double p) { return model.fprime(p); };
    auto fs = [&](double p) { return model.fsecond(p); };
    try {
        lm.alpha1 = bisect_newton(fp, fs, eps, th - eps);
        lm.alpha2 = bisect_newton(fp, fs, th + eps, 1.0 - eps);
        lm.beta = bisect_newton([&](double p) { return model.antiderivative(p); },
                                [&](double p) { return model.f(p); }, th + eps,
                                1.0 - eps);
    } catch (const numerical_error&) {
        throw numerical_error("compute_landmarks: bracketing failed; reaction term "
                              "does not have the required bistable shape");
    }
    lm.F_theta = model.antiderivative(th);
    lm.F_zero = 0.0;
    lm.F_one = model.antiderivative(1.0);
    return lm;
}

} // namespace robinrd
