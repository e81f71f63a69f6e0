#pragma once

// Intracellular adaptation and tumbling response, written in the normalized
// blow-up form used by all three models:
//   dm/dt = f(m - M) / eps,   f(r) = -r G(r),
//   tumbling rate Lambda(y), y = (m - M) / eps,
// and the bulk kernels T(u) obtained in the eps -> 0 limit.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <utility>

#include "rtchemo/errors.hpp"
#include "rtchemo/quadrature.hpp"

namespace rtchemo {

inline constexpr double kExpClamp = 700.0;
inline constexpr double kSeriesSwitch = 1e-4;

inline double clamped_exp(double z) { return std::exp(std::clamp(z, -kExpClamp, kExpClamp)); }

struct PathwayParams {
    int N = 6;
    double alpha = 1.7;
    double a0 = 0.5;
    double z0 = 0.14;   // 1/s
    double tau = 0.8;   // s
    double H = 10.0;
    double sigma = 1.0;
    double epsilon = 0.1;
    bool noise_enabled = false;

    void validate() const {
        if (N < 1) throw DomainError("pathway: N must be >= 1");
        if (!(alpha > 0.0)) throw DomainError("pathway: alpha must be > 0");
        if (!(a0 > 0.0 && a0 < 1.0)) throw DomainError("pathway: need 0 < a0 < 1");
        // f(0) = 1 - 1/(2 a0) must vanish for f(r) = -r G(r) to hold.
        if (std::abs(a0 - 0.5) > 1e-12)
            throw DomainError("pathway: a0 must be 1/2 so that the adaptation rate vanishes at m = M");
        if (!(z0 > 0.0)) throw DomainError("pathway: z0 must be > 0");
        if (!(tau > 0.0)) throw DomainError("pathway: tau must be > 0");
        if (!(H >= 1.0)) throw DomainError("pathway: H must be >= 1");
        if (!(sigma > 0.0)) throw DomainError("pathway: sigma must be > 0");
        if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("pathway: need 0 < epsilon <= 1");
    }

    bool operator==(const PathwayParams&) const = default;
};

class Pathway {
public:
    explicit Pathway(PathwayParams p) : p_(p) {
        p_.validate();
        gain_ = p_.N * p_.alpha;
        G0_ = gain_ / (4.0 * p_.a0);
        lambda_minus_ = p_.z0;
        lambda_plus_ = p_.z0 + std::pow(p_.a0, -p_.H) / p_.tau;
    }

    const PathwayParams& params() const { return p_; }
    double epsilon() const { return p_.epsilon; }
    bool noise_enabled() const { return p_.noise_enabled; }

    // Receptor activity a = (1 + exp(N E))^-1 with E = -alpha (m - M).
    double activity(double m, double M) const { return 1.0 / (1.0 + clamped_exp(-gain_ * (m - M))); }

    // Normalized adaptation rate; restoring toward r = 0.
    double adaptation_f(double r) const { return 1.0 - 1.0 / (p_.a0 * (1.0 + clamped_exp(-gain_ * r))); }

    double G(double r) const {
        if (std::abs(r) < kSeriesSwitch) {
            // f(r) = -(k/4a0) r + (k^3/48a0) r^3 + O(r^5) with k = N alpha, a0 = 1/2.
            const double k3 = gain_ * gain_ * gain_;
            return G0_ - k3 * r * r / (48.0 * p_.a0);
        }
        return -adaptation_f(r) / r;
    }

    double G0() const { return G0_; }

    // Tumbling rate as a function of the blow-up offset. Increasing in y:
    // a cell whose methylation lags behind a rising M has low activity and
    // tumbles less.
    double Lambda(double y) const {
        const double e = clamped_exp(-gain_ * p_.sigma * y);
        return p_.z0 + std::pow(1.0 / (p_.a0 * (1.0 + e)), p_.H) / p_.tau;
    }

    // Velocity-resolved hook; the shipped response is isotropic.
    double Lambda(double y, double /*v*/, double /*v_prime*/) const { return Lambda(y); }

    double lambda_minus() const { return lambda_minus_; }
    double lambda_plus() const { return lambda_plus_; }

    // T(u) = Lambda(-u / G(0)), u the path-wise derivative D_tM.
    double limit_kernel_deterministic(double u) const { return Lambda(-u / G0_); }

    // Range of G(eps y) over y in [y_lo, y_hi]; G is even and decreasing in |r|.
    std::pair<double, double> g_bounds(double y_lo, double y_hi) const {
        const double r_far = p_.epsilon * std::max(std::abs(y_lo), std::abs(y_hi));
        const double r_near = (y_lo <= 0.0 && y_hi >= 0.0)
                                  ? 0.0
                                  : p_.epsilon * std::min(std::abs(y_lo), std::abs(y_hi));
        return {G(r_far), G(r_near)};
    }

private:
    PathwayParams p_;
    double gain_ = 0.0;
    double G0_ = 0.0;
    double lambda_minus_ = 0.0;
    double lambda_plus_ = 0.0;
};

inline constexpr int kDefaultNoiseOrder = 128;

// Gaussian average of Lambda centered at -u/G(0) with variance
// variance_scale / G(0). variance_scale = 1 is the noise-limit kernel;
// other values exist for studying the zero-variance limit.
class NoiseKernel {
public:
    NoiseKernel(const Pathway& pathway, int order = kDefaultNoiseOrder,
                QuadratureRule rule = QuadratureRule::Trapezoid, double variance_scale = 1.0)
        : pathway_(pathway), rule_(rule), order_(order) {
        if (!(variance_scale > 0.0)) throw DomainError("noise kernel: variance scale must be > 0");
        tab_ = gaussian_rule(rule, order);
        scale_ = std::sqrt(2.0 * variance_scale / pathway.G0());
        for (double& w : tab_.weights) w /= std::sqrt(std::numbers::pi);
    }

    double operator()(double u) const {
        const double mu = -u / pathway_.G0();
        double acc = 0.0;
        for (std::size_t i = 0; i < tab_.nodes.size(); ++i)
            acc += tab_.weights[i] * pathway_.Lambda(mu + scale_ * tab_.nodes[i]);
        return acc;
    }

    int order() const { return order_; }
    QuadratureRule rule() const { return rule_; }

private:
    Pathway pathway_;
    QuadratureRule rule_;
    int order_;
    QuadratureTable tab_;
    double scale_ = 0.0;
};

inline double limit_kernel_noise(double u, const Pathway& pathway, int order = kDefaultNoiseOrder,
                                 QuadratureRule rule = QuadratureRule::Trapezoid) {
    return NoiseKernel(pathway, order, rule)(u);
}

}  // namespace rtchemo
