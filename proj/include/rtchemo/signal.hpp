#pragma once

// Prescribed extracellular ligand S(x,t), the log-sensing equilibrium
// methylation M(x,t) and its derivative along a straight run, D_tM.
//
// Units: lengths in um, time in s, concentrations in uM.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "rtchemo/errors.hpp"

namespace rtchemo {

enum class SignalKind { TravelingWave, Static, UniformRamp, Tabulated };

inline std::string_view to_string(SignalKind k) {
    switch (k) {
        case SignalKind::TravelingWave: return "traveling-wave";
        case SignalKind::Static: return "static";
        case SignalKind::UniformRamp: return "uniform-ramp";
        case SignalKind::Tabulated: return "tabulated";
    }
    return "?";
}

inline SignalKind signal_kind_from_string(std::string_view s) {
    if (s == "traveling-wave") return SignalKind::TravelingWave;
    if (s == "static") return SignalKind::Static;
    if (s == "uniform-ramp") return SignalKind::UniformRamp;
    if (s == "tabulated") return SignalKind::Tabulated;
    throw DomainError("unknown signal kind '" + std::string(s) +
                      "' (expected traveling-wave, static, uniform-ramp, tabulated)");
}

struct LogSensingParams {
    double m0 = 1.0;
    double alpha = 1.7;
    double K_I = 18.2;    // uM
    double K_A = 3000.0;  // uM

    void validate() const {
        if (!(m0 > 0.0)) throw DomainError("log-sensing: m0 must be > 0");
        if (!(alpha > 0.0)) throw DomainError("log-sensing: alpha must be > 0");
        if (!(K_I > 0.0 && K_I < K_A)) throw DomainError("log-sensing: need 0 < K_I < K_A");
    }

    bool operator==(const LogSensingParams&) const = default;
};

// Ligand samples at x0 + i*dx. When n*dx equals the domain length the table
// is treated as one period and wraps; otherwise its support is
// [x0, x0 + (n-1)*dx].
struct LigandTable {
    double x0 = 0.0;
    double dx = 1.0;
    std::vector<double> values;

    bool operator==(const LigandTable&) const = default;
};

struct SignalSpec {
    SignalKind kind = SignalKind::TravelingWave;
    double S0 = 500.0;              // uM
    double SA = 100.0;              // uM
    double wavelength = 800.0;      // um
    double wave_speed = 0.4;        // um/s
    double domain_length = 800.0;   // um
    double ramp_rate = 0.5;         // 1/s, uniform-ramp only
    double ramp_window = 10.0;      // s, uniform-ramp only
    LigandTable table;              // tabulated only

    bool operator==(const SignalSpec&) const = default;
};

// Log-sensing free energy ln((1+S/K_I)/(1+S/K_A)).
inline double f0(double S, const LogSensingParams& p) {
    if (!(S > 0.0)) throw DomainError("f0: ligand concentration must be > 0");
    return std::log1p(S / p.K_I) - std::log1p(S / p.K_A);
}

// f0 extended continuously to S = 0.
inline double f0_closed(double S, const LogSensingParams& p) {
    if (S == 0.0) return 0.0;
    return f0(S, p);
}

inline double f0_prime(double S, const LogSensingParams& p) {
    return 1.0 / (S + p.K_I) - 1.0 / (S + p.K_A);
}

// Wrap x into [0, L).
inline double wrap_periodic(double x, double L) {
    double r = std::fmod(x, L);
    if (r < 0.0) r += L;
    if (r >= L) r -= L;
    return r;
}

class Signal {
public:
    Signal(SignalSpec spec, LogSensingParams sensing)
        : spec_(std::move(spec)), sensing_(sensing) {
        sensing_.validate();
        validate();
        compute_bounds();
    }

    const SignalSpec& spec() const { return spec_; }
    const LogSensingParams& sensing() const { return sensing_; }
    double domain_length() const { return spec_.domain_length; }
    SignalKind kind() const { return spec_.kind; }

    // Wave speed of the pattern; zero for kinds that do not travel.
    double pattern_speed() const {
        return spec_.kind == SignalKind::TravelingWave ? spec_.wave_speed : 0.0;
    }

    double m_min() const { return m_min_; }
    double m_max() const { return m_max_; }

    // True when D_tM comes from finite differences (tabulated kind).
    bool approximate_derivative() const { return spec_.kind == SignalKind::Tabulated; }

    double ligand(double x, double t) const {
        switch (spec_.kind) {
            case SignalKind::TravelingWave:
            case SignalKind::Static:
                return spec_.S0 + spec_.SA * std::sin(phase(x, t));
            case SignalKind::UniformRamp:
                throw DomainError("uniform-ramp prescribes M directly; it has no ligand profile");
            case SignalKind::Tabulated:
                return table_value(x);
        }
        return 0.0;
    }

    double methylation(double x, double t) const {
        if (spec_.kind == SignalKind::UniformRamp) {
            check_window(t);
            return sensing_.m0 + spec_.ramp_rate * t;
        }
        return sensing_.m0 + f0(ligand(x, t), sensing_) / sensing_.alpha;
    }

    // D_tM = dM/dt + v dM/dx along a run at velocity v.
    double pathwise_derivative(double x, double v, double t) const {
        switch (spec_.kind) {
            case SignalKind::TravelingWave:
            case SignalKind::Static: {
                const double k = 2.0 * std::numbers::pi / spec_.wavelength;
                const double th = phase(x, t);
                const double S = spec_.S0 + spec_.SA * std::sin(th);
                return (v - pattern_speed()) * spec_.SA * k * std::cos(th) *
                       f0_prime(S, sensing_) / sensing_.alpha;
            }
            case SignalKind::UniformRamp:
                check_window(t);
                return spec_.ramp_rate;
            case SignalKind::Tabulated: {
                const double h = spec_.table.dx;
                return v * (methylation(x + h, t) - methylation(x - h, t)) / (2.0 * h);
            }
        }
        return 0.0;
    }

    // Upper bound on |D_tM| over the domain for velocities with |v| <= vmax.
    double max_abs_pathwise_derivative(double vmax) const {
        switch (spec_.kind) {
            case SignalKind::TravelingWave:
            case SignalKind::Static: {
                const double k = 2.0 * std::numbers::pi / spec_.wavelength;
                const double rel = vmax + std::abs(pattern_speed());
                return rel * spec_.SA * k * f0_prime(spec_.S0 - spec_.SA, sensing_) / sensing_.alpha;
            }
            case SignalKind::UniformRamp:
                return std::abs(spec_.ramp_rate);
            case SignalKind::Tabulated: {
                double best = 0.0;
                const auto& vals = spec_.table.values;
                for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                    const double dm = std::abs(f0_closed(vals[i + 1], sensing_) - f0_closed(vals[i], sensing_));
                    best = std::max(best, dm / sensing_.alpha / spec_.table.dx);
                }
                return best * vmax;
            }
        }
        return 0.0;
    }

private:
    double phase(double x, double t) const {
        return 2.0 * std::numbers::pi / spec_.wavelength * (x - pattern_speed() * t);
    }

    void check_window(double t) const {
        if (t < 0.0 || t > spec_.ramp_window)
            throw DomainError("uniform-ramp: t outside the test window [0, ramp_window]");
    }

    bool table_periodic() const {
        const auto n = static_cast<double>(spec_.table.values.size());
        return std::abs(n * spec_.table.dx - spec_.domain_length) <= 1e-9 * spec_.domain_length;
    }

    double table_value(double x) const {
        const auto& tb = spec_.table;
        const auto n = tb.values.size();
        if (table_periodic()) {
            const double s = wrap_periodic(x - tb.x0, spec_.domain_length) / tb.dx;
            const auto i = std::min(static_cast<std::size_t>(s), n - 1);
            const double w = s - static_cast<double>(i);
            return (1.0 - w) * tb.values[i] + w * tb.values[(i + 1) % n];
        }
        const double s = (x - tb.x0) / tb.dx;
        if (s < 0.0 || s > static_cast<double>(n - 1))
            throw DomainError("tabulated ligand: x outside table support");
        const auto i = std::min(static_cast<std::size_t>(s), n - 2);
        const double w = s - static_cast<double>(i);
        return (1.0 - w) * tb.values[i] + w * tb.values[i + 1];
    }

    void validate() const {
        if (!(spec_.domain_length > 0.0)) throw DomainError("signal: domain_length must be > 0");
        switch (spec_.kind) {
            case SignalKind::TravelingWave:
            case SignalKind::Static:
                if (!(spec_.SA >= 0.0 && spec_.S0 > spec_.SA))
                    throw DomainError("signal: need S0 > SA >= 0");
                if (!(spec_.wavelength > 0.0)) throw DomainError("signal: wavelength must be > 0");
                if (std::abs(spec_.domain_length - spec_.wavelength) > 1e-9 * spec_.wavelength)
                    throw DomainError("signal: domain_length must equal the wavelength");
                break;
            case SignalKind::UniformRamp:
                if (!(spec_.ramp_window > 0.0)) throw DomainError("signal: ramp_window must be > 0");
                if (!(sensing_.m0 + std::min(0.0, spec_.ramp_rate * spec_.ramp_window) > 0.0))
                    throw DomainError("signal: ramp drives M to zero inside the window");
                break;
            case SignalKind::Tabulated: {
                const auto& tb = spec_.table;
                if (tb.values.size() < 2) throw DomainError("signal: table needs at least 2 samples");
                if (!(tb.dx > 0.0)) throw DomainError("signal: table dx must be > 0");
                for (double v : tb.values)
                    if (!(v > 0.0)) throw DomainError("signal: tabulated ligand must be > 0");
                break;
            }
        }
    }

    void compute_bounds() {
        switch (spec_.kind) {
            case SignalKind::TravelingWave:
            case SignalKind::Static:
                m_min_ = sensing_.m0 + f0_closed(spec_.S0 - spec_.SA, sensing_) / sensing_.alpha;
                m_max_ = sensing_.m0 + f0(spec_.S0 + spec_.SA, sensing_) / sensing_.alpha;
                break;
            case SignalKind::UniformRamp: {
                const double end = spec_.ramp_rate * spec_.ramp_window;
                m_min_ = sensing_.m0 + std::min(0.0, end);
                m_max_ = sensing_.m0 + std::max(0.0, end);
                break;
            }
            case SignalKind::Tabulated: {
                const auto [lo, hi] = std::minmax_element(spec_.table.values.begin(), spec_.table.values.end());
                m_min_ = sensing_.m0 + f0(*lo, sensing_) / sensing_.alpha;
                m_max_ = sensing_.m0 + f0(*hi, sensing_) / sensing_.alpha;
                break;
            }
        }
    }

    SignalSpec spec_;
    LogSensingParams sensing_;
    double m_min_ = 0.0;
    double m_max_ = 0.0;
};

}  // namespace rtchemo
