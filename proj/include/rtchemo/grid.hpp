#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "rtchemo/errors.hpp"
#include "rtchemo/pathway.hpp"
#include "rtchemo/signal.hpp"

namespace rtchemo {

// Discrete velocity set with quadrature weights. Tumbling draws the new
// velocity with probability weight / total_weight.
struct VelocitySet {
    std::vector<double> speeds;
    std::vector<double> weights;

    static VelocitySet two_velocity(double v0) { return {{-v0, v0}, {1.0, 1.0}}; }

    std::size_t size() const { return speeds.size(); }
    double total_weight() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }
    double probability(std::size_t k) const { return weights[k] / total_weight(); }
    double max_speed() const {
        double m = 0.0;
        for (double v : speeds) m = std::max(m, std::abs(v));
        return m;
    }

    void validate() const {
        if (speeds.empty() || speeds.size() != weights.size())
            throw DomainError("velocity set: speeds and weights must be non-empty and equal length");
        for (double w : weights)
            if (!(w > 0.0)) throw DomainError("velocity set: weights must be > 0");
    }
};

struct XGrid {
    std::size_t nx = 200;
    double length = 800.0;

    double dx() const { return length / static_cast<double>(nx); }
    double center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * dx(); }
};

// Finite-volume grid in the blow-up coordinate. Either uniform or
// sinh-stretched toward y = 0, where the eps -> 0 profile concentrates.
class YGrid {
public:
    static YGrid uniform(double y_min, double y_max, std::size_t ny) {
        check(y_min, y_max, ny);
        YGrid g;
        g.faces_.resize(ny + 1);
        for (std::size_t j = 0; j <= ny; ++j)
            g.faces_[j] = y_min + (y_max - y_min) * static_cast<double>(j) / static_cast<double>(ny);
        g.finish();
        return g;
    }

    // Faces y_j = Y sinh(beta s_j) / sinh(beta), s_j uniform on [-1, 1].
    // beta = 0 reduces to a uniform grid on [-Y, Y].
    static YGrid stretched(double halfwidth, std::size_t ny, double beta) {
        if (beta <= 0.0) return uniform(-halfwidth, halfwidth, ny);
        check(-halfwidth, halfwidth, ny);
        YGrid g;
        g.faces_.resize(ny + 1);
        const double sb = std::sinh(beta);
        for (std::size_t j = 0; j <= ny; ++j) {
            const double s = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(ny);
            g.faces_[j] = halfwidth * std::sinh(beta * s) / sb;
        }
        g.faces_.front() = -halfwidth;
        g.faces_.back() = halfwidth;
        if (ny % 2 == 0) g.faces_[ny / 2] = 0.0;
        g.finish();
        return g;
    }

    std::size_t size() const { return centers_.size(); }
    double y_min() const { return faces_.front(); }
    double y_max() const { return faces_.back(); }
    const std::vector<double>& faces() const { return faces_; }
    const std::vector<double>& centers() const { return centers_; }
    const std::vector<double>& widths() const { return widths_; }
    double face(std::size_t j) const { return faces_[j]; }
    double center(std::size_t j) const { return centers_[j]; }
    double width(std::size_t j) const { return widths_[j]; }
    double min_width() const { return *std::min_element(widths_.begin(), widths_.end()); }

    // Cell index containing y, or size() when outside.
    std::size_t find_cell(double y) const {
        if (y < faces_.front() || y > faces_.back()) return size();
        auto it = std::upper_bound(faces_.begin(), faces_.end(), y);
        const auto j = static_cast<std::size_t>(std::distance(faces_.begin(), it));
        return std::min(j == 0 ? 0 : j - 1, size() - 1);
    }

private:
    static void check(double lo, double hi, std::size_t ny) {
        if (!(lo < hi)) throw DomainError("y-grid: need y_min < y_max");
        if (ny < 16) throw DomainError("y-grid: ny must be >= 16");
    }

    void finish() {
        const std::size_t ny = faces_.size() - 1;
        centers_.resize(ny);
        widths_.resize(ny);
        for (std::size_t j = 0; j < ny; ++j) {
            centers_[j] = 0.5 * (faces_[j] + faces_[j + 1]);
            widths_[j] = faces_[j + 1] - faces_[j];
        }
    }

    std::vector<double> faces_;
    std::vector<double> centers_;
    std::vector<double> widths_;
};

struct FullGrid {
    XGrid x;
    VelocitySet velocities;
    YGrid y;

    // Checks that the y-domain holds the concentrated profile plus three
    // standard deviations of the noise-limit Gaussian.
    void validate(const Signal& signal, const Pathway& pathway) const {
        velocities.validate();
        if (x.nx < 1) throw DomainError("grid: nx must be >= 1");
        if (std::abs(x.length - signal.domain_length()) > 1e-9 * signal.domain_length())
            throw DomainError("grid: nx*dx must equal the signal domain length");
        const double u_max = signal.max_abs_pathwise_derivative(velocities.max_speed());
        const double need = u_max / pathway.G0() + 3.0 / std::sqrt(pathway.G0());
        if (!(y.y_min() < -need && y.y_max() > need))
            throw DomainError("grid: y-domain must cover |y| <= " + std::to_string(need) +
                              " (max |D_tM| / G(0) + 3 / sqrt(G(0)))");
    }
};

}  // namespace rtchemo
