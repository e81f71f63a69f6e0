#pragma once

// Dense generator of the semi-discrete full kinetic system (upwind in x,
// exponentially fitted flux in y, tumbling exchange) for time-independent
// signals. exp(t L) q0 is the reference the split solver is compared with.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "rtchemo/solver_full.hpp"

namespace rtchemo::oracle {

inline Eigen::MatrixXd dense_generator(const FullSolver& fs) {
    const auto& g = fs.grid();
    const auto& sig = fs.signal();
    const auto& pw = fs.pathway();
    const std::size_t nx = g.x.nx, nv = g.velocities.size(), ny = g.y.size();
    const double eps = pw.epsilon();
    const std::size_t n = nx * nv * ny;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    auto id = [&](std::size_t i, std::size_t k, std::size_t j) {
        return static_cast<Eigen::Index>((i * nv + k) * ny + j);
    };
    auto B = [](double z) { return std::abs(z) < 1e-12 ? 1.0 : z / std::expm1(z); };
    const double dx = g.x.dx();
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t k = 0; k < nv; ++k) {
            const double v = g.velocities.speeds[k];
            const std::size_t up = v > 0 ? (i + nx - 1) % nx : (i + 1) % nx;
            const double D = sig.pathwise_derivative(g.x.center(i), v, 0.0);
            for (std::size_t j = 0; j < ny; ++j) {
                L(id(i, k, j), id(i, k, j)) -= std::abs(v) / dx;
                L(id(i, k, j), id(up, k, j)) += std::abs(v) / dx;
                const double lam = pw.Lambda(g.y.center(j));
                for (std::size_t kk = 0; kk < nv; ++kk) L(id(i, k, j), id(i, kk, j)) += lam * g.velocities.probability(kk);
                L(id(i, k, j), id(i, k, j)) -= lam;
            }
            for (std::size_t f = 1; f < ny; ++f) {
                const double yf = g.y.face(f);
                const double a = -(D + yf * pw.G(eps * yf)) / eps;
                double fin, fout;  // flux through the face = fin q[f-1] - fout q[f]
                if (pw.noise_enabled()) {
                    const double d = 1.0 / (eps * (g.y.center(f) - g.y.center(f - 1)));
                    fin = d * B(-a / d);
                    fout = d * B(a / d);
                } else {
                    fin = std::max(a, 0.0);
                    fout = std::max(-a, 0.0);
                }
                const double hl = g.y.width(f - 1), hr = g.y.width(f);
                L(id(i, k, f - 1), id(i, k, f - 1)) -= fin / hl;
                L(id(i, k, f - 1), id(i, k, f)) += fout / hl;
                L(id(i, k, f), id(i, k, f - 1)) += fin / hr;
                L(id(i, k, f), id(i, k, f)) -= fout / hr;
            }
        }
    return L;
}

struct OracleResult {
    double relative_error = 0.0;   // |q_split - q_exact| / |q_exact|
    double relative_change = 0.0;  // |q_exact - q0| / |q_exact|
};

// Runs `steps` steps of size dt and compares with exp(steps dt L) q0.
inline OracleResult compare_with_oracle(const FullSolver& fs, FullKineticState s, double dt, int steps) {
    const auto n = static_cast<Eigen::Index>(s.q.size());
    const Eigen::VectorXd q0 = Eigen::Map<const Eigen::VectorXd>(s.q.data(), n);
    const Eigen::MatrixXd L = dense_generator(fs);
    for (int k = 0; k < steps; ++k) fs.step(s, dt);
    const Eigen::VectorXd exact = (L * (dt * steps)).exp() * q0;
    const Eigen::VectorXd split = Eigen::Map<const Eigen::VectorXd>(s.q.data(), n);
    return {(split - exact).norm() / exact.norm(), (exact - q0).norm() / exact.norm()};
}

}  // namespace rtchemo::oracle
