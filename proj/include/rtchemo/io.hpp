#pragma once

// CSV/JSON output. Numbers are written with 17 significant digits so that
// identical runs give identical bytes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtchemo/diagnostics.hpp"
#include "rtchemo/errors.hpp"
#include "rtchemo/profile.hpp"

namespace rtchemo {

namespace fs = std::filesystem;

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Files created by a run; removed again unless commit() is called.
class OutputTracker {
public:
    explicit OutputTracker(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        created_dir_ = !fs::exists(dir_, ec);
        fs::create_directories(dir_, ec);
        if (ec) throw std::runtime_error("cannot create output directory '" + dir_.string() + "': " + ec.message());
    }
    OutputTracker(const OutputTracker&) = delete;
    OutputTracker& operator=(const OutputTracker&) = delete;

    ~OutputTracker() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& f : files_) fs::remove(f, ec);
        if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
    }

    fs::path file(const std::string& name) {
        fs::path p = dir_ / name;
        files_.push_back(p);
        return p;
    }

    void commit() { committed_ = true; }
    const fs::path& dir() const { return dir_; }
    const std::vector<fs::path>& files() const { return files_; }

private:
    fs::path dir_;
    std::vector<fs::path> files_;
    bool created_dir_ = false;
    bool committed_ = false;
};

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline void write_json(const fs::path& path, const nlohmann::ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

// Long format: one row per (snapshot, cell).
inline std::string profiles_csv(const std::vector<ProfileRecord>& snaps) {
    std::ostringstream os;
    os << "t,x,rho,J\n";
    for (const auto& p : snaps)
        for (std::size_t i = 0; i < p.size(); ++i)
            os << fmt(p.t) << ',' << fmt(p.x_center(i)) << ',' << fmt(p.rho[i]) << ',' << fmt(p.J[i]) << '\n';
    return os.str();
}

// Last snapshot of a long-format profile CSV.
inline ProfileRecord read_profile_csv(const fs::path& path, ProfileSource source) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::string line;
    std::getline(in, line);
    if (line != "t,x,rho,J") throw std::runtime_error("'" + path.string() + "' is not a profile CSV");
    ProfileRecord r;
    r.source = source;
    std::vector<double> xs;
    double t_cur = 0.0;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double t, x, rho, J;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &t, &x, &rho, &J) != 4)
            throw std::runtime_error("bad row in '" + path.string() + "': " + line);
        if (first || t != t_cur) {
            r.rho.clear();
            r.J.clear();
            xs.clear();
            t_cur = t;
            first = false;
        }
        xs.push_back(x);
        r.rho.push_back(rho);
        r.J.push_back(J);
    }
    if (r.rho.empty()) throw std::runtime_error("'" + path.string() + "' has no rows");
    r.t = t_cur;
    r.dx = 2.0 * xs.front();
    double mass = 0.0;
    for (double v : r.rho) mass += v * r.dx;
    r.mass = mass;
    return r;
}

inline std::string y_profile_csv(const FullSolver& solver, const FullKineticState& s) {
    const auto prof = y_mass_profile(solver, s);
    const auto& y = solver.grid().y;
    std::ostringstream os;
    os << "y,density\n";
    for (std::size_t j = 0; j < prof.size(); ++j) os << fmt(y.center(j)) << ',' << fmt(prof[j] / y.width(j)) << '\n';
    return os.str();
}

inline std::string concentration_csv(const std::vector<ConcentrationRecord>& recs) {
    std::ostringstream os;
    os << "t,y_mean,y_variance,second_moment,linf_marginal\n";
    for (const auto& c : recs)
        os << fmt(c.t) << ',' << fmt(c.y_mean) << ',' << fmt(c.y_variance) << ',' << fmt(c.second_moment) << ','
           << fmt(c.linf_marginal) << '\n';
    return os.str();
}

inline std::string convergence_csv(const ConvergenceResult& r) {
    std::ostringstream os;
    os << "epsilon,l1_rho,l1_J,second_moment_max,y_variance_final\n";
    for (const auto& row : r.rows)
        os << fmt(row.epsilon) << ',' << fmt(row.l1_rho) << ',' << fmt(row.l1_J) << ',' << fmt(row.second_moment_max)
           << ',' << fmt(row.y_variance_final) << '\n';
    return os.str();
}

inline nlohmann::ordered_json convergence_verdict(const ConvergenceResult& r) {
    nlohmann::ordered_json j;
    j["verdict"] = r.pass() ? "PASS" : "FAIL";
    j["strictly_decreasing"] = r.strictly_decreasing;
    j["final_below_half"] = r.final_below_half;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"epsilon", row.epsilon},
                        {"l1_rho", row.l1_rho},
                        {"mass_drift_per_1000_steps", row.mass_drift_per_1000_steps},
                        {"second_moment_initial", row.second_moment_initial},
                        {"linf_growth_rate", row.linf_growth_rate},
                        {"steps", row.steps}});
    j["runs"] = rows;
    return j;
}

inline std::string agents_csv(const AgentSimulator& sim, const AgentPopulation& pop) {
    const auto y = sim.y_values(pop);
    std::ostringstream os;
    os << "id,x,v,m,y\n";
    for (std::size_t n = 0; n < pop.count(); ++n) {
        const Agent& a = pop.agents[n];
        os << n << ',' << fmt(a.x) << ',' << fmt(sim.velocities().speeds[a.k]) << ',' << fmt(a.m) << ',' << fmt(y[n])
           << '\n';
    }
    return os.str();
}

}  // namespace rtchemo
