#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "rtchemo/errors.hpp"

namespace rtchemo {

enum class ProfileSource { Agents, Full, Limit };

inline std::string_view to_string(ProfileSource s) {
    switch (s) {
        case ProfileSource::Agents: return "agents";
        case ProfileSource::Full: return "full";
        case ProfileSource::Limit: return "limit";
    }
    return "?";
}

inline ProfileSource profile_source_from_string(std::string_view s) {
    if (s == "agents") return ProfileSource::Agents;
    if (s == "full") return ProfileSource::Full;
    if (s == "limit") return ProfileSource::Limit;
    throw DomainError("unknown profile source '" + std::string(s) + "'");
}

// Density rho = sum_v w_v p and flux J = sum_v w_v v p per x-cell.
struct ProfileRecord {
    double t = 0.0;
    double dx = 0.0;
    std::vector<double> rho;
    std::vector<double> J;
    double mass = 0.0;
    ProfileSource source = ProfileSource::Limit;

    std::size_t size() const { return rho.size(); }
    double length() const { return dx * static_cast<double>(rho.size()); }
    double x_center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * dx; }
};

}  // namespace rtchemo
