#pragma once

#include <array>
#include <limits>
#include <vector>

namespace pdnsense {

inline constexpr double kMu0 = 1.25663706212e-6;
inline constexpr double kEpsilon0 = 8.8541878128e-12;

/// Rectangular cavity of cross-section a x b and length d (metres).
struct CavityGeometry {
    double a = 0.1;
    double b = 0.1;
    double d = 0.1;
    double mu = kMu0;
    double epsilon = kEpsilon0;

    void validate() const;
};

struct CavityMode {
    std::array<int, 3> mnp{0, 0, 0};
    double frequency_hz = 0.0;
};

/// f_r = 1/(2 pi sqrt(mu eps)) * sqrt((m pi/a)^2 + (n pi/b)^2 + (p pi/d)^2)
double cavity_frequency(const CavityGeometry& geom, int m, int n, int p);

/// Every (m, n, p) with components in [0, max_mode], sorted ascending by
/// frequency (ties broken by mode triple).
std::vector<CavityMode> cavity_resonances(const CavityGeometry& geom, int max_mode);

struct SweepBandOptions {
    int windows = 2;                  // distinct lowest nonzero resonances used
    double half_width = 0.10;         // relative window half width
    double cap_hz = std::numeric_limits<double>::infinity();
    int max_mode = 4;
};

/// `count` frequencies spread round-robin over log-spaced windows
/// [(1-w)r, (1+w)r] around the lowest distinct nonzero resonances. A window
/// given a single point gets r itself. Sorted ascending.
std::vector<double> suggest_sweep_band(const CavityGeometry& geom, int count, const SweepBandOptions& opts = {});

}  // namespace pdnsense
