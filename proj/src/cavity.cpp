#include "pdnsense/cavity.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "pdnsense/common.hpp"
#include "pdnsense/solver.hpp"

namespace pdnsense {

void CavityGeometry::validate() const {
    const auto pos = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!pos(a) || !pos(b) || !pos(d))
        throw Error(ErrorCode::InvalidArgument, "cavity dimensions must be positive", "geometry");
    if (!pos(mu) || !pos(epsilon))
        throw Error(ErrorCode::InvalidArgument, "cavity permeability and permittivity must be positive", "geometry");
}

double cavity_frequency(const CavityGeometry& g, int m, int n, int p) {
    g.validate();
    if (m < 0 || n < 0 || p < 0) throw Error(ErrorCode::InvalidArgument, "mode integers must be non-negative", "mode");
    const double pi = std::acos(-1.0);
    const double km = m * pi / g.a;
    const double kn = n * pi / g.b;
    const double kp = p * pi / g.d;
    return std::sqrt(km * km + kn * kn + kp * kp) / (2.0 * pi * std::sqrt(g.mu * g.epsilon));
}

std::vector<CavityMode> cavity_resonances(const CavityGeometry& geom, int max_mode) {
    geom.validate();
    if (max_mode < 0) throw Error(ErrorCode::InvalidArgument, "max_mode must be non-negative", "max_mode");
    std::vector<CavityMode> out;
    for (int m = 0; m <= max_mode; ++m)
        for (int n = 0; n <= max_mode; ++n)
            for (int p = 0; p <= max_mode; ++p) out.push_back({{m, n, p}, cavity_frequency(geom, m, n, p)});
    std::sort(out.begin(), out.end(), [](const CavityMode& x, const CavityMode& y) {
        return std::tie(x.frequency_hz, x.mnp) < std::tie(y.frequency_hz, y.mnp);
    });
    return out;
}

std::vector<double> suggest_sweep_band(const CavityGeometry& geom, int count, const SweepBandOptions& opts) {
    if (count < 1) throw Error(ErrorCode::InvalidArgument, "count must be at least 1", "count");
    if (opts.windows < 1) throw Error(ErrorCode::InvalidArgument, "windows must be at least 1", "windows");
    if (!(opts.half_width > 0.0 && opts.half_width < 1.0))
        throw Error(ErrorCode::InvalidArgument, "half_width must lie in (0, 1)", "half_width");

    std::vector<double> centers;
    for (const auto& mode : cavity_resonances(geom, opts.max_mode)) {
        const double f = mode.frequency_hz;
        if (!(f > 0.0) || f > opts.cap_hz) continue;
        if (!centers.empty() && std::abs(f - centers.back()) <= 1e-12 * f) continue;
        centers.push_back(f);
        if (static_cast<int>(centers.size()) == opts.windows) break;
    }
    if (centers.empty())
        throw Error(ErrorCode::InvalidArgument, "geometry has no nonzero resonance below the frequency cap", "geometry");

    const auto w = static_cast<int>(centers.size());
    std::vector<double> out;
    for (int i = 0; i < w; ++i) {
        const int k = count / w + (i < count % w ? 1 : 0);
        if (k == 0) continue;
        const double r = centers[static_cast<std::size_t>(i)];
        if (k == 1) {
            out.push_back(r);
            continue;
        }
        const auto pts = log_space(r * (1.0 - opts.half_width), r * (1.0 + opts.half_width), static_cast<std::size_t>(k));
        out.insert(out.end(), pts.begin(), pts.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace pdnsense
