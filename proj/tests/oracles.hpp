#pragma once

// Independent reference implementations used as test oracles. None of these
// share code with the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using Matrix = std::vector<std::vector<cplx>>;

inline constexpr double kPi = 3.14159265358979323846;

inline cplx series_rlc(double r, double l, double c, double f) {
    const double w = 2.0 * kPi * f;
    return cplx(r, w * l - 1.0 / (w * c));
}

inline cplx parallel_rlc(double r, double l, double c, double f) {
    const double w = 2.0 * kPi * f;
    return 1.0 / cplx(1.0 / r, w * c - 1.0 / (w * l));
}

/// Gauss-Jordan inverse with full pivoting.
inline Matrix invert(Matrix a) {
    const std::size_t n = a.size();
    Matrix inv(n, std::vector<cplx>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) == 0.0) throw std::runtime_error("singular");
        std::swap(a[piv], a[col]);
        std::swap(inv[piv], inv[col]);
        const cplx d = a[col][col];
        for (std::size_t k = 0; k < n; ++k) {
            a[col][k] /= d;
            inv[col][k] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const cplx m = a[r][col];
            if (m == 0.0) continue;
            for (std::size_t k = 0; k < n; ++k) {
                a[r][k] -= m * a[col][k];
                inv[r][k] -= m * inv[col][k];
            }
        }
    }
    return inv;
}

struct Branch {
    int a;  // 0 is ground
    int b;
    char kind;  // 'R', 'L', 'C'
    double value;
};

/// Reduced nodal admittance matrix for nodes 1..n-1.
inline Matrix admittance(int nodes, const std::vector<Branch>& branches, double f) {
    const double w = 2.0 * kPi * f;
    Matrix y(nodes - 1, std::vector<cplx>(nodes - 1, 0.0));
    for (const auto& br : branches) {
        cplx g;
        if (br.kind == 'R') g = 1.0 / br.value;
        else if (br.kind == 'L') g = 1.0 / cplx(0.0, w * br.value);
        else g = cplx(0.0, w * br.value);
        const int i = br.a - 1;
        const int j = br.b - 1;
        if (i >= 0) y[i][i] += g;
        if (j >= 0) y[j][j] += g;
        if (i >= 0 && j >= 0) {
            y[i][j] -= g;
            y[j][i] -= g;
        }
    }
    return y;
}

inline double rel_err(cplx got, cplx want) { return std::abs(got - want) / std::abs(want); }

/// W_p between equal-size samples via the sorted coupling.
inline double sorted_coupling(std::vector<double> x, std::vector<double> y, int p) {
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += std::pow(std::abs(x[i] - y[i]), p);
    return std::pow(acc / static_cast<double>(x.size()), 1.0 / p);
}

/// Minimum over every pairing of x with y (brute force, small n).
inline double best_matching(const std::vector<double>& x, std::vector<double> y, int p) {
    std::sort(y.begin(), y.end());
    double best = INFINITY;
    do {
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) acc += std::pow(std::abs(x[i] - y[i]), p);
        best = std::min(best, acc);
    } while (std::next_permutation(y.begin(), y.end()));
    return std::pow(best / static_cast<double>(x.size()), 1.0 / p);
}

inline double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace oracle
