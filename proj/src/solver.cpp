#include "pdnsense/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "pdnsense/common.hpp"

namespace pdnsense {

const ImpedanceProfile::Pair& ImpedanceProfile::pair(NodeId source, NodeId observe) const {
    for (const auto& p : pairs)
        if (p.source == source && p.observe == observe) return p;
    throw Error(ErrorCode::InvalidArgument, "no such (source, observe) pair in profile");
}

void ImpedanceProfile::validate() const {
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
        if (!(frequencies[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "frequencies must be positive", "freqs");
        if (i > 0 && !(frequencies[i] > frequencies[i - 1]))
            throw Error(ErrorCode::InvalidArgument, "frequencies must be strictly increasing", "freqs");
    }
    for (const auto& p : pairs) {
        if (p.values.size() != frequencies.size())
            throw Error(ErrorCode::InvalidArgument, "profile pair length does not match frequency count");
        for (const auto& z : p.values)
            if (!std::isfinite(std::abs(z))) throw Error(ErrorCode::SolveFailure, "non-finite impedance in profile");
    }
}

void ImpedanceProfile::write_csv(std::ostream& os) const {
    os << "# pdnsense-profile v1\n";
    os << "frequency_hz,re_ohm,im_ohm,source,observe\n";
    const auto old = os.precision(17);
    for (const auto& p : pairs) {
        for (std::size_t i = 0; i < frequencies.size(); ++i) {
            os << frequencies[i] << ',' << p.values[i].real() << ',' << p.values[i].imag() << ',' << p.source.value
               << ',' << p.observe.value << '\n';
        }
    }
    os.precision(old);
}

AdmittanceSolver::AdmittanceSolver(const PdnNetwork& net, double max_condition)
    : nodes_(net.node_count()), max_condition_(max_condition) {
    const auto n = static_cast<int>(nodes_);
    for (const auto& e : net.elements()) {
        if (e.a.value < 0 || e.a.value >= n || e.b.value < 0 || e.b.value >= n)
            throw Error(ErrorCode::InvalidNetwork, "element references a node outside the network");
        if (e.kind == ElementKind::CurrentSource) {
            sources_.push_back(e);
            continue;
        }
        stamps_.push_back(Stamp{e.a.value - 1, e.b.value - 1, e.kind, e.value});
    }
}

Eigen::MatrixXcd AdmittanceSolver::admittance(double f) const {
    if (!(f > 0.0) || !std::isfinite(f)) throw SolveError(f, "frequency must be positive and finite");
    const auto m = static_cast<Eigen::Index>(nodes_ - 1);
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(m, m);
    const double w = 2.0 * std::numbers::pi * f;
    for (const auto& s : stamps_) {
        cplx g;
        switch (s.kind) {
            case ElementKind::Resistor: g = 1.0 / s.value; break;
            case ElementKind::Inductor: g = cplx(0.0, -1.0 / (w * s.value)); break;
            case ElementKind::Capacitor: g = cplx(0.0, w * s.value); break;
            default: continue;
        }
        if (s.a >= 0) y(s.a, s.a) += g;
        if (s.b >= 0) y(s.b, s.b) += g;
        if (s.a >= 0 && s.b >= 0) {
            y(s.a, s.b) -= g;
            y(s.b, s.a) -= g;
        }
    }
    return y;
}

Eigen::PartialPivLU<Eigen::MatrixXcd> AdmittanceSolver::factor(double f, Eigen::VectorXd& scale) const {
    if (nodes_ < 2) throw SolveError(f, "network has no non-ground nodes");
    Eigen::MatrixXcd y = admittance(f);
    const auto m = y.rows();
    scale.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double d = std::abs(y(i, i));
        if (!(d > 0.0) || !std::isfinite(d)) {
            std::ostringstream os;
            os << "node " << (i + 1) << " has no admittance path";
            throw SolveError(f, os.str());
        }
        scale(i) = 1.0 / std::sqrt(d);
    }
    y = scale.asDiagonal() * y * scale.asDiagonal();
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(y);
    const double rc = lu.rcond();
    if (!(rc * max_condition_ >= 1.0)) {
        std::ostringstream os;
        os << "admittance matrix is ill-conditioned (estimated condition " << (rc > 0 ? 1.0 / rc : INFINITY) << ")";
        throw SolveError(f, os.str());
    }
    return lu;
}

Eigen::MatrixXcd AdmittanceSolver::solve(double f, const Eigen::MatrixXcd& b) const {
    using lcplx = std::complex<long double>;
    Eigen::VectorXd scale;
    const auto lu = factor(f, scale);
    const Eigen::MatrixXcd s = scale.cast<cplx>().asDiagonal();
    Eigen::MatrixXcd x = s * lu.solve(s * b);
    const long double w = 2.0L * std::numbers::pi_v<long double> * static_cast<long double>(f);
    std::vector<lcplx> g(stamps_.size());
    for (std::size_t k = 0; k < stamps_.size(); ++k) {
        const long double v = stamps_[k].value;
        switch (stamps_[k].kind) {
            case ElementKind::Resistor: g[k] = 1.0L / v; break;
            case ElementKind::Inductor: g[k] = lcplx(0.0L, -1.0L / (w * v)); break;
            default: g[k] = lcplx(0.0L, w * v); break;
        }
    }
    const auto m = x.rows();
    std::vector<lcplx> r(static_cast<std::size_t>(m));
    Eigen::MatrixXcd res(m, b.cols());
    for (int step = 0; step < 2; ++step) {
        for (Eigen::Index c = 0; c < b.cols(); ++c) {
            for (Eigen::Index i = 0; i < m; ++i) r[static_cast<std::size_t>(i)] = lcplx(b(i, c));
            for (std::size_t k = 0; k < stamps_.size(); ++k) {
                const auto& st = stamps_[k];
                const lcplx va = st.a >= 0 ? lcplx(x(st.a, c)) : lcplx(0.0L);
                const lcplx vb = st.b >= 0 ? lcplx(x(st.b, c)) : lcplx(0.0L);
                const lcplx i_ab = g[k] * (va - vb);
                if (st.a >= 0) r[static_cast<std::size_t>(st.a)] -= i_ab;
                if (st.b >= 0) r[static_cast<std::size_t>(st.b)] += i_ab;
            }
            for (Eigen::Index i = 0; i < m; ++i) res(i, c) = cplx(r[static_cast<std::size_t>(i)]);
        }
        x += s * lu.solve(s * res);
    }
    return x;
}

Eigen::MatrixXcd AdmittanceSolver::transfer(double f, const std::vector<NodeId>& sources,
                                            const std::vector<NodeId>& observes) const {
    const auto check = [&](NodeId id) {
        if (id.value <= 0 || static_cast<std::size_t>(id.value) >= nodes_)
            throw Error(ErrorCode::InvalidArgument, "source and observe must be non-ground nodes of the network",
                        "node");
    };
    for (NodeId s : sources) check(s);
    for (NodeId o : observes) check(o);
    const auto m = static_cast<Eigen::Index>(nodes_ - 1);
    Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(m, static_cast<Eigen::Index>(sources.size()));
    for (std::size_t j = 0; j < sources.size(); ++j) rhs(sources[j].value - 1, static_cast<Eigen::Index>(j)) = 1.0;
    const Eigen::MatrixXcd x = solve(f, rhs);
    Eigen::MatrixXcd z(static_cast<Eigen::Index>(observes.size()), static_cast<Eigen::Index>(sources.size()));
    for (std::size_t i = 0; i < observes.size(); ++i) z.row(static_cast<Eigen::Index>(i)) = x.row(observes[i].value - 1);
    if (!z.allFinite()) throw SolveError(f, "non-finite transfer impedance");
    return z;
}

Eigen::VectorXcd AdmittanceSolver::node_voltages(double f) const {
    const auto m = static_cast<Eigen::Index>(nodes_ - 1);
    Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(m, 1);
    for (const auto& s : sources_) {
        if (s.a.value > 0) rhs(s.a.value - 1, 0) += s.value;
        if (s.b.value > 0) rhs(s.b.value - 1, 0) -= s.value;
    }
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(m + 1);
    v.tail(m) = solve(f, rhs).col(0);
    return v;
}

ImpedanceProfile solve_impedance(const PdnNetwork& net, NodeId source, NodeId observe,
                                 const std::vector<double>& freqs) {
    ImpedanceProfile profile;
    profile.frequencies = freqs;
    for (double f : freqs)
        if (!(f > 0.0)) throw Error(ErrorCode::InvalidArgument, "frequencies must be positive", "freqs");
    const AdmittanceSolver solver(net);
    ImpedanceProfile::Pair p{source, observe, {}};
    p.values.resize(freqs.size());
    parallel_for(freqs.size(), [&](std::size_t i) { p.values[i] = solver.transfer(freqs[i], {source}, {observe})(0, 0); });
    profile.pairs.push_back(std::move(p));
    return profile;
}

std::vector<double> log_space(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi >= lo)) throw Error(ErrorCode::InvalidArgument, "log_space needs 0 < lo <= hi");
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = std::sqrt(lo * hi);
        return out;
    }
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    if (n > 0) {
        out.front() = lo;
        out.back() = hi;
    }
    return out;
}

NodeId probe_node(const PdnNetwork& net, int chiplet) {
    const auto& nodes = net.die_nodes(chiplet);
    // Recover the mesh shape from the row-major node list via its wiring.
    std::size_t cols = nodes.size();
    for (const auto& e : net.elements()) {
        if (e.kind != ElementKind::Resistor) continue;
        const auto ia = std::find(nodes.begin(), nodes.end(), e.a);
        const auto ib = std::find(nodes.begin(), nodes.end(), e.b);
        if (ia == nodes.end() || ib == nodes.end()) continue;
        const auto step = static_cast<std::size_t>(std::abs(ib - ia));
        if (step > 1) cols = std::min(cols, step);
    }
    const std::size_t rows = (nodes.size() + cols - 1) / cols;
    const std::size_t idx = ((rows - 1) / 2) * cols + cols / 2;
    return nodes[std::min(idx, nodes.size() - 1)];
}

double dominant_resonance(const PdnNetwork& net, NodeId node, double lo, double hi, std::size_t coarse_points) {
    const AdmittanceSolver solver(net);
    const auto mag = [&](double f) { return std::abs(solver.transfer(f, {node}, {node})(0, 0)); };
    const auto grid = log_space(lo, hi, std::max<std::size_t>(coarse_points, 3));
    std::vector<double> z(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) { z[i] = mag(grid[i]); });
    const auto best = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    double a = std::log(grid[best == 0 ? 0 : best - 1]);
    double b = std::log(grid[std::min(best + 1, grid.size() - 1)]);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double zc = mag(std::exp(c));
    double zd = mag(std::exp(d));
    for (int it = 0; it < 60 && (b - a) > 1e-9; ++it) {
        if (zc > zd) {
            b = d;
            d = c;
            zd = zc;
            c = b - phi * (b - a);
            zc = mag(std::exp(c));
        } else {
            a = c;
            c = d;
            zc = zd;
            d = a + phi * (b - a);
            zd = mag(std::exp(d));
        }
    }
    const double refined = std::exp(0.5 * (a + b));
    return mag(refined) >= z[best] ? refined : grid[best];
}

std::vector<double> resonant_band(const PdnNetwork& net, std::size_t count, double half_width) {
    if (count == 0) throw Error(ErrorCode::InvalidArgument, "band size must be at least 1", "count");
    if (!(half_width > 0.0 && half_width < 1.0))
        throw Error(ErrorCode::InvalidArgument, "band half width must lie in (0, 1)", "half_width");
    const double f0 = dominant_resonance(net, probe_node(net, 0));
    if (count == 1) return {f0};
    return log_space(f0 * (1.0 - half_width), f0 * (1.0 + half_width), count);
}

}  // namespace pdnsense
