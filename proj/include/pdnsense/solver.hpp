#pragma once

#include <complex>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "pdnsense/network.hpp"

namespace pdnsense {

using cplx = std::complex<double>;

/// Transfer impedance samples for one or more (source, observe) pairs.
struct ImpedanceProfile {
    struct Pair {
        NodeId source;
        NodeId observe;
        std::vector<cplx> values;  // one per frequency
    };

    std::vector<double> frequencies;
    std::vector<Pair> pairs;

    const Pair& pair(NodeId source, NodeId observe) const;
    /// Checks frequency ordering, per-pair length and finiteness.
    void validate() const;
    /// Columns: frequency_hz, re_ohm, im_ohm, source, observe.
    void write_csv(std::ostream& os) const;
};

/// Complex nodal analysis of a PdnNetwork. Holds the element stamps; each
/// call factorizes the reduced admittance matrix at one frequency. Current
/// sources are treated as excitation only and never enter the matrix.
class AdmittanceSolver {
public:
    explicit AdmittanceSolver(const PdnNetwork& net, double max_condition = 1e12);

    /// Reduced admittance matrix (ground row/column removed) at f.
    Eigen::MatrixXcd admittance(double frequency_hz) const;

    /// Z(i, j) = V(observes[i]) / I(sources[j]) for unit current injected at
    /// sources[j] and returned through ground. Throws SolveError.
    Eigen::MatrixXcd transfer(double frequency_hz, const std::vector<NodeId>& sources,
                              const std::vector<NodeId>& observes) const;

    /// Node voltages (phasors) driven by the network's current sources; index
    /// 0 is ground and always zero.
    Eigen::VectorXcd node_voltages(double frequency_hz) const;

    std::size_t node_count() const { return nodes_; }

private:
    struct Stamp {
        int a;  // -1 for ground
        int b;
        ElementKind kind;
        double value;
    };

    Eigen::PartialPivLU<Eigen::MatrixXcd> factor(double frequency_hz, Eigen::VectorXd& scale) const;
    /// Solves Y x = b, then refines x against a residual accumulated in
    /// extended precision from the element stamps.
    Eigen::MatrixXcd solve(double frequency_hz, const Eigen::MatrixXcd& b) const;

    std::size_t nodes_;
    std::vector<Stamp> stamps_;
    std::vector<Element> sources_;
    double max_condition_;
};

ImpedanceProfile solve_impedance(const PdnNetwork& net, NodeId source, NodeId observe,
                                 const std::vector<double>& freqs);

/// Logarithmically spaced points, inclusive of both ends. n == 1 gives the
/// geometric midpoint.
std::vector<double> log_space(double lo, double hi, std::size_t n);

/// Verifier-side probe node used for band selection: the mesh node nearest
/// the centre of chiplet `k`.
NodeId probe_node(const PdnNetwork& net, int chiplet = 0);

/// Frequency of the largest driving-point |Z| at `node` over [lo, hi].
/// Coarse log scan followed by golden-section refinement.
double dominant_resonance(const PdnNetwork& net, NodeId node, double lo = 10e6, double hi = 5e9,
                          std::size_t coarse_points = 200);

/// `count` log-spaced frequencies over [(1-w)f0, (1+w)f0] around the dominant
/// resonance at the verifier probe node.
std::vector<double> resonant_band(const PdnNetwork& net, std::size_t count = 64, double half_width = 0.04);

}  // namespace pdnsense
