#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "pdnsense/common.hpp"
#include "pdnsense/network.hpp"
#include "pdnsense/solver.hpp"

using namespace pdnsense;

namespace {

PdnNetwork series_fixture(double r, double l, double c, NodeId& top) {
    PdnNetwork net;
    top = net.add_node(Region::board(), "top");
    const NodeId m1 = net.add_node(Region::board());
    const NodeId m2 = net.add_node(Region::board());
    net.add_element(ElementKind::Resistor, r, top, m1);
    net.add_element(ElementKind::Inductor, l, m1, m2);
    net.add_element(ElementKind::Capacitor, c, m2, kGround);
    return net;
}

}  // namespace

TEST(Solver, ResistorIsFlat) {
    PdnNetwork net;
    const NodeId n = net.add_node(Region::board());
    net.add_element(ElementKind::Resistor, 1.0, n, kGround);
    const auto prof = solve_impedance(net, n, n, log_space(1e3, 1e9, 25));
    for (const auto& z : prof.pairs[0].values) EXPECT_NEAR(std::abs(z), 1.0, 1e-12);
}

TEST(Solver, SeriesRlcMatchesClosedForm) {
    NodeId top;
    const auto net = series_fixture(0.1, 1e-9, 1e-6, top);
    const auto freqs = log_space(1e3, 1e10, 100);
    const auto prof = solve_impedance(net, top, top, freqs);
    for (std::size_t i = 0; i < freqs.size(); ++i)
        EXPECT_LE(oracle::rel_err(prof.pairs[0].values[i], oracle::series_rlc(0.1, 1e-9, 1e-6, freqs[i])), 1e-9);
}

TEST(Solver, SeriesRlcMinimumAtResonance) {
    NodeId top;
    const auto net = series_fixture(0.1, 1e-9, 1e-6, top);
    const double f0 = 1.0 / (2.0 * oracle::kPi * std::sqrt(1e-9 * 1e-6));
    EXPECT_NEAR(f0, 5.033e6, 1e3);
    const auto prof = solve_impedance(net, top, top, {0.9 * f0, f0, 1.1 * f0});
    EXPECT_NEAR(std::abs(prof.pairs[0].values[1]), 0.1, 1e-9);
    EXPECT_GT(std::abs(prof.pairs[0].values[0]), 0.1);
    EXPECT_GT(std::abs(prof.pairs[0].values[2]), 0.1);
}

TEST(Solver, ParallelRlcMatchesClosedForm) {
    PdnNetwork net;
    const NodeId n = net.add_node(Region::board());
    net.add_element(ElementKind::Resistor, 2.0, n, kGround);
    net.add_element(ElementKind::Inductor, 3e-9, n, kGround);
    net.add_element(ElementKind::Capacitor, 4e-9, n, kGround);
    const auto freqs = log_space(1e4, 1e10, 100);
    const auto prof = solve_impedance(net, n, n, freqs);
    for (std::size_t i = 0; i < freqs.size(); ++i)
        EXPECT_LE(oracle::rel_err(prof.pairs[0].values[i], oracle::parallel_rlc(2.0, 3e-9, 4e-9, freqs[i])), 1e-9);
}

TEST(Solver, RandomLaddersMatchDenseInverse) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto freqs = log_space(1e4, 1e9, 100);
    for (int trial = 0; trial < 20; ++trial) {
        PdnNetwork net;
        std::vector<oracle::Branch> br;
        std::vector<NodeId> ids{kGround};
        for (int i = 1; i <= 6; ++i) ids.push_back(net.add_node(Region::board()));
        const auto add = [&](int a, int b, char kind, double v) {
            br.push_back({a, b, kind, v});
            const ElementKind k = kind == 'R' ? ElementKind::Resistor
                                  : kind == 'L' ? ElementKind::Inductor
                                                : ElementKind::Capacitor;
            net.add_element(k, v, ids[a], ids[b]);
        };
        for (int i = 1; i <= 6; ++i) {
            add(i - 1, i, 'R', 0.01 + u(rng));
            add(i - 1, i, 'L', 1e-9 * (0.1 + u(rng)));
            add(i, 0, 'C', 1e-9 * (0.1 + 10.0 * u(rng)));
            add(i, 0, 'R', 10.0 + 100.0 * u(rng));
        }
        AdmittanceSolver solver(net);
        const std::vector<NodeId> all(ids.begin() + 1, ids.end());
        for (double f : freqs) {
            const auto z = solver.transfer(f, all, all);
            const auto inv = oracle::invert(oracle::admittance(7, br, f));
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) ASSERT_LE(oracle::rel_err(z(i, j), inv[i][j]), 1e-9);
        }
    }
}

TEST(Solver, ReferenceIsPassiveAndReciprocal) {
    const auto net = build_reference_network(NetworkConfig::reference());
    AdmittanceSolver solver(net);
    const NodeId a = probe_node(net, 0);
    const NodeId b = probe_node(net, 2);
    const NodeId c = net.site(1);
    for (double f : log_space(1e4, 5e9, 40)) {
        const auto z = solver.transfer(f, {a, b, c}, {a, b, c});
        for (int i = 0; i < 3; ++i) {
            EXPECT_GE(z(i, i).real(), 0.0) << f;
            for (int j = 0; j < 3; ++j) EXPECT_LE(std::abs(z(i, j) - z(j, i)), 1e-9 * std::abs(z(i, j)));
        }
    }
}

TEST(Solver, BulkCapacitorDominatesLowFrequencies) {
    auto cfg = NetworkConfig::reference();
    const auto base = build_reference_network(cfg);
    cfg.bulk.clear();
    const auto nobulk = build_reference_network(cfg);
    const NodeId p0 = probe_node(base, 0);
    const NodeId p1 = probe_node(nobulk, 0);
    EXPECT_EQ(base.name(p0), nobulk.name(p1));
    const auto freqs = log_space(10e3, 5e9, 60);
    const auto z0 = solve_impedance(base, p0, p0, freqs).pairs[0].values;
    const auto z1 = solve_impedance(nobulk, p1, p1, freqs).pairs[0].values;
    const auto rel = [&](std::size_t i) { return std::abs(std::abs(z1[i]) - std::abs(z0[i])) / std::abs(z0[i]); };
    EXPECT_GE(rel(0), 10.0 * rel(freqs.size() - 1));
}

TEST(Solver, AddedChipletCapacitanceIsVisible) {
    const auto base = build_reference_network(NetworkConfig::reference());
    const auto freqs = log_space(10e3, 5e9, 40);
    for (int k = 0; k < base.chiplet_count(); ++k) {
        const auto& mesh = base.die_nodes(k);
        for (std::size_t i = 0; i < mesh.size(); i += 5) {
            PdnNetwork mod = base;
            mod.add_element(ElementKind::Capacitor, 1e-9, mesh[i], kGround);
            const auto z0 = solve_impedance(base, mesh[i], mesh[i], freqs).pairs[0].values;
            const auto z1 = solve_impedance(mod, mesh[i], mesh[i], freqs).pairs[0].values;
            double dmax = 0.0;
            for (std::size_t fi = 0; fi < freqs.size(); ++fi)
                dmax = std::max(dmax, std::abs(std::abs(z1[fi]) - std::abs(z0[fi])));
            EXPECT_GT(dmax, 0.0);
        }
    }
}

TEST(Solver, FloatingNodeRaisesSolveError) {
    PdnNetwork net;
    const NodeId a = net.add_node(Region::board());
    const NodeId b = net.add_node(Region::board());
    net.add_element(ElementKind::Resistor, 1.0, a, kGround);
    (void)b;
    try {
        solve_impedance(net, a, a, {1e6});
        FAIL() << "expected SolveError";
    } catch (const SolveError& e) {
        EXPECT_EQ(e.code(), ErrorCode::SolveFailure);
        EXPECT_DOUBLE_EQ(e.frequency(), 1e6);
    }
}

TEST(Solver, CurrentSourceIsExcitationOnly) {
    PdnNetwork net;
    const NodeId n = net.add_node(Region::board());
    net.add_element(ElementKind::Resistor, 2.0, n, kGround);
    net.add_element(ElementKind::CurrentSource, 0.5, n, kGround);
    AdmittanceSolver solver(net);
    EXPECT_EQ(solver.admittance(1e6).rows(), 1);
    EXPECT_NEAR(std::abs(solver.admittance(1e6)(0, 0) - 0.5), 0.0, 1e-15);
    const auto v = solver.node_voltages(1e6);
    EXPECT_NEAR(v(n.value).real(), 1.0, 1e-12);
}

TEST(Solver, LogSpace) {
    const auto f = log_space(1.0, 100.0, 3);
    ASSERT_EQ(f.size(), 3u);
    EXPECT_DOUBLE_EQ(f[0], 1.0);
    EXPECT_NEAR(f[1], 10.0, 1e-12);
    EXPECT_DOUBLE_EQ(f[2], 100.0);
    EXPECT_NEAR(log_space(1.0, 100.0, 1)[0], 10.0, 1e-12);
}

TEST(Solver, ProfileCsvHeader) {
    NodeId top;
    const auto net = series_fixture(0.1, 1e-9, 1e-6, top);
    std::ostringstream os;
    solve_impedance(net, top, top, {1e6, 2e6}).write_csv(os);
    const std::string s = os.str();
    EXPECT_EQ(s.rfind("# pdnsense-profile v1\nfrequency_hz,re_ohm,im_ohm,source,observe\n", 0), 0u);
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 4);
}

TEST(Solver, ResonantBandBracketsPeak) {
    const auto net = build_reference_network(NetworkConfig::reference());
    const NodeId p = probe_node(net, 0);
    const double f0 = dominant_resonance(net, p);
    const auto band = resonant_band(net, 64);
    ASSERT_EQ(band.size(), 64u);
    EXPECT_NEAR(band.front(), 0.96 * f0, 1e-6 * f0);
    EXPECT_NEAR(band.back(), 1.04 * f0, 1e-6 * f0);
    const auto z = solve_impedance(net, p, p, {0.8 * f0, f0, 1.2 * f0}).pairs[0].values;
    EXPECT_GT(std::abs(z[1]), std::abs(z[0]));
    EXPECT_GT(std::abs(z[1]), std::abs(z[2]));
}
