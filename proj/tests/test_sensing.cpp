#include <gtest/gtest.h>

#include <sstream>

#include "pdnsense/common.hpp"
#include "pdnsense/sensing.hpp"
#include "pdnsense/solver.hpp"
#include "pdnsense/tamper.hpp"

using namespace pdnsense;

namespace {

const PdnNetwork& ref() {
    static const PdnNetwork net = build_reference_network(NetworkConfig::reference());
    return net;
}

const std::vector<double>& band() {
    static const std::vector<double> b = resonant_band(ref(), 8);
    return b;
}

AcquisitionConfig quiet() {
    AcquisitionConfig cfg;
    cfg.sensor.noise_sigma = 0.0;
    return cfg;
}

}  // namespace

TEST(Sensing, ReadTdcHandExample) {
    SensorModel s;
    s.gain = 1000.0;
    s.noise_sigma = 0.0;
    s.base_code = 32;
    std::mt19937_64 rng(1);
    EXPECT_EQ(read_tdc(s, s.v_nominal + 5e-3, rng), 37);
    EXPECT_EQ(read_tdc(s, s.v_nominal, rng), 32);
    EXPECT_EQ(read_tdc(s, s.v_nominal - 10.0, rng), 0);
    EXPECT_EQ(read_tdc(s, s.v_nominal + 10.0, rng), 64);
}

TEST(Sensing, ReadTdcMonotoneWithoutNoise) {
    SensorModel s;
    s.gain = 500.0;
    s.noise_sigma = 0.0;
    std::mt19937_64 rng(2);
    int prev = -1;
    for (double v = 0.7; v <= 1.0; v += 1e-4) {
        const int c = read_tdc(s, v, rng);
        EXPECT_GE(c, prev);
        EXPECT_GE(c, 0);
        EXPECT_LE(c, s.taps);
        prev = c;
    }
}

TEST(Sensing, Calibrate) {
    const auto blocks = monitor_grid(ref());
    SensorModel s;
    s.base_code = 5;
    const auto a = calibrate(s, ref(), blocks[3]);
    const auto b = calibrate(s, ref(), blocks[3]);
    EXPECT_EQ(a.base_code, 32);
    EXPECT_EQ(a.v_nominal, b.v_nominal);
    EXPECT_EQ(a.base_code, b.base_code);
    auto q = a;
    q.noise_sigma = 0.0;
    std::mt19937_64 rng(3);
    EXPECT_EQ(read_tdc(q, q.v_nominal, rng), q.base_code);
}

TEST(Sensing, GridOnVerifier) {
    const auto blocks = monitor_grid(ref(), 32, 0);
    ASSERT_EQ(blocks.size(), 32u);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        EXPECT_EQ(blocks[i].id, static_cast<int>(i));
        EXPECT_EQ(ref().region(blocks[i].sensor_node), Region::die(0));
        EXPECT_EQ(ref().region(blocks[i].actuator_node), Region::die(0));
    }
}

TEST(Sensing, AcquireDeterministicAndInRange) {
    const auto blocks = monitor_grid(ref());
    const auto a = acquire(ref(), blocks, {1, 7}, {2, 9, 30}, band(), 50, 42);
    const auto b = acquire(ref(), blocks, {1, 7}, {2, 9, 30}, band(), 50, 42);
    EXPECT_EQ(a.samples, b.samples);
    for (const auto& cell : a.samples) {
        EXPECT_EQ(cell.size(), 50u);
        for (int c : cell) {
            EXPECT_GE(c, 0);
            EXPECT_LE(c, a.taps);
        }
    }
    const auto c = acquire(ref(), blocks, {1, 7}, {2, 9, 30}, band(), 50, 43);
    EXPECT_NE(a.samples, c.samples);
}

TEST(Sensing, CodeRangeUnderExtremeGain) {
    AcquisitionConfig cfg;
    cfg.sensor.gain = 1e5;
    const auto ts = acquire(ref(), monitor_grid(ref()), {0, 1, 2, 3}, {0, 5}, band(), 100, 7, cfg);
    bool saw_low = false;
    bool saw_high = false;
    for (const auto& cell : ts.samples)
        for (int c : cell) {
            ASSERT_GE(c, 0);
            ASSERT_LE(c, 64);
            saw_low |= c == 0;
            saw_high |= c == 64;
        }
    EXPECT_TRUE(saw_low && saw_high);
}

TEST(Sensing, SuperpositionOfTwinActuators) {
    auto blocks = monitor_grid(ref());
    blocks[1].actuator_node = blocks[0].actuator_node;
    const TransferTable table(ref(), blocks, band(), 1);
    const auto one = ripple_amplitudes(table, {0}, {4, 20}, ActuatorModel{});
    const auto two = ripple_amplitudes(table, {0, 1}, {4, 20}, ActuatorModel{});
    for (std::size_t i = 0; i < one.size(); ++i) EXPECT_NEAR(two[i], 2.0 * one[i], 1e-12 * one[i]);
}

TEST(Sensing, RippleLinearInCurrent) {
    const TransferTable table(ref(), monitor_grid(ref()), band(), 1);
    ActuatorModel a;
    ActuatorModel b;
    b.current_amplitude = 2.0 * a.current_amplitude;
    const auto x = ripple_amplitudes(table, {3, 11}, {0, 17, 31}, a);
    const auto y = ripple_amplitudes(table, {3, 11}, {0, 17, 31}, b);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], 2.0 * x[i], 1e-12 * x[i]);
}

TEST(Sensing, LocalCouplingBeatsDistantRegions) {
    const auto blocks = monitor_grid(ref());
    AdmittanceSolver solver(ref());
    std::vector<NodeId> distant;
    for (std::size_t i = 1; i < ref().node_count(); ++i) {
        const NodeId n{static_cast<int>(i)};
        const auto kind = ref().region(n).kind;
        if (kind == RegionKind::Package || kind == RegionKind::Board || kind == RegionKind::Vrm ||
            ref().region(n) == Region::die(1) || ref().region(n) == Region::die(2))
            distant.push_back(n);
    }
    const double f = band().back();
    for (int a : {0, 13, 31}) {
        std::vector<NodeId> obs{blocks[static_cast<std::size_t>(a)].sensor_node};
        obs.insert(obs.end(), distant.begin(), distant.end());
        const auto z = solver.transfer(f, {blocks[static_cast<std::size_t>(a)].actuator_node}, obs);
        for (Eigen::Index i = 1; i < z.rows(); ++i) EXPECT_GT(std::abs(z(0, 0)), std::abs(z(i, 0)));
    }
}

TEST(Sensing, TrojanShiftsMeans) {
    const auto tn = apply(ref(), find_scenario("trojan").event);
    const auto blocks = monitor_grid(ref());
    const auto a = acquire(ref(), blocks, {2, 5, 8, 20}, {3, 10, 22, 29}, band(), 500, 9);
    const auto b = acquire(tn, monitor_grid(tn), {2, 5, 8, 20}, {3, 10, 22, 29}, band(), 500, 9);
    bool differs = false;
    for (std::size_t c = 0; c < a.samples.size(); ++c) differs |= a.samples[c] != b.samples[c];
    EXPECT_TRUE(differs);
}

TEST(Sensing, CodesBackToImpedance) {
    AcquisitionConfig cfg = quiet();
    const auto blocks = monitor_grid(ref());
    const TransferTable table(ref(), blocks, band(), 1);
    const double z = ripple_amplitudes(table, {6}, {6}, cfg.actuator)[3] / cfg.actuator.current_amplitude;
    // About 20 codes of swing: well clear of both quantization and clamping.
    cfg.sensor.gain = 20.0 / (z * cfg.actuator.current_amplitude);
    const auto ts = acquire(table, {6}, {6}, {band()[3]}, 20000, 5, cfg);
    const double zhat = codes_to_impedance(ts.samples[0], cfg.sensor, cfg.actuator);
    EXPECT_NEAR(zhat, z, 0.03 * z);
}

TEST(Sensing, HarmonicsChangeCodes) {
    AcquisitionConfig h3 = quiet();
    h3.actuator.harmonics = 3;
    h3.sensor.gain = 300.0;
    AcquisitionConfig h1 = h3;
    h1.actuator.harmonics = 1;
    const auto blocks = monitor_grid(ref());
    const auto a = acquire(ref(), blocks, {0}, {0}, band(), 200, 1, h1);
    const auto b = acquire(ref(), blocks, {0}, {0}, band(), 200, 1, h3);
    EXPECT_NE(a.samples, b.samples);
    AcquisitionConfig bad = quiet();
    bad.actuator.harmonics = 6;
    EXPECT_THROW(acquire(ref(), blocks, {0}, {0}, band(), 10, 1, bad), Error);
}

TEST(Sensing, CsvRoundTrip) {
    const auto ts = acquire(ref(), monitor_grid(ref()), {1}, {2, 3}, band(), 20, 77);
    std::stringstream csv;
    ts.write_csv(csv);
    EXPECT_EQ(csv.str().rfind("# pdnsense-traces v1\nfrequency_hz,sensor_id,sample_index,code\n", 0), 0u);
    const auto back = TraceSet::read(csv, ts.sidecar());
    EXPECT_EQ(back.samples, ts.samples);
    EXPECT_EQ(back.sensor_ids, ts.sensor_ids);
    EXPECT_EQ(back.actuator_ids, ts.actuator_ids);
    EXPECT_EQ(back.frequencies, ts.frequencies);
    EXPECT_EQ(back.seed, ts.seed);
}

TEST(Sensing, RejectsBadInputs) {
    const auto blocks = monitor_grid(ref());
    EXPECT_THROW(acquire(ref(), blocks, {}, {1}, band(), 10, 1), Error);
    EXPECT_THROW(acquire(ref(), blocks, {1}, {}, band(), 10, 1), Error);
    EXPECT_THROW(acquire(ref(), blocks, {1}, {40}, band(), 10, 1), Error);
    EXPECT_THROW(acquire(ref(), blocks, {1}, {2}, {}, 10, 1), Error);
    EXPECT_THROW(acquire(ref(), blocks, {1}, {2}, band(), 0, 1), Error);
    const TransferTable table(ref(), blocks, band(), 1);
    try {
        acquire(table, {1}, {2}, {123.0}, 10, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
    }
}
