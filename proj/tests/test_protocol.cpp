#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "pdnsense/common.hpp"
#include "pdnsense/protocol.hpp"
#include "pdnsense/solver.hpp"
#include "pdnsense/tamper.hpp"

using namespace pdnsense;
namespace fs = std::filesystem;

namespace {

const PdnNetwork& ref() {
    static const PdnNetwork net = build_reference_network(NetworkConfig::reference());
    return net;
}

const std::vector<double>& band() {
    static const std::vector<double> b = resonant_band(ref(), 64);
    return b;
}

class StoreTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("pdnsense_store_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

}  // namespace

TEST(Protocol, SmallKeysAreLegal) {
    VerificationKey k;
    k.actuator_ids = {0, 3, 6};
    k.sensor_ids = {0, 1, 3, 5};
    k.frequencies = {1e8, 2e8};
    EXPECT_NO_THROW(k.validate(8));
    k.sensor_ids = {0, 3, 3};
    EXPECT_THROW(k.validate(8), Error);
    k.sensor_ids = {0, 8};
    EXPECT_THROW(k.validate(8), Error);
}

TEST(Protocol, GenerateKeyShape) {
    const auto k = generate_key(32, 4, 4, band(), 8, 5);
    EXPECT_EQ(k.actuator_ids.size(), 4u);
    EXPECT_EQ(k.sensor_ids.size(), 4u);
    EXPECT_EQ(k.frequencies.size(), 8u);
    EXPECT_NO_THROW(k.validate(32));
    for (double f : k.frequencies) EXPECT_TRUE(std::find(band().begin(), band().end(), f) != band().end());
    EXPECT_EQ(k, generate_key(32, 4, 4, band(), 8, 5));
    EXPECT_NE(k.nonce, generate_key(32, 4, 4, band(), 8, 6).nonce);
    EXPECT_EQ(key_from_json(to_json(k)), k);
}

TEST(Protocol, FullSelection) {
    const auto k = generate_key(8, 8, 8, band(), 64, 1);
    EXPECT_EQ(k.actuator_ids, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7}));
    EXPECT_EQ(k.frequencies, band());
}

TEST(Protocol, GenerateKeyRejectsOversize) {
    try {
        generate_key(32, 4, 4, band(), 65, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.parameter(), "N");
    }
    EXPECT_THROW(generate_key(32, 33, 4, band(), 8, 1), Error);
    EXPECT_THROW(generate_key(32, 4, 0, band(), 8, 1), Error);
}

TEST(Protocol, KeysRarelyCollide) {
    std::set<std::tuple<std::vector<int>, std::vector<int>, std::vector<double>>> seen;
    for (std::uint64_t s = 0; s < 5000; ++s) {
        const auto k = generate_key(32, 4, 4, band(), 8, s);
        EXPECT_TRUE(seen.insert({k.actuator_ids, k.sensor_ids, k.frequencies}).second);
    }
}

TEST_F(StoreTest, EnrollVerifyAndReplay) {
    SignatureStore store(dir_);
    const auto key = generate_key(32, 4, 4, band(), 4, 21);
    auto sig = enroll(ref(), key, 200, 1, store);
    EXPECT_FALSE(sig.used);
    EXPECT_TRUE(fs::exists(store.path_for(sig.id)));
    EXPECT_TRUE(fs::exists(dir_ / "index.json"));
    EXPECT_EQ(store.ids(), std::vector<std::string>{sig.id});
    for (const auto& c : sig.summary.cells) EXPECT_EQ(c.samples.size(), 200u);

    auto loaded = store.get(sig.id);
    EXPECT_TRUE(loaded.summary == sig.summary);
    const auto v = verify(ref(), loaded, 200, 2, MetricConfig{}, &store);
    EXPECT_EQ(v.decision, Decision::Clean);
    EXPECT_TRUE(loaded.used);
    EXPECT_THROW(verify(ref(), loaded, 200, 3), ReplayError);
    auto again = store.get(sig.id);
    EXPECT_TRUE(again.used);
    EXPECT_THROW(verify(ref(), again, 200, 3), ReplayError);
    // A stale in-memory copy is still refused by the store.
    try {
        verify(ref(), sig, 200, 3, MetricConfig{}, &store);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Replay);
    }
}

TEST_F(StoreTest, TamperedVerifyStillBurnsSignature) {
    SignatureStore store(dir_);
    auto sig = enroll(ref(), generate_key(32, 4, 4, band(), 4, 22), 100, 1, store);
    const auto dev = apply(ref(), find_scenario("cnn").event);
    verify(dev, sig, 100, 2, MetricConfig{}, &store);
    EXPECT_TRUE(store.get(sig.id).used);
}

TEST_F(StoreTest, DuplicateEnrollmentRejected) {
    SignatureStore store(dir_);
    const auto key = generate_key(32, 2, 2, band(), 2, 23);
    enroll(ref(), key, 50, 1, store);
    try {
        enroll(ref(), key, 50, 2, store);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Duplicate);
    }
    ProtocolConfig other;
    other.device_id = "device-1";
    EXPECT_NO_THROW(enroll(ref(), key, 50, 1, store, other));
}

TEST_F(StoreTest, EnrollmentIsDeterministic) {
    SignatureStore a(dir_ / "a");
    SignatureStore b(dir_ / "b");
    const auto key = generate_key(32, 4, 4, band(), 4, 24);
    const auto sa = enroll(ref(), key, 150, 9, a);
    const auto sb = enroll(ref(), key, 150, 9, b);
    EXPECT_TRUE(sa.summary == sb.summary);
    EXPECT_EQ(sa.summary.to_json().dump(), sb.summary.to_json().dump());
}

TEST_F(StoreTest, FailedEnrollmentWritesNothing) {
    SignatureStore store(dir_);
    PdnNetwork broken = ref();
    broken.add_node(Region::board(), "floating");
    EXPECT_THROW(enroll(broken, generate_key(32, 2, 2, band(), 2, 25), 10, 1, store), Error);
    EXPECT_TRUE(store.ids().empty());
}

TEST_F(StoreTest, SingleTraceRejected) {
    SignatureStore store(dir_);
    const auto key = generate_key(32, 2, 2, band(), 2, 27);
    try {
        enroll(ref(), key, 1, 1, store);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.parameter(), "traces");
    }
    EXPECT_TRUE(store.ids().empty());
    auto sig = enroll(ref(), key, 20, 1, store);
    EXPECT_THROW(verify(ref(), sig, 1, 2, MetricConfig{}, &store), Error);
    EXPECT_FALSE(store.get(sig.id).used);
}

TEST_F(StoreTest, QuantileSummaries) {
    SignatureStore store(dir_);
    ProtocolConfig pc;
    pc.summary_mode = TraceSummary::Mode::Quantiles;
    pc.quantile_resolution = 51;
    auto sig = enroll(ref(), generate_key(32, 4, 4, band(), 4, 26), 300, 1, store, pc);
    for (const auto& c : sig.summary.cells) {
        EXPECT_TRUE(c.samples.empty());
        EXPECT_EQ(c.quantiles.size(), 51u);
    }
    auto loaded = store.get(sig.id);
    EXPECT_EQ(verify(ref(), loaded, 300, 2, MetricConfig{}, &store).decision, Decision::Clean);
}

TEST(Protocol, ChallengeDependence) {
    const auto blocks = monitor_grid(ref());
    const std::vector<double> f(band().begin(), band().begin() + 4);
    const auto a = TraceSummary::from(acquire(ref(), blocks, {1, 2}, {0, 4, 8}, f, 200, 1));
    const auto b = TraceSummary::from(acquire(ref(), blocks, {1, 2}, {12, 20, 28}, f, 200, 1));
    bool differs = false;
    for (std::size_t c = 0; c < a.cells.size(); ++c) differs |= a.cells[c].samples != b.cells[c].samples;
    EXPECT_TRUE(differs);
}

TEST(Protocol, SignatureJsonRoundTrip) {
    GoldenSignature s;
    s.id = "dev-1";
    s.device_id = "dev";
    s.key = generate_key(32, 2, 2, band(), 2, 3);
    s.summary = TraceSummary::from(
        acquire(ref(), monitor_grid(ref()), s.key.actuator_ids, s.key.sensor_ids, s.key.frequencies, 10, 1));
    s.acquisition.sensor.noise_sigma = 1e-3;
    const auto back = GoldenSignature::from_json(s.to_json());
    EXPECT_EQ(back.key, s.key);
    EXPECT_TRUE(back.summary == s.summary);
    EXPECT_EQ(back.acquisition.sensor.noise_sigma, 1e-3);
    EXPECT_EQ(signature_id("a b/c", 255), "a_b_c-00000000000000ff");
}
