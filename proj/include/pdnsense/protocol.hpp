#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdnsense/network.hpp"
#include "pdnsense/sensing.hpp"
#include "pdnsense/stats.hpp"

namespace pdnsense {

/// One-time challenge: which actuators fire, which sensors listen, and at
/// which frequencies.
struct VerificationKey {
    std::vector<int> actuator_ids;
    std::vector<int> sensor_ids;
    std::vector<double> frequencies;
    std::uint64_t nonce = 0;

    void validate(int grid_size) const;
    friend bool operator==(const VerificationKey&, const VerificationKey&) = default;
};

/// Uniform draws without replacement; IDs sorted, frequencies ascending.
VerificationKey generate_key(int grid_size, int K, int M, const std::vector<double>& band, int N, std::uint64_t seed);

nlohmann::json to_json(const VerificationKey& key);
VerificationKey key_from_json(const nlohmann::json& j);

struct GoldenSignature {
    std::string id;
    VerificationKey key;
    TraceSummary summary;
    AcquisitionConfig acquisition;  // sensor/actuator model used at enrolment
    std::string device_id;
    std::string created_at;
    std::uint64_t seed = 0;
    int traces = 0;
    bool used = false;

    nlohmann::json to_json() const;
    static GoldenSignature from_json(const nlohmann::json& j);
};

/// Directory of signature documents plus index.json. All access goes
/// through one mutex; files are replaced atomically.
class SignatureStore {
public:
    explicit SignatureStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    /// Persists a new signature; throws Error(Duplicate) if its
    /// (device_id, nonce) is already enrolled. Returns the file path.
    std::filesystem::path put(const GoldenSignature& sig);
    GoldenSignature get(const std::string& id) const;
    GoldenSignature load(const std::filesystem::path& file) const;
    bool contains(const std::string& device_id, std::uint64_t nonce) const;
    std::vector<std::string> ids() const;
    /// Atomically flips used false -> true; throws ReplayError if already used.
    void consume(const std::string& id);
    std::filesystem::path path_for(const std::string& id) const;

private:
    nlohmann::json read_index() const;
    void write_index(const nlohmann::json& index) const;

    std::filesystem::path root_;
    mutable std::mutex mutex_;
};

struct ProtocolConfig {
    AcquisitionConfig acquisition;
    TraceSummary::Mode summary_mode = TraceSummary::Mode::Samples;
    std::size_t quantile_resolution = 101;
    std::string device_id = "device-0";
};

std::string signature_id(const std::string& device_id, std::uint64_t nonce);

/// Acquires golden traces on the trusted network under `key` and persists
/// the summary. Nothing is written if acquisition fails.
GoldenSignature enroll(const PdnNetwork& net, const VerificationKey& key, int traces, std::uint64_t seed,
                       SignatureStore& store, const ProtocolConfig& cfg = {});

/// Burns the signature (in memory and in `store`, when given) before any
/// acquisition, then compares a fresh acquisition on `device`, taken with
/// the signature's acquisition settings, against it. A signature already
/// used raises ReplayError.
Verdict verify(const PdnNetwork& device, GoldenSignature& sig, int traces, std::uint64_t seed,
               const MetricConfig& metric = {}, SignatureStore* store = nullptr);

}  // namespace pdnsense
