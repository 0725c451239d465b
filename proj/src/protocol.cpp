#include "pdnsense/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "pdnsense/common.hpp"

namespace pdnsense {

using nlohmann::json;
namespace fs = std::filesystem;

void VerificationKey::validate(int grid_size) const {
    const auto check_set = [&](const std::vector<int>& ids, const char* what) {
        if (ids.empty()) throw Error(ErrorCode::InvalidArgument, std::string("key has no ") + what, what);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] < 0 || ids[i] >= grid_size)
                throw Error(ErrorCode::InvalidArgument, std::string(what) + " id outside the grid", what);
            if (i > 0 && ids[i] <= ids[i - 1])
                throw Error(ErrorCode::InvalidArgument, std::string(what) + " ids must be sorted and unique", what);
        }
    };
    check_set(actuator_ids, "actuators");
    check_set(sensor_ids, "sensors");
    if (frequencies.empty()) throw Error(ErrorCode::InvalidArgument, "key has no frequencies", "N");
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
        if (!(frequencies[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "key frequency must be positive", "band");
        if (i > 0 && !(frequencies[i] > frequencies[i - 1]))
            throw Error(ErrorCode::InvalidArgument, "key frequencies must be strictly increasing", "band");
    }
}

namespace {

std::vector<std::size_t> draw_without_replacement(std::size_t pool, std::size_t k, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(pool);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

void write_atomic(const fs::path& path, const json& doc) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write '" + tmp.string() + "'", "store");
        out << doc.dump(1) << '\n';
        if (!out) throw Error(ErrorCode::Io, "write failed for '" + tmp.string() + "'", "store");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot replace '" + path.string() + "': " + ec.message(), "store");
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'", "store");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Io, "cannot parse '" + path.string() + "': " + e.what(), "store");
    }
}

}  // namespace

VerificationKey generate_key(int grid_size, int K, int M, const std::vector<double>& band, int N, std::uint64_t seed) {
    if (grid_size < 1) throw Error(ErrorCode::InvalidArgument, "grid size must be at least 1", "grid_size");
    if (K < 1 || K > grid_size) throw Error(ErrorCode::InvalidArgument, "K must lie in [1, grid size]", "K");
    if (M < 1 || M > grid_size) throw Error(ErrorCode::InvalidArgument, "M must lie in [1, grid size]", "M");
    if (N < 1 || static_cast<std::size_t>(N) > band.size())
        throw Error(ErrorCode::InvalidArgument, "N must lie in [1, band size]", "N");
    std::vector<double> pool = band;
    std::sort(pool.begin(), pool.end());
    if (std::adjacent_find(pool.begin(), pool.end()) != pool.end())
        throw Error(ErrorCode::InvalidArgument, "band contains duplicate frequencies", "band");

    std::mt19937_64 rng(seed);
    VerificationKey key;
    for (auto i : draw_without_replacement(static_cast<std::size_t>(grid_size), static_cast<std::size_t>(K), rng))
        key.actuator_ids.push_back(static_cast<int>(i));
    for (auto i : draw_without_replacement(static_cast<std::size_t>(grid_size), static_cast<std::size_t>(M), rng))
        key.sensor_ids.push_back(static_cast<int>(i));
    for (auto i : draw_without_replacement(pool.size(), static_cast<std::size_t>(N), rng))
        key.frequencies.push_back(pool[i]);
    key.nonce = mix_seed(seed);
    return key;
}

json to_json(const VerificationKey& key) {
    return json{{"actuator_ids", key.actuator_ids},
                {"sensor_ids", key.sensor_ids},
                {"frequencies_hz", key.frequencies},
                {"nonce", key.nonce}};
}

VerificationKey key_from_json(const json& j) {
    try {
        VerificationKey k;
        k.actuator_ids = j.at("actuator_ids").get<std::vector<int>>();
        k.sensor_ids = j.at("sensor_ids").get<std::vector<int>>();
        k.frequencies = j.at("frequencies_hz").get<std::vector<double>>();
        k.nonce = j.at("nonce").get<std::uint64_t>();
        return k;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Io, std::string("malformed verification key: ") + e.what(), "key");
    }
}

json GoldenSignature::to_json() const {
    return json{{"format", "pdnsense-signature"},
                {"version", 1},
                {"id", id},
                {"device_id", device_id},
                {"created_at", created_at},
                {"seed", seed},
                {"traces", traces},
                {"used", used},
                {"key", pdnsense::to_json(key)},
                {"acquisition", pdnsense::to_json(acquisition)},
                {"summary", summary.to_json()}};
}

GoldenSignature GoldenSignature::from_json(const json& j) {
    try {
        GoldenSignature s;
        s.id = j.at("id").get<std::string>();
        s.device_id = j.at("device_id").get<std::string>();
        s.created_at = j.value("created_at", std::string{});
        s.seed = j.value("seed", std::uint64_t{0});
        s.traces = j.value("traces", 0);
        s.used = j.at("used").get<bool>();
        s.key = key_from_json(j.at("key"));
        s.acquisition = acquisition_config_from_json(j.value("acquisition", json::object()));
        s.summary = TraceSummary::from_json(j.at("summary"));
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Io, std::string("malformed signature: ") + e.what(), "signature");
    }
}

std::string signature_id(const std::string& device_id, std::uint64_t nonce) {
    std::string clean;
    for (char c : device_id) clean += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    std::ostringstream os;
    os << clean << '-' << std::hex << std::setw(16) << std::setfill('0') << nonce;
    return os.str();
}

SignatureStore::SignatureStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec || !fs::is_directory(root_))
        throw Error(ErrorCode::Io, "cannot create signature store '" + root_.string() + "'", "store");
    if (!fs::exists(root_ / "index.json"))
        write_index(json{{"format", "pdnsense-signature-index"}, {"version", 1}, {"signatures", json::array()}});
}

json SignatureStore::read_index() const { return read_json(root_ / "index.json"); }

void SignatureStore::write_index(const json& index) const { write_atomic(root_ / "index.json", index); }

fs::path SignatureStore::path_for(const std::string& id) const { return root_ / (id + ".json"); }

fs::path SignatureStore::put(const GoldenSignature& sig) {
    std::lock_guard lock(mutex_);
    json index = read_index();
    for (const auto& e : index.at("signatures"))
        if (e.at("device_id") == sig.device_id && e.at("nonce").get<std::uint64_t>() == sig.key.nonce)
            throw Error(ErrorCode::Duplicate, "signature for this device and nonce already enrolled", "nonce");
    const fs::path file = path_for(sig.id);
    write_atomic(file, sig.to_json());
    index["signatures"].push_back({{"id", sig.id},
                                   {"device_id", sig.device_id},
                                   {"nonce", sig.key.nonce},
                                   {"file", file.filename().string()},
                                   {"used", sig.used}});
    write_index(index);
    return file;
}

GoldenSignature SignatureStore::load(const fs::path& file) const { return GoldenSignature::from_json(read_json(file)); }

GoldenSignature SignatureStore::get(const std::string& id) const {
    std::lock_guard lock(mutex_);
    return load(path_for(id));
}

bool SignatureStore::contains(const std::string& device_id, std::uint64_t nonce) const {
    std::lock_guard lock(mutex_);
    const json index = read_index();
    for (const auto& e : index.at("signatures"))
        if (e.at("device_id") == device_id && e.at("nonce").get<std::uint64_t>() == nonce) return true;
    return false;
}

std::vector<std::string> SignatureStore::ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    const json index = read_index();
    for (const auto& e : index.at("signatures")) out.push_back(e.at("id").get<std::string>());
    return out;
}

void SignatureStore::consume(const std::string& id) {
    std::lock_guard lock(mutex_);
    const fs::path file = path_for(id);
    if (!fs::exists(file)) throw Error(ErrorCode::Io, "signature '" + id + "' is not in the store", "signature");
    json doc = read_json(file);
    if (doc.value("used", false)) throw ReplayError("signature '" + id + "' has already been used");
    doc["used"] = true;
    write_atomic(file, doc);
    json index = read_index();
    for (auto& e : index["signatures"])
        if (e.at("id") == id) e["used"] = true;
    write_index(index);
}

namespace {

void check_traces(int traces) {
    if (traces < 2) throw Error(ErrorCode::InvalidArgument, "at least two traces per cell are required", "traces");
}

}  // namespace

GoldenSignature enroll(const PdnNetwork& net, const VerificationKey& key, int traces, std::uint64_t seed,
                       SignatureStore& store, const ProtocolConfig& cfg) {
    const auto& acq = cfg.acquisition;
    key.validate(acq.grid_size);
    check_traces(traces);
    if (store.contains(cfg.device_id, key.nonce))
        throw Error(ErrorCode::Duplicate, "signature for this device and nonce already enrolled", "nonce");
    const auto blocks = monitor_grid(net, acq.grid_size, acq.verifier);
    const TraceSet ts = acquire(net, blocks, key.actuator_ids, key.sensor_ids, key.frequencies, traces, seed, acq);

    GoldenSignature sig;
    sig.key = key;
    sig.acquisition = acq;
    sig.summary = TraceSummary::from(ts, cfg.summary_mode, cfg.quantile_resolution);
    sig.device_id = cfg.device_id;
    sig.id = signature_id(cfg.device_id, key.nonce);
    sig.created_at = utc_now();
    sig.seed = seed;
    sig.traces = traces;
    sig.used = false;
    store.put(sig);
    return sig;
}

Verdict verify(const PdnNetwork& device, GoldenSignature& sig, int traces, std::uint64_t seed,
               const MetricConfig& metric, SignatureStore* store) {
    if (sig.used) throw ReplayError("signature '" + sig.id + "' has already been used");
    metric.validate();
    const auto& acq = sig.acquisition;
    sig.key.validate(acq.grid_size);
    check_traces(traces);
    if (store) store->consume(sig.id);
    sig.used = true;
    const auto blocks = monitor_grid(device, acq.grid_size, acq.verifier);
    const TraceSet ts = acquire(device, blocks, sig.key.actuator_ids, sig.key.sensor_ids, sig.key.frequencies, traces,
                                seed, acq);
    return decide(sig.summary, ts, metric);
}

}  // namespace pdnsense
