#include "pdnsense/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "pdnsense/common.hpp"
#include "pdnsense/solver.hpp"

namespace pdnsense {

using nlohmann::json;

std::vector<MonitorBlock> monitor_grid(const PdnNetwork& net, int grid_size, int chiplet) {
    if (grid_size < 1) throw Error(ErrorCode::InvalidArgument, "grid size must be at least 1", "grid_size");
    if (chiplet < 0 || chiplet >= net.chiplet_count())
        throw Error(ErrorCode::InvalidNetwork, "verifier chiplet does not exist", "verifier");
    const auto& mesh = net.die_nodes(chiplet);
    std::vector<MonitorBlock> out;
    out.reserve(static_cast<std::size_t>(grid_size));
    for (int i = 0; i < grid_size; ++i) {
        const auto idx = static_cast<std::size_t>(i) * mesh.size() / static_cast<std::size_t>(grid_size);
        out.push_back(MonitorBlock{i, mesh[idx], mesh[idx]});
    }
    return out;
}

void SensorModel::validate() const {
    if (taps < 2) throw Error(ErrorCode::InvalidArgument, "TDC needs at least 2 taps", "taps");
    if (!(gain > 0.0) || !std::isfinite(gain)) throw Error(ErrorCode::InvalidArgument, "gain must be positive", "gain");
    if (base_code < 0 || base_code > taps)
        throw Error(ErrorCode::InvalidArgument, "base code must lie in [0, taps]", "base_code");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
        throw Error(ErrorCode::InvalidArgument, "noise sigma must be non-negative", "noise_sigma");
}

void ActuatorModel::validate() const {
    if (!(current_amplitude > 0.0) || !std::isfinite(current_amplitude))
        throw Error(ErrorCode::InvalidArgument, "actuator current must be positive", "current_amplitude");
    if (harmonics < 1 || harmonics > 5)
        throw Error(ErrorCode::InvalidArgument, "harmonics must lie in [1, 5]", "harmonics");
}

void AcquisitionConfig::validate() const {
    sensor.validate();
    actuator.validate();
    if (!(sampling_rate_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "sampling rate must be positive", "sampling_rate");
    if (!(interval_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "interval must be positive", "interval");
    if (grid_size < 1) throw Error(ErrorCode::InvalidArgument, "grid size must be at least 1", "grid_size");
}

json to_json(const AcquisitionConfig& c) {
    return json{{"taps", c.sensor.taps},
                {"gain", c.sensor.gain},
                {"noise_sigma", c.sensor.noise_sigma},
                {"current_amplitude", c.actuator.current_amplitude},
                {"harmonics", c.actuator.harmonics},
                {"sampling_rate_hz", c.sampling_rate_hz},
                {"interval_s", c.interval_s},
                {"verifier", c.verifier},
                {"grid_size", c.grid_size}};
}

AcquisitionConfig acquisition_config_from_json(const json& j) {
    AcquisitionConfig c;
    try {
        c.sensor.taps = j.value("taps", c.sensor.taps);
        c.sensor.base_code = c.sensor.taps / 2;
        c.sensor.gain = j.value("gain", c.sensor.gain);
        c.sensor.noise_sigma = j.value("noise_sigma", c.sensor.noise_sigma);
        c.actuator.current_amplitude = j.value("current_amplitude", c.actuator.current_amplitude);
        c.actuator.harmonics = j.value("harmonics", c.actuator.harmonics);
        c.sampling_rate_hz = j.value("sampling_rate_hz", c.sampling_rate_hz);
        c.interval_s = j.value("interval_s", c.interval_s);
        c.verifier = j.value("verifier", c.verifier);
        c.grid_size = j.value("grid_size", c.grid_size);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed acquisition settings: ") + e.what(),
                    "acquisition");
    }
    c.validate();
    return c;
}

namespace {

SensorModel calibrated(const SensorModel& sensor, double quiescent) {
    SensorModel s = sensor;
    s.v_nominal = quiescent;
    s.base_code = s.taps / 2;
    s.validate();
    return s;
}

int quantize(const SensorModel& s, double v, double eta) {
    const double raw = std::round(s.base_code + s.gain * (v - s.v_nominal + eta));
    return static_cast<int>(std::clamp(raw, 0.0, static_cast<double>(s.taps)));
}

}  // namespace

SensorModel calibrate(const SensorModel& sensor, const PdnNetwork& net, const MonitorBlock& block) {
    if (block.sensor_node.value <= 0 || static_cast<std::size_t>(block.sensor_node.value) >= net.node_count() ||
        net.region(block.sensor_node).kind != RegionKind::Chiplet)
        throw Error(ErrorCode::InvalidArgument, "sensor node must lie on a chiplet", "block");
    // No load current flows at rest and inductors are DC shorts, so every
    // node sits at the supply voltage.
    return calibrated(sensor, net.supply_voltage());
}

int read_tdc(const SensorModel& sensor, double v, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    return quantize(sensor, v, sensor.noise_sigma * normal(rng));
}

TransferTable::TransferTable(const PdnNetwork& net, const std::vector<MonitorBlock>& blocks, std::vector<double> freqs,
                             int harmonics)
    : freqs_(std::move(freqs)), harmonics_(harmonics), blocks_(blocks.size()), supply_(net.supply_voltage()) {
    if (harmonics_ < 1 || harmonics_ > 5)
        throw Error(ErrorCode::InvalidArgument, "harmonics must lie in [1, 5]", "harmonics");
    if (blocks.empty()) throw Error(ErrorCode::InvalidArgument, "no monitor blocks", "blocks");
    for (double f : freqs_)
        if (!(f > 0.0) || !std::isfinite(f))
            throw Error(ErrorCode::InvalidArgument, "frequencies must be positive", "freqs");
    std::vector<NodeId> act;
    std::vector<NodeId> sen;
    for (const auto& b : blocks) {
        act.push_back(b.actuator_node);
        sen.push_back(b.sensor_node);
    }
    const AdmittanceSolver solver(net);
    const std::size_t per_f = static_cast<std::size_t>(harmonics_) * blocks_ * blocks_;
    data_.resize(freqs_.size() * per_f);
    const std::size_t jobs = freqs_.size() * static_cast<std::size_t>(harmonics_);
    parallel_for(jobs, [&](std::size_t job) {
        const std::size_t fi = job / static_cast<std::size_t>(harmonics_);
        const int h = static_cast<int>(job % static_cast<std::size_t>(harmonics_));
        const auto z = solver.transfer(freqs_[fi] * (2 * h + 1), act, sen);
        auto* out = data_.data() + fi * per_f + static_cast<std::size_t>(h) * blocks_ * blocks_;
        for (std::size_t s = 0; s < blocks_; ++s)
            for (std::size_t a = 0; a < blocks_; ++a)
                out[s * blocks_ + a] = z(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
    });
}

std::size_t TransferTable::frequency_index(double f) const {
    for (std::size_t i = 0; i < freqs_.size(); ++i)
        if (freqs_[i] == f || std::abs(freqs_[i] - f) <= 1e-12 * f) return i;
    std::ostringstream os;
    os.precision(12);
    os << "frequency " << f << " Hz was not solved for this network";
    throw Error(ErrorCode::GridMismatch, os.str(), "freqs");
}

std::complex<double> TransferTable::z(std::size_t fi, int h, int actuator, int sensor) const {
    const std::size_t per_f = static_cast<std::size_t>(harmonics_) * blocks_ * blocks_;
    return data_.at(fi * per_f + static_cast<std::size_t>(h) * blocks_ * blocks_ +
                    static_cast<std::size_t>(sensor) * blocks_ + static_cast<std::size_t>(actuator));
}

namespace {

void check_ids(const std::vector<int>& ids, std::size_t limit, const char* what) {
    if (ids.empty()) throw Error(ErrorCode::InvalidArgument, std::string("no active ") + what, what);
    for (int id : ids)
        if (id < 0 || static_cast<std::size_t>(id) >= limit)
            throw Error(ErrorCode::InvalidArgument, std::string(what) + " id outside the monitor grid", what);
}

// Per-harmonic phasor sum at one sensor, already scaled by the drive current.
std::vector<std::complex<double>> sensor_phasors(const TransferTable& table, std::size_t fi,
                                                 const std::vector<int>& actuators, int sensor,
                                                 const ActuatorModel& act, int harmonics) {
    std::vector<std::complex<double>> out(static_cast<std::size_t>(harmonics));
    for (int h = 0; h < harmonics; ++h) {
        std::complex<double> sum = 0.0;
        for (int a : actuators) sum += table.z(fi, h, a, sensor);
        out[static_cast<std::size_t>(h)] = sum * (act.current_amplitude / (2 * h + 1));
    }
    return out;
}

}  // namespace

std::vector<double> ripple_amplitudes(const TransferTable& table, const std::vector<int>& actuators,
                                      const std::vector<int>& sensors, const ActuatorModel& actuator) {
    check_ids(actuators, table.block_count(), "actuators");
    check_ids(sensors, table.block_count(), "sensors");
    std::vector<double> out;
    for (std::size_t fi = 0; fi < table.frequencies().size(); ++fi)
        for (int s : sensors) out.push_back(std::abs(sensor_phasors(table, fi, actuators, s, actuator, 1)[0]));
    return out;
}

TraceSet acquire(const TransferTable& table, const std::vector<int>& actuators, const std::vector<int>& sensors,
                 const std::vector<double>& freqs, int traces, std::uint64_t seed, const AcquisitionConfig& cfg) {
    cfg.validate();
    check_ids(actuators, table.block_count(), "actuators");
    check_ids(sensors, table.block_count(), "sensors");
    if (traces < 1) throw Error(ErrorCode::InvalidArgument, "trace count must be at least 1", "traces");
    if (freqs.empty()) throw Error(ErrorCode::InvalidArgument, "no frequencies requested", "freqs");
    if (cfg.actuator.harmonics > table.harmonics())
        throw Error(ErrorCode::InvalidArgument, "transfer table lacks the requested harmonics", "harmonics");

    const SensorModel sensor = calibrated(cfg.sensor, table.supply_voltage());
    TraceSet ts;
    ts.frequencies = freqs;
    ts.sensor_ids = sensors;
    ts.actuator_ids = actuators;
    ts.seed = seed;
    ts.taps = sensor.taps;
    ts.base_code = sensor.base_code;
    ts.sampling_rate_hz = cfg.sampling_rate_hz;
    ts.interval_s = cfg.interval_s;
    ts.samples.assign(freqs.size() * sensors.size(), std::vector<int>(static_cast<std::size_t>(traces)));

    std::vector<std::size_t> index(freqs.size());
    for (std::size_t i = 0; i < freqs.size(); ++i) index[i] = table.frequency_index(freqs[i]);

    parallel_for(freqs.size(), [&](std::size_t fi) {
        std::mt19937_64 rng(derive_seed(seed, fi));
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t si = 0; si < sensors.size(); ++si) {
            const auto ph = sensor_phasors(table, index[fi], actuators, sensors[si], cfg.actuator, cfg.actuator.harmonics);
            auto& cell = ts.samples[fi * sensors.size() + si];
            for (int t = 0; t < traces; ++t) {
                const double theta = phase(rng);
                double ripple = 0.0;
                for (std::size_t h = 0; h < ph.size(); ++h)
                    ripple += std::abs(ph[h]) * std::sin(static_cast<double>(2 * h + 1) * theta + std::arg(ph[h]));
                const double eta = sensor.noise_sigma * normal(rng);
                cell[static_cast<std::size_t>(t)] = quantize(sensor, sensor.v_nominal + ripple, eta);
            }
        }
    });
    return ts;
}

TraceSet acquire(const PdnNetwork& net, const std::vector<MonitorBlock>& blocks, const std::vector<int>& actuators,
                 const std::vector<int>& sensors, const std::vector<double>& freqs, int traces, std::uint64_t seed,
                 const AcquisitionConfig& cfg) {
    cfg.validate();
    if (freqs.empty()) throw Error(ErrorCode::InvalidArgument, "no frequencies requested", "freqs");
    for (const auto& b : blocks) {
        if (b.sensor_node.value <= 0 || static_cast<std::size_t>(b.sensor_node.value) >= net.node_count() ||
            !(net.region(b.sensor_node) == Region::die(cfg.verifier)) ||
            !(net.region(b.actuator_node) == Region::die(cfg.verifier)))
            throw Error(ErrorCode::InvalidArgument, "monitor blocks must lie on the verifier chiplet", "blocks");
    }
    const TransferTable table(net, blocks, freqs, cfg.actuator.harmonics);
    return acquire(table, actuators, sensors, freqs, traces, seed, cfg);
}

void TraceSet::validate() const {
    if (samples.size() != frequencies.size() * sensor_ids.size())
        throw Error(ErrorCode::GridMismatch, "trace set cell count does not match its grid");
    const std::size_t t = traces();
    if (t < 1) throw Error(ErrorCode::InvalidArgument, "trace set is empty");
    for (const auto& c : samples) {
        if (c.size() != t) throw Error(ErrorCode::GridMismatch, "trace set cells differ in length");
        for (int code : c)
            if (code < 0 || code > taps) throw Error(ErrorCode::InvalidArgument, "code outside [0, taps]");
    }
}

void TraceSet::write_csv(std::ostream& os) const {
    os << "# pdnsense-traces v1\n";
    os << "frequency_hz,sensor_id,sample_index,code\n";
    const auto old = os.precision(17);
    for (std::size_t fi = 0; fi < frequencies.size(); ++fi)
        for (std::size_t si = 0; si < sensor_ids.size(); ++si) {
            const auto& c = cell(fi, si);
            for (std::size_t t = 0; t < c.size(); ++t)
                os << frequencies[fi] << ',' << sensor_ids[si] << ',' << t << ',' << c[t] << '\n';
        }
    os.precision(old);
}

json TraceSet::sidecar() const {
    return json{{"format", "pdnsense-traces"},
                {"version", 1},
                {"frequencies_hz", frequencies},
                {"sensor_ids", sensor_ids},
                {"actuator_ids", actuator_ids},
                {"traces", traces()},
                {"seed", seed},
                {"taps", taps},
                {"base_code", base_code},
                {"sampling_rate_hz", sampling_rate_hz},
                {"interval_s", interval_s}};
}

TraceSet TraceSet::read(std::istream& csv, const json& meta) {
    TraceSet ts;
    try {
        ts.frequencies = meta.at("frequencies_hz").get<std::vector<double>>();
        ts.sensor_ids = meta.at("sensor_ids").get<std::vector<int>>();
        ts.actuator_ids = meta.value("actuator_ids", std::vector<int>{});
        ts.seed = meta.value("seed", std::uint64_t{0});
        ts.taps = meta.value("taps", 64);
        ts.base_code = meta.value("base_code", ts.taps / 2);
        ts.sampling_rate_hz = meta.value("sampling_rate_hz", 0.0);
        ts.interval_s = meta.value("interval_s", 0.0);
        const auto t = meta.at("traces").get<std::size_t>();
        ts.samples.assign(ts.frequencies.size() * ts.sensor_ids.size(), std::vector<int>(t, -1));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Io, std::string("malformed trace sidecar: ") + e.what(), "traces");
    }
    std::string line;
    bool header = false;
    while (std::getline(csv, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            if (line != "frequency_hz,sensor_id,sample_index,code")
                throw Error(ErrorCode::Io, "unexpected trace CSV header", "traces");
            continue;
        }
        std::istringstream row(line);
        std::string a, b, c, d;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c, ',') ||
            !std::getline(row, d, ','))
            throw Error(ErrorCode::Io, "short trace CSV row", "traces");
        const double f = std::stod(a);
        const int sid = std::stoi(b);
        const auto idx = static_cast<std::size_t>(std::stoul(c));
        const auto fit = std::find_if(ts.frequencies.begin(), ts.frequencies.end(),
                                      [&](double x) { return std::abs(x - f) <= 1e-12 * std::abs(f); });
        const auto sit = std::find(ts.sensor_ids.begin(), ts.sensor_ids.end(), sid);
        if (fit == ts.frequencies.end() || sit == ts.sensor_ids.end())
            throw Error(ErrorCode::GridMismatch, "trace row outside the sidecar grid", "traces");
        auto& cell = ts.samples[static_cast<std::size_t>(fit - ts.frequencies.begin()) * ts.sensor_ids.size() +
                                static_cast<std::size_t>(sit - ts.sensor_ids.begin())];
        if (idx >= cell.size()) throw Error(ErrorCode::GridMismatch, "sample index beyond trace count", "traces");
        cell[idx] = std::stoi(d);
    }
    ts.validate();
    return ts;
}

double codes_to_impedance(const std::vector<int>& codes, const SensorModel& sensor, const ActuatorModel& actuator) {
    if (codes.empty()) throw Error(ErrorCode::InvalidArgument, "no codes to convert");
    double sum = 0.0;
    for (int c : codes) sum += std::abs(c - sensor.base_code);
    const double mean_dev = sum / static_cast<double>(codes.size());
    return mean_dev * std::numbers::pi / (2.0 * sensor.gain * actuator.current_amplitude);
}

}  // namespace pdnsense
