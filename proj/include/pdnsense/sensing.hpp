#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdnsense/network.hpp"

namespace pdnsense {

/// One monitoring block of the verifier: a TDC sensor and a power-waster
/// actuator sharing a mesh node.
struct MonitorBlock {
    int id = 0;
    NodeId sensor_node;
    NodeId actuator_node;
};

/// Row-major blocks spread evenly over the mesh of `chiplet`.
std::vector<MonitorBlock> monitor_grid(const PdnNetwork& net, int grid_size = 32, int chiplet = 0);

struct SensorModel {
    int taps = 64;
    double gain = 10.0;          // codes per volt
    double v_nominal = 0.85;     // volts
    double noise_sigma = 0.5e-3; // volts
    int base_code = 32;

    void validate() const;
};

struct ActuatorModel {
    double current_amplitude = 0.05;  // amperes
    int harmonics = 1;                // odd harmonics 1, 3, ..., 2h-1

    void validate() const;
};

/// Sets v_nominal to the quiescent node voltage and base_code to taps / 2.
SensorModel calibrate(const SensorModel& sensor, const PdnNetwork& net, const MonitorBlock& block);

/// clamp(round(base_code + gain * (v - v_nominal + eta)), 0, taps) with
/// eta ~ N(0, noise_sigma).
int read_tdc(const SensorModel& sensor, double v, std::mt19937_64& rng);

struct AcquisitionConfig {
    SensorModel sensor;
    ActuatorModel actuator;
    double sampling_rate_hz = 200e6;
    double interval_s = 1e-3;
    int verifier = 0;
    int grid_size = 32;

    void validate() const;
};

nlohmann::json to_json(const AcquisitionConfig& cfg);
/// Missing keys keep their defaults.
AcquisitionConfig acquisition_config_from_json(const nlohmann::json& j);

/// Pre-solved transfer impedances Z(actuator block -> sensor block) per
/// frequency and harmonic, for repeated acquisitions on one network.
class TransferTable {
public:
    TransferTable(const PdnNetwork& net, const std::vector<MonitorBlock>& blocks, std::vector<double> freqs,
                  int harmonics);

    const std::vector<double>& frequencies() const { return freqs_; }
    int harmonics() const { return harmonics_; }
    std::size_t block_count() const { return blocks_; }
    double supply_voltage() const { return supply_; }
    std::size_t frequency_index(double f) const;
    /// Z for harmonic h (0-based, order 2h+1) at frequency index fi.
    std::complex<double> z(std::size_t fi, int h, int actuator, int sensor) const;

private:
    std::vector<double> freqs_;
    int harmonics_;
    std::size_t blocks_;
    double supply_;
    std::vector<std::complex<double>> data_;  // [fi][h][sensor][actuator]
};

/// Codes for every (frequency, sensor) cell; cell (fi, si) is
/// samples[fi * sensor_ids.size() + si].
struct TraceSet {
    std::vector<double> frequencies;
    std::vector<int> sensor_ids;
    std::vector<int> actuator_ids;
    std::vector<std::vector<int>> samples;
    std::uint64_t seed = 0;
    int taps = 64;
    int base_code = 32;
    double sampling_rate_hz = 0.0;
    double interval_s = 0.0;

    std::size_t traces() const { return samples.empty() ? 0 : samples.front().size(); }
    const std::vector<int>& cell(std::size_t fi, std::size_t si) const {
        return samples.at(fi * sensor_ids.size() + si);
    }
    void validate() const;

    /// Columns: frequency_hz, sensor_id, sample_index, code.
    void write_csv(std::ostream& os) const;
    nlohmann::json sidecar() const;
    static TraceSet read(std::istream& csv, const nlohmann::json& sidecar);
};

/// Peak ripple (volts) at each sensor per frequency, fundamental only:
/// |sum_a Z(a -> s, f)| * I. Indexed [fi * sensors + si].
std::vector<double> ripple_amplitudes(const TransferTable& table, const std::vector<int>& actuators,
                                      const std::vector<int>& sensors, const ActuatorModel& actuator);

TraceSet acquire(const TransferTable& table, const std::vector<int>& actuators, const std::vector<int>& sensors,
                 const std::vector<double>& freqs, int traces, std::uint64_t seed, const AcquisitionConfig& cfg = {});

TraceSet acquire(const PdnNetwork& net, const std::vector<MonitorBlock>& blocks, const std::vector<int>& actuators,
                 const std::vector<int>& sensors, const std::vector<double>& freqs, int traces, std::uint64_t seed,
                 const AcquisitionConfig& cfg = {});

/// Mean absolute code deviation converted back to an impedance magnitude
/// estimate (ohms): E|code - base| = (2/pi) * gain * |Z| * I for a sinusoid.
double codes_to_impedance(const std::vector<int>& codes, const SensorModel& sensor, const ActuatorModel& actuator);

}  // namespace pdnsense
