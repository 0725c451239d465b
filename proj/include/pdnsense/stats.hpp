#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdnsense/sensing.hpp"

namespace pdnsense {

struct FrequencyCell {
    double frequency_hz = 0.0;
    std::vector<double> golden;
    std::vector<double> test;
};

/// Unequal-variance two-sample statistic (mean_G - mean_T) / se. Throws
/// Error(DegenerateCell) when both sample variances are zero.
double welch_t(std::span<const double> golden, std::span<const double> test);
double welch_t(const FrequencyCell& cell);

enum class Decision { Clean, Tampered };
const char* to_string(Decision d);

/// Tampered iff some |t| > threshold (strict).
Decision ttest_decide(const std::vector<double>& t_values, double threshold = 4.5);

/// 1-D p-Wasserstein distance between empirical distributions.
double wasserstein(std::span<const double> x, std::span<const double> y, int p = 1);
double wasserstein(const FrequencyCell& cell, int p = 1);
/// Same, for inputs already sorted ascending.
double wasserstein_sorted(std::span<const double> x, std::span<const double> y, int p = 1);

struct BootstrapConfig {
    int resamples = 1000;
    double significance = 0.01;
    std::uint64_t seed = 0;

    void validate() const;
};

/// 1-based order statistic used as the threshold: ceil((1 - alpha) * B).
std::size_t bootstrap_order_index(int resamples, double significance);

/// Sorted null distances between pairs of with-replacement resamples of
/// size `sample_size` drawn from `reference`.
std::vector<double> bootstrap_null(std::span<const double> reference, std::size_t sample_size,
                                   const BootstrapConfig& cfg, int p = 1);
double bootstrap_threshold(std::span<const double> reference, std::size_t sample_size, const BootstrapConfig& cfg,
                           int p = 1);

enum class Metric { TTest, Wasserstein, Both };
enum class Trigger { None, TTest, Wasserstein, Both };
const char* to_string(Metric m);
const char* to_string(Trigger t);
Metric metric_from_string(const std::string& s);

/// Statistic input derived from TDC codes. Deviation uses |code - base_code|,
/// the rectified ripple magnitude; Raw uses the codes unchanged.
enum class Feature { Deviation, Raw };
const char* to_string(Feature f);
Feature feature_from_string(const std::string& s);

struct MetricConfig {
    Metric metric = Metric::Both;
    double t_threshold = 4.5;
    int p = 1;
    BootstrapConfig bootstrap;
    Feature feature = Feature::Deviation;

    void validate() const;
};

struct FrequencyStat {
    double frequency_hz = 0.0;
    double t = 0.0;            // signed t of the sensor with the largest |t|
    double w_distance = 0.0;   // W of the sensor with the largest W - threshold
    double w_threshold = 0.0;
    bool t_exceeded = false;
    bool w_exceeded = false;
    bool exceeded = false;     // under the active metric
    int t_sensor = -1;
    int w_sensor = -1;
};

struct Verdict {
    std::vector<FrequencyStat> per_frequency;
    Decision decision = Decision::Clean;
    Trigger triggering_metric = Trigger::None;
    Metric metric = Metric::Both;

    double max_abs_t() const;
    bool any_t_exceeded() const;
    bool any_w_exceeded() const;
    nlohmann::json to_json() const;
    /// Columns: frequency_hz, t, w_distance, w_threshold, exceeded.
    void write_csv(std::ostream& os) const;
};

/// Stored golden data for one (frequency, sensor) cell.
struct CellSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;
    std::vector<double> samples;    // full mode
    std::vector<double> quantiles;  // quantile mode, evenly spaced levels 0..1

    /// Full samples, or `count` points reconstructed from the quantile grid.
    std::vector<double> values() const;
    friend bool operator==(const CellSummary&, const CellSummary&) = default;
};

struct TraceSummary {
    enum class Mode { Samples, Quantiles };

    Mode mode = Mode::Samples;
    std::vector<double> frequencies;
    std::vector<int> sensor_ids;
    int base_code = 32;
    int taps = 64;
    std::vector<CellSummary> cells;  // [fi * sensors + si]

    static TraceSummary from(const TraceSet& ts, Mode mode = Mode::Samples, std::size_t resolution = 101);
    const CellSummary& cell(std::size_t fi, std::size_t si) const { return cells.at(fi * sensor_ids.size() + si); }

    nlohmann::json to_json() const;
    static TraceSummary from_json(const nlohmann::json& j);
    friend bool operator==(const TraceSummary&, const TraceSummary&) = default;
};

/// Per-frequency comparison of a test acquisition against golden data. Each
/// active sensor is scored separately and the strongest sensor is reported
/// per metric. Metric::Both flags a frequency only when both tests exceed.
/// Throws Error(GridMismatch) if the grids differ.
Verdict decide(const TraceSummary& golden, const TraceSet& test, const MetricConfig& cfg = {});
Verdict decide(const TraceSet& golden, const TraceSet& test, const MetricConfig& cfg = {});

}  // namespace pdnsense
