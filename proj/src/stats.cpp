#include "pdnsense/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "pdnsense/common.hpp"

namespace pdnsense {

using nlohmann::json;

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

Moments moments(std::span<const double> x) {
    Moments m;
    m.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - m.mean) * (v - m.mean);
    m.var = x.size() > 1 ? ss / static_cast<double>(x.size() - 1) : 0.0;
    return m;
}

double ipow(double x, int p) {
    if (p == 1) return x;
    if (p == 2) return x * x;
    return std::pow(x, p);
}

}  // namespace

double welch_t(std::span<const double> golden, std::span<const double> test) {
    if (golden.size() < 2 || test.size() < 2)
        throw Error(ErrorCode::InvalidArgument, "t-test needs at least two samples per side", "samples");
    const Moments g = moments(golden);
    const Moments t = moments(test);
    if (g.var == 0.0 && t.var == 0.0)
        throw Error(ErrorCode::DegenerateCell, "both samples have zero variance", "samples");
    const double se = std::sqrt(g.var / static_cast<double>(golden.size()) + t.var / static_cast<double>(test.size()));
    return (g.mean - t.mean) / se;
}

double welch_t(const FrequencyCell& cell) { return welch_t(cell.golden, cell.test); }

const char* to_string(Decision d) { return d == Decision::Tampered ? "tampered" : "clean"; }

Decision ttest_decide(const std::vector<double>& t_values, double threshold) {
    if (t_values.empty()) throw Error(ErrorCode::InvalidArgument, "no t values to decide on", "t_values");
    for (double t : t_values)
        if (std::abs(t) > threshold) return Decision::Tampered;
    return Decision::Clean;
}

double wasserstein_sorted(std::span<const double> x, std::span<const double> y, int p) {
    if (p < 1) throw Error(ErrorCode::InvalidArgument, "Wasserstein order must be at least 1", "p");
    if (x.empty() || y.empty()) throw Error(ErrorCode::InvalidArgument, "Wasserstein needs nonempty samples", "samples");
    const std::size_t n = x.size();
    const std::size_t m = y.size();
    double acc = 0.0;
    if (n == m) {
        for (std::size_t i = 0; i < n; ++i) acc += ipow(std::abs(x[i] - y[i]), p);
        acc /= static_cast<double>(n);
    } else {
        // Integrate |Qx(u) - Qy(u)|^p over the merged quantile breakpoints
        // i/n and j/m, compared exactly in integers.
        std::size_t i = 0;
        std::size_t j = 0;
        std::size_t prev_num = 0;  // current position u = prev_num / (n*m)
        while (i < n && j < m) {
            const std::size_t next_x = (i + 1) * m;
            const std::size_t next_y = (j + 1) * n;
            const std::size_t next = std::min(next_x, next_y);
            acc += static_cast<double>(next - prev_num) * ipow(std::abs(x[i] - y[j]), p);
            prev_num = next;
            if (next_x == next) ++i;
            if (next_y == next) ++j;
        }
        acc /= static_cast<double>(n) * static_cast<double>(m);
    }
    return p == 1 ? acc : std::pow(acc, 1.0 / p);
}

double wasserstein(std::span<const double> x, std::span<const double> y, int p) {
    std::vector<double> a(x.begin(), x.end());
    std::vector<double> b(y.begin(), y.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return wasserstein_sorted(a, b, p);
}

double wasserstein(const FrequencyCell& cell, int p) { return wasserstein(cell.golden, cell.test, p); }

void BootstrapConfig::validate() const {
    if (resamples < 1) throw Error(ErrorCode::InvalidArgument, "bootstrap needs at least one resample", "resamples");
    if (!(significance > 0.0 && significance < 1.0))
        throw Error(ErrorCode::InvalidArgument, "significance must lie in (0, 1)", "significance");
}

std::size_t bootstrap_order_index(int resamples, double significance) {
    const double k = std::ceil((1.0 - significance) * resamples - 1e-9);
    return static_cast<std::size_t>(std::clamp(k, 1.0, static_cast<double>(resamples)));
}

std::vector<double> bootstrap_null(std::span<const double> reference, std::size_t sample_size,
                                   const BootstrapConfig& cfg, int p) {
    cfg.validate();
    if (p < 1) throw Error(ErrorCode::InvalidArgument, "Wasserstein order must be at least 1", "p");
    if (reference.size() < 2) throw Error(ErrorCode::InvalidArgument, "bootstrap reference needs 2+ values", "reference");
    if (sample_size < 1) throw Error(ErrorCode::InvalidArgument, "bootstrap sample size must be positive", "sample_size");
    std::vector<double> ref(reference.begin(), reference.end());
    std::sort(ref.begin(), ref.end());
    const std::size_t n = ref.size();
    if (n > 0xffffffffu) throw Error(ErrorCode::InvalidArgument, "bootstrap reference too large", "reference");
    // Collapse ties: sorted index -> distinct value slot.
    std::vector<double> values;
    std::vector<std::uint32_t> slot(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (values.empty() || ref[i] != values.back()) values.push_back(ref[i]);
        slot[i] = static_cast<std::uint32_t>(values.size() - 1);
    }
    const std::size_t k = values.size();
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::uint32_t> a(k);
    std::vector<std::uint32_t> b(k);
    // Each 64-bit output yields two 32-bit multiply-shift index draws; the
    // per-slot counts describe the resample in sorted order.
    const auto resample = [&](std::vector<std::uint32_t>& counts) {
        std::fill(counts.begin(), counts.end(), 0u);
        for (std::size_t d = 0; d < sample_size; d += 2) {
            const std::uint64_t r = rng();
            ++counts[slot[((r & 0xffffffffu) * n) >> 32]];
            if (d + 1 < sample_size) ++counts[slot[((r >> 32) * n) >> 32]];
        }
    };
    // Sorted coupling of two equal-size resamples, walked run by run.
    const auto distance = [&]() {
        double acc = 0.0;
        std::size_t i = 0;
        std::size_t j = 0;
        std::uint32_t ra = a[0];
        std::uint32_t rb = b[0];
        while (true) {
            while (ra == 0 && ++i < k) ra = a[i];
            while (rb == 0 && ++j < k) rb = b[j];
            if (i >= k || j >= k) break;
            const std::uint32_t run = std::min(ra, rb);
            if (i != j) acc += static_cast<double>(run) * ipow(std::abs(values[i] - values[j]), p);
            ra -= run;
            rb -= run;
        }
        acc /= static_cast<double>(sample_size);
        return p == 1 ? acc : std::pow(acc, 1.0 / p);
    };
    std::vector<double> null(static_cast<std::size_t>(cfg.resamples));
    for (auto& d : null) {
        resample(a);
        resample(b);
        d = distance();
    }
    std::sort(null.begin(), null.end());
    return null;
}

double bootstrap_threshold(std::span<const double> reference, std::size_t sample_size, const BootstrapConfig& cfg,
                           int p) {
    const auto null = bootstrap_null(reference, sample_size, cfg, p);
    return null[bootstrap_order_index(cfg.resamples, cfg.significance) - 1];
}

const char* to_string(Metric m) {
    switch (m) {
        case Metric::TTest: return "ttest";
        case Metric::Wasserstein: return "wasserstein";
        case Metric::Both: return "both";
    }
    return "unknown";
}

const char* to_string(Trigger t) {
    switch (t) {
        case Trigger::None: return "none";
        case Trigger::TTest: return "ttest";
        case Trigger::Wasserstein: return "wasserstein";
        case Trigger::Both: return "both";
    }
    return "unknown";
}

Metric metric_from_string(const std::string& s) {
    if (s == "ttest") return Metric::TTest;
    if (s == "wasserstein") return Metric::Wasserstein;
    if (s == "both") return Metric::Both;
    throw Error(ErrorCode::InvalidArgument, "unknown metric '" + s + "'", "metric");
}

const char* to_string(Feature f) { return f == Feature::Raw ? "raw" : "deviation"; }

Feature feature_from_string(const std::string& s) {
    if (s == "raw") return Feature::Raw;
    if (s == "deviation") return Feature::Deviation;
    throw Error(ErrorCode::InvalidArgument, "unknown feature '" + s + "'", "feature");
}

void MetricConfig::validate() const {
    bootstrap.validate();
    if (p < 1) throw Error(ErrorCode::InvalidArgument, "Wasserstein order must be at least 1", "p");
    if (!(t_threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "t threshold must be positive", "t_threshold");
}

double Verdict::max_abs_t() const {
    double m = 0.0;
    for (const auto& s : per_frequency) m = std::max(m, std::abs(s.t));
    return m;
}

bool Verdict::any_t_exceeded() const {
    return std::any_of(per_frequency.begin(), per_frequency.end(), [](const auto& s) { return s.t_exceeded; });
}

bool Verdict::any_w_exceeded() const {
    return std::any_of(per_frequency.begin(), per_frequency.end(), [](const auto& s) { return s.w_exceeded; });
}

namespace {

json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

}  // namespace

json Verdict::to_json() const {
    json j{{"format", "pdnsense-verdict"},
           {"version", 1},
           {"decision", to_string(decision)},
           {"triggering_metric", to_string(triggering_metric)},
           {"metric", to_string(metric)},
           {"max_abs_t", number(max_abs_t())}};
    j["per_frequency"] = json::array();
    for (const auto& s : per_frequency) {
        j["per_frequency"].push_back({{"frequency_hz", s.frequency_hz},
                                      {"t", number(s.t)},
                                      {"w_distance", number(s.w_distance)},
                                      {"w_threshold", number(s.w_threshold)},
                                      {"t_exceeded", s.t_exceeded},
                                      {"w_exceeded", s.w_exceeded},
                                      {"exceeded", s.exceeded},
                                      {"t_sensor", s.t_sensor},
                                      {"w_sensor", s.w_sensor}});
    }
    return j;
}

void Verdict::write_csv(std::ostream& os) const {
    os << "# pdnsense-stats v1\n";
    os << "frequency_hz,t,w_distance,w_threshold,exceeded\n";
    const auto old = os.precision(17);
    for (const auto& s : per_frequency)
        os << s.frequency_hz << ',' << s.t << ',' << s.w_distance << ',' << s.w_threshold << ','
           << (s.exceeded ? 1 : 0) << '\n';
    os.precision(old);
}

std::vector<double> CellSummary::values() const {
    if (!samples.empty()) return samples;
    if (quantiles.empty() || count == 0) return {};
    std::vector<double> out(count);
    const double last = static_cast<double>(quantiles.size() - 1);
    for (std::size_t i = 0; i < count; ++i) {
        const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(count) * last;
        const auto lo = static_cast<std::size_t>(std::floor(u));
        const auto hi = std::min(lo + 1, quantiles.size() - 1);
        const double frac = u - static_cast<double>(lo);
        out[i] = quantiles[lo] + frac * (quantiles[hi] - quantiles[lo]);
    }
    return out;
}

TraceSummary TraceSummary::from(const TraceSet& ts, Mode mode, std::size_t resolution) {
    ts.validate();
    if (mode == Mode::Quantiles && resolution < 2)
        throw Error(ErrorCode::InvalidArgument, "quantile resolution must be at least 2", "resolution");
    TraceSummary s;
    s.mode = mode;
    s.frequencies = ts.frequencies;
    s.sensor_ids = ts.sensor_ids;
    s.base_code = ts.base_code;
    s.taps = ts.taps;
    for (const auto& codes : ts.samples) {
        CellSummary c;
        std::vector<double> x(codes.begin(), codes.end());
        const Moments m = moments(x);
        c.count = x.size();
        c.mean = m.mean;
        c.variance = m.var;
        if (mode == Mode::Samples) {
            c.samples = std::move(x);
        } else {
            std::sort(x.begin(), x.end());
            c.quantiles.resize(resolution);
            for (std::size_t q = 0; q < resolution; ++q) {
                const double pos = static_cast<double>(q) / static_cast<double>(resolution - 1) *
                                   static_cast<double>(x.size() - 1);
                const auto lo = static_cast<std::size_t>(std::floor(pos));
                const auto hi = std::min(lo + 1, x.size() - 1);
                c.quantiles[q] = x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
            }
        }
        s.cells.push_back(std::move(c));
    }
    return s;
}

json TraceSummary::to_json() const {
    json j{{"mode", mode == Mode::Samples ? "samples" : "quantiles"},
           {"frequencies_hz", frequencies},
           {"sensor_ids", sensor_ids},
           {"base_code", base_code},
           {"taps", taps}};
    j["cells"] = json::array();
    for (const auto& c : cells) {
        json cj{{"count", c.count}, {"mean", c.mean}, {"variance", c.variance}};
        if (mode == Mode::Samples) {
            // Codes are integral; store them as such to keep files compact.
            std::vector<long long> ints;
            bool integral = true;
            for (double v : c.samples) {
                integral = integral && v == std::floor(v);
                ints.push_back(static_cast<long long>(v));
            }
            if (integral) cj["samples"] = ints;
            else cj["samples"] = c.samples;
        } else {
            cj["quantiles"] = c.quantiles;
        }
        j["cells"].push_back(cj);
    }
    return j;
}

TraceSummary TraceSummary::from_json(const json& j) {
    try {
        TraceSummary s;
        const auto mode = j.at("mode").get<std::string>();
        if (mode == "samples") s.mode = Mode::Samples;
        else if (mode == "quantiles") s.mode = Mode::Quantiles;
        else throw Error(ErrorCode::Io, "unknown summary mode '" + mode + "'", "summary");
        s.frequencies = j.at("frequencies_hz").get<std::vector<double>>();
        s.sensor_ids = j.at("sensor_ids").get<std::vector<int>>();
        s.base_code = j.value("base_code", 32);
        s.taps = j.value("taps", 64);
        for (const auto& cj : j.at("cells")) {
            CellSummary c;
            c.count = cj.at("count").get<std::size_t>();
            c.mean = cj.at("mean").get<double>();
            c.variance = cj.at("variance").get<double>();
            if (cj.contains("samples")) c.samples = cj["samples"].get<std::vector<double>>();
            if (cj.contains("quantiles")) c.quantiles = cj["quantiles"].get<std::vector<double>>();
            s.cells.push_back(std::move(c));
        }
        if (s.cells.size() != s.frequencies.size() * s.sensor_ids.size())
            throw Error(ErrorCode::GridMismatch, "summary cell count does not match its grid", "summary");
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Io, std::string("malformed trace summary: ") + e.what(), "summary");
    }
}

namespace {

std::vector<double> feature(const std::vector<double>& codes, Feature f, int base) {
    std::vector<double> out(codes);
    if (f == Feature::Deviation)
        for (auto& v : out) v = std::abs(v - base);
    return out;
}

bool same_frequency(double a, double b) { return a == b || std::abs(a - b) <= 1e-12 * std::abs(a); }

struct CellScore {
    double t = 0.0;
    double w = 0.0;
    double threshold = 0.0;
};

CellScore score_cell(std::vector<double> g, std::vector<double> t, const MetricConfig& cfg, std::uint64_t seed) {
    CellScore s;
    try {
        s.t = welch_t(g, t);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateCell) throw;
        const double dm = moments(g).mean - moments(t).mean;
        s.t = dm == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), dm);
    }
    std::sort(g.begin(), g.end());
    std::sort(t.begin(), t.end());
    s.w = wasserstein_sorted(g, t, cfg.p);
    BootstrapConfig bc = cfg.bootstrap;
    bc.seed = seed;
    s.threshold = bootstrap_threshold(g, t.size(), bc, cfg.p);
    return s;
}

}  // namespace

Verdict decide(const TraceSummary& golden, const TraceSet& test, const MetricConfig& cfg) {
    cfg.validate();
    test.validate();
    if (golden.frequencies.size() != test.frequencies.size() || golden.sensor_ids != test.sensor_ids ||
        golden.cells.size() != test.samples.size())
        throw Error(ErrorCode::GridMismatch, "golden and test grids differ", "grid");
    for (std::size_t i = 0; i < test.frequencies.size(); ++i)
        if (!same_frequency(golden.frequencies[i], test.frequencies[i]))
            throw Error(ErrorCode::GridMismatch, "golden and test frequencies differ", "grid");

    const std::size_t nf = test.frequencies.size();
    const std::size_t ns = test.sensor_ids.size();
    std::vector<CellScore> scores(nf * ns);
    parallel_for(nf * ns, [&](std::size_t c) {
        const std::size_t fi = c / ns;
        const std::size_t si = c % ns;
        auto g = feature(golden.cells[c].values(), cfg.feature, golden.base_code);
        const auto& codes = test.samples[c];
        auto t = feature(std::vector<double>(codes.begin(), codes.end()), cfg.feature, test.base_code);
        scores[c] = score_cell(std::move(g), std::move(t), cfg,
                               derive_seed(derive_seed(cfg.bootstrap.seed, fi), si));
    });

    Verdict v;
    v.metric = cfg.metric;
    for (std::size_t fi = 0; fi < nf; ++fi) {
        FrequencyStat st;
        st.frequency_hz = test.frequencies[fi];
        double best_margin = -std::numeric_limits<double>::infinity();
        for (std::size_t si = 0; si < ns; ++si) {
            const auto& s = scores[fi * ns + si];
            if (st.t_sensor < 0 || std::abs(s.t) > std::abs(st.t)) {
                st.t = s.t;
                st.t_sensor = test.sensor_ids[si];
            }
            const double margin = s.w - s.threshold;
            if (st.w_sensor < 0 || margin > best_margin) {
                best_margin = margin;
                st.w_distance = s.w;
                st.w_threshold = s.threshold;
                st.w_sensor = test.sensor_ids[si];
            }
        }
        st.t_exceeded = std::abs(st.t) > cfg.t_threshold;
        st.w_exceeded = st.w_distance > st.w_threshold;
        switch (cfg.metric) {
            case Metric::TTest: st.exceeded = st.t_exceeded; break;
            case Metric::Wasserstein: st.exceeded = st.w_exceeded; break;
            case Metric::Both: st.exceeded = st.t_exceeded && st.w_exceeded; break;
        }
        v.per_frequency.push_back(st);
    }
    const bool tampered = std::any_of(v.per_frequency.begin(), v.per_frequency.end(),
                                      [](const FrequencyStat& s) { return s.exceeded; });
    v.decision = tampered ? Decision::Tampered : Decision::Clean;
    if (!tampered) v.triggering_metric = Trigger::None;
    else if (cfg.metric == Metric::Both) v.triggering_metric = Trigger::Both;
    else v.triggering_metric = cfg.metric == Metric::TTest ? Trigger::TTest : Trigger::Wasserstein;
    return v;
}

Verdict decide(const TraceSet& golden, const TraceSet& test, const MetricConfig& cfg) {
    return decide(TraceSummary::from(golden), test, cfg);
}

}  // namespace pdnsense
