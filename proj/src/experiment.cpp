#include "pdnsense/experiment.hpp"

#include <fstream>

#include "pdnsense/common.hpp"
#include "pdnsense/protocol.hpp"
#include "pdnsense/solver.hpp"
#include "pdnsense/tamper.hpp"

namespace pdnsense {

using nlohmann::json;
namespace fs = std::filesystem;

int default_traces(int case_id) { return case_id == 2 ? 1000 : 500; }

const Verdict& CaseReport::verdict(const std::string& name) const {
    for (const auto& v : verdicts)
        if (v.name == name) return v.verdict;
    throw Error(ErrorCode::InvalidArgument, "case report has no verdict '" + name + "'");
}

json detection_json(const Verdict& v) {
    return json{{"decision", to_string(v.decision)},
                {"triggering_metric", to_string(v.triggering_metric)},
                {"ttest_detected", v.any_t_exceeded() ? "yes" : "no"},
                {"wasserstein_detected", v.any_w_exceeded() ? "yes" : "no"},
                {"max_abs_t", v.max_abs_t()}};
}

namespace {

class Runner {
public:
    Runner(const PdnNetwork& ref, const ExperimentOptions& opts, int case_id, fs::path out)
        : opts_(opts), out_(std::move(out)) {
        const auto band = opts.band.empty() ? resonant_band(ref, opts.band_size) : opts.band;
        key_ = generate_key(opts.grid_size, opts.K, opts.M, band, opts.N, opts.key_seed);
        traces_ = opts.traces > 0 ? opts.traces : default_traces(case_id);
        if (traces_ < 2) throw Error(ErrorCode::InvalidArgument, "at least two traces per cell are required", "traces");
        if (!out_.empty()) {
            std::error_code ec;
            fs::create_directories(out_, ec);
            if (ec) throw Error(ErrorCode::Io, "cannot create output directory '" + out_.string() + "'", "out");
        }
    }

    const VerificationKey& key() const { return key_; }
    int traces() const { return traces_; }

    TraceSet acquire_on(const PdnNetwork& net, std::uint64_t stream, const std::string& name) {
        const auto blocks = monitor_grid(net, opts_.grid_size, opts_.acquisition.verifier);
        TraceSet ts = acquire(net, blocks, key_.actuator_ids, key_.sensor_ids, key_.frequencies, traces_,
                              derive_seed(opts_.acq_seed, stream), opts_.acquisition);
        if (!out_.empty() && opts_.write_traces) {
            const fs::path csv = out_ / ("traces_" + name + ".csv");
            const fs::path meta = out_ / ("traces_" + name + ".json");
            std::ofstream c(csv);
            ts.write_csv(c);
            std::ofstream m(meta);
            m << ts.sidecar().dump(1) << '\n';
            if (!c || !m) throw Error(ErrorCode::Io, "cannot write traces under '" + out_.string() + "'", "out");
            files.push_back(csv);
            files.push_back(meta);
        }
        return ts;
    }

    Verdict compare(const TraceSet& golden, const TraceSet& test, const std::string& name, std::size_t stream) {
        MetricConfig m = opts_.metric;
        m.bootstrap.seed = derive_seed(opts_.metric.bootstrap.seed, stream);
        Verdict v = decide(golden, test, m);
        if (!out_.empty()) {
            const fs::path csv = out_ / ("stats_" + name + ".csv");
            std::ofstream os(csv);
            v.write_csv(os);
            if (!os) throw Error(ErrorCode::Io, "cannot write '" + csv.string() + "'", "out");
            files.push_back(csv);
        }
        return v;
    }

    void write_json(const std::string& name, const json& j) {
        if (out_.empty()) return;
        const fs::path p = out_ / name;
        std::ofstream os(p);
        os << j.dump(2) << '\n';
        if (!os) throw Error(ErrorCode::Io, "cannot write '" + p.string() + "'", "out");
        files.push_back(p);
    }

    const fs::path& out() const { return out_; }

    std::vector<fs::path> files;

private:
    ExperimentOptions opts_;
    fs::path out_;
    VerificationKey key_;
    int traces_ = 0;
};

double mean_sensor_distance(const TraceSet& a, const TraceSet& b, std::size_t fi, const MetricConfig& m) {
    double sum = 0.0;
    for (std::size_t si = 0; si < a.sensor_ids.size(); ++si) {
        std::vector<double> x(a.cell(fi, si).begin(), a.cell(fi, si).end());
        std::vector<double> y(b.cell(fi, si).begin(), b.cell(fi, si).end());
        if (m.feature == Feature::Deviation) {
            for (auto& v : x) v = std::abs(v - a.base_code);
            for (auto& v : y) v = std::abs(v - b.base_code);
        }
        sum += wasserstein(x, y, m.p);
    }
    return sum / static_cast<double>(a.sensor_ids.size());
}

}  // namespace

CaseReport run_case(int case_id, const PdnNetwork& ref, const ExperimentOptions& opts, const fs::path& out_dir) {
    if (case_id < 1 || case_id > 4) throw Error(ErrorCode::InvalidArgument, "case must be 1, 2, 3 or 4", "case");
    Runner run(ref, opts, case_id, out_dir);
    CaseReport report;
    report.case_id = case_id;
    report.traces = run.traces();

    json summary{{"format", "pdnsense-reproduce"},
                 {"version", 1},
                 {"case", case_id},
                 {"traces", run.traces()},
                 {"trace_sets", 3},
                 {"key", to_json(run.key())},
                 {"metric", to_string(opts.metric.metric)},
                 {"feature", to_string(opts.metric.feature)}};

    if (case_id == 1) {
        report.title = "design swap";
        const std::vector<std::string> names{"aes", "fft", "cnn"};
        std::vector<TraceSet> golden;
        std::vector<TraceSet> retest;
        for (std::size_t i = 0; i < names.size(); ++i) {
            const PdnNetwork net = apply(ref, find_scenario(names[i]).event);
            golden.push_back(run.acquire_on(net, 2 * i, names[i] + "_golden"));
            retest.push_back(run.acquire_on(net, 2 * i + 1, names[i] + "_retest"));
        }
        json pairs = json::array();
        bool distinguishable = true;
        bool self_clean = true;
        std::size_t stream = 0;
        std::ofstream avg;
        if (!run.out().empty()) {
            avg.open(run.out() / "avg_distance.csv");
            avg << "# pdnsense-avg-distance v1\n" << "frequency_hz,golden,test,mean_w_distance\n";
            avg.precision(17);
            run.files.push_back(run.out() / "avg_distance.csv");
        }
        for (std::size_t a = 0; a < names.size(); ++a) {
            for (std::size_t b = 0; b < names.size(); ++b) {
                const std::string label = names[a] + "_vs_" + names[b];
                const Verdict v = run.compare(golden[a], retest[b], label, stream++);
                if (a == b) self_clean = self_clean && v.decision == Decision::Clean;
                else distinguishable = distinguishable && v.decision == Decision::Tampered;
                json pj = detection_json(v);
                pj["golden"] = names[a];
                pj["test"] = names[b];
                pairs.push_back(pj);
                report.verdicts.push_back({label, v});
                if (avg.is_open())
                    for (std::size_t fi = 0; fi < golden[a].frequencies.size(); ++fi)
                        avg << golden[a].frequencies[fi] << ',' << names[a] << ',' << names[b] << ','
                            << mean_sensor_distance(golden[a], retest[b], fi, opts.metric) << '\n';
            }
        }
        summary["pairs"] = pairs;
        summary["pairwise_distinguishable"] = distinguishable;
        summary["self_retest_clean"] = self_clean;
        summary["trace_sets"] = 2 * names.size();
    } else {
        const Scenario& sc = find_scenario(case_id == 2 ? "sll" : case_id == 3 ? "far" : "trojan");
        report.title = sc.title;
        const TraceSet golden = run.acquire_on(ref, 0, "golden");
        const TraceSet retest = run.acquire_on(ref, 1, "retest");
        const TraceSet tampered = run.acquire_on(apply(ref, sc.event), 2, "tampered");
        const Verdict clean_v = run.compare(golden, retest, "clean", 0);
        const Verdict tamper_v = run.compare(golden, tampered, "tampered", 1);
        report.verdicts.push_back({"clean", clean_v});
        report.verdicts.push_back({"tampered", tamper_v});
        summary["scenario"] = sc.name;
        summary["event"] = to_json(sc.event);
        summary["clean"] = detection_json(clean_v);
        summary["tampered"] = detection_json(tamper_v);
        summary["detected"] = tamper_v.decision == Decision::Tampered;
        summary["false_alarm"] = clean_v.decision == Decision::Tampered;
        if (case_id == 3) {
            const TraceSet adjacent = run.acquire_on(apply(ref, adjacent_replacement()), 3, "adjacent");
            const Verdict adj_v = run.compare(golden, adjacent, "adjacent", 2);
            report.verdicts.push_back({"adjacent", adj_v});
            summary["adjacent"] = detection_json(adj_v);
            summary["far_max_abs_t"] = tamper_v.max_abs_t();
            summary["adjacent_max_abs_t"] = adj_v.max_abs_t();
            summary["attenuated_with_distance"] = tamper_v.max_abs_t() < adj_v.max_abs_t();
            summary["trace_sets"] = 4;
        }
    }
    summary["title"] = report.title;
    run.write_json("summary.json", summary);
    report.summary = summary;
    report.files = run.files;
    return report;
}

}  // namespace pdnsense
