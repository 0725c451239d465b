// pdnsense: command-line front end for enrolment, verification and the
// case-study reproductions.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pdnsense/cavity.hpp"
#include "pdnsense/common.hpp"
#include "pdnsense/experiment.hpp"
#include "pdnsense/network.hpp"
#include "pdnsense/protocol.hpp"
#include "pdnsense/solver.hpp"
#include "pdnsense/tamper.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pdnsense;

namespace {

constexpr int kExitClean = 0;
constexpr int kExitError = 1;
constexpr int kExitTampered = 2;

struct Common {
    std::string config;
    std::string scenario;
    std::uint64_t key_seed = 1;
    std::uint64_t acq_seed = 1000;
    int traces = 500;
    std::string metric = "both";
    std::string feature = "deviation";
    std::string out = ".";
    std::uint64_t bootstrap_seed = 7;
    int resamples = 1000;
    double significance = 0.01;
    double t_threshold = 4.5;
    int p = 1;
    double noise = 0.5e-3;
    double gain = 10.0;
    int taps = 64;
    double current = 0.05;
    int harmonics = 1;
};

std::string default_config_path() {
    if (const char* dir = std::getenv("PDNSENSE_CONFIG_DIR")) {
        const fs::path p = fs::path(dir) / "reference.json";
        if (fs::exists(p)) return p.string();
    }
    return {};
}

PdnNetwork load_reference(const Common& c) {
    const std::string path = c.config.empty() ? default_config_path() : c.config;
    if (path.empty()) return build_reference_network(NetworkConfig::reference());
    if (!fs::exists(path)) throw Error(ErrorCode::Io, "config file '" + path + "' does not exist", "config");
    return load_network(path);
}

PdnNetwork device_network(const PdnNetwork& ref, const std::string& scenario) {
    if (scenario.empty() || scenario == "none") return ref;
    if (fs::exists(scenario)) {
        std::ifstream in(scenario);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Io, "cannot parse scenario file '" + scenario + "'", "scenario");
        }
        return apply(ref, tamper_event_from_json(j));
    }
    if (scenario == "adjacent") return apply(ref, adjacent_replacement());
    return apply(ref, find_scenario(scenario).event);
}

MetricConfig metric_config(const Common& c) {
    MetricConfig m;
    m.metric = metric_from_string(c.metric);
    m.feature = feature_from_string(c.feature);
    m.t_threshold = c.t_threshold;
    m.p = c.p;
    m.bootstrap.resamples = c.resamples;
    m.bootstrap.significance = c.significance;
    m.bootstrap.seed = c.bootstrap_seed;
    m.validate();
    return m;
}

AcquisitionConfig acquisition_config(const Common& c) {
    AcquisitionConfig a;
    a.sensor.noise_sigma = c.noise;
    a.sensor.gain = c.gain;
    a.sensor.taps = c.taps;
    a.sensor.base_code = c.taps / 2;
    a.actuator.current_amplitude = c.current;
    a.actuator.harmonics = c.harmonics;
    a.validate();
    return a;
}

void add_network_flags(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "Network config JSON (default: $PDNSENSE_CONFIG_DIR/reference.json, "
                                          "else the built-in reference topology)");
}

void add_sampling_flags(CLI::App* app, Common& c, std::uint64_t& seed) {
    app->add_option("--acq-seed", seed, "Acquisition RNG seed")->capture_default_str();
    app->add_option("--traces", c.traces, "Samples per (frequency, sensor) cell")->capture_default_str();
}

// Sensor settings are fixed at enrolment and stored in the signature.
void add_sensor_flags(CLI::App* app, Common& c) {
    app->add_option("--noise", c.noise, "Sensor noise sigma in volts")->capture_default_str();
    app->add_option("--gain", c.gain, "TDC gain in codes per volt")->capture_default_str();
    app->add_option("--taps", c.taps, "TDC delay-line taps")->capture_default_str();
    app->add_option("--current", c.current, "Actuator current amplitude in amperes")->capture_default_str();
    app->add_option("--harmonics", c.harmonics, "Odd square-wave harmonics modelled (1-5)")->capture_default_str();
}

void add_metric_flags(CLI::App* app, Common& c) {
    app->add_option("--metric", c.metric, "Decision metric")
        ->check(CLI::IsMember({"ttest", "wasserstein", "both"}))
        ->capture_default_str();
    app->add_option("--feature", c.feature, "Statistic input: deviation (|code - base|) or raw codes")
        ->check(CLI::IsMember({"deviation", "raw"}))
        ->capture_default_str();
    app->add_option("--t-threshold", c.t_threshold, "|t| rejection threshold")->capture_default_str();
    app->add_option("--wasserstein-p", c.p, "Wasserstein order")->capture_default_str();
    app->add_option("--resamples", c.resamples, "Bootstrap resamples")->capture_default_str();
    app->add_option("--significance", c.significance, "Bootstrap significance")->capture_default_str();
    app->add_option("--bootstrap-seed", c.bootstrap_seed, "Bootstrap RNG seed")->capture_default_str();
}

void write_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream os(p);
    os << text;
    if (!os) throw Error(ErrorCode::Io, "cannot write '" + p.string() + "'", "out");
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulated PDN impedance fingerprinting: enrolment, verification and case studies"};
    app.require_subcommand(1);
    Common c;

    // profile
    auto* profile = app.add_subcommand("profile", "Solve a transfer impedance profile and write it as CSV");
    add_network_flags(profile, c);
    std::string source, observe;
    double fmin = 10e3, fmax = 5e9;
    std::size_t points = 200;
    profile->add_option("--source", source, "Source node name (default: verifier probe node)");
    profile->add_option("--observe", observe, "Observation node name (default: source)");
    profile->add_option("--fmin", fmin, "Lowest frequency in Hz")->capture_default_str();
    profile->add_option("--fmax", fmax, "Highest frequency in Hz")->capture_default_str();
    profile->add_option("--points", points, "Log-spaced points")->capture_default_str();
    profile->add_option("--out", c.out, "Output CSV path")->required();
    profile->add_option("--scenario", c.scenario, "Tamper preset name or event JSON applied first");

    // band
    auto* band = app.add_subcommand("band", "Print the default sweep band or a cavity-derived band");
    add_network_flags(band, c);
    std::size_t band_size = 64;
    std::vector<double> cavity;
    int cavity_count = 0;
    band->add_option("--size", band_size, "Points in the resonant band")->capture_default_str();
    band->add_option("--cavity", cavity, "Cavity dimensions a b d in metres (vacuum)")->expected(3);
    band->add_option("--count", cavity_count, "Frequencies requested from the cavity estimate");

    // scenarios
    auto* scen = app.add_subcommand("scenarios", "List tamper presets as JSON");

    // enroll
    auto* enroll_cmd = app.add_subcommand("enroll", "Record a golden signature on the trusted network");
    add_network_flags(enroll_cmd, c);
    add_sampling_flags(enroll_cmd, c, c.acq_seed);
    add_sensor_flags(enroll_cmd, c);
    std::string store_dir = "signatures";
    std::string device_id = "device-0";
    std::string summary_mode = "samples";
    int K = 4, M = 4, N = 8;
    std::size_t quantiles = 101;
    enroll_cmd->add_option("--key-seed", c.key_seed, "Key generation seed (also fixes the nonce)")->capture_default_str();
    enroll_cmd->add_option("--store", store_dir, "Signature store directory")->capture_default_str();
    enroll_cmd->add_option("--device-id", device_id, "Device identifier")->capture_default_str();
    enroll_cmd->add_option("-K,--actuators", K, "Actuators per key")->capture_default_str();
    enroll_cmd->add_option("-M,--sensors", M, "Sensors per key")->capture_default_str();
    enroll_cmd->add_option("-N,--frequencies", N, "Frequencies per key")->capture_default_str();
    enroll_cmd->add_option("--band-size", band_size, "Candidate band size")->capture_default_str();
    enroll_cmd->add_option("--summary", summary_mode, "Stored summary: samples or quantiles")
        ->check(CLI::IsMember({"samples", "quantiles"}))
        ->capture_default_str();
    enroll_cmd->add_option("--quantiles", quantiles, "Quantile levels in quantile mode")->capture_default_str();

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "Test a device against a stored signature (exit 0 clean, 2 tampered)");
    add_network_flags(verify_cmd, c);
    std::uint64_t verify_seed = 2000;
    add_sampling_flags(verify_cmd, c, verify_seed);
    add_metric_flags(verify_cmd, c);
    std::string signature;
    verify_cmd->add_option("--signature", signature, "Signature file path or id")->required();
    verify_cmd->add_option("--store", store_dir, "Signature store directory (default: the signature's directory)");
    verify_cmd->add_option("--scenario", c.scenario, "Tamper preset name or event JSON applied to the device");
    verify_cmd->add_option("--out", c.out, "Output directory for verdict.json and stats.csv")->capture_default_str();

    // reproduce
    auto* repro = app.add_subcommand("reproduce", "Run a case study end to end");
    add_network_flags(repro, c);
    add_metric_flags(repro, c);
    std::string which = "all";
    ExperimentOptions eo;
    repro->add_option("--case", which, "Case study 1-4 or all")
        ->check(CLI::IsMember({"1", "2", "3", "4", "all"}))
        ->capture_default_str();
    repro->add_option("--out", c.out, "Output directory")->capture_default_str();
    repro->add_option("--key-seed", eo.key_seed, "Key generation seed")->capture_default_str();
    repro->add_option("--acq-seed", eo.acq_seed, "Acquisition seed")->capture_default_str();
    repro->add_option("--traces", eo.traces, "Samples per cell (0: 500, or 1000 for case 2)")->capture_default_str();
    repro->add_option("-K,--actuators", eo.K, "Actuators per key")->capture_default_str();
    repro->add_option("-M,--sensors", eo.M, "Sensors per key")->capture_default_str();
    repro->add_option("-N,--frequencies", eo.N, "Frequencies per key")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << json{{"error", "invalid_argument"}, {"message", e.what()}, {"parameter", ""}}.dump() << '\n';
        return kExitError;
    }

    try {
        if (*profile) {
            const PdnNetwork net = device_network(load_reference(c), c.scenario);
            const auto resolve = [&](const std::string& name) {
                if (name.empty()) return probe_node(net, 0);
                if (auto id = net.find(name)) return *id;
                throw Error(ErrorCode::InvalidArgument, "no node named '" + name + "'", "node");
            };
            const NodeId s = resolve(source);
            const NodeId o = observe.empty() ? s : resolve(observe);
            const auto prof = solve_impedance(net, s, o, log_space(fmin, fmax, points));
            std::ostringstream os;
            prof.write_csv(os);
            write_file(c.out, os.str());
            print(json{{"profile", c.out}, {"source", net.name(s)}, {"observe", net.name(o)}, {"points", points}});
            return kExitClean;
        }
        if (*band) {
            if (!cavity.empty()) {
                CavityGeometry g{cavity[0], cavity[1], cavity[2]};
                const auto freqs = suggest_sweep_band(g, cavity_count > 0 ? cavity_count : 5);
                json modes = json::array();
                for (const auto& m : cavity_resonances(g, 2))
                    modes.push_back({{"mnp", m.mnp}, {"frequency_hz", m.frequency_hz}});
                print(json{{"source", "cavity"}, {"frequencies_hz", freqs}, {"modes", modes}});
            } else {
                const PdnNetwork net = load_reference(c);
                const NodeId probe = probe_node(net, 0);
                print(json{{"source", "resonance"},
                           {"probe_node", net.name(probe)},
                           {"resonance_hz", dominant_resonance(net, probe)},
                           {"frequencies_hz", resonant_band(net, band_size)}});
            }
            return kExitClean;
        }
        if (*scen) {
            json out = json::array();
            for (const auto& s : scenario_catalog())
                out.push_back({{"name", s.name}, {"family", s.family}, {"title", s.title}, {"event", to_json(s.event)}});
            out.push_back({{"name", "adjacent"},
                           {"family", 3},
                           {"title", "same re-placement on the adjacent chiplet"},
                           {"event", to_json(adjacent_replacement())}});
            print(out);
            return kExitClean;
        }
        if (*enroll_cmd) {
            const PdnNetwork net = load_reference(c);
            ProtocolConfig pc;
            pc.acquisition = acquisition_config(c);
            pc.device_id = device_id;
            pc.summary_mode = summary_mode == "quantiles" ? TraceSummary::Mode::Quantiles : TraceSummary::Mode::Samples;
            pc.quantile_resolution = quantiles;
            const auto band_freqs = resonant_band(net, band_size);
            const auto key = generate_key(pc.acquisition.grid_size, K, M, band_freqs, N, c.key_seed);
            SignatureStore store(store_dir);
            const auto sig = enroll(net, key, c.traces, c.acq_seed, store, pc);
            print(json{{"signature", store.path_for(sig.id).string()}, {"id", sig.id}, {"key", to_json(sig.key)}});
            return kExitClean;
        }
        if (*verify_cmd) {
            fs::path sig_path = signature;
            if (!fs::exists(sig_path)) sig_path = fs::path(store_dir) / (signature + ".json");
            if (!fs::exists(sig_path)) throw Error(ErrorCode::Io, "signature '" + signature + "' not found", "signature");
            const fs::path root = verify_cmd->count("--store") ? fs::path(store_dir) : sig_path.parent_path();
            SignatureStore store(root.empty() ? fs::path(".") : root);
            GoldenSignature sig = store.load(sig_path);
            const PdnNetwork device = device_network(load_reference(c), c.scenario);
            const MetricConfig m = metric_config(c);
            const Verdict v = verify(device, sig, c.traces, verify_seed, m, &store);
            json vj = v.to_json();
            vj["signature"] = sig.id;
            write_file(fs::path(c.out) / "verdict.json", vj.dump(2) + "\n");
            std::ostringstream os;
            v.write_csv(os);
            write_file(fs::path(c.out) / "stats.csv", os.str());
            print(json{{"decision", to_string(v.decision)},
                       {"triggering_metric", to_string(v.triggering_metric)},
                       {"max_abs_t", v.max_abs_t()},
                       {"verdict", (fs::path(c.out) / "verdict.json").string()}});
            return v.decision == Decision::Tampered ? kExitTampered : kExitClean;
        }
        if (*repro) {
            const PdnNetwork ref = load_reference(c);
            eo.metric = metric_config(c);
            eo.band = resonant_band(ref, eo.band_size);
            json all = json::array();
            for (int id = 1; id <= 4; ++id) {
                if (which != "all" && std::stoi(which) != id) continue;
                const auto t0 = std::chrono::steady_clock::now();
                const auto report = run_case(id, ref, eo, fs::path(c.out) / ("case" + std::to_string(id)));
                const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                json s = report.summary;
                s.erase("key");
                s.erase("event");
                s["seconds"] = secs;
                all.push_back(s);
            }
            print(all);
            return kExitClean;
        }
    } catch (const Error& e) {
        std::cerr << json{{"error", to_string(e.code())}, {"message", e.what()}, {"parameter", e.parameter()}}.dump()
                  << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "internal"}, {"message", e.what()}, {"parameter", ""}}.dump() << '\n';
        return kExitError;
    }
    return kExitError;
}
