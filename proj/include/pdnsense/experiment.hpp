#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdnsense/network.hpp"
#include "pdnsense/sensing.hpp"
#include "pdnsense/stats.hpp"

namespace pdnsense {

struct ExperimentOptions {
    int grid_size = 32;
    int K = 4;
    int M = 4;
    int N = 16;
    std::size_t band_size = 64;
    std::vector<double> band;  // empty: resonant band of the reference network
    std::uint64_t key_seed = 1;
    std::uint64_t acq_seed = 1000;
    int traces = 0;  // 0 selects the case default
    MetricConfig metric;
    AcquisitionConfig acquisition;
    bool write_traces = true;
};

/// Trace count each case study uses unless overridden.
int default_traces(int case_id);

struct NamedVerdict {
    std::string name;
    Verdict verdict;
};

struct CaseReport {
    int case_id = 0;
    std::string title;
    int traces = 0;
    std::vector<NamedVerdict> verdicts;
    nlohmann::json summary;
    std::vector<std::filesystem::path> files;

    const Verdict& verdict(const std::string& name) const;
};

/// Runs case study 1..4 against `reference`: a golden acquisition, a clean
/// re-test and one or more tampered tests, all under one key. Writes
/// per-frequency CSVs and summary.json under `out_dir` when non-empty.
CaseReport run_case(int case_id, const PdnNetwork& reference, const ExperimentOptions& opts,
                    const std::filesystem::path& out_dir = {});

nlohmann::json detection_json(const Verdict& v);

}  // namespace pdnsense
