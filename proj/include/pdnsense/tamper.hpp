#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "pdnsense/network.hpp"

namespace pdnsense {

enum class TamperKind { DesignSwap, InterposerSllChange, FarReplacement, TrojanInsert };

const char* to_string(TamperKind kind);
TamperKind tamper_kind_from_string(const std::string& s);

/// Relocation of an existing on-die branch between two mesh nodes
/// (indices into the chiplet's row-major mesh).
struct BranchMove {
    int from = 0;
    int to = 0;
};

struct TamperEvent {
    TamperKind kind = TamperKind::TrojanInsert;
    Region target_region = Region::die(1);
    std::string label;

    /// design_swap / trojan_insert: total added capacitance, split evenly
    /// over `nodes`, each branch attached through `routing_resistance`.
    double added_capacitance = 0.0;
    std::vector<int> nodes;
    double routing_resistance = 1.0;

    /// interposer_sll_change: signed link delta on the given bundle.
    int sll_delta = 0;
    std::size_t sll_bundle = 0;

    /// far_replacement: branch relocations on the target chiplet.
    std::vector<BranchMove> moves;

    /// Upper bound on trojan_insert capacitance.
    double trojan_cap = 100e-12;

    /// Throws Error(InvalidArgument) for malformed parameters and
    /// Error(InvalidNetwork) when the event does not fit `net`.
    void validate(const PdnNetwork& net) const;
};

/// Returns a modified copy of `net`; `net` itself is untouched.
PdnNetwork apply(const PdnNetwork& net, const TamperEvent& event);

struct Scenario {
    std::string name;    // e.g. "trojan", "aes"
    int family = 0;      // 1..4
    std::string title;
    TamperEvent event;
};

/// Preset events; each is checked against the default reference network to
/// move the verifier driving-point |Z| by at least `detectability_floor`
/// (relative) at one or more profile frequencies. The check runs once.
const std::vector<Scenario>& scenario_catalog();
const Scenario& find_scenario(const std::string& name);

/// Same-magnitude counterpart of the far_replacement preset on the chiplet
/// adjacent to the verifier.
TamperEvent adjacent_replacement();

/// Largest relative change in driving-point |Z| at the verifier probe node
/// over a log profile from 10 kHz to 5 GHz.
double max_relative_change(const PdnNetwork& before, const PdnNetwork& after, std::size_t points = 16);

inline constexpr double kDetectabilityFloor = 1e-6;

nlohmann::json to_json(const TamperEvent& event);
TamperEvent tamper_event_from_json(const nlohmann::json& j);

}  // namespace pdnsense
