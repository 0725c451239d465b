#include "pdnsense/tamper.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pdnsense/common.hpp"
#include "pdnsense/solver.hpp"

namespace pdnsense {

using nlohmann::json;

const char* to_string(TamperKind kind) {
    switch (kind) {
        case TamperKind::DesignSwap: return "design_swap";
        case TamperKind::InterposerSllChange: return "interposer_sll_change";
        case TamperKind::FarReplacement: return "far_replacement";
        case TamperKind::TrojanInsert: return "trojan_insert";
    }
    return "unknown";
}

TamperKind tamper_kind_from_string(const std::string& s) {
    if (s == "design_swap") return TamperKind::DesignSwap;
    if (s == "interposer_sll_change") return TamperKind::InterposerSllChange;
    if (s == "far_replacement") return TamperKind::FarReplacement;
    if (s == "trojan_insert") return TamperKind::TrojanInsert;
    throw Error(ErrorCode::InvalidArgument, "unknown tamper kind '" + s + "'", "kind");
}

namespace {

int target_chiplet(const PdnNetwork& net, const TamperEvent& ev) {
    if (ev.target_region.kind != RegionKind::Chiplet)
        throw Error(ErrorCode::InvalidArgument, std::string(to_string(ev.kind)) + " must target a chiplet region",
                    "target_region");
    const int k = ev.target_region.chiplet;
    if (k < 0 || k >= net.chiplet_count())
        throw Error(ErrorCode::InvalidNetwork, "unknown region " + to_string(ev.target_region), "target_region");
    return k;
}

void check_mesh_index(const PdnNetwork& net, int k, int idx, const char* what) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= net.die_nodes(k).size())
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " lies outside the chiplet mesh", "nodes");
}

}  // namespace

void TamperEvent::validate(const PdnNetwork& net) const {
    switch (kind) {
        case TamperKind::DesignSwap:
        case TamperKind::TrojanInsert: {
            const int k = target_chiplet(net, *this);
            if (!(added_capacitance > 0.0) || !std::isfinite(added_capacitance))
                throw Error(ErrorCode::InvalidArgument, "added capacitance must be positive", "added_capacitance");
            if (!(routing_resistance > 0.0) || !std::isfinite(routing_resistance))
                throw Error(ErrorCode::InvalidArgument, "routing resistance must be positive", "routing_resistance");
            if (nodes.empty()) throw Error(ErrorCode::InvalidArgument, "no attachment nodes given", "nodes");
            for (int n : nodes) check_mesh_index(net, k, n, "attachment node");
            if (kind == TamperKind::TrojanInsert && added_capacitance > trojan_cap)
                throw Error(ErrorCode::InvalidArgument, "trojan capacitance exceeds the dormant-footprint cap",
                            "added_capacitance");
            break;
        }
        case TamperKind::InterposerSllChange: {
            if (target_region.kind != RegionKind::Interposer)
                throw Error(ErrorCode::InvalidArgument, "SLL change must target the interposer region",
                            "target_region");
            if (sll_bundle >= net.sll_bundles().size())
                throw Error(ErrorCode::InvalidNetwork, "network has no SLL bundle " + std::to_string(sll_bundle),
                            "sll_bundle");
            if (sll_delta == 0) throw Error(ErrorCode::InvalidArgument, "SLL delta must be nonzero", "sll_delta");
            const auto have = static_cast<long>(net.sll_bundles()[sll_bundle].links.size());
            if (have + sll_delta < 0)
                throw Error(ErrorCode::InvalidArgument, "SLL delta removes more links than exist", "sll_delta");
            break;
        }
        case TamperKind::FarReplacement: {
            const int k = target_chiplet(net, *this);
            if (moves.empty()) throw Error(ErrorCode::InvalidArgument, "no branch moves given", "moves");
            for (const auto& m : moves) {
                check_mesh_index(net, k, m.from, "move source");
                check_mesh_index(net, k, m.to, "move destination");
                if (m.from == m.to) throw Error(ErrorCode::InvalidArgument, "move source equals destination", "moves");
            }
            break;
        }
    }
}

PdnNetwork apply(const PdnNetwork& net, const TamperEvent& ev) {
    ev.validate(net);
    PdnNetwork out = net;
    switch (ev.kind) {
        case TamperKind::DesignSwap:
        case TamperKind::TrojanInsert: {
            const int k = ev.target_region.chiplet;
            const double each = ev.added_capacitance / static_cast<double>(ev.nodes.size());
            double placed = 0.0;
            for (std::size_t i = 0; i < ev.nodes.size(); ++i) {
                // The last branch absorbs rounding so the total is exact.
                const double c = i + 1 == ev.nodes.size() ? ev.added_capacitance - placed : each;
                placed += c;
                out.add_die_branch(k, out.die_nodes(k)[static_cast<std::size_t>(ev.nodes[i])], ev.routing_resistance, c);
            }
            break;
        }
        case TamperKind::InterposerSllChange: {
            for (int i = 0; i < ev.sll_delta; ++i) out.add_sll_link(ev.sll_bundle);
            for (int i = 0; i < -ev.sll_delta; ++i) out.remove_sll_link(ev.sll_bundle);
            break;
        }
        case TamperKind::FarReplacement: {
            const int k = ev.target_region.chiplet;
            const auto& mesh = out.die_nodes(k);
            for (const auto& m : ev.moves) {
                const NodeId from = mesh[static_cast<std::size_t>(m.from)];
                const NodeId to = mesh[static_cast<std::size_t>(m.to)];
                auto& brs = out.mutable_branches();
                auto it = std::find_if(brs.begin(), brs.end(),
                                       [&](const DieBranch& b) { return b.chiplet == k && b.attach == from; });
                if (it == brs.end())
                    throw Error(ErrorCode::InvalidArgument,
                                "no on-die branch at mesh node " + std::to_string(m.from) + " of " +
                                    to_string(ev.target_region),
                                "moves");
                it->attach = to;
                out.mutable_elements()[it->resistor].a = to;
            }
            break;
        }
    }
    out.validate();
    return out;
}

namespace {

std::vector<double> profile_magnitudes(const PdnNetwork& net, const std::vector<double>& freqs) {
    const NodeId probe = probe_node(net, 0);
    const auto z = solve_impedance(net, probe, probe, freqs);
    std::vector<double> out;
    for (const auto& v : z.pairs[0].values) out.push_back(std::abs(v));
    return out;
}

double max_relative_change(const std::vector<double>& before, const PdnNetwork& after,
                           const std::vector<double>& freqs) {
    const auto za = profile_magnitudes(after, freqs);
    double best = 0.0;
    for (std::size_t i = 0; i < freqs.size(); ++i) best = std::max(best, std::abs(za[i] - before[i]) / before[i]);
    return best;
}

}  // namespace

double max_relative_change(const PdnNetwork& before, const PdnNetwork& after, std::size_t points) {
    const auto freqs = log_space(10e3, 5e9, points);
    return max_relative_change(profile_magnitudes(before, freqs), after, freqs);
}

namespace {

TamperEvent design(const char* label, double c, std::vector<int> nodes) {
    TamperEvent ev;
    ev.kind = TamperKind::DesignSwap;
    ev.target_region = Region::die(1);
    ev.label = label;
    ev.added_capacitance = c;
    ev.nodes = std::move(nodes);
    ev.routing_resistance = 0.1;
    return ev;
}

TamperEvent replacement(int chiplet, const char* label) {
    TamperEvent ev;
    ev.kind = TamperKind::FarReplacement;
    ev.target_region = Region::die(chiplet);
    ev.label = label;
    ev.moves = {{0, 15}, {5, 14}};
    return ev;
}

std::vector<Scenario> build_catalog() {
    std::vector<Scenario> cat;
    cat.push_back({"aes", 1, "design swap: AES", design("AES", 2e-9, {1, 6})});
    cat.push_back({"fft", 1, "design swap: FFT", design("FFT", 3.5e-9, {2, 7, 11})});
    cat.push_back({"cnn", 1, "design swap: CNN", design("CNN", 5e-9, {3, 9, 12, 14})});

    TamperEvent sll;
    sll.kind = TamperKind::InterposerSllChange;
    sll.target_region = Region::interposer();
    sll.label = "SLL 129 to 133";
    sll.sll_delta = 4;
    cat.push_back({"sll", 2, "interposer SLL count change", sll});

    cat.push_back({"far", 3, "far chiplet re-placement", replacement(2, "config1 to config2 on chiplet(2)")});

    TamperEvent ht;
    ht.kind = TamperKind::TrojanInsert;
    ht.target_region = Region::die(1);
    ht.label = "AES-T1100-like dormant trojan";
    ht.added_capacitance = 10e-12;
    ht.nodes = {10, 15};
    ht.routing_resistance = 1.0;
    cat.push_back({"trojan", 4, "dormant hardware trojan", ht});

    const PdnNetwork ref = build_reference_network(NetworkConfig::reference());
    const auto freqs = log_space(10e3, 5e9, 16);
    const auto base = profile_magnitudes(ref, freqs);
    for (const auto& s : cat) {
        const double change = max_relative_change(base, apply(ref, s.event), freqs);
        if (!(change >= kDetectabilityFloor))
            throw std::logic_error("preset '" + s.name + "' is below the detectability floor");
    }
    return cat;
}

}  // namespace

const std::vector<Scenario>& scenario_catalog() {
    static const std::vector<Scenario> catalog = build_catalog();
    return catalog;
}

const Scenario& find_scenario(const std::string& name) {
    for (const auto& s : scenario_catalog())
        if (s.name == name) return s;
    throw Error(ErrorCode::InvalidArgument, "unknown scenario '" + name + "'", "scenario");
}

TamperEvent adjacent_replacement() { return replacement(1, "config1 to config2 on chiplet(1)"); }

json to_json(const TamperEvent& ev) {
    json j{{"kind", to_string(ev.kind)}, {"target_region", to_string(ev.target_region)}, {"label", ev.label}};
    switch (ev.kind) {
        case TamperKind::DesignSwap:
        case TamperKind::TrojanInsert:
            j["added_capacitance"] = ev.added_capacitance;
            j["nodes"] = ev.nodes;
            j["routing_resistance"] = ev.routing_resistance;
            if (ev.kind == TamperKind::TrojanInsert) j["trojan_cap"] = ev.trojan_cap;
            break;
        case TamperKind::InterposerSllChange:
            j["sll_delta"] = ev.sll_delta;
            j["sll_bundle"] = ev.sll_bundle;
            break;
        case TamperKind::FarReplacement:
            j["moves"] = json::array();
            for (const auto& m : ev.moves) j["moves"].push_back({{"from", m.from}, {"to", m.to}});
            break;
    }
    return j;
}

TamperEvent tamper_event_from_json(const json& j) {
    try {
        TamperEvent ev;
        ev.kind = tamper_kind_from_string(j.at("kind").get<std::string>());
        ev.target_region = region_from_string(j.at("target_region").get<std::string>());
        ev.label = j.value("label", std::string{});
        ev.added_capacitance = j.value("added_capacitance", 0.0);
        if (j.contains("nodes")) ev.nodes = j["nodes"].get<std::vector<int>>();
        ev.routing_resistance = j.value("routing_resistance", ev.routing_resistance);
        ev.trojan_cap = j.value("trojan_cap", ev.trojan_cap);
        ev.sll_delta = j.value("sll_delta", 0);
        ev.sll_bundle = j.value("sll_bundle", std::size_t{0});
        if (j.contains("moves"))
            for (const auto& m : j["moves"]) ev.moves.push_back({m.at("from").get<int>(), m.at("to").get<int>()});
        return ev;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed tamper event: ") + e.what(), "scenario");
    }
}

}  // namespace pdnsense
