#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace pdnsense {

/// Node index within a PdnNetwork. Node 0 is always ground.
struct NodeId {
    int value = 0;
    friend bool operator==(NodeId, NodeId) = default;
    friend auto operator<=>(NodeId, NodeId) = default;
};

inline constexpr NodeId kGround{0};

enum class ElementKind { Resistor, Inductor, Capacitor, CurrentSource };

const char* to_string(ElementKind kind);
ElementKind element_kind_from_string(const std::string& s);

/// Two-terminal lumped element. Units are SI (ohm, henry, farad, ampere).
/// A current source drives `value` amperes from node_b into node_a.
struct Element {
    ElementKind kind = ElementKind::Resistor;
    double value = 0.0;
    NodeId a;
    NodeId b;

    friend bool operator==(const Element&, const Element&) = default;
};

enum class RegionKind { Vrm, Board, Package, Interposer, Chiplet };

struct Region {
    RegionKind kind = RegionKind::Board;
    int chiplet = -1;  // only meaningful for RegionKind::Chiplet

    static Region vrm() { return {RegionKind::Vrm, -1}; }
    static Region board() { return {RegionKind::Board, -1}; }
    static Region package() { return {RegionKind::Package, -1}; }
    static Region interposer() { return {RegionKind::Interposer, -1}; }
    static Region die(int k) { return {RegionKind::Chiplet, k}; }

    friend bool operator==(const Region&, const Region&) = default;
};

/// "vrm", "board", "package", "interposer" or "chiplet(k)".
std::string to_string(const Region& region);
Region region_from_string(const std::string& s);

/// One on-die decoupling branch: attach --R-- internal --C-- ground.
struct DieBranch {
    int chiplet = 0;
    NodeId attach;
    NodeId internal;
    std::size_t resistor = 0;   // element indices
    std::size_t capacitor = 0;

    friend bool operator==(const DieBranch&, const DieBranch&) = default;
};

/// Bookkeeping for a bundle of identical interposer long lines between two
/// chiplet sites. Each link is a triple: site_a --R-- x --L-- site_b, x --C-- ground.
struct SllBundle {
    int chiplet_a = 0;
    int chiplet_b = 1;
    NodeId site_a;
    NodeId site_b;
    double r = 0.0;
    double l = 0.0;
    double c = 0.0;
    std::vector<NodeId> links;  // internal node of each link

    friend bool operator==(const SllBundle&, const SllBundle&) = default;
};

/// Lumped RLC model of the shared power delivery network. Value type;
/// tamper events produce modified copies.
class PdnNetwork {
public:
    PdnNetwork();

    NodeId add_node(Region region, std::string name = {});
    std::size_t add_element(ElementKind kind, double value, NodeId a, NodeId b);
    /// a --R-- x --L-- b; returns the internal node.
    NodeId add_series_rl(NodeId a, NodeId b, double r, double l, Region region);
    /// a --R-- x --L-- y --C-- ground.
    void add_series_rlc_to_ground(NodeId a, double r, double l, double c, Region region);
    /// Adds an on-die branch attached at `attach` and records it.
    const DieBranch& add_die_branch(int chiplet, NodeId attach, double r, double c);

    std::size_t node_count() const { return regions_.size(); }
    const std::vector<Element>& elements() const { return elements_; }
    std::vector<Element>& mutable_elements() { return elements_; }
    const Region& region(NodeId n) const { return regions_.at(static_cast<std::size_t>(n.value)); }
    const std::string& name(NodeId n) const { return names_.at(static_cast<std::size_t>(n.value)); }
    std::optional<NodeId> find(const std::string& name) const;

    int chiplet_count() const { return static_cast<int>(die_nodes_.size()); }
    /// Mesh nodes of chiplet k in row-major order.
    const std::vector<NodeId>& die_nodes(int k) const { return die_nodes_.at(static_cast<std::size_t>(k)); }
    void set_die_nodes(int k, std::vector<NodeId> nodes);
    /// Interposer site under chiplet k.
    NodeId site(int k) const { return sites_.at(static_cast<std::size_t>(k)); }
    void set_site(int k, NodeId n);

    const std::vector<DieBranch>& branches() const { return branches_; }
    std::vector<DieBranch>& mutable_branches() { return branches_; }
    std::vector<DieBranch> branches_on(int chiplet) const;

    const std::vector<SllBundle>& sll_bundles() const { return slls_; }
    std::vector<SllBundle>& mutable_sll_bundles() { return slls_; }
    void add_sll_link(std::size_t bundle);
    /// Drops the most recently added link of a bundle.
    void remove_sll_link(std::size_t bundle);

    /// Removes a non-ground node and every element touching it; later node
    /// and element indices shift down.
    void remove_node(NodeId n);

    double supply_voltage() const { return supply_voltage_; }
    void set_supply_voltage(double v) { supply_voltage_ = v; }

    /// Throws Error(InvalidNetwork) naming the first violated invariant.
    void validate() const;
    bool is_connected() const;

    friend bool operator==(const PdnNetwork&, const PdnNetwork&) = default;

private:
    std::vector<Region> regions_;
    std::vector<std::string> names_;
    std::vector<Element> elements_;
    std::vector<std::vector<NodeId>> die_nodes_;
    std::vector<NodeId> sites_;
    std::vector<DieBranch> branches_;
    std::vector<SllBundle> slls_;
    double supply_voltage_ = 0.85;
};

struct SeriesRl {
    double r = 0.0;
    double l = 0.0;
};

struct SeriesRlc {
    double r = 0.0;
    double l = 0.0;
    double c = 0.0;
};

struct DieBranchSpec {
    int node = 0;  // mesh index within the chiplet
    double r = 0.0;
    double c = 0.0;
};

struct ChipletConfig {
    int rows = 4;
    int cols = 4;
    std::vector<int> tsv_nodes{0};
    std::vector<DieBranchSpec> branches;
    SeriesRl bump{1e-3, 300e-12};
};

struct SllConfig {
    int chiplet_a = 0;
    int chiplet_b = 1;
    int count = 129;
    double r = 1.0;
    double l = 2e-9;
    double c = 2e-12;
};

/// Parametric description of the reference topology: VRM, board bulk
/// capacitors, package with ceramic capacitors, one interposer site per
/// chiplet, TSVs into a resistive on-die mesh per chiplet.
struct NetworkConfig {
    double supply_voltage = 0.85;
    SeriesRl vrm{1e-3, 10e-9};
    std::vector<SeriesRlc> bulk{{5e-3, 5e-9, 100e-6}};
    SeriesRl package{0.5e-3, 0.5e-9};
    std::vector<SeriesRlc> ceramic = std::vector<SeriesRlc>(4, SeriesRlc{2e-3, 0.5e-9, 1e-6});
    /// lateral[k] joins interposer sites k and k+1.
    std::vector<SeriesRl> lateral{{2e-3, 20e-12}, {2e-3, 5e-9}};
    SeriesRl tsv{10e-3, 10e-12};
    double mesh_r = 0.2;
    std::vector<ChipletConfig> chiplets;
    std::vector<SllConfig> slls{SllConfig{}};

    /// Three chiplets: a 4x8 verifier mesh and two 4x4 neighbours, the
    /// second reached through a long interposer run.
    static NetworkConfig reference();
    /// `chiplets` identical 2x2-or-larger meshes with `branches` branches each,
    /// branch values spread over R in [0.1, 1] ohm and C in [0.1, 10] nF.
    static NetworkConfig uniform(int chiplets, int branches);
};

/// Builds the network described by `config`. Deterministic. Throws
/// Error(InvalidNetwork) on non-positive values or fewer than two chiplets.
PdnNetwork build_reference_network(const NetworkConfig& config);

NetworkConfig network_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NetworkConfig& config);

/// Explicit node/element form of a built network.
nlohmann::json network_to_json(const PdnNetwork& net);
PdnNetwork network_from_json(const nlohmann::json& j);

/// Accepts either form: a document with "elements" is an explicit network,
/// anything else is a NetworkConfig.
PdnNetwork load_network(const std::string& path);

}  // namespace pdnsense
