#include "pdnsense/network.hpp"

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>

#include "pdnsense/common.hpp"

namespace pdnsense {

using nlohmann::json;

const char* to_string(ElementKind kind) {
    switch (kind) {
        case ElementKind::Resistor: return "resistor";
        case ElementKind::Inductor: return "inductor";
        case ElementKind::Capacitor: return "capacitor";
        case ElementKind::CurrentSource: return "current_source";
    }
    return "unknown";
}

ElementKind element_kind_from_string(const std::string& s) {
    if (s == "resistor" || s == "R") return ElementKind::Resistor;
    if (s == "inductor" || s == "L") return ElementKind::Inductor;
    if (s == "capacitor" || s == "C") return ElementKind::Capacitor;
    if (s == "current_source" || s == "I") return ElementKind::CurrentSource;
    throw Error(ErrorCode::InvalidNetwork, "unknown element kind '" + s + "'", "kind");
}

std::string to_string(const Region& region) {
    switch (region.kind) {
        case RegionKind::Vrm: return "vrm";
        case RegionKind::Board: return "board";
        case RegionKind::Package: return "package";
        case RegionKind::Interposer: return "interposer";
        case RegionKind::Chiplet: return "chiplet(" + std::to_string(region.chiplet) + ")";
    }
    return "unknown";
}

Region region_from_string(const std::string& s) {
    if (s == "vrm") return Region::vrm();
    if (s == "board") return Region::board();
    if (s == "package") return Region::package();
    if (s == "interposer") return Region::interposer();
    if (s.starts_with("chiplet(") && s.ends_with(")")) {
        const auto inner = s.substr(8, s.size() - 9);
        try {
            std::size_t used = 0;
            const int k = std::stoi(inner, &used);
            if (used == inner.size() && k >= 0) return Region::die(k);
        } catch (const std::exception&) {
        }
    }
    throw Error(ErrorCode::InvalidNetwork, "unknown region tag '" + s + "'", "region");
}

// ---------------------------------------------------------------------------
// PdnNetwork

PdnNetwork::PdnNetwork() {
    regions_.push_back(Region::board());
    names_.emplace_back("gnd");
}

NodeId PdnNetwork::add_node(Region region, std::string name) {
    const NodeId id{static_cast<int>(regions_.size())};
    regions_.push_back(region);
    names_.push_back(name.empty() ? "n" + std::to_string(id.value) : std::move(name));
    return id;
}

std::size_t PdnNetwork::add_element(ElementKind kind, double value, NodeId a, NodeId b) {
    elements_.push_back(Element{kind, value, a, b});
    return elements_.size() - 1;
}

NodeId PdnNetwork::add_series_rl(NodeId a, NodeId b, double r, double l, Region region) {
    const NodeId x = add_node(region);
    add_element(ElementKind::Resistor, r, a, x);
    add_element(ElementKind::Inductor, l, x, b);
    return x;
}

void PdnNetwork::add_series_rlc_to_ground(NodeId a, double r, double l, double c, Region region) {
    const NodeId x = add_node(region);
    const NodeId y = add_node(region);
    add_element(ElementKind::Resistor, r, a, x);
    add_element(ElementKind::Inductor, l, x, y);
    add_element(ElementKind::Capacitor, c, y, kGround);
}

const DieBranch& PdnNetwork::add_die_branch(int chiplet, NodeId attach, double r, double c) {
    const NodeId x = add_node(Region::die(chiplet));
    DieBranch br;
    br.chiplet = chiplet;
    br.attach = attach;
    br.internal = x;
    br.resistor = add_element(ElementKind::Resistor, r, attach, x);
    br.capacitor = add_element(ElementKind::Capacitor, c, x, kGround);
    branches_.push_back(br);
    return branches_.back();
}

std::optional<NodeId> PdnNetwork::find(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return NodeId{static_cast<int>(i)};
    }
    return std::nullopt;
}

void PdnNetwork::set_die_nodes(int k, std::vector<NodeId> nodes) {
    if (k < 0) throw Error(ErrorCode::InvalidNetwork, "negative chiplet index");
    if (static_cast<std::size_t>(k) >= die_nodes_.size()) die_nodes_.resize(static_cast<std::size_t>(k) + 1);
    die_nodes_[static_cast<std::size_t>(k)] = std::move(nodes);
}

void PdnNetwork::set_site(int k, NodeId n) {
    if (k < 0) throw Error(ErrorCode::InvalidNetwork, "negative chiplet index");
    if (static_cast<std::size_t>(k) >= sites_.size()) sites_.resize(static_cast<std::size_t>(k) + 1);
    sites_[static_cast<std::size_t>(k)] = n;
}

std::vector<DieBranch> PdnNetwork::branches_on(int chiplet) const {
    std::vector<DieBranch> out;
    std::copy_if(branches_.begin(), branches_.end(), std::back_inserter(out),
                 [&](const DieBranch& b) { return b.chiplet == chiplet; });
    return out;
}

void PdnNetwork::add_sll_link(std::size_t bundle) {
    auto& s = slls_.at(bundle);
    const NodeId x = add_node(Region::interposer());
    add_element(ElementKind::Resistor, s.r, s.site_a, x);
    add_element(ElementKind::Inductor, s.l, x, s.site_b);
    add_element(ElementKind::Capacitor, s.c, x, kGround);
    s.links.push_back(x);
}

void PdnNetwork::remove_sll_link(std::size_t bundle) {
    auto& s = slls_.at(bundle);
    if (s.links.empty()) throw Error(ErrorCode::InvalidNetwork, "bundle has no links to remove");
    const NodeId x = s.links.back();
    s.links.pop_back();
    remove_node(x);
}

void PdnNetwork::remove_node(NodeId n) {
    if (n.value <= 0 || static_cast<std::size_t>(n.value) >= node_count())
        throw Error(ErrorCode::InvalidNetwork, "cannot remove ground or a missing node");
    const auto shift = [&](NodeId id) { return id.value > n.value ? NodeId{id.value - 1} : id; };
    for (const auto& br : branches_)
        if (br.attach == n || br.internal == n)
            throw Error(ErrorCode::InvalidNetwork, "cannot remove a node carrying an on-die branch");

    std::vector<std::size_t> remap(elements_.size(), SIZE_MAX);
    std::vector<Element> kept;
    for (std::size_t i = 0; i < elements_.size(); ++i) {
        const auto& e = elements_[i];
        if (e.a == n || e.b == n) continue;
        remap[i] = kept.size();
        kept.push_back(Element{e.kind, e.value, shift(e.a), shift(e.b)});
    }
    elements_ = std::move(kept);
    regions_.erase(regions_.begin() + n.value);
    names_.erase(names_.begin() + n.value);
    for (auto& nodes : die_nodes_) {
        std::erase(nodes, n);
        for (auto& d : nodes) d = shift(d);
    }
    for (auto& s : sites_) s = shift(s);
    for (auto& br : branches_) {
        br.attach = shift(br.attach);
        br.internal = shift(br.internal);
        br.resistor = remap[br.resistor];
        br.capacitor = remap[br.capacitor];
    }
    for (auto& s : slls_) {
        s.site_a = shift(s.site_a);
        s.site_b = shift(s.site_b);
        std::erase(s.links, n);
        for (auto& x : s.links) x = shift(x);
    }
}

bool PdnNetwork::is_connected() const {
    const std::size_t n = node_count();
    std::vector<std::vector<int>> adj(n);
    for (const auto& e : elements_) {
        if (e.kind == ElementKind::CurrentSource) continue;
        const auto a = static_cast<std::size_t>(e.a.value);
        const auto b = static_cast<std::size_t>(e.b.value);
        if (a >= n || b >= n) return false;
        adj[a].push_back(e.b.value);
        adj[b].push_back(e.a.value);
    }
    std::vector<char> seen(n, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    std::size_t reached = 1;
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int v : adj[static_cast<std::size_t>(u)]) {
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++reached;
                q.push(v);
            }
        }
    }
    return reached == n;
}

void PdnNetwork::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidNetwork, msg); };
    const auto n = static_cast<int>(node_count());
    if (regions_.size() != names_.size()) fail("region tags do not cover the node set");
    for (std::size_t i = 0; i < elements_.size(); ++i) {
        const auto& e = elements_[i];
        const std::string where = "element " + std::to_string(i) + " (" + to_string(e.kind) + ")";
        if (e.a.value < 0 || e.a.value >= n || e.b.value < 0 || e.b.value >= n)
            fail(where + " references a node outside the network");
        if (e.a == e.b) fail(where + " has identical terminals");
        if (!std::isfinite(e.value)) fail(where + " has a non-finite value");
        if (e.kind != ElementKind::CurrentSource && e.value <= 0.0) fail(where + " has a non-positive value");
    }
    if (!is_connected()) fail("network graph is not connected");
    if (chiplet_count() < 2) fail("at least two chiplets are required");
    if (sites_.size() != die_nodes_.size()) fail("every chiplet needs an interposer site");
    for (int k = 0; k < chiplet_count(); ++k) {
        if (die_nodes(k).empty()) fail("chiplet(" + std::to_string(k) + ") has no die nodes");
        for (NodeId d : die_nodes(k)) {
            if (d.value <= 0 || d.value >= n || !(region(d) == Region::die(k)))
                fail("die node outside chiplet(" + std::to_string(k) + ")");
        }
        if (branches_on(k).empty()) fail("chiplet(" + std::to_string(k) + ") has no on-die RC branch");
    }
    for (const auto& b : branches_) {
        if (b.resistor >= elements_.size() || b.capacitor >= elements_.size())
            fail("on-die branch references a missing element");
        const auto& r = elements_[b.resistor];
        const auto& c = elements_[b.capacitor];
        if (r.kind != ElementKind::Resistor || c.kind != ElementKind::Capacitor || r.a != b.attach ||
            r.b != b.internal || c.a != b.internal || c.b != kGround)
            fail("on-die branch bookkeeping is inconsistent");
        if (!(region(b.attach) == Region::die(b.chiplet))) fail("on-die branch attached outside its chiplet");
    }
}

// ---------------------------------------------------------------------------
// Config and construction

NetworkConfig NetworkConfig::reference() {
    NetworkConfig cfg;
    ChipletConfig verifier;
    verifier.rows = 4;
    verifier.cols = 8;
    verifier.tsv_nodes = {0, 7, 24, 31};
    verifier.branches = {{9, 0.1, 0.1e-9}, {14, 0.1, 0.1e-9}, {17, 0.1, 0.1e-9}, {22, 0.1, 0.1e-9}};
    verifier.bump = {1e-3, 300e-12};

    ChipletConfig neighbour;
    neighbour.rows = 4;
    neighbour.cols = 4;
    neighbour.tsv_nodes = {0, 5};
    neighbour.branches = {{0, 0.1, 0.1e-9}, {5, 0.1, 0.1e-9}};
    neighbour.bump = {1e-3, 300e-12};

    ChipletConfig far = neighbour;
    far.bump = {1e-3, 3e-9};

    cfg.chiplets = {verifier, neighbour, far};
    return cfg;
}

NetworkConfig NetworkConfig::uniform(int chiplets, int branches) {
    NetworkConfig cfg;
    if (chiplets < 0 || branches < 0)
        throw Error(ErrorCode::InvalidArgument, "chiplet and branch counts must be non-negative");
    cfg.lateral.assign(static_cast<std::size_t>(std::max(chiplets - 1, 0)), SeriesRl{2e-3, 20e-12});
    cfg.chiplets.clear();
    const int rows = branches <= 1 ? 1 : 2;
    const int cols = std::max(1, (branches + rows - 1) / rows);
    for (int k = 0; k < chiplets; ++k) {
        ChipletConfig c;
        c.rows = rows;
        c.cols = cols;
        c.tsv_nodes = {0};
        for (int i = 0; i < branches; ++i) {
            // Low-discrepancy spread across the default on-die value ranges.
            const double u = std::fmod((i + 1 + 3 * k) * 0.6180339887498949, 1.0);
            const double v = std::fmod((i + 1 + 5 * k) * 0.4142135623730951, 1.0);
            c.branches.push_back({i, 0.1 + 0.9 * u, 0.1e-9 * std::pow(100.0, v)});
        }
        cfg.chiplets.push_back(c);
    }
    return cfg;
}

namespace {

void require_positive(double v, const std::string& what) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw Error(ErrorCode::InvalidNetwork, what + " must be positive and finite", what);
}

void require_positive(const SeriesRl& x, const std::string& what) {
    require_positive(x.r, what + ".r");
    require_positive(x.l, what + ".l");
}

void require_positive(const SeriesRlc& x, const std::string& what) {
    require_positive(x.r, what + ".r");
    require_positive(x.l, what + ".l");
    require_positive(x.c, what + ".c");
}

void check_config(const NetworkConfig& cfg) {
    const int nc = static_cast<int>(cfg.chiplets.size());
    if (nc < 2) throw Error(ErrorCode::InvalidNetwork, "chiplet_count must be at least 2", "chiplet_count");
    require_positive(cfg.supply_voltage, "supply_voltage");
    require_positive(cfg.vrm, "vrm");
    require_positive(cfg.package, "package");
    require_positive(cfg.tsv, "tsv");
    for (std::size_t i = 0; i < cfg.bulk.size(); ++i) require_positive(cfg.bulk[i], "bulk[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < cfg.ceramic.size(); ++i)
        require_positive(cfg.ceramic[i], "ceramic[" + std::to_string(i) + "]");
    if (static_cast<int>(cfg.lateral.size()) != nc - 1)
        throw Error(ErrorCode::InvalidNetwork, "lateral must hold chiplet_count - 1 entries", "lateral");
    for (std::size_t i = 0; i < cfg.lateral.size(); ++i)
        require_positive(cfg.lateral[i], "lateral[" + std::to_string(i) + "]");
    for (int k = 0; k < nc; ++k) {
        const auto& c = cfg.chiplets[static_cast<std::size_t>(k)];
        const std::string p = "chiplets[" + std::to_string(k) + "]";
        if (c.rows < 1 || c.cols < 1) throw Error(ErrorCode::InvalidNetwork, p + " mesh must be at least 1x1", p);
        const int g = c.rows * c.cols;
        if (g > 1) require_positive(cfg.mesh_r, "mesh_r");
        require_positive(c.bump, p + ".bump");
        if (c.tsv_nodes.empty()) throw Error(ErrorCode::InvalidNetwork, p + " needs at least one TSV", p);
        for (int t : c.tsv_nodes)
            if (t < 0 || t >= g) throw Error(ErrorCode::InvalidNetwork, p + " TSV node out of range", p);
        if (c.branches.empty())
            throw Error(ErrorCode::InvalidNetwork, p + " needs at least one on-die RC branch", p + ".branches");
        for (const auto& b : c.branches) {
            if (b.node < 0 || b.node >= g) throw Error(ErrorCode::InvalidNetwork, p + " branch node out of range", p);
            require_positive(b.r, p + ".branches.r");
            require_positive(b.c, p + ".branches.c");
        }
    }
    for (std::size_t i = 0; i < cfg.slls.size(); ++i) {
        const auto& s = cfg.slls[i];
        const std::string p = "slls[" + std::to_string(i) + "]";
        if (s.chiplet_a < 0 || s.chiplet_a >= nc || s.chiplet_b < 0 || s.chiplet_b >= nc || s.chiplet_a == s.chiplet_b)
            throw Error(ErrorCode::InvalidNetwork, p + " must join two distinct chiplets", p);
        if (s.count < 0) throw Error(ErrorCode::InvalidNetwork, p + ".count must be non-negative", p);
        require_positive(s.r, p + ".r");
        require_positive(s.l, p + ".l");
        require_positive(s.c, p + ".c");
    }
}

}  // namespace

PdnNetwork build_reference_network(const NetworkConfig& cfg) {
    check_config(cfg);
    PdnNetwork net;
    net.set_supply_voltage(cfg.supply_voltage);

    const NodeId board = net.add_node(Region::board(), "board");
    const NodeId vrm = net.add_node(Region::vrm(), "vrm");
    net.add_element(ElementKind::Inductor, cfg.vrm.l, board, vrm);
    net.add_element(ElementKind::Resistor, cfg.vrm.r, vrm, kGround);
    for (const auto& b : cfg.bulk) net.add_series_rlc_to_ground(board, b.r, b.l, b.c, Region::board());

    const NodeId pkg = net.add_node(Region::package(), "package");
    net.add_series_rl(board, pkg, cfg.package.r, cfg.package.l, Region::package());
    for (const auto& c : cfg.ceramic) net.add_series_rlc_to_ground(pkg, c.r, c.l, c.c, Region::package());

    const int nc = static_cast<int>(cfg.chiplets.size());
    for (int k = 0; k < nc; ++k) {
        const NodeId s = net.add_node(Region::interposer(), "site" + std::to_string(k));
        net.set_site(k, s);
        const auto& bump = cfg.chiplets[static_cast<std::size_t>(k)].bump;
        net.add_series_rl(pkg, s, bump.r, bump.l, Region::interposer());
    }
    for (int k = 0; k + 1 < nc; ++k) {
        const auto& lat = cfg.lateral[static_cast<std::size_t>(k)];
        net.add_series_rl(net.site(k), net.site(k + 1), lat.r, lat.l, Region::interposer());
    }
    for (const auto& s : cfg.slls) {
        SllBundle bundle;
        bundle.chiplet_a = s.chiplet_a;
        bundle.chiplet_b = s.chiplet_b;
        bundle.site_a = net.site(s.chiplet_a);
        bundle.site_b = net.site(s.chiplet_b);
        bundle.r = s.r;
        bundle.l = s.l;
        bundle.c = s.c;
        net.mutable_sll_bundles().push_back(bundle);
        const std::size_t idx = net.sll_bundles().size() - 1;
        for (int i = 0; i < s.count; ++i) net.add_sll_link(idx);
    }

    for (int k = 0; k < nc; ++k) {
        const auto& c = cfg.chiplets[static_cast<std::size_t>(k)];
        const Region die = Region::die(k);
        std::vector<NodeId> nodes;
        nodes.reserve(static_cast<std::size_t>(c.rows * c.cols));
        for (int i = 0; i < c.rows * c.cols; ++i)
            nodes.push_back(net.add_node(die, "chiplet" + std::to_string(k) + "/" + std::to_string(i)));
        for (int r = 0; r < c.rows; ++r) {
            for (int col = 0; col < c.cols; ++col) {
                const auto i = static_cast<std::size_t>(r * c.cols + col);
                if (col + 1 < c.cols) net.add_element(ElementKind::Resistor, cfg.mesh_r, nodes[i], nodes[i + 1]);
                if (r + 1 < c.rows)
                    net.add_element(ElementKind::Resistor, cfg.mesh_r, nodes[i],
                                    nodes[i + static_cast<std::size_t>(c.cols)]);
            }
        }
        for (int t : c.tsv_nodes)
            net.add_series_rl(net.site(k), nodes[static_cast<std::size_t>(t)], cfg.tsv.r, cfg.tsv.l, die);
        for (const auto& b : c.branches) net.add_die_branch(k, nodes[static_cast<std::size_t>(b.node)], b.r, b.c);
        net.set_die_nodes(k, std::move(nodes));
    }
    net.validate();
    return net;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json rl_json(const SeriesRl& x) { return {{"r", x.r}, {"l", x.l}}; }
json rlc_json(const SeriesRlc& x) { return {{"r", x.r}, {"l", x.l}, {"c", x.c}}; }

SeriesRl rl_from(const json& j, SeriesRl def) {
    def.r = j.value("r", def.r);
    def.l = j.value("l", def.l);
    return def;
}

SeriesRlc rlc_from(const json& j, SeriesRlc def) {
    def.r = j.value("r", def.r);
    def.l = j.value("l", def.l);
    def.c = j.value("c", def.c);
    return def;
}

template <class T, class F>
std::vector<T> list_from(const json& j, F&& f) {
    std::vector<T> out;
    for (const auto& item : j) out.push_back(f(item));
    return out;
}

}  // namespace

NetworkConfig network_config_from_json(const json& j) {
    try {
        NetworkConfig cfg;
        if (j.contains("chiplet_count")) {
            cfg = NetworkConfig::uniform(j.at("chiplet_count").get<int>(), j.value("branches_per_chiplet", 4));
        } else {
            cfg = NetworkConfig::reference();
        }
        cfg.supply_voltage = j.value("supply_voltage", cfg.supply_voltage);
        if (j.contains("vrm")) cfg.vrm = rl_from(j["vrm"], cfg.vrm);
        if (j.contains("package")) cfg.package = rl_from(j["package"], cfg.package);
        if (j.contains("tsv")) cfg.tsv = rl_from(j["tsv"], cfg.tsv);
        cfg.mesh_r = j.value("mesh_r", cfg.mesh_r);
        if (j.contains("bulk"))
            cfg.bulk = list_from<SeriesRlc>(j["bulk"], [](const json& x) { return rlc_from(x, {}); });
        if (j.contains("ceramic"))
            cfg.ceramic = list_from<SeriesRlc>(j["ceramic"], [](const json& x) { return rlc_from(x, {}); });
        if (j.contains("lateral"))
            cfg.lateral = list_from<SeriesRl>(j["lateral"], [](const json& x) { return rl_from(x, {}); });
        if (j.contains("chiplets")) {
            cfg.chiplets = list_from<ChipletConfig>(j["chiplets"], [](const json& x) {
                ChipletConfig c;
                c.rows = x.value("rows", c.rows);
                c.cols = x.value("cols", c.cols);
                if (x.contains("tsv_nodes")) c.tsv_nodes = x["tsv_nodes"].get<std::vector<int>>();
                if (x.contains("bump")) c.bump = rl_from(x["bump"], c.bump);
                if (x.contains("branches")) {
                    c.branches = list_from<DieBranchSpec>(x["branches"], [](const json& b) {
                        return DieBranchSpec{b.at("node").get<int>(), b.at("r").get<double>(), b.at("c").get<double>()};
                    });
                }
                return c;
            });
        }
        if (j.contains("slls")) {
            cfg.slls = list_from<SllConfig>(j["slls"], [](const json& x) {
                SllConfig s;
                s.chiplet_a = x.value("chiplet_a", s.chiplet_a);
                s.chiplet_b = x.value("chiplet_b", s.chiplet_b);
                s.count = x.value("count", s.count);
                s.r = x.value("r", s.r);
                s.l = x.value("l", s.l);
                s.c = x.value("c", s.c);
                return s;
            });
        }
        return cfg;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidNetwork, std::string("malformed network config: ") + e.what(), "config");
    }
}

json to_json(const NetworkConfig& cfg) {
    json j;
    j["format"] = "pdnsense-network-config";
    j["version"] = 1;
    j["supply_voltage"] = cfg.supply_voltage;
    j["vrm"] = rl_json(cfg.vrm);
    j["package"] = rl_json(cfg.package);
    j["tsv"] = rl_json(cfg.tsv);
    j["mesh_r"] = cfg.mesh_r;
    j["bulk"] = json::array();
    for (const auto& b : cfg.bulk) j["bulk"].push_back(rlc_json(b));
    j["ceramic"] = json::array();
    for (const auto& c : cfg.ceramic) j["ceramic"].push_back(rlc_json(c));
    j["lateral"] = json::array();
    for (const auto& l : cfg.lateral) j["lateral"].push_back(rl_json(l));
    j["chiplets"] = json::array();
    for (const auto& c : cfg.chiplets) {
        json cj{{"rows", c.rows}, {"cols", c.cols}, {"tsv_nodes", c.tsv_nodes}, {"bump", rl_json(c.bump)}};
        cj["branches"] = json::array();
        for (const auto& b : c.branches) cj["branches"].push_back({{"node", b.node}, {"r", b.r}, {"c", b.c}});
        j["chiplets"].push_back(cj);
    }
    j["slls"] = json::array();
    for (const auto& s : cfg.slls) {
        j["slls"].push_back({{"chiplet_a", s.chiplet_a},
                             {"chiplet_b", s.chiplet_b},
                             {"count", s.count},
                             {"r", s.r},
                             {"l", s.l},
                             {"c", s.c}});
    }
    return j;
}

json network_to_json(const PdnNetwork& net) {
    json j;
    j["format"] = "pdnsense-network";
    j["version"] = 1;
    j["supply_voltage"] = net.supply_voltage();
    j["ground"] = 0;
    j["nodes"] = json::array();
    for (std::size_t i = 0; i < net.node_count(); ++i) {
        const NodeId id{static_cast<int>(i)};
        j["nodes"].push_back({{"id", id.value}, {"name", net.name(id)}, {"region", to_string(net.region(id))}});
    }
    j["elements"] = json::array();
    for (const auto& e : net.elements())
        j["elements"].push_back({{"kind", to_string(e.kind)}, {"value", e.value}, {"a", e.a.value}, {"b", e.b.value}});
    j["chiplets"] = json::array();
    for (int k = 0; k < net.chiplet_count(); ++k) {
        std::vector<int> ids;
        for (NodeId d : net.die_nodes(k)) ids.push_back(d.value);
        j["chiplets"].push_back({{"site", net.site(k).value}, {"die_nodes", ids}});
    }
    j["branches"] = json::array();
    for (const auto& b : net.branches()) {
        j["branches"].push_back({{"chiplet", b.chiplet},
                                 {"attach", b.attach.value},
                                 {"internal", b.internal.value},
                                 {"resistor", b.resistor},
                                 {"capacitor", b.capacitor}});
    }
    j["slls"] = json::array();
    for (const auto& s : net.sll_bundles()) {
        std::vector<int> links;
        for (NodeId x : s.links) links.push_back(x.value);
        j["slls"].push_back({{"chiplet_a", s.chiplet_a},
                             {"chiplet_b", s.chiplet_b},
                             {"site_a", s.site_a.value},
                             {"site_b", s.site_b.value},
                             {"r", s.r},
                             {"l", s.l},
                             {"c", s.c},
                             {"links", links}});
    }
    return j;
}

PdnNetwork network_from_json(const json& j) {
    try {
        PdnNetwork net;
        net.set_supply_voltage(j.value("supply_voltage", 0.85));
        if (j.value("ground", 0) != 0)
            throw Error(ErrorCode::InvalidNetwork, "ground must be node 0", "ground");
        const auto& nodes = j.at("nodes");
        int expected = 0;
        for (const auto& n : nodes) {
            if (n.at("id").get<int>() != expected)
                throw Error(ErrorCode::InvalidNetwork, "node ids must be dense and ordered from 0", "nodes");
            const Region region = region_from_string(n.at("region").get<std::string>());
            if (expected == 0) {
                if (n.contains("name")) {
                    // ground is implicit; accept its declaration as-is
                }
            } else {
                net.add_node(region, n.value("name", std::string{}));
            }
            ++expected;
        }
        for (const auto& e : j.at("elements")) {
            net.add_element(element_kind_from_string(e.at("kind").get<std::string>()), e.at("value").get<double>(),
                            NodeId{e.at("a").get<int>()}, NodeId{e.at("b").get<int>()});
        }
        if (j.contains("chiplets")) {
            int k = 0;
            for (const auto& c : j["chiplets"]) {
                std::vector<NodeId> ids;
                for (int v : c.at("die_nodes").get<std::vector<int>>()) ids.push_back(NodeId{v});
                net.set_die_nodes(k, std::move(ids));
                net.set_site(k, NodeId{c.at("site").get<int>()});
                ++k;
            }
        }
        if (j.contains("branches")) {
            for (const auto& b : j["branches"]) {
                DieBranch br;
                br.chiplet = b.at("chiplet").get<int>();
                br.attach = NodeId{b.at("attach").get<int>()};
                br.internal = NodeId{b.at("internal").get<int>()};
                br.resistor = b.at("resistor").get<std::size_t>();
                br.capacitor = b.at("capacitor").get<std::size_t>();
                net.mutable_branches().push_back(br);
            }
        }
        if (j.contains("slls")) {
            for (const auto& s : j["slls"]) {
                SllBundle b;
                b.chiplet_a = s.at("chiplet_a").get<int>();
                b.chiplet_b = s.at("chiplet_b").get<int>();
                b.site_a = NodeId{s.at("site_a").get<int>()};
                b.site_b = NodeId{s.at("site_b").get<int>()};
                b.r = s.at("r").get<double>();
                b.l = s.at("l").get<double>();
                b.c = s.at("c").get<double>();
                for (int v : s.value("links", std::vector<int>{})) b.links.push_back(NodeId{v});
                net.mutable_sll_bundles().push_back(b);
            }
        }
        net.validate();
        return net;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidNetwork, std::string("malformed network document: ") + e.what(), "config");
    }
}

PdnNetwork load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open network file '" + path + "'", "config");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidNetwork, "cannot parse '" + path + "': " + e.what(), "config");
    }
    if (j.contains("elements")) return network_from_json(j);
    return build_reference_network(network_config_from_json(j));
}

}  // namespace pdnsense
