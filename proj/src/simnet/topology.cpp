#include "tilecrypt/simnet.hpp"

#include <set>

namespace tilecrypt::simnet {

Error::Error(ErrorKind, const std::string& what) : std::runtime_error("ConfigError: " + what), kind_(ErrorKind::ConfigError) {}

std::string_view to_string(NodeKind kind)
{
    switch (kind) {
    case NodeKind::Origin: return "origin";
    case NodeKind::Cache: return "cache";
    case NodeKind::ClientNode: return "clients";
    }
    return "?";
}

std::string_view to_string(TopologyKind kind) { return kind == TopologyKind::SmallScale ? "small" : "large"; }

TopologyKind parse_topology(std::string_view name)
{
    if (name == "small") return TopologyKind::SmallScale;
    if (name == "large") return TopologyKind::LargeScale;
    throw Error(ErrorKind::ConfigError, "unknown topology '" + std::string(name) + "' (expected small or large)");
}

int Topology::client_count() const
{
    int n = 0;
    for (const auto& [node, count] : clients_per_node) n += count;
    return n;
}

std::vector<int> Topology::caches() const
{
    std::vector<int> out;
    for (const auto& n : nodes)
        if (n.kind == NodeKind::Cache) out.push_back(n.id);
    return out;
}

std::vector<int> Topology::client_nodes() const
{
    std::vector<int> out;
    for (const auto& n : nodes)
        if (n.kind == NodeKind::ClientNode) out.push_back(n.id);
    return out;
}

void Topology::validate() const
{
    int origins = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const Node& n = nodes[i];
        if (n.id != int(i)) throw Error(ErrorKind::ConfigError, "node ids must be dense and ordered");
        if (n.kind == NodeKind::Origin) {
            ++origins;
            if (n.parent != -1 || n.depth != 0) throw Error(ErrorKind::ConfigError, "origin must be the root");
            continue;
        }
        if (n.parent < 0 || n.parent >= int(nodes.size())) throw Error(ErrorKind::ConfigError, n.name + " has no parent");
        const Node& p = nodes[n.parent];
        if (p.kind == NodeKind::ClientNode) throw Error(ErrorKind::ConfigError, n.name + " hangs below a client node");
        if (n.depth != p.depth + 1) throw Error(ErrorKind::ConfigError, n.name + " has inconsistent depth");
        if (n.uplink < 0 || n.uplink >= int(links.size()) || links[n.uplink].child != n.id || links[n.uplink].parent != n.parent) {
            throw Error(ErrorKind::ConfigError, n.name + " has no matching uplink");
        }
        if (!(links[n.uplink].bandwidth_bps > 0.0)) throw Error(ErrorKind::ConfigError, n.name + " uplink bandwidth must be positive");
    }
    if (origins != 1) throw Error(ErrorKind::ConfigError, "expected exactly one origin");
    for (const auto& [node, count] : clients_per_node) {
        if (node < 0 || node >= int(nodes.size()) || nodes[node].kind != NodeKind::ClientNode || count < 0) {
            throw Error(ErrorKind::ConfigError, "client counts must refer to client nodes");
        }
    }
}

namespace {

int add_node(Topology& t, NodeKind kind, std::string name, int parent, double bps)
{
    Node n;
    n.id = int(t.nodes.size());
    n.kind = kind;
    n.name = std::move(name);
    n.parent = parent;
    if (parent >= 0) {
        n.depth = t.nodes[parent].depth + 1;
        n.uplink = int(t.links.size());
        t.links.push_back({parent, n.id, bps});
    }
    t.nodes.push_back(n);
    return n.id;
}

}  // namespace

Topology build_topology(TopologyKind kind, const TopologyOptions& opts)
{
    Topology t;
    t.kind = kind;
    const int origin = add_node(t, NodeKind::Origin, "origin", -1, 0);
    if (kind == TopologyKind::SmallScale) {
        const int cache = add_node(t, NodeKind::Cache, "cache", origin, opts.origin_link_bps.value_or(120e6));
        for (int i = 0; i < 5; ++i) {
            const int cn = add_node(t, NodeKind::ClientNode, "clients" + std::to_string(i + 1), cache, 72e6);
            t.clients_per_node[cn] = 6;
        }
    } else {
        const int l1 = add_node(t, NodeKind::Cache, "l1", origin, opts.origin_link_bps.value_or(320e6));
        int next_client = 1;
        for (int j = 0; j < 2; ++j) {
            const int l2 = add_node(t, NodeKind::Cache, "l2-" + std::to_string(j + 1), l1, 160e6);
            for (int i = 0; i < 2; ++i) {
                const int cn = add_node(t, NodeKind::ClientNode, "clients" + std::to_string(next_client++), l2, 240e6);
                t.clients_per_node[cn] = 20;
            }
        }
    }
    t.validate();
    return t;
}

}  // namespace tilecrypt::simnet
