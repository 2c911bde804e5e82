#include "ghznet/topology.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace ghznet {

namespace {

void require(bool cond, const std::string& msg)
{
    if (!cond)
        throw TopologyError(msg);
}

bool in_grid(GridCoord c, int width, int height)
{
    return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height;
}

} // namespace

////////////////////////////////////////////////////////////
// Topology

Topology::Topology(std::vector<Node> nodes, std::vector<Edge> edges, std::optional<GridShape> grid)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), grid_(grid)
{
    index();
}

void Topology::index()
{
    const std::size_t n = nodes_.size();
    for (std::size_t i = 0; i < n; ++i)
        require(nodes_[i].id == i, "node ids must be dense and ordered");

    offsets_.assign(n + 1, 0);
    for (const Edge& e : edges_) {
        require(e.u < n && e.v < n, "edge endpoint references a missing node");
        require(e.u != e.v, "self-loop edges are not allowed");
        require(e.partition >= kNoPartition && e.partition <= 3, "edge partition out of range");
        ++offsets_[e.u + 1];
        ++offsets_[e.v + 1];
    }
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());

    incidence_.resize(offsets_.back());
    std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (EdgeId e = 0; e < edges_.size(); ++e) {
        const Edge& edge = edges_[e];
        incidence_[fill[edge.u]++] = {e, 2 * e, edge.v};
        incidence_[fill[edge.v]++] = {e, 2 * e + 1, edge.u};
    }

    alice_.reset();
    bob_.reset();
    for (const Node& node : nodes_) {
        if (node.role == NodeRole::alice) {
            require(!alice_, "more than one node is marked alice");
            alice_ = node.id;
        }
        else if (node.role == NodeRole::bob) {
            require(!bob_, "more than one node is marked bob");
            bob_ = node.id;
        }
    }
}

std::size_t Topology::max_degree() const
{
    std::size_t best = 0;
    for (NodeId n = 0; n < nodes_.size(); ++n)
        best = std::max(best, degree(n));
    return best;
}

bool Topology::is_colored() const
{
    return !edges_.empty() && std::all_of(edges_.begin(), edges_.end(),
                                          [](const Edge& e) { return e.color != EdgeColor::none; });
}

bool Topology::is_divided() const
{
    return !edges_.empty() && std::all_of(edges_.begin(), edges_.end(),
                                          [](const Edge& e) { return e.partition != kNoPartition; });
}

std::optional<int> Topology::consumer_distance() const
{
    if (!has_consumers())
        return std::nullopt;
    const auto& a = nodes_[*alice_].coord;
    const auto& b = nodes_[*bob_].coord;
    if (!a || !b)
        return std::nullopt;
    return std::abs(a->x - b->x) + std::abs(a->y - b->y);
}

Topology Topology::with_consumers(NodeId a, NodeId b) const
{
    require(a < nodes_.size() && b < nodes_.size(), "consumer id out of range");
    require(a != b, "consumers must be distinct nodes");
    std::vector<Node> nodes = nodes_;
    for (Node& n : nodes)
        n.role = NodeRole::helper;
    nodes[a].role = NodeRole::alice;
    nodes[b].role = NodeRole::bob;
    return Topology(std::move(nodes), edges_, grid_);
}

bool operator==(const Topology& a, const Topology& b)
{
    if (a.nodes_.size() != b.nodes_.size() || a.edges_.size() != b.edges_.size())
        return false;
    if (a.grid_.has_value() != b.grid_.has_value())
        return false;
    if (a.grid_ && (a.grid_->width != b.grid_->width || a.grid_->height != b.grid_->height))
        return false;
    for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
        const Node& x = a.nodes_[i];
        const Node& y = b.nodes_[i];
        if (x.id != y.id || x.role != y.role || x.coord != y.coord)
            return false;
    }
    for (std::size_t i = 0; i < a.edges_.size(); ++i) {
        const Edge& x = a.edges_[i];
        const Edge& y = b.edges_[i];
        if (x.u != y.u || x.v != y.v || x.color != y.color || x.partition != y.partition)
            return false;
    }
    return true;
}

////////////////////////////////////////////////////////////
// DegreeDistribution

DegreeDistribution::DegreeDistribution(std::vector<double> probabilities) : p_(std::move(probabilities))
{
    require(!p_.empty(), "degree distribution is empty");
    double total = 0.0;
    for (std::size_t d = 0; d < p_.size(); ++d) {
        require(p_[d] >= 0.0 && std::isfinite(p_[d]), "degree probabilities must be finite and non-negative");
        total += p_[d];
        mean_ += static_cast<double>(d) * p_[d];
    }
    require(std::abs(total - 1.0) <= kNormalizationSlack, "degree probabilities must sum to 1");
    require(mean_ > 0.0, "degenerate degree distribution: mean degree is zero");
}

DegreeDistribution DegreeDistribution::constant(int degree)
{
    require(degree >= 1, "constant degree must be positive");
    std::vector<double> p(static_cast<std::size_t>(degree) + 1, 0.0);
    p.back() = 1.0;
    return DegreeDistribution(std::move(p));
}

DegreeDistribution DegreeDistribution::poisson(double mean, int d_max)
{
    require(mean > 0.0, "poisson mean must be positive");
    require(d_max >= 1, "poisson truncation must be positive");
    std::vector<double> p(static_cast<std::size_t>(d_max) + 1);
    double total = 0.0;
    for (int d = 0; d <= d_max; ++d) {
        p[d] = std::exp(d * std::log(mean) - mean - std::lgamma(d + 1.0));
        total += p[d];
    }
    p.back() += std::max(0.0, 1.0 - total);
    // Renormalise away the rounding left after folding the tail.
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& x : p)
        x /= sum;
    return DegreeDistribution(std::move(p));
}

////////////////////////////////////////////////////////////
// Grids

Topology build_square_grid(int width, int height, GridCoord consumer_a, GridCoord consumer_b)
{
    require(width >= 1 && height >= 1, "grid dimensions must be positive");
    require(in_grid(consumer_a, width, height), "consumer A lies outside the grid");
    require(in_grid(consumer_b, width, height), "consumer B lies outside the grid");
    require(!(consumer_a == consumer_b), "consumers must occupy different nodes");

    std::vector<Node> nodes;
    nodes.reserve(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            Node n;
            n.id = static_cast<NodeId>(nodes.size());
            n.coord = GridCoord{x, y};
            if (GridCoord{x, y} == consumer_a)
                n.role = NodeRole::alice;
            else if (GridCoord{x, y} == consumer_b)
                n.role = NodeRole::bob;
            nodes.push_back(n);
        }

    auto id = [width](int x, int y) { return static_cast<NodeId>(y * width + x); };
    std::vector<Edge> edges;
    edges.reserve(2 * nodes.size());
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            if (x + 1 < width)
                edges.push_back({id(x, y), id(x + 1, y)});
            if (y + 1 < height)
                edges.push_back({id(x, y), id(x, y + 1)});
        }
    return Topology(std::move(nodes), std::move(edges), GridShape{width, height});
}

std::pair<GridCoord, GridCoord> centered_consumers(int width, int height, int distance)
{
    require(distance >= 1 && distance < width, "consumer distance must fit inside the grid width");
    const int y = height / 2;
    const int x0 = (width - 1 - distance) / 2;
    return {GridCoord{x0, y}, GridCoord{x0 + distance, y}};
}

Topology apply_brickwork_coloring(const Topology& topology)
{
    require(topology.is_grid(), "brickwork coloring requires a square grid topology");
    std::vector<Edge> edges(topology.edges().begin(), topology.edges().end());
    for (Edge& e : edges) {
        const auto& a = topology.node(e.u).coord;
        const auto& b = topology.node(e.v).coord;
        require(a && b, "grid node without coordinates");
        if (a->y == b->y) {
            e.color = EdgeColor::black;
        }
        else {
            const GridCoord low = a->y < b->y ? *a : *b;
            e.color = ((low.x + low.y) % 2 == 0) ? EdgeColor::black : EdgeColor::red;
        }
    }
    std::vector<Node> nodes(topology.nodes().begin(), topology.nodes().end());
    return Topology(std::move(nodes), std::move(edges), topology.grid());
}

////////////////////////////////////////////////////////////
// Random graphs

namespace {

int sample_degree(std::span<const double> cdf, Rng& rng)
{
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), cdf.size() - 1));
}

} // namespace

Topology build_configuration_graph(const DegreeDistribution& dist, int n_nodes, Rng& rng)
{
    require(n_nodes >= 1, "node count must be positive");
    auto probs = dist.probabilities();
    require(probs[0] < 1.0, "degenerate degree distribution: p_0 = 1");

    std::vector<double> cdf(probs.size());
    std::partial_sum(probs.begin(), probs.end(), cdf.begin());

    std::vector<int> degree(static_cast<std::size_t>(n_nodes));
    long long stubs = 0;
    for (int& d : degree) {
        d = sample_degree(cdf, rng);
        stubs += d;
    }
    // Odd stub totals are fixed by redrawing one random node's degree.
    for (int attempt = 0; stubs % 2 != 0; ++attempt) {
        require(attempt < 10000, "cannot reach an even stub count for this distribution and size");
        const auto i = static_cast<std::size_t>(rng.below(degree.size()));
        stubs -= degree[i];
        degree[i] = sample_degree(cdf, rng);
        stubs += degree[i];
    }

    std::vector<NodeId> stub_owner;
    stub_owner.reserve(static_cast<std::size_t>(stubs));
    for (NodeId n = 0; n < degree.size(); ++n)
        stub_owner.insert(stub_owner.end(), static_cast<std::size_t>(degree[n]), n);
    partial_shuffle(stub_owner, stub_owner.size(), rng);

    std::unordered_set<std::uint64_t> seen;
    seen.reserve(stub_owner.size());
    std::vector<Edge> edges;
    edges.reserve(stub_owner.size() / 2);
    for (std::size_t i = 0; i + 1 < stub_owner.size(); i += 2) {
        NodeId a = stub_owner[i];
        NodeId b = stub_owner[i + 1];
        if (a == b)
            continue;
        if (a > b)
            std::swap(a, b);
        const std::uint64_t key = (std::uint64_t{a} << 32) | b;
        if (!seen.insert(key).second)
            continue;
        edges.push_back({a, b});
    }

    std::vector<Node> nodes(degree.size());
    for (NodeId n = 0; n < nodes.size(); ++n)
        nodes[n].id = n;
    return Topology(std::move(nodes), std::move(edges));
}

BoundedColoring color_bounded_black(const Topology& topology, int n, Rng& rng)
{
    require(n >= 1, "black-edge cap must be at least 1");
    for (const Edge& e : topology.edges())
        require(e.color == EdgeColor::none, "topology is already colored");

    std::vector<EdgeId> order(topology.edge_count());
    std::iota(order.begin(), order.end(), EdgeId{0});
    partial_shuffle(order, order.size(), rng);

    std::vector<Edge> edges(topology.edges().begin(), topology.edges().end());
    std::vector<int> black(topology.node_count(), 0);
    for (EdgeId id : order) {
        Edge& e = edges[id];
        if (black[e.u] < n && black[e.v] < n) {
            e.color = EdgeColor::black;
            ++black[e.u];
            ++black[e.v];
        }
        else {
            e.color = EdgeColor::red;
        }
    }

    BoundedColoring out;
    for (NodeId v = 0; v < topology.node_count(); ++v) {
        const int target = std::min<int>(n, static_cast<int>(topology.degree(v)));
        if (black[v] < target)
            out.short_nodes.push_back(v);
    }
    std::vector<Node> nodes(topology.nodes().begin(), topology.nodes().end());
    out.topology = Topology(std::move(nodes), std::move(edges), topology.grid());
    return out;
}

////////////////////////////////////////////////////////////
// Dividing

PartitionMap default_partition(const Topology& topology)
{
    require(topology.is_grid(), "default partition requires a square grid");
    require(topology.has_consumers(), "default partition requires designated consumers");
    const int width = topology.grid()->width;
    const int height = topology.grid()->height;
    GridCoord a = *topology.node(*topology.alice()).coord;
    GridCoord b = *topology.node(*topology.bob()).coord;
    require(a.y == b.y, "default partition requires horizontally opposed consumers; pass a partition map");
    if (a.x > b.x)
        std::swap(a, b);
    const int yc = a.y;
    require(yc >= 2 && height - yc >= 4, "consumer row too close to the grid boundary for four strips");
    require(a.x >= 1 && b.x <= width - 2, "consumers too close to the side boundary");
    require(b.x - a.x >= 2, "consumers must be at least two hops apart");

    // Four horizontal bands split at the consumer row. Each consumer's W/E
    // (left) or E/W (right) neighbour is routed to the outer bands through a
    // one-node-wide vertical corridor, its S and N neighbours take bands 1 and
    // 3 (via corridor) respectively.
    const int low = yc / 2;
    const int high = yc + (height - yc) / 2;
    PartitionMap part(topology.node_count(), 0);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            std::int8_t band = y < low ? 0 : y < yc ? 1 : y < high ? 2 : 3;
            part[topology.grid_node(x, y)] = band;
        }
    for (int y = low; y <= yc; ++y) {
        part[topology.grid_node(a.x - 1, y)] = 0;
        part[topology.grid_node(b.x + 1, y)] = 0;
    }
    for (int y = yc + 1; y < high; ++y) {
        part[topology.grid_node(a.x, y)] = 3;
        part[topology.grid_node(b.x, y)] = 3;
    }
    return part;
}

Topology divide_network(const Topology& topology, const std::optional<PartitionMap>& partition_map)
{
    require(topology.has_consumers(), "dividing requires designated consumers");
    const PartitionMap part = partition_map ? *partition_map : default_partition(topology);
    require(part.size() == topology.node_count(), "partition map size does not match node count");

    auto is_consumer = [&](NodeId n) { return topology.node(n).role != NodeRole::helper; };
    for (NodeId n = 0; n < topology.node_count(); ++n)
        if (!is_consumer(n))
            require(part[n] >= 0 && part[n] <= 3, "helper partition must be in 0..3");

    for (NodeId c : {*topology.alice(), *topology.bob()}) {
        std::array<int, 4> hits{};
        for (const Incidence& inc : topology.incident(c))
            if (!is_consumer(inc.neighbor))
                ++hits[static_cast<std::size_t>(part[inc.neighbor])];
        for (int h : hits)
            require(h == 1, "each partition must hold exactly one memory of each consumer");
    }

    std::vector<Edge> edges;
    for (const Edge& e : topology.edges()) {
        const bool cu = is_consumer(e.u);
        const bool cv = is_consumer(e.v);
        if (cu && cv)
            continue;
        Edge kept = e;
        if (cu)
            kept.partition = part[e.v];
        else if (cv)
            kept.partition = part[e.u];
        else if (part[e.u] == part[e.v])
            kept.partition = part[e.u];
        else
            continue;
        edges.push_back(kept);
    }
    std::vector<Node> nodes(topology.nodes().begin(), topology.nodes().end());
    return Topology(std::move(nodes), std::move(edges), topology.grid());
}

////////////////////////////////////////////////////////////
// Text format

std::string_view to_string(NodeRole role)
{
    switch (role) {
    case NodeRole::alice: return "alice";
    case NodeRole::bob: return "bob";
    default: return "helper";
    }
}

std::string_view to_string(EdgeColor color)
{
    switch (color) {
    case EdgeColor::black: return "black";
    case EdgeColor::red: return "red";
    default: return "none";
    }
}

void write_topology(std::ostream& out, const Topology& topology)
{
    out << "ghznet-topology 1\n";
    out << "nodes " << topology.node_count() << '\n';
    out << "edges " << topology.edge_count() << '\n';
    if (topology.grid())
        out << "grid " << topology.grid()->width << ' ' << topology.grid()->height << '\n';
    else
        out << "grid none\n";
    for (const Node& n : topology.nodes()) {
        out << "node " << n.id << ' ' << to_string(n.role);
        if (n.coord)
            out << ' ' << n.coord->x << ' ' << n.coord->y;
        else
            out << " - -";
        out << '\n';
    }
    for (const Edge& e : topology.edges()) {
        out << "edge " << e.u << ' ' << e.v << ' ' << to_string(e.color) << ' ';
        if (e.partition == kNoPartition)
            out << '-';
        else
            out << static_cast<int>(e.partition);
        out << '\n';
    }
}

namespace {

std::istringstream next_record(std::istream& in, std::string_view tag)
{
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ls(line);
        std::string head;
        ls >> head;
        require(head == tag, "expected '" + std::string(tag) + "' record, found '" + head + "'");
        return ls;
    }
    throw TopologyError("unexpected end of topology stream, wanted '" + std::string(tag) + "'");
}

long long read_int(std::istringstream& ls)
{
    std::string tok;
    require(static_cast<bool>(ls >> tok), "missing integer field");
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(tok, &used);
    }
    catch (const std::exception&) {
        used = 0;
    }
    require(used == tok.size(), "malformed integer '" + tok + "'");
    return v;
}

} // namespace

Topology read_topology(std::istream& in)
{
    {
        auto ls = next_record(in, "ghznet-topology");
        require(read_int(ls) == 1, "unsupported topology format version");
    }
    long long n_nodes = 0;
    long long n_edges = 0;
    {
        auto ls = next_record(in, "nodes");
        n_nodes = read_int(ls);
    }
    {
        auto ls = next_record(in, "edges");
        n_edges = read_int(ls);
    }
    require(n_nodes >= 0 && n_edges >= 0, "negative counts");
    std::optional<GridShape> grid;
    {
        auto ls = next_record(in, "grid");
        std::string tok;
        ls >> tok;
        if (tok != "none") {
            std::istringstream again(tok);
            GridShape g;
            g.width = static_cast<int>(read_int(again));
            g.height = static_cast<int>(read_int(ls));
            grid = g;
        }
    }
    std::vector<Node> nodes(static_cast<std::size_t>(n_nodes));
    for (auto& n : nodes) {
        auto ls = next_record(in, "node");
        n.id = static_cast<NodeId>(read_int(ls));
        std::string role;
        ls >> role;
        if (role == "alice")
            n.role = NodeRole::alice;
        else if (role == "bob")
            n.role = NodeRole::bob;
        else
            require(role == "helper", "unknown node role '" + role + "'");
        std::string xs, ys;
        ls >> xs >> ys;
        if (xs != "-") {
            std::istringstream cx(xs + " " + ys);
            GridCoord c;
            c.x = static_cast<int>(read_int(cx));
            c.y = static_cast<int>(read_int(cx));
            n.coord = c;
        }
    }
    std::vector<Edge> edges(static_cast<std::size_t>(n_edges));
    for (auto& e : edges) {
        auto ls = next_record(in, "edge");
        e.u = static_cast<NodeId>(read_int(ls));
        e.v = static_cast<NodeId>(read_int(ls));
        std::string color, part;
        ls >> color >> part;
        if (color == "black")
            e.color = EdgeColor::black;
        else if (color == "red")
            e.color = EdgeColor::red;
        else
            require(color == "none", "unknown edge color '" + color + "'");
        if (part != "-") {
            std::istringstream ps(part);
            e.partition = static_cast<std::int8_t>(read_int(ps));
        }
    }
    return Topology(std::move(nodes), std::move(edges), grid);
}

} // namespace ghznet
