#pragma once

#include "ghznet/rng.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ghznet {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;
using VertexId = std::uint32_t;

enum class NodeRole : std::uint8_t { helper, alice, bob };
enum class EdgeColor : std::uint8_t { none, black, red };

inline constexpr std::int8_t kNoPartition = -1;

struct GridCoord {
    int x = 0;
    int y = 0;
    friend bool operator==(const GridCoord&, const GridCoord&) = default;
};

struct Node {
    NodeId id = 0;
    NodeRole role = NodeRole::helper;
    std::optional<GridCoord> coord;
};

struct Edge {
    NodeId u = 0;
    NodeId v = 0;
    EdgeColor color = EdgeColor::none;
    std::int8_t partition = kNoPartition;
};

/// One (node, edge) incidence. The memory qubit that node holds for that edge.
struct Incidence {
    EdgeId edge;
    VertexId vertex;
    NodeId neighbor;
};

struct GridShape {
    int width = 0;
    int height = 0;
};

class TopologyError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Network graph G(V,E) with one memory-qubit vertex per (node, edge) incidence.
///
/// Memory vertices are numbered 2e (held by edge e's `u` endpoint) and 2e+1
/// (held by `v`), so the partner of a vertex across its link is `vertex ^ 1`.
/// Instances are immutable once built; all mutating operations return a new
/// Topology.
class Topology {
public:
    Topology() = default;
    Topology(std::vector<Node> nodes, std::vector<Edge> edges,
             std::optional<GridShape> grid = std::nullopt);

    std::span<const Node> nodes() const { return nodes_; }
    std::span<const Edge> edges() const { return edges_; }
    const Node& node(NodeId id) const { return nodes_[id]; }
    const Edge& edge(EdgeId id) const { return edges_[id]; }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    std::size_t vertex_count() const { return 2 * edges_.size(); }

    std::span<const Incidence> incident(NodeId n) const
    {
        return {incidence_.data() + offsets_[n], incidence_.data() + offsets_[n + 1]};
    }
    std::size_t degree(NodeId n) const { return offsets_[n + 1] - offsets_[n]; }
    std::size_t max_degree() const;

    static constexpr EdgeId vertex_edge(VertexId v) { return v >> 1; }
    static constexpr VertexId partner(VertexId v) { return v ^ 1U; }
    NodeId vertex_node(VertexId v) const
    {
        const Edge& e = edges_[vertex_edge(v)];
        return (v & 1U) ? e.v : e.u;
    }

    const std::optional<GridShape>& grid() const { return grid_; }
    bool is_grid() const { return grid_.has_value(); }
    bool is_colored() const;
    bool is_divided() const;

    std::optional<NodeId> alice() const { return alice_; }
    std::optional<NodeId> bob() const { return bob_; }
    bool has_consumers() const { return alice_.has_value() && bob_.has_value(); }

    /// Manhattan distance between the consumers when both carry grid coordinates.
    std::optional<int> consumer_distance() const;

    /// Grid lookup; only valid on grid topologies.
    NodeId grid_node(int x, int y) const { return static_cast<NodeId>(y * grid_->width + x); }

    /// Copy with the given nodes marked as consumers (all others helpers).
    Topology with_consumers(NodeId a, NodeId b) const;

    friend bool operator==(const Topology& a, const Topology& b);

private:
    void index();

    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::optional<GridShape> grid_;
    std::vector<std::uint32_t> offsets_;
    std::vector<Incidence> incidence_;
    std::optional<NodeId> alice_;
    std::optional<NodeId> bob_;
};

/// Degree distribution p_d with finite support d = 0..d_max.
class DegreeDistribution {
public:
    static constexpr double kNormalizationSlack = 1e-12;

    /// Validates and stores the probabilities; throws TopologyError when
    /// entries are negative, do not sum to one, or the mean degree is zero.
    explicit DegreeDistribution(std::vector<double> probabilities);

    static DegreeDistribution constant(int degree);
    /// Poisson(mean) truncated at d_max; the tail mass is folded into d_max.
    static DegreeDistribution poisson(double mean, int d_max);

    std::span<const double> probabilities() const { return p_; }
    double operator[](std::size_t d) const { return d < p_.size() ? p_[d] : 0.0; }
    int max_degree() const { return static_cast<int>(p_.size()) - 1; }
    double mean() const { return mean_; }

private:
    std::vector<double> p_;
    double mean_ = 0.0;
};

Topology build_square_grid(int width, int height, GridCoord consumer_a, GridCoord consumer_b);

/// Consumer pair on the middle row, `distance` hops apart and centred.
std::pair<GridCoord, GridCoord> centered_consumers(int width, int height, int distance);

Topology apply_brickwork_coloring(const Topology& topology);

Topology build_configuration_graph(const DegreeDistribution& dist, int n_nodes, Rng& rng);

/// Result of the greedy bounded-black coloring. `short_nodes` lists nodes that
/// ended with fewer than min(n, degree) black edges because a neighbour had
/// already reached its cap.
struct BoundedColoring {
    Topology topology;
    std::vector<NodeId> short_nodes;
};

BoundedColoring color_bounded_black(const Topology& topology, int n, Rng& rng);

/// Node -> partition (0..3) assignment. Consumer entries are ignored.
using PartitionMap = std::vector<std::int8_t>;

/// Default four-way partition for horizontally opposed consumers.
PartitionMap default_partition(const Topology& topology);

Topology divide_network(const Topology& topology,
                        const std::optional<PartitionMap>& partition_map = std::nullopt);

/// Line-oriented text form; see README for the format.
void write_topology(std::ostream& out, const Topology& topology);
Topology read_topology(std::istream& in);

std::string_view to_string(NodeRole role);
std::string_view to_string(EdgeColor color);

} // namespace ghznet
