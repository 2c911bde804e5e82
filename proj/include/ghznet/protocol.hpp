#pragma once

#include "ghznet/disjoint_set.hpp"
#include "ghznet/rng.hpp"
#include "ghznet/topology.hpp"

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

namespace ghznet {

/// Fusion-set selection rule at helper nodes.
enum class Variant : std::uint8_t {
    random_ghz,   ///< fuse up to n successful links, random n-subset when more succeed
    brickwork,    ///< black links first, red links only while fewer than n black succeed
    divided,      ///< random_ghz rule on a partitioned (divided) topology
};

std::string_view to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view name);

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ProtocolConfig {
    Variant variant = Variant::random_ghz;
    int fusion_cap = 4;                  ///< n: largest GHZ projection a helper may perform
    double link_p = 1.0;                 ///< p: per-edge link success probability
    double fusion_q = 1.0;               ///< q: per-fusion success probability
    std::optional<double> thinning;      ///< p*: links are thinned to this rate when p > p*
    std::int64_t trials = 1000;
    std::uint64_t seed = 0;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    bool thinning_active() const { return thinning && link_p > *thinning; }
    double effective_link_p() const { return thinning_active() ? *thinning : link_p; }
};

/// Per-edge link success bits for one cycle.
struct LinkOutcome {
    std::vector<std::uint8_t> up;

    bool operator[](EdgeId e) const { return up[e] != 0; }
    std::size_t size() const { return up.size(); }
    std::size_t successes() const;
};

/// Per-helper fusion set and X-measured leftovers, stored CSR-style by node.
class FusionPlan {
public:
    std::span<const VertexId> fusion(NodeId n) const
    {
        return {fused_.data() + fused_offset_[n], fused_.data() + fused_offset_[n + 1]};
    }
    std::span<const VertexId> x_measured(NodeId n) const
    {
        return {measured_.data() + measured_offset_[n], measured_.data() + measured_offset_[n + 1]};
    }
    std::size_t node_count() const { return fused_offset_.empty() ? 0 : fused_offset_.size() - 1; }

    void clear(std::size_t reserve_vertices = 0);
    /// Appends the next node's entries; nodes must be added in id order.
    void add_node(std::span<const VertexId> fused, std::span<const VertexId> measured);

private:
    std::vector<std::uint32_t> fused_offset_;
    std::vector<VertexId> fused_;
    std::vector<std::uint32_t> measured_offset_;
    std::vector<VertexId> measured_;
};

/// Union-find over memory vertices for one resolved cycle.
///
/// A vertex is active when it is consumer-held or part of a successful fusion.
/// Components of active vertices are the GHZ states left after the cycle.
class ComponentSet {
public:
    ComponentSet() = default;
    ComponentSet(std::size_t vertex_count, std::size_t node_count) { reset(vertex_count, node_count); }

    void reset(std::size_t vertex_count, std::size_t node_count);

    void activate(VertexId v) { active_[v] = 1; }
    bool active(VertexId v) const { return active_[v] != 0; }
    void unite(VertexId a, VertexId b) { dsu_.unite(a, b); }
    VertexId root(VertexId v) { return dsu_.find(v); }
    VertexId root(VertexId v) const { return static_cast<const DisjointSet&>(dsu_).find(v); }

    void set_fusion_succeeded(NodeId n, bool ok) { fused_ok_[n] = ok ? 1 : 0; }
    bool fusion_succeeded(NodeId n) const { return fused_ok_[n] != 0; }

    std::size_t vertex_count() const { return active_.size(); }

    /// Active vertices grouped by component, each group sorted, groups ordered
    /// by their smallest vertex. Cached after the first call.
    const std::vector<std::vector<VertexId>>& components();

private:
    DisjointSet dsu_;
    std::vector<std::uint8_t> active_;
    std::vector<std::uint8_t> fused_ok_;
    std::vector<std::vector<VertexId>> cache_;
    bool cache_valid_ = false;
};

/// A component shared by the consumers: Alice holds m_a qubits, Bob m_b.
struct SharedState {
    int alice_qubits = 0;
    int bob_qubits = 0;
    friend bool operator==(const SharedState&, const SharedState&) = default;
};

struct SharedGhz {
    int count = 0;
    std::vector<SharedState> states;
};

struct RateEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t trials = 0;
    std::vector<std::int64_t> count_histogram;  ///< index = shared GHZ states in a cycle
    std::vector<std::int64_t> size_histogram;   ///< index = m_a + m_b of a shared state
};

LinkOutcome sample_link_outcomes(const Topology& topology, const ProtocolConfig& config, Rng& rng);

FusionPlan select_fusions(const Topology& topology, const LinkOutcome& links,
                          const ProtocolConfig& config, Rng& rng);

/// Resolves fusions with explicit per-node outcomes (`succeeded[n]` is read
/// only for nodes with a non-empty fusion set).
ComponentSet resolve_with_outcomes(const Topology& topology, const LinkOutcome& links,
                                   const FusionPlan& plan, std::span<const std::uint8_t> succeeded);

/// Draws one uniform per node (in node order) and resolves the cycle.
ComponentSet resolve_cycle(const Topology& topology, const LinkOutcome& links, const FusionPlan& plan,
                           const ProtocolConfig& config, Rng& rng);

SharedGhz count_shared_ghz(const ComponentSet& components, const Topology& topology);

/// Random streams used by one trial; derived from (master seed, trial index).
struct TrialStreams {
    Rng links;
    Rng choices;
    Rng fusions;

    TrialStreams(std::uint64_t master, std::uint64_t trial)
        : links(derive_seed(master, trial, 1)),
          choices(derive_seed(master, trial, 2)),
          fusions(derive_seed(master, trial, 3))
    {
    }
};

/// One complete cycle for trial `trial`: links, fusion selection, resolution.
struct CycleResult {
    LinkOutcome links;
    FusionPlan plan;
    ComponentSet components;
};
CycleResult run_cycle(const Topology& topology, const ProtocolConfig& config, std::uint64_t trial);

/// Monte Carlo rate over config.trials independent cycles.
/// Bit-identical for any thread count.
RateEstimate estimate_rate(const Topology& topology, const ProtocolConfig& config, int threads = 1);

/// Exact expected shared-GHZ count by enumerating every link pattern, every
/// equally likely fusion-set choice and every fusion outcome. Only feasible
/// for tiny topologies (at most 20 edges).
double exact_rate(const Topology& topology, const ProtocolConfig& config);

/// Checks that a topology fits a variant (colored for brickwork, divided for
/// divided). Throws ConfigError otherwise.
void check_variant_topology(const Topology& topology, const ProtocolConfig& config);

/// Runs `body(trial, worker)` for every trial on `threads` workers. Trials are
/// handed out dynamically; callers store per-trial results by index so the
/// reduction order never depends on scheduling.
template <typename Body>
void for_each_trial(std::int64_t trials, int threads, Body&& body)
{
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(std::max<std::int64_t>(trials, 1))));
    if (workers == 1) {
        for (std::int64_t t = 0; t < trials; ++t)
            body(t, 0);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::int64_t t = next++; t < trials; t = next++)
                body(t, w);
        });
    for (auto& th : pool)
        th.join();
}

/// Mean and standard error (sample std / sqrt(T)) of a sequence, accumulated
/// in index order.
std::pair<double, double> mean_and_stderr(std::span<const double> values);

} // namespace ghznet
