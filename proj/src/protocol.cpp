#include "ghznet/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace ghznet {

std::string_view to_string(Variant v)
{
    switch (v) {
    case Variant::brickwork: return "brickwork";
    case Variant::divided: return "divided-nghz";
    default: return "nghz-random";
    }
}

std::optional<Variant> parse_variant(std::string_view name)
{
    if (name == "nghz-random")
        return Variant::random_ghz;
    if (name == "brickwork")
        return Variant::brickwork;
    if (name == "divided-nghz")
        return Variant::divided;
    return std::nullopt;
}

void ProtocolConfig::validate() const
{
    auto prob = [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; };
    if (fusion_cap < 1)
        throw ConfigError("n: fusion cap must be at least 1");
    if (!prob(link_p))
        throw ConfigError("p: link probability must lie in [0,1]");
    if (!prob(fusion_q))
        throw ConfigError("q: fusion probability must lie in [0,1]");
    if (thinning && !(std::isfinite(*thinning) && *thinning > 0.0 && *thinning <= 1.0))
        throw ConfigError("thinning: threshold p* must lie in (0,1]");
    if (trials < 1)
        throw ConfigError("trials: at least one trial is required");
}

void check_variant_topology(const Topology& topology, const ProtocolConfig& config)
{
    if (config.variant == Variant::brickwork && !topology.is_colored())
        throw ConfigError("variant: brickwork selection needs a black/red colored topology");
    if (config.variant == Variant::divided && !topology.is_divided())
        throw ConfigError("variant: divided-nghz needs a divided topology");
}

std::size_t LinkOutcome::successes() const
{
    return static_cast<std::size_t>(std::count(up.begin(), up.end(), std::uint8_t{1}));
}

////////////////////////////////////////////////////////////
// FusionPlan / ComponentSet

void FusionPlan::clear(std::size_t reserve_vertices)
{
    fused_offset_.assign(1, 0);
    measured_offset_.assign(1, 0);
    fused_.clear();
    measured_.clear();
    fused_.reserve(reserve_vertices);
}

void FusionPlan::add_node(std::span<const VertexId> fused, std::span<const VertexId> measured)
{
    if (fused_offset_.empty())
        clear();
    fused_.insert(fused_.end(), fused.begin(), fused.end());
    measured_.insert(measured_.end(), measured.begin(), measured.end());
    fused_offset_.push_back(static_cast<std::uint32_t>(fused_.size()));
    measured_offset_.push_back(static_cast<std::uint32_t>(measured_.size()));
}

void ComponentSet::reset(std::size_t vertex_count, std::size_t node_count)
{
    dsu_.reset(vertex_count);
    active_.assign(vertex_count, 0);
    fused_ok_.assign(node_count, 0);
    cache_.clear();
    cache_valid_ = false;
}

const std::vector<std::vector<VertexId>>& ComponentSet::components()
{
    if (cache_valid_)
        return cache_;
    cache_.clear();
    std::vector<std::int64_t> slot(active_.size(), -1);
    for (VertexId v = 0; v < active_.size(); ++v) {
        if (!active_[v])
            continue;
        const VertexId r = dsu_.find(v);
        if (slot[r] < 0) {
            slot[r] = static_cast<std::int64_t>(cache_.size());
            cache_.emplace_back();
        }
        cache_[static_cast<std::size_t>(slot[r])].push_back(v);
    }
    cache_valid_ = true;
    return cache_;
}

////////////////////////////////////////////////////////////
// Cycle stages

LinkOutcome sample_link_outcomes(const Topology& topology, const ProtocolConfig& config, Rng& rng)
{
    LinkOutcome out;
    out.up.resize(topology.edge_count());
    const double p = config.link_p;
    const bool thin = config.thinning_active();
    const double drop = thin ? (p - *config.thinning) / p : 0.0;
    for (auto& bit : out.up) {
        bool ok = rng.uniform() < p;
        if (thin) {
            const bool deleted = rng.uniform() < drop;
            ok = ok && !deleted;
        }
        bit = ok ? 1 : 0;
    }
    return out;
}

namespace {

/// Fills `fused`/`measured` for one helper node according to the variant rule.
void choose_for_node(const Topology& topology, const LinkOutcome& links, const ProtocolConfig& config,
                     NodeId node, Rng& rng, std::vector<VertexId>& fused, std::vector<VertexId>& measured,
                     std::vector<VertexId>& scratch)
{
    fused.clear();
    measured.clear();
    const auto cap = static_cast<std::size_t>(config.fusion_cap);

    if (config.variant == Variant::brickwork) {
        scratch.clear();
        for (const Incidence& inc : topology.incident(node)) {
            if (!links[inc.edge])
                continue;
            if (topology.edge(inc.edge).color == EdgeColor::black)
                fused.push_back(inc.vertex);
            else
                scratch.push_back(inc.vertex);
        }
        if (fused.size() >= cap) {
            partial_shuffle(fused, cap, rng);
            measured.assign(fused.begin() + static_cast<std::ptrdiff_t>(cap), fused.end());
            fused.resize(cap);
            measured.insert(measured.end(), scratch.begin(), scratch.end());
        }
        else {
            const std::size_t room = std::min(scratch.size(), cap - fused.size());
            partial_shuffle(scratch, room, rng);
            fused.insert(fused.end(), scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(room));
            measured.assign(scratch.begin() + static_cast<std::ptrdiff_t>(room), scratch.end());
        }
    }
    else {
        for (const Incidence& inc : topology.incident(node))
            if (links[inc.edge])
                fused.push_back(inc.vertex);
        if (fused.size() > cap) {
            partial_shuffle(fused, cap, rng);
            measured.assign(fused.begin() + static_cast<std::ptrdiff_t>(cap), fused.end());
            fused.resize(cap);
        }
    }

    // A lone qubit (or a cap of one) is X-measured instead of fused.
    if (fused.size() == 1) {
        measured.push_back(fused.front());
        fused.clear();
    }
}

} // namespace

FusionPlan select_fusions(const Topology& topology, const LinkOutcome& links, const ProtocolConfig& config,
                          Rng& rng)
{
    check_variant_topology(topology, config);
    FusionPlan plan;
    plan.clear(topology.vertex_count());
    std::vector<VertexId> fused, measured, scratch;
    for (NodeId n = 0; n < topology.node_count(); ++n) {
        if (topology.node(n).role != NodeRole::helper) {
            plan.add_node({}, {});
            continue;
        }
        choose_for_node(topology, links, config, n, rng, fused, measured, scratch);
        plan.add_node(fused, measured);
    }
    return plan;
}

ComponentSet resolve_with_outcomes(const Topology& topology, const LinkOutcome& links, const FusionPlan& plan,
                                   std::span<const std::uint8_t> succeeded)
{
    ComponentSet cs(topology.vertex_count(), topology.node_count());
    for (NodeId n = 0; n < topology.node_count(); ++n) {
        if (topology.node(n).role != NodeRole::helper) {
            for (const Incidence& inc : topology.incident(n))
                cs.activate(inc.vertex);
            continue;
        }
        const auto members = plan.fusion(n);
        if (members.empty() || !succeeded[n])
            continue;
        cs.set_fusion_succeeded(n, true);
        for (VertexId v : members) {
            cs.activate(v);
            cs.unite(members.front(), v);
        }
    }
    for (EdgeId e = 0; e < topology.edge_count(); ++e) {
        const VertexId a = 2 * e;
        if (links[e] && cs.active(a) && cs.active(a + 1))
            cs.unite(a, a + 1);
    }
    return cs;
}

ComponentSet resolve_cycle(const Topology& topology, const LinkOutcome& links, const FusionPlan& plan,
                           const ProtocolConfig& config, Rng& rng)
{
    std::vector<std::uint8_t> ok(topology.node_count());
    for (auto& bit : ok)
        bit = rng.uniform() < config.fusion_q ? 1 : 0;
    return resolve_with_outcomes(topology, links, plan, ok);
}

SharedGhz count_shared_ghz(const ComponentSet& components, const Topology& topology)
{
    SharedGhz out;
    if (!topology.has_consumers())
        return out;

    struct Tally {
        VertexId root;
        int alice;
        int bob;
    };
    std::vector<Tally> tallies;
    auto tally = [&](NodeId consumer, bool is_alice) {
        for (const Incidence& inc : topology.incident(consumer)) {
            const VertexId r = components.root(inc.vertex);
            auto it = std::find_if(tallies.begin(), tallies.end(), [r](const Tally& t) { return t.root == r; });
            if (it == tallies.end()) {
                tallies.push_back({r, 0, 0});
                it = tallies.end() - 1;
            }
            (is_alice ? it->alice : it->bob) += 1;
        }
    };
    tally(*topology.alice(), true);
    tally(*topology.bob(), false);
    for (const Tally& t : tallies)
        if (t.alice > 0 && t.bob > 0)
            out.states.push_back({t.alice, t.bob});
    out.count = static_cast<int>(out.states.size());
    return out;
}

////////////////////////////////////////////////////////////
// Trials

CycleResult run_cycle(const Topology& topology, const ProtocolConfig& config, std::uint64_t trial)
{
    TrialStreams streams(config.seed, trial);
    CycleResult r;
    r.links = sample_link_outcomes(topology, config, streams.links);
    r.plan = select_fusions(topology, r.links, config, streams.choices);
    r.components = resolve_cycle(topology, r.links, r.plan, config, streams.fusions);
    return r;
}

std::pair<double, double> mean_and_stderr(std::span<const double> values)
{
    const auto n = static_cast<double>(values.size());
    if (values.empty())
        return {0.0, 0.0};
    double sum = 0.0;
    for (double v : values)
        sum += v;
    const double mean = sum / n;
    if (values.size() < 2)
        return {mean, 0.0};
    double ss = 0.0;
    for (double v : values)
        ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

RateEstimate estimate_rate(const Topology& topology, const ProtocolConfig& config, int threads)
{
    config.validate();
    check_variant_topology(topology, config);

    std::vector<int> counts(static_cast<std::size_t>(config.trials));
    std::vector<std::vector<std::int64_t>> sizes(static_cast<std::size_t>(std::max(threads, 1)));
    for_each_trial(config.trials, threads, [&](std::int64_t t, int worker) {
        CycleResult cycle = run_cycle(topology, config, static_cast<std::uint64_t>(t));
        const SharedGhz shared = count_shared_ghz(cycle.components, topology);
        counts[static_cast<std::size_t>(t)] = shared.count;
        auto& hist = sizes[static_cast<std::size_t>(worker)];
        for (const SharedState& s : shared.states) {
            const auto m = static_cast<std::size_t>(s.alice_qubits + s.bob_qubits);
            if (hist.size() <= m)
                hist.resize(m + 1, 0);
            ++hist[m];
        }
    });

    RateEstimate est;
    est.trials = config.trials;
    est.count_histogram.assign(5, 0);
    std::vector<double> values(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const auto c = static_cast<std::size_t>(counts[i]);
        if (est.count_histogram.size() <= c)
            est.count_histogram.resize(c + 1, 0);
        ++est.count_histogram[c];
        values[i] = counts[i];
    }
    std::tie(est.mean, est.std_error) = mean_and_stderr(values);
    for (const auto& hist : sizes) {
        if (est.size_histogram.size() < hist.size())
            est.size_histogram.resize(hist.size(), 0);
        for (std::size_t m = 0; m < hist.size(); ++m)
            est.size_histogram[m] += hist[m];
    }
    return est;
}

////////////////////////////////////////////////////////////
// Exact enumeration

namespace {

struct NodeChoice {
    std::vector<VertexId> fused;
    std::vector<VertexId> measured;
};

void combinations(std::size_t n, std::size_t k, const std::function<void(const std::vector<std::size_t>&)>& visit)
{
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    while (true) {
        visit(idx);
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + (i - 1))
            --i;
        if (i == 0)
            return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j)
            idx[j] = idx[j - 1] + 1;
    }
}

/// Every equally likely (fused, measured) choice a helper can make.
std::vector<NodeChoice> node_choices(const Topology& topology, const LinkOutcome& links,
                                     const ProtocolConfig& config, NodeId node)
{
    const auto cap = static_cast<std::size_t>(config.fusion_cap);
    std::vector<VertexId> primary, secondary;
    for (const Incidence& inc : topology.incident(node)) {
        if (!links[inc.edge])
            continue;
        if (config.variant == Variant::brickwork && topology.edge(inc.edge).color != EdgeColor::black)
            secondary.push_back(inc.vertex);
        else
            primary.push_back(inc.vertex);
    }

    std::vector<NodeChoice> out;
    auto finish = [&](NodeChoice c) {
        if (c.fused.size() == 1) {
            c.measured.push_back(c.fused.front());
            c.fused.clear();
        }
        out.push_back(std::move(c));
    };
    // Picks a k-subset of `pool` to fuse alongside `base`; the rest are measured.
    auto pick = [&](const std::vector<VertexId>& base, const std::vector<VertexId>& pool, std::size_t k,
                    const std::vector<VertexId>& also_measured) {
        if (k == 0 || pool.empty()) {
            NodeChoice c{base, pool};
            c.measured.insert(c.measured.end(), also_measured.begin(), also_measured.end());
            finish(std::move(c));
            return;
        }
        combinations(pool.size(), k, [&](const std::vector<std::size_t>& idx) {
            NodeChoice c{base, {}};
            std::vector<bool> chosen(pool.size(), false);
            for (std::size_t i : idx) {
                chosen[i] = true;
                c.fused.push_back(pool[i]);
            }
            for (std::size_t i = 0; i < pool.size(); ++i)
                if (!chosen[i])
                    c.measured.push_back(pool[i]);
            c.measured.insert(c.measured.end(), also_measured.begin(), also_measured.end());
            finish(std::move(c));
        });
    };

    if (config.variant == Variant::brickwork) {
        if (primary.size() >= cap)
            pick({}, primary, cap, secondary);
        else
            pick(primary, secondary, std::min(secondary.size(), cap - primary.size()), {});
    }
    else {
        pick({}, primary, std::min(primary.size(), cap), {});
    }
    return out;
}

} // namespace

double exact_rate(const Topology& topology, const ProtocolConfig& config)
{
    config.validate();
    check_variant_topology(topology, config);
    const std::size_t m = topology.edge_count();
    if (m > 20)
        throw ConfigError("exact enumeration supports at most 20 edges");

    const double p = config.effective_link_p();
    const double q = config.fusion_q;
    double expected = 0.0;
    LinkOutcome links;
    links.up.resize(m);
    std::vector<std::uint8_t> outcome(topology.node_count(), 0);

    for (std::uint32_t mask = 0; mask < (1U << m); ++mask) {
        double w_links = 1.0;
        for (std::size_t e = 0; e < m; ++e) {
            links.up[e] = (mask >> e) & 1U;
            w_links *= links.up[e] ? p : 1.0 - p;
        }
        if (w_links == 0.0)
            continue;

        std::vector<NodeId> helpers;
        std::vector<std::vector<NodeChoice>> options;
        for (NodeId n = 0; n < topology.node_count(); ++n)
            if (topology.node(n).role == NodeRole::helper) {
                helpers.push_back(n);
                options.push_back(node_choices(topology, links, config, n));
            }

        std::vector<std::size_t> pick(helpers.size(), 0);
        while (true) {
            double w_choice = w_links;
            FusionPlan plan;
            plan.clear();
            std::vector<NodeId> fusing;
            std::size_t h = 0;
            for (NodeId n = 0; n < topology.node_count(); ++n) {
                if (h < helpers.size() && helpers[h] == n) {
                    const NodeChoice& c = options[h][pick[h]];
                    w_choice /= static_cast<double>(options[h].size());
                    plan.add_node(c.fused, c.measured);
                    if (!c.fused.empty())
                        fusing.push_back(n);
                    ++h;
                }
                else {
                    plan.add_node({}, {});
                }
            }

            for (std::uint32_t fm = 0; fm < (1U << fusing.size()); ++fm) {
                double w = w_choice;
                for (std::size_t i = 0; i < fusing.size(); ++i) {
                    const bool ok = (fm >> i) & 1U;
                    outcome[fusing[i]] = ok ? 1 : 0;
                    w *= ok ? q : 1.0 - q;
                }
                if (w == 0.0)
                    continue;
                const ComponentSet cs = resolve_with_outcomes(topology, links, plan, outcome);
                expected += w * count_shared_ghz(cs, topology).count;
            }

            std::size_t i = 0;
            while (i < pick.size() && ++pick[i] == options[i].size())
                pick[i++] = 0;
            if (i == pick.size())
                break;
        }
    }
    return expected;
}

} // namespace ghznet
