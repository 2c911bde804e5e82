#include "ghznet/percolation.hpp"

#include "ghznet/csv.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <ostream>

namespace ghznet {

std::string_view to_string(Criterion c)
{
    switch (c) {
    case Criterion::giant_component:
        return "giant-component";
    case Criterion::size_crossing:
        return "size-crossing";
    default:
        return "consumer-connection";
    }
}

std::optional<Criterion> parse_criterion(std::string_view name)
{
    if (name == "consumer-connection")
        return Criterion::consumer_connection;
    if (name == "giant-component")
        return Criterion::giant_component;
    if (name == "size-crossing")
        return Criterion::size_crossing;
    return std::nullopt;
}

////////////////////////////////////////////////////////////
// Direct sampling observables

double largest_component_fraction(const Topology& topology, const FusionPlan& plan, const ComponentSet& components)
{
    std::vector<std::uint32_t> members(components.vertex_count(), 0);
    std::uint32_t best = 0;
    std::size_t helpers = 0;
    for (NodeId n = 0; n < topology.node_count(); ++n) {
        if (topology.node(n).role != NodeRole::helper)
            continue;
        ++helpers;
        std::optional<VertexId> anchor;
        if (components.fusion_succeeded(n)) {
            anchor = plan.fusion(n).front();
        }
        else if (plan.fusion(n).empty() && plan.x_measured(n).size() == 1) {
            const VertexId far = Topology::partner(plan.x_measured(n).front());
            if (components.active(far))
                anchor = far;
        }
        if (!anchor) {
            best = std::max<std::uint32_t>(best, 1);
            continue;
        }
        best = std::max(best, ++members[components.root(*anchor)]);
    }
    return helpers == 0 ? 0.0 : static_cast<double>(best) / static_cast<double>(helpers);
}

namespace {

template <typename PerCycle>
Estimate sample_observable(const Topology& topology, const ProtocolConfig& config, int threads, PerCycle&& f)
{
    config.validate();
    check_variant_topology(topology, config);
    std::vector<double> values(static_cast<std::size_t>(config.trials));
    for_each_trial(config.trials, threads, [&](std::int64_t t, int) {
        CycleResult cycle = run_cycle(topology, config, static_cast<std::uint64_t>(t));
        values[static_cast<std::size_t>(t)] = f(cycle);
    });
    auto [mean, se] = mean_and_stderr(values);
    return {mean, se, config.trials};
}

} // namespace

Estimate giant_component_fraction(const Topology& topology, const ProtocolConfig& config, int threads)
{
    return sample_observable(topology, config, threads, [&](const CycleResult& c) {
        return largest_component_fraction(topology, c.plan, c.components);
    });
}

Estimate connection_probability(const Topology& topology, const ProtocolConfig& config, int threads)
{
    if (!topology.has_consumers())
        throw ConfigError("consumers: connection probability needs designated consumers");
    return sample_observable(topology, config, threads, [&](const CycleResult& c) {
        return count_shared_ghz(c.components, topology).count > 0 ? 1.0 : 0.0;
    });
}

////////////////////////////////////////////////////////////
// Newman-Ziff

std::vector<double> binomial_pmf(std::size_t e, double p)
{
    std::vector<double> pmf(e + 1, 0.0);
    if (p <= 0.0) {
        pmf.front() = 1.0;
        return pmf;
    }
    if (p >= 1.0) {
        pmf.back() = 1.0;
        return pmf;
    }
    const double lp = std::log(p);
    const double lq = std::log1p(-p);
    const double lg = std::lgamma(static_cast<double>(e) + 1.0);
    for (std::size_t m = 0; m <= e; ++m) {
        const auto md = static_cast<double>(m);
        const double lc = lg - std::lgamma(md + 1.0) - std::lgamma(static_cast<double>(e - m) + 1.0);
        pmf[m] = std::exp(lc + md * lp + static_cast<double>(e - m) * lq);
    }
    return pmf;
}

double canonical_average(std::span<const double> micro, double p)
{
    const auto pmf = binomial_pmf(micro.size() - 1, p);
    double acc = 0.0;
    for (std::size_t m = 0; m < micro.size(); ++m)
        acc += pmf[m] * micro[m];
    return acc;
}

bool bond_sweep_applicable(const Topology& topology, const ProtocolConfig& config)
{
    if (config.variant == Variant::brickwork || config.fusion_q != 1.0 || config.thinning)
        return false;
    for (NodeId n = 0; n < topology.node_count(); ++n)
        if (topology.node(n).role == NodeRole::helper &&
            topology.degree(n) > static_cast<std::size_t>(config.fusion_cap))
            return false;
    return true;
}

SweepResult newman_ziff_bond_sweep(const Topology& topology, const ProtocolConfig& config,
                                   std::span<const double> p_grid, int threads)
{
    config.validate();
    if (config.variant == Variant::brickwork)
        throw ConfigError("variant: brickwork selection is not a pure bond problem; sample per (p,q)");
    if (config.fusion_q != 1.0)
        throw ConfigError("q: Newman-Ziff sweeps need q = 1; sample per (p,q) instead");
    if (config.thinning)
        throw ConfigError("thinning: Newman-Ziff sweeps do not model thinning");
    if (!bond_sweep_applicable(topology, config))
        throw ConfigError("n: fusion cap below a helper degree makes selection random; sample per (p,q)");

    const std::size_t nodes = topology.node_count();
    const std::size_t edges = topology.edge_count();
    std::size_t helpers = 0;
    for (const Node& n : topology.nodes())
        helpers += n.role == NodeRole::helper;

    // Element ids: helper nodes keep their node id, consumer memories are
    // nodes + vertex id.
    auto element = [&](NodeId n, VertexId v) -> std::uint32_t {
        return topology.node(n).role == NodeRole::helper ? n : static_cast<std::uint32_t>(nodes + v);
    };
    const std::size_t elements = nodes + topology.vertex_count();

    const auto trials = config.trials;
    const int workers = std::max(1, threads);
    std::vector<std::vector<std::int64_t>> sum(static_cast<std::size_t>(workers)),
        sum_sq(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        sum[static_cast<std::size_t>(w)].assign(edges + 1, 0);
        sum_sq[static_cast<std::size_t>(w)].assign(edges + 1, 0);
    }
    std::vector<std::size_t> first_connected(static_cast<std::size_t>(trials), edges + 1);

    for_each_trial(trials, threads, [&](std::int64_t t, int w) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(t), 4));
        std::vector<EdgeId> order(edges);
        for (EdgeId e = 0; e < edges; ++e)
            order[e] = e;
        partial_shuffle(order, order.size(), rng);

        DisjointSet dsu(elements);
        std::vector<std::uint32_t> weight(elements, 0);
        std::vector<std::uint8_t> mask(elements, 0);
        for (NodeId n = 0; n < nodes; ++n) {
            if (topology.node(n).role == NodeRole::helper) {
                weight[n] = 1;
                continue;
            }
            const std::uint8_t bit = topology.node(n).role == NodeRole::alice ? 1 : 2;
            for (const Incidence& inc : topology.incident(n))
                mask[nodes + inc.vertex] = bit;
        }

        auto& s = sum[static_cast<std::size_t>(w)];
        auto& s2 = sum_sq[static_cast<std::size_t>(w)];
        std::int64_t largest = helpers > 0 ? 1 : 0;
        std::size_t connected_at = edges + 1;
        s[0] += largest;
        s2[0] += largest * largest;
        for (std::size_t m = 1; m <= edges; ++m) {
            const Edge& e = topology.edge(order[m - 1]);
            const EdgeId id = order[m - 1];
            std::uint32_t a = dsu.find(element(e.u, 2 * id));
            std::uint32_t b = dsu.find(element(e.v, 2 * id + 1));
            if (a != b) {
                const std::uint32_t r = dsu.unite(a, b);
                const std::uint32_t other = r == a ? b : a;
                weight[r] += weight[other];
                mask[r] |= mask[other];
                largest = std::max<std::int64_t>(largest, weight[r]);
                if (mask[r] == 3 && connected_at > edges)
                    connected_at = m;
            }
            s[m] += largest;
            s2[m] += largest * largest;
        }
        first_connected[static_cast<std::size_t>(t)] = connected_at;
    });

    SweepResult out;
    out.trials = trials;
    out.p.assign(p_grid.begin(), p_grid.end());
    const auto T = static_cast<double>(trials);
    const double h = helpers > 0 ? static_cast<double>(helpers) : 1.0;

    std::vector<double>& sd_micro = out.micro_giant_sd;
    sd_micro.assign(edges + 1, 0.0);
    out.micro_giant.assign(edges + 1, 0.0);
    for (std::size_t m = 0; m <= edges; ++m) {
        std::int64_t s = 0, s2 = 0;
        for (int w = 0; w < workers; ++w) {
            s += sum[static_cast<std::size_t>(w)][m];
            s2 += sum_sq[static_cast<std::size_t>(w)][m];
        }
        const double mean = static_cast<double>(s) / T;
        const double var = T > 1 ? std::max(0.0, (static_cast<double>(s2) - T * mean * mean) / (T - 1.0)) : 0.0;
        out.micro_giant[m] = mean / h;
        sd_micro[m] = std::sqrt(var) / h;
    }
    std::vector<std::int64_t> connected_count(edges + 2, 0);
    for (std::size_t m : first_connected)
        ++connected_count[m];
    out.micro_connection.assign(edges + 1, 0.0);
    std::int64_t running = 0;
    for (std::size_t m = 0; m <= edges; ++m) {
        running += connected_count[m];
        out.micro_connection[m] = static_cast<double>(running) / T;
    }

    for (double p : out.p) {
        const auto pmf = binomial_pmf(edges, p);
        double giant = 0.0, giant_err = 0.0;
        for (std::size_t m = 0; m <= edges; ++m) {
            giant += pmf[m] * out.micro_giant[m];
            giant_err += pmf[m] * sd_micro[m];
        }
        out.giant.push_back(giant);
        out.giant_err.push_back(giant_err / std::sqrt(T));

        // Per-trial canonical value is P(Bin(E,p) >= m*), so the spread across
        // trials gives an exact standard error.
        std::vector<double> tail(edges + 2, 0.0);
        for (std::size_t m = edges + 1; m-- > 0;)
            tail[m] = tail[m + 1] + pmf[m];
        std::vector<double> per_trial(first_connected.size());
        for (std::size_t t = 0; t < first_connected.size(); ++t)
            per_trial[t] = tail[std::min(first_connected[t], edges + 1)];
        auto [mean, se] = mean_and_stderr(per_trial);
        out.connection.push_back(mean);
        out.connection_err.push_back(se);
    }
    return out;
}

////////////////////////////////////////////////////////////
// Threshold searches

Estimate threshold_observable(const Topology& topology, const ProtocolConfig& config, const ThresholdOptions& opt)
{
    if (opt.criterion == Criterion::giant_component)
        return giant_component_fraction(topology, config, opt.threads);
    return connection_probability(topology, config, opt.threads);
}

namespace {

using Observable = std::function<Estimate(double)>;

struct Bracket {
    double lo = 0.0;
    double hi = 1.0;
    int depth = 0;
};

/// Bisection for the first x in [lo, hi] where a non-decreasing observable
/// reaches `level`. Callers evaluate with a fixed master seed (common random
/// numbers), which keeps the estimated curve monotone as well.
Bracket bisect_level(const Observable& f, double level, double lo, double hi, double tol)
{
    Bracket b{lo, hi, 0};
    while ((b.hi - b.lo) / 2.0 > tol) {
        const double mid = 0.5 * (b.lo + b.hi);
        if (f(mid).value >= level)
            b.hi = mid;
        else
            b.lo = mid;
        ++b.depth;
    }
    return b;
}

CriticalPoint finish(const Observable& f, const Bracket& b, const ThresholdOptions& opt)
{
    CriticalPoint cp;
    cp.value = 0.5 * (b.lo + b.hi);
    cp.depth = b.depth;
    const double a = std::max(0.0, cp.value - opt.slope_window);
    const double c = std::min(1.0, cp.value + opt.slope_window);
    const Estimate at = f(cp.value);
    const double slope = (f(c).value - f(a).value) / (c - a);
    const double half_bracket = (b.hi - b.lo) / 2.0;
    if (slope > 0.0) {
        cp.uncertainty = half_bracket + at.std_error / slope;
        // 10-90% width of a crossing with this slope
        cp.finite_size_caveat = 0.8 / slope > 0.1;
    }
    else {
        cp.uncertainty = half_bracket + opt.slope_window;
        cp.finite_size_caveat = true;
    }
    return cp;
}

std::optional<CriticalPoint> level_crossing(const Observable& f, double level, const ThresholdOptions& opt)
{
    if (f(1.0).value < level)
        return std::nullopt;
    return finish(f, bisect_level(f, level, 0.0, 1.0, opt.tol), opt);
}

std::optional<CriticalPoint> search(const Observable& large, const Observable& small, const ThresholdOptions& opt)
{
    if (!(opt.tol > 0.0))
        throw ConfigError("tol: bisection tolerance must be positive");
    if (!(opt.level > 0.0 && opt.level < 1.0))
        throw ConfigError("level: must lie strictly between 0 and 1");

    if (opt.criterion != Criterion::size_crossing) {
        auto first = level_crossing(large, opt.level, opt);
        if (!first || !(opt.upper_level > opt.level))
            return first;
        // Straight line through the two level crossings, extended to zero.
        auto second = level_crossing(large, opt.upper_level, opt);
        if (!second)
            return first;
        const double run = second->value - first->value;
        const double ratio = opt.level / (opt.upper_level - opt.level);
        CriticalPoint cp = *first;
        cp.value = std::clamp(first->value - ratio * run, 0.0, 1.0);
        cp.uncertainty = std::hypot((1.0 + ratio) * first->uncertainty, ratio * second->uncertainty);
        return cp;
    }

    // Bracket from two level crossings of the large system: below the low
    // one the consumers are almost never connected, above the high one the
    // large system is already the better connected of the two.
    if (large(1.0).value < opt.level)
        return std::nullopt;
    const double lo = bisect_level(large, opt.crossing_floor, 0.0, 1.0, opt.tol).lo;
    const double hi = bisect_level(large, opt.level, lo, 1.0, opt.tol).hi;
    const Observable diff = [&](double x) {
        const Estimate a = large(x);
        const Estimate b = small(x);
        return Estimate{a.value - b.value, std::hypot(a.std_error, b.std_error), a.trials};
    };
    return finish(diff, bisect_level(diff, 0.0, lo, hi, opt.tol), opt);
}

/// Maps the searched coordinate to a full configuration.
using Configure = std::function<ProtocolConfig(double)>;

std::optional<CriticalPoint> sampled_search(const Topology& topology, const ProtocolConfig& base,
                                            const ThresholdOptions& opt, const Configure& with)
{
    base.validate();
    ThresholdOptions obs = opt;
    if (opt.criterion == Criterion::size_crossing) {
        if (opt.reference == nullptr)
            throw ConfigError("reference: size-crossing criterion needs a smaller reference topology");
        obs.criterion = Criterion::consumer_connection;
    }
    const Observable large = [&](double x) { return threshold_observable(topology, with(x), obs); };
    const Observable small = [&](double x) { return threshold_observable(*opt.reference, with(x), obs); };
    return search(large, small, opt);
}

/// Observable read off a Newman-Ziff sweep of the bond problem.
Observable swept_observable(const Topology& topology, const ProtocolConfig& config, const ThresholdOptions& opt)
{
    auto sweep = std::make_shared<SweepResult>(newman_ziff_bond_sweep(topology, config, {}, opt.threads));
    const bool giant = opt.criterion == Criterion::giant_component;
    return [sweep, giant](double p) {
        const auto pmf = binomial_pmf(sweep->micro_giant.size() - 1, p);
        const auto t = static_cast<double>(sweep->trials);
        double value = 0.0, err = 0.0;
        for (std::size_t m = 0; m < pmf.size(); ++m) {
            value += pmf[m] * (giant ? sweep->micro_giant[m] : sweep->micro_connection[m]);
            if (giant)
                err += pmf[m] * sweep->micro_giant_sd[m];
        }
        err = giant ? err / std::sqrt(t) : std::sqrt(std::max(0.0, value * (1.0 - value)) / t);
        return Estimate{value, err, sweep->trials};
    };
}

} // namespace

std::optional<CriticalPoint> critical_q(const Topology& topology, double p, const ProtocolConfig& config,
                                        const ThresholdOptions& opt)
{
    return sampled_search(topology, config, opt, [&](double q) {
        ProtocolConfig c = config;
        c.link_p = p;
        c.fusion_q = q;
        return c;
    });
}

std::optional<CriticalPoint> critical_p(const Topology& topology, double q, const ProtocolConfig& config,
                                        const ThresholdOptions& opt)
{
    ProtocolConfig at_q = config;
    at_q.fusion_q = q;
    at_q.validate();
    const bool crossing = opt.criterion == Criterion::size_crossing;
    if (crossing && opt.reference == nullptr)
        throw ConfigError("reference: size-crossing criterion needs a smaller reference topology");
    if (bond_sweep_applicable(topology, at_q) && (!crossing || bond_sweep_applicable(*opt.reference, at_q))) {
        ThresholdOptions obs = opt;
        if (crossing)
            obs.criterion = Criterion::consumer_connection;
        const Observable large = swept_observable(topology, at_q, obs);
        const Observable small = crossing ? swept_observable(*opt.reference, at_q, obs) : large;
        return search(large, small, opt);
    }
    return sampled_search(topology, config, opt, [&](double p) {
        ProtocolConfig c = config;
        c.link_p = p;
        c.fusion_q = q;
        return c;
    });
}

CriticalCurve site_bond_curve_sim(const Topology& topology, const ProtocolConfig& config,
                                  std::span<const double> p_grid, const ThresholdOptions& opt)
{
    for (std::size_t i = 1; i < p_grid.size(); ++i)
        if (!(p_grid[i] > p_grid[i - 1]))
            throw ConfigError("p_grid: values must be strictly increasing");
    CriticalCurve curve;
    curve.system_size = topology.node_count();
    curve.criterion = std::string(to_string(opt.criterion));
    curve.variant = std::string(to_string(config.variant));
    for (double p : p_grid) {
        CriticalCurve::Sample s;
        s.p = p;
        if (auto cp = critical_q(topology, p, config, opt)) {
            s.q_c = cp->value;
            s.uncertainty = cp->uncertainty;
        }
        curve.samples.push_back(s);
    }
    return curve;
}

void write_curve_csv(std::ostream& out, const CriticalCurve& curve)
{
    out << "p,q_c,uncertainty,size,variant,criterion,source\n";
    for (const auto& s : curve.samples)
        out << fmt_double(s.p) << ',' << fmt_optional(s.q_c) << ',' << fmt_double(s.uncertainty) << ','
            << curve.system_size << ',' << curve.variant << ',' << curve.criterion << ',' << curve.source << '\n';
}

} // namespace ghznet
