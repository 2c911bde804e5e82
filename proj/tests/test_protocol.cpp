#include "ghznet/fusion.hpp"
#include "ghznet/protocol.hpp"
#include "oracles/enumerate.hpp"
#include "oracles/fusion_check.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <queue>

using namespace ghznet;

namespace {

ProtocolConfig make_config(int n, double p, double q, std::int64_t trials = 1000, std::uint64_t seed = 5)
{
    ProtocolConfig c;
    c.fusion_cap = n;
    c.link_p = p;
    c.fusion_q = q;
    c.trials = trials;
    c.seed = seed;
    return c;
}

LinkOutcome all_up(const Topology& t)
{
    LinkOutcome l;
    l.up.assign(t.edge_count(), 1);
    return l;
}

// Plain BFS over successful links; consumers are endpoints only, never relays.
bool bond_connected(const Topology& t, const LinkOutcome& links)
{
    const NodeId a = *t.alice(), b = *t.bob();
    std::vector<bool> seen(t.node_count(), false);
    std::queue<NodeId> q;
    q.push(a);
    seen[a] = true;
    while (!q.empty()) {
        const NodeId x = q.front();
        q.pop();
        for (const auto& inc : t.incident(x)) {
            if (!links[inc.edge] || seen[inc.neighbor])
                continue;
            if (inc.neighbor == b)
                return true;
            seen[inc.neighbor] = true;
            if (t.node(inc.neighbor).role == NodeRole::helper)
                q.push(inc.neighbor);
        }
    }
    return false;
}

} // namespace

TEST_CASE("config validation names the field")
{
    auto c = make_config(3, 0.5, 1.5);
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("q"), ConfigError);
    c = make_config(3, -0.1, 1.0);
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("p"), ConfigError);
    c = make_config(0, 0.5, 1.0);
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("n"), ConfigError);
    c = make_config(3, 0.5, 1.0, 0);
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = make_config(3, 0.5, 1.0);
    c.thinning = 0.0;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("thinning"), ConfigError);
    CHECK(parse_variant("brickwork") == Variant::brickwork);
    CHECK(!parse_variant("nope"));
}

TEST_CASE("link sampling")
{
    const auto t = build_square_grid(224, 224, {1, 1}, {5, 5});
    REQUIRE(t.edge_count() > 99000);
    Rng rng(1);
    CHECK(sample_link_outcomes(t, make_config(4, 0.0, 1.0), rng).successes() == 0);
    CHECK(sample_link_outcomes(t, make_config(4, 1.0, 1.0), rng).successes() == t.edge_count());

    auto thin = make_config(4, 1.0, 1.0);
    thin.thinning = 0.6;
    const double frac = double(sample_link_outcomes(t, thin, rng).successes()) / double(t.edge_count());
    CHECK(frac == doctest::Approx(0.6).epsilon(0.01 / 0.6));

    // 10^6 edges at p = 0.5
    std::size_t ups = 0, total = 0;
    for (int i = 0; i < 10; ++i) {
        auto l = sample_link_outcomes(t, make_config(4, 0.5, 1.0), rng);
        ups += l.successes();
        total += l.size();
    }
    CHECK(std::abs(double(ups) / double(total) - 0.5) < 0.002);
}

TEST_CASE("fusion selection at a degree-4 node")
{
    const auto t = build_square_grid(5, 5, {0, 0}, {4, 4});
    const NodeId centre = t.grid_node(2, 2);
    const auto links = all_up(t);
    Rng rng(3);

    auto plan = select_fusions(t, links, make_config(4, 1, 1), rng);
    CHECK(plan.fusion(centre).size() == 4);
    CHECK(plan.x_measured(centre).empty());

    std::map<VertexId, int> left_out;
    for (int i = 0; i < 4000; ++i) {
        plan = select_fusions(t, links, make_config(3, 1, 1), rng);
        REQUIRE(plan.fusion(centre).size() == 3);
        REQUIRE(plan.x_measured(centre).size() == 1);
        ++left_out[plan.x_measured(centre)[0]];
    }
    REQUIRE(left_out.size() == 4);
    for (auto [v, c] : left_out)
        CHECK(std::abs(c - 1000) < 120);

    LinkOutcome one;
    one.up.assign(t.edge_count(), 0);
    one.up[t.incident(centre)[0].edge] = 1;
    plan = select_fusions(t, one, make_config(3, 1, 1), rng);
    CHECK(plan.fusion(centre).empty());
    CHECK(plan.x_measured(centre).size() == 1);

    // consumers never fuse
    CHECK(plan.fusion(*t.alice()).empty());
    CHECK(plan.x_measured(*t.alice()).empty());
}

TEST_CASE("brickwork selection prefers black links")
{
    const auto t = apply_brickwork_coloring(build_square_grid(6, 6, {0, 0}, {5, 5}));
    REQUIRE(t.is_colored());
    auto cfg = make_config(3, 1, 1);
    cfg.variant = Variant::brickwork;
    Rng rng(4);
    const NodeId node = t.grid_node(2, 2);
    auto links = all_up(t);
    std::vector<EdgeId> black, red;
    for (const auto& inc : t.incident(node))
        (t.edge(inc.edge).color == EdgeColor::black ? black : red).push_back(inc.edge);
    REQUIRE(black.size() == 3);
    REQUIRE(red.size() == 1);

    auto plan = select_fusions(t, links, cfg, rng);
    for (VertexId v : plan.fusion(node))
        CHECK(t.edge(Topology::vertex_edge(v)).color == EdgeColor::black);
    CHECK(plan.x_measured(node).size() == 1);

    links.up[black[0]] = 0;
    plan = select_fusions(t, links, cfg, rng);
    CHECK(plan.fusion(node).size() == 3);
    CHECK(plan.x_measured(node).empty());

    CHECK_THROWS_AS(select_fusions(build_square_grid(4, 4, {0, 0}, {3, 3}), links, cfg, rng), ConfigError);
}

TEST_CASE("resolution glues fusions through links")
{
    const auto t = build_square_grid(3, 3, {0, 0}, {2, 2});
    const auto links = all_up(t);
    const NodeId centre = t.grid_node(1, 1);
    auto vertex_to = [&](NodeId from, NodeId to) {
        for (const auto& inc : t.incident(from))
            if (inc.neighbor == to)
                return inc.vertex;
        FAIL("no such edge");
        return VertexId{0};
    };
    const NodeId north = t.grid_node(1, 2), east = t.grid_node(2, 1), south = t.grid_node(1, 0),
                 west = t.grid_node(0, 1);

    FusionPlan plan;
    plan.clear();
    std::vector<std::uint8_t> ok(t.node_count(), 1);
    for (NodeId n = 0; n < t.node_count(); ++n) {
        std::vector<VertexId> fused, measured;
        if (n == centre) {
            fused = {vertex_to(centre, north), vertex_to(centre, east), vertex_to(centre, south)};
            measured = {vertex_to(centre, west)};
        }
        else if (t.node(n).role == NodeRole::helper) {
            for (const auto& inc : t.incident(n))
                fused.push_back(inc.vertex);
        }
        plan.add_node(fused, measured);
    }
    auto cs = resolve_with_outcomes(t, links, plan, ok);
    const VertexId r = cs.root(vertex_to(centre, north));
    for (NodeId nb : {north, east, south}) {
        CHECK(cs.root(vertex_to(nb, centre)) == r);
        CHECK(cs.root(vertex_to(centre, nb)) == r);
    }
    CHECK(!cs.active(vertex_to(centre, west)));
    CHECK(cs.active(vertex_to(west, centre)));

    // q = 0: only consumer vertices remain, all singletons
    std::vector<std::uint8_t> none(t.node_count(), 0);
    auto dead = resolve_with_outcomes(t, links, plan, none);
    const auto& comps = dead.components();
    CHECK(comps.size() == t.degree(*t.alice()) + t.degree(*t.bob()));
    for (const auto& c : comps)
        CHECK(c.size() == 1);
    CHECK(count_shared_ghz(dead, t).count == 0);
}

TEST_CASE("p = q = 1 gives one shared state holding every consumer memory")
{
    const auto t = build_square_grid(10, 10, {2, 5}, {7, 5});
    auto cfg = make_config(4, 1, 1, 20);
    const auto cycle = run_cycle(t, cfg, 0);
    auto shared = count_shared_ghz(cycle.components, t);
    CHECK(shared.count == 1);
    CHECK(shared.states == std::vector<SharedState>{{4, 4}});
    CHECK(estimate_rate(t, cfg).mean == 1.0);
}

TEST_CASE("divided network at p = q = 1 shares four Bell pairs")
{
    const auto base = build_square_grid(12, 12, {3, 6}, {8, 6});
    const auto t = divide_network(base);
    auto cfg = make_config(4, 1, 1, 20);
    cfg.variant = Variant::divided;
    const auto cycle = run_cycle(t, cfg, 0);
    auto shared = count_shared_ghz(cycle.components, t);
    CHECK(shared.count == 4);
    CHECK(shared.states == std::vector<SharedState>(4, SharedState{1, 1}));
    CHECK(estimate_rate(t, cfg).mean == 4.0);
    cfg.variant = Variant::random_ghz;
    CHECK(estimate_rate(base, cfg).mean == 1.0);
}

TEST_CASE("rate bounds and degenerate probabilities")
{
    const auto t = build_square_grid(8, 8, {1, 4}, {6, 4});
    CHECK(estimate_rate(t, make_config(4, 0.0, 1.0, 200)).mean == 0.0);
    CHECK(estimate_rate(t, make_config(4, 0.8, 0.0, 200)).mean == 0.0);
    const auto est = estimate_rate(t, make_config(3, 0.8, 0.9, 2000));
    CHECK(est.mean >= 0.0);
    CHECK(est.mean <= 4.0);
    CHECK(est.count_histogram.size() <= 5);
    std::int64_t total = 0;
    for (auto c : est.count_histogram)
        total += c;
    CHECK(total == est.trials);
    CHECK(est.size_histogram.size() <= 9);
}

TEST_CASE("estimate is identical for any thread count")
{
    const auto t = build_square_grid(12, 12, {2, 6}, {9, 6});
    const auto cfg = make_config(3, 0.7, 0.9, 3000, 17);
    const auto a = estimate_rate(t, cfg, 1);
    for (int threads : {2, 3, 5}) {
        const auto b = estimate_rate(t, cfg, threads);
        CHECK(a.mean == b.mean);
        CHECK(a.std_error == b.std_error);
        CHECK(a.count_histogram == b.count_histogram);
        CHECK(a.size_histogram == b.size_histogram);
    }
    auto other = cfg;
    other.seed = 18;
    CHECK(estimate_rate(t, other).mean != a.mean);
}

TEST_CASE("exact enumeration matches the independent oracle")
{
    const std::vector<Topology> tops{build_square_grid(2, 2, {0, 0}, {1, 1}), build_square_grid(2, 3, {0, 0}, {1, 2}),
                                     build_square_grid(3, 2, {0, 0}, {2, 0}),
                                     build_square_grid(3, 3, {0, 1}, {2, 1})};
    for (const auto& t : tops)
        for (int n : {1, 2, 3, 4})
            for (double p : {0.3, 0.7, 1.0})
                for (double q : {0.5, 1.0}) {
                    const auto cfg = make_config(n, p, q);
                    CAPTURE(n);
                    CAPTURE(p);
                    CAPTURE(q);
                    CHECK(exact_rate(t, cfg) == doctest::Approx(oracle::expected_shared(t, cfg)).epsilon(1e-12));
                }
}

TEST_CASE("exact enumeration of the brickwork rule")
{
    const auto t = apply_brickwork_coloring(build_square_grid(3, 3, {0, 1}, {2, 1}));
    for (int n : {2, 3}) {
        auto cfg = make_config(n, 0.6, 0.8);
        cfg.variant = Variant::brickwork;
        CHECK(exact_rate(t, cfg) == doctest::Approx(oracle::expected_shared(t, cfg)).epsilon(1e-12));
    }
}

TEST_CASE("Monte Carlo agrees with exact enumeration")
{
    const auto t = build_square_grid(2, 2, {0, 0}, {1, 1});
    const auto cfg = make_config(2, 0.7, 0.8, 100000, 11);
    const double exact = exact_rate(t, cfg);
    const auto est = estimate_rate(t, cfg);
    CHECK(std::abs(est.mean - exact) < 3.0 * est.std_error);
}

TEST_CASE("with n at least the degree and q = 1 the cycle is bond percolation")
{
    const auto t = build_square_grid(9, 9, {1, 4}, {7, 4});
    for (double p : {0.45, 0.55, 0.7}) {
        const auto cfg = make_config(4, p, 1.0, 1, 23);
        for (std::uint64_t trial = 0; trial < 300; ++trial) {
            auto cycle = run_cycle(t, cfg, trial);
            const bool lib = count_shared_ghz(cycle.components, t).count > 0;
            CHECK(lib == bond_connected(t, cycle.links));
        }
    }
}

TEST_CASE("coupled randomness: connection is monotone in p and q")
{
    const auto t = build_square_grid(10, 10, {1, 5}, {8, 5});
    for (std::uint64_t trial = 0; trial < 200; ++trial) {
        bool prev = false;
        for (double p : {0.3, 0.45, 0.55, 0.65, 0.8, 1.0}) {
            const bool now = count_shared_ghz(run_cycle(t, make_config(4, p, 0.9, 1, 31), trial).components, t).count > 0;
            CHECK((!prev || now));
            prev = now;
        }
        prev = false;
        for (double q : {0.3, 0.6, 0.8, 1.0}) {
            const bool now = count_shared_ghz(run_cycle(t, make_config(4, 0.7, q, 1, 31), trial).components, t).count > 0;
            CHECK((!prev || now));
            prev = now;
        }
    }
}

TEST_CASE("resolution agrees with sequential fusion of Bell-pair records")
{
    // Apply every helper's fusion (in a shuffled order) and X measurement to the
    // link-level Bell pairs; the consumer qubits left must be grouped exactly as
    // the union-find components group them.
    const auto t = build_square_grid(4, 3, {0, 1}, {3, 1});
    Rng order_rng(77);
    for (int n : {2, 3, 4})
        for (std::uint64_t trial = 0; trial < 150; ++trial) {
            const auto cfg = make_config(n, 0.75, 0.8, 1, 41);
            TrialStreams s(cfg.seed, trial);
            const auto links = sample_link_outcomes(t, cfg, s.links);
            const auto plan = select_fusions(t, links, cfg, s.choices);
            std::vector<std::uint8_t> ok(t.node_count());
            for (auto& b : ok)
                b = s.fusions.bernoulli(cfg.fusion_q);
            auto cs = resolve_with_outcomes(t, links, plan, ok);

            std::vector<GhzRecord> records;
            for (EdgeId e = 0; e < t.edge_count(); ++e)
                if (links[e])
                    records.push_back(GhzRecord{{2 * e, 2 * e + 1}});
            std::vector<NodeId> helpers;
            for (NodeId v = 0; v < t.node_count(); ++v)
                if (t.node(v).role == NodeRole::helper)
                    helpers.push_back(v);
            std::shuffle(helpers.begin(), helpers.end(), order_rng.engine());
            for (NodeId h : helpers) {
                for (VertexId v : plan.x_measured(h))
                    records = fuse_ghz_records(records, std::vector<QubitLabel>{v}, false);
                const auto f = plan.fusion(h);
                if (!f.empty())
                    records = fuse_ghz_records(records, std::vector<QubitLabel>(f.begin(), f.end()), ok[h] != 0,
                                               SharedRecordPolicy::merge);
            }

            std::map<VertexId, std::vector<unsigned>> by_root;
            for (NodeId c : {*t.alice(), *t.bob()})
                for (const auto& inc : t.incident(c))
                    if (links[inc.edge])
                        by_root[cs.root(inc.vertex)].push_back(inc.vertex);
            std::vector<std::vector<unsigned>> lib;
            for (auto& [r, g] : by_root) {
                std::sort(g.begin(), g.end());
                lib.push_back(g);
            }
            std::sort(lib.begin(), lib.end());
            CAPTURE(trial);
            CHECK(lib == oracle::normalized(records));
        }
}
