#include "ghznet/percolation.hpp"

#include <doctest.h>

#include <numeric>
#include <queue>
#include <sstream>

using namespace ghznet;

namespace {

ProtocolConfig bond_config(double p, std::int64_t trials, std::uint64_t seed = 3)
{
    ProtocolConfig c;
    c.fusion_cap = 4;
    c.link_p = p;
    c.fusion_q = 1.0;
    c.trials = trials;
    c.seed = seed;
    return c;
}

// Largest cluster of helpers joined by successful links, by BFS. Consumers
// are not counted and do not relay.
double bfs_largest_helper_cluster(const Topology& t, const LinkOutcome& links)
{
    std::vector<bool> seen(t.node_count(), false);
    std::size_t best = 0, helpers = 0;
    for (NodeId s = 0; s < t.node_count(); ++s) {
        if (t.node(s).role != NodeRole::helper)
            continue;
        ++helpers;
        if (seen[s])
            continue;
        std::size_t size = 0;
        std::queue<NodeId> q;
        q.push(s);
        seen[s] = true;
        while (!q.empty()) {
            const NodeId x = q.front();
            q.pop();
            ++size;
            for (const auto& inc : t.incident(x))
                if (links[inc.edge] && !seen[inc.neighbor] && t.node(inc.neighbor).role == NodeRole::helper) {
                    seen[inc.neighbor] = true;
                    q.push(inc.neighbor);
                }
        }
        best = std::max(best, size);
    }
    return static_cast<double>(best) / static_cast<double>(helpers);
}

} // namespace

TEST_CASE("criterion names")
{
    for (auto c : {Criterion::consumer_connection, Criterion::giant_component, Criterion::size_crossing})
        CHECK(parse_criterion(to_string(c)) == c);
    CHECK(!parse_criterion("median"));
}

TEST_CASE("binomial convolution")
{
    for (std::size_t e : {0u, 1u, 10u, 500u})
        for (double p : {0.0, 0.3, 0.5, 1.0}) {
            const auto pmf = binomial_pmf(e, p);
            REQUIRE(pmf.size() == e + 1);
            CHECK(std::accumulate(pmf.begin(), pmf.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        }
    CHECK(binomial_pmf(4, 0.5)[2] == doctest::Approx(0.375));
    // averaging the identity m/E gives p
    std::vector<double> frac(101);
    for (std::size_t m = 0; m <= 100; ++m)
        frac[m] = static_cast<double>(m) / 100.0;
    CHECK(canonical_average(frac, 0.37) == doctest::Approx(0.37));
}

TEST_CASE("largest component matches plain bond clusters when every link is fused")
{
    const auto t = build_square_grid(15, 15, {3, 7}, {11, 7});
    for (double p : {0.3, 0.5, 0.7})
        for (std::uint64_t trial = 0; trial < 100; ++trial) {
            auto cycle = run_cycle(t, bond_config(p, 1), trial);
            CHECK(largest_component_fraction(t, cycle.plan, cycle.components) ==
                  doctest::Approx(bfs_largest_helper_cluster(t, cycle.links)));
        }
}

TEST_CASE("observables at the extremes")
{
    const auto t = build_square_grid(12, 12, {2, 6}, {9, 6});
    CHECK(connection_probability(t, bond_config(0.0, 50)).value == 0.0);
    CHECK(connection_probability(t, bond_config(1.0, 50)).value == 1.0);
    CHECK(giant_component_fraction(t, bond_config(1.0, 20)).value == 1.0);
    CHECK(giant_component_fraction(t, bond_config(0.0, 20)).value == doctest::Approx(1.0 / 142));
}

TEST_CASE("Newman-Ziff sweep agrees with direct sampling")
{
    const auto t = build_square_grid(20, 20, {4, 10}, {15, 10});
    REQUIRE(bond_sweep_applicable(t, bond_config(0.5, 1)));
    const std::vector<double> grid{0.4, 0.5, 0.6};
    const auto sweep = newman_ziff_bond_sweep(t, bond_config(0.5, 4000, 21), grid);
    REQUIRE(sweep.p == grid);
    REQUIRE(sweep.micro_connection.size() == t.edge_count() + 1);
    CHECK(sweep.micro_connection.front() == 0.0);
    CHECK(sweep.micro_connection.back() == 1.0);
    for (std::size_t m = 1; m < sweep.micro_connection.size(); ++m)
        CHECK(sweep.micro_connection[m] >= sweep.micro_connection[m - 1]);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto direct = connection_probability(t, bond_config(grid[i], 4000, 22));
        const double se = std::hypot(direct.std_error, sweep.connection_err[i]);
        CAPTURE(grid[i]);
        CHECK(std::abs(direct.value - sweep.connection[i]) < 4 * se + 1e-9);
        const auto giant = giant_component_fraction(t, bond_config(grid[i], 2000, 23));
        CHECK(std::abs(giant.value - sweep.giant[i]) < 4 * std::hypot(giant.std_error, sweep.giant_err[i]) + 1e-3);
    }
}

TEST_CASE("sweep applicability and threads")
{
    const auto t = build_square_grid(10, 10, {2, 5}, {7, 5});
    auto c = bond_config(0.5, 500);
    CHECK(bond_sweep_applicable(t, c));
    c.fusion_q = 0.9;
    CHECK(!bond_sweep_applicable(t, c));
    c = bond_config(0.5, 500);
    c.fusion_cap = 3;
    CHECK(!bond_sweep_applicable(t, c));
    c = bond_config(0.5, 500);
    c.thinning = 0.4;
    CHECK(!bond_sweep_applicable(t, c));

    const std::vector<double> grid{0.45, 0.55};
    const auto a = newman_ziff_bond_sweep(t, bond_config(0.5, 500), grid, 1);
    const auto b = newman_ziff_bond_sweep(t, bond_config(0.5, 500), grid, 3);
    CHECK(a.connection == b.connection);
    CHECK(a.giant == b.giant);
    CHECK(a.micro_giant_sd == b.micro_giant_sd);
}

TEST_CASE("threshold searches")
{
    const auto t = build_square_grid(30, 30, {7, 15}, {22, 15});
    ThresholdOptions opt;
    opt.tol = 0.01;

    SUBCASE("fixed level on the bond sweep")
    {
        const auto cp = critical_p(t, 1.0, bond_config(0.5, 2000), opt);
        REQUIRE(cp);
        CHECK(cp->value > 0.4);
        CHECK(cp->value < 0.65);
        CHECK(cp->uncertainty > 0.0);
        CHECK(cp->depth >= 5);
    }
    SUBCASE("q search gives none when even q = 1 stays below the level")
    {
        auto c = bond_config(0.3, 300);
        CHECK(!critical_q(t, 0.3, c, opt));
        const auto cp = critical_q(t, 0.9, c, opt);
        REQUIRE(cp);
        CHECK(cp->value > 0.3);
        CHECK(cp->value < 1.0);
    }
    SUBCASE("size crossing needs a reference")
    {
        opt.criterion = Criterion::size_crossing;
        CHECK_THROWS_AS(critical_p(t, 1.0, bond_config(0.5, 200), opt), ConfigError);
        const auto small = build_square_grid(15, 15, {3, 7}, {11, 7});
        opt.reference = &small;
        const auto cp = critical_p(t, 1.0, bond_config(0.5, 3000), opt);
        REQUIRE(cp);
        CHECK(std::abs(cp->value - 0.5) < 0.06);
    }
    SUBCASE("bad options")
    {
        opt.tol = 0.0;
        CHECK_THROWS_AS(critical_p(t, 1.0, bond_config(0.5, 100), opt), ConfigError);
        opt.tol = 0.01;
        opt.level = 1.0;
        CHECK_THROWS_AS(critical_p(t, 1.0, bond_config(0.5, 100), opt), ConfigError);
    }
}

TEST_CASE("curve output")
{
    const auto t = build_square_grid(16, 16, {3, 8}, {12, 8});
    auto c = bond_config(0.5, 200);
    c.fusion_cap = 3;
    ThresholdOptions opt;
    opt.tol = 0.02;
    const std::vector<double> grid{0.3, 0.8};
    const auto curve = site_bond_curve_sim(t, c, grid, opt);
    REQUIRE(curve.samples.size() == 2);
    CHECK(!curve.samples[0].q_c);
    REQUIRE(curve.samples[1].q_c);
    CHECK(curve.system_size == 256);
    std::ostringstream out;
    write_curve_csv(out, curve);
    const std::string s = out.str();
    CHECK(s.rfind("p,q_c,uncertainty,size,variant,criterion,source\n0.3,NA,0,256,nghz-random,consumer-connection,sim\n",
                  0) == 0);

    const std::vector<double> bad{0.5, 0.4};
    CHECK_THROWS_AS(site_bond_curve_sim(t, c, bad, opt), ConfigError);
}
