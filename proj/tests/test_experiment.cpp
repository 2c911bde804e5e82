#include "ghznet/config.hpp"
#include "ghznet/experiment.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ghznet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("ghznet_test_" + name);
    fs::remove_all(dir);
    return dir;
}

} // namespace

TEST_CASE("config file syntax")
{
    const auto cfg = ConfigFile::parse_string("# header\n[experiment]\nkind = rate-vs-p ; trailing\n\n[protocol]\n"
                                              "  q=0.5\n");
    CHECK(cfg.get("experiment.kind") == "rate-vs-p");
    CHECK(cfg.get("protocol.q") == "0.5");
    CHECK(!cfg.has("protocol.p"));
    REQUIRE(cfg.entries().size() == 2);
    CHECK(cfg.entries()[0].first == "experiment.kind");

    CHECK_THROWS_WITH_AS(ConfigFile::parse_string("[a]\nx = 1\nx = 2\n"), doctest::Contains("a.x"), ConfigError);
    CHECK_THROWS_WITH_AS(ConfigFile::parse_string("x = 1\n"), doctest::Contains("outside"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse_string("[a\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse_string("[a]\njunk\n"), ConfigError);
    std::istringstream in("[a]\nok = 1\nbroken\n");
    CHECK_THROWS_WITH_AS(ConfigFile::parse(in, "f.cfg"), doctest::Contains("f.cfg:3"), ConfigError);
}

TEST_CASE("value parsing")
{
    CHECK(parse_double("k", "0.25") == 0.25);
    CHECK(parse_double("k", "1e-3") == 0.001);
    CHECK_THROWS_WITH_AS(parse_double("protocol.p", "0,5"), doctest::Contains("protocol.p"), ConfigError);
    CHECK_THROWS_AS(parse_double("k", "abc"), ConfigError);
    CHECK(parse_int("k", "42") == 42);
    CHECK_THROWS_AS(parse_int("k", "4.2"), ConfigError);
    CHECK(parse_bool("k", "true"));
    CHECK(!parse_bool("k", "no"));
    CHECK_THROWS_AS(parse_bool("k", "maybe"), ConfigError);
    CHECK(parse_double_list("k", "0.1, 0.2,0.3") == std::vector<double>{0.1, 0.2, 0.3});
    const auto range = parse_double_list("k", "0.4:0.9:0.1");
    REQUIRE(range.size() == 6);
    CHECK(range.back() == doctest::Approx(0.9));
    CHECK_THROWS_AS(parse_double_list("k", "0.4:0.9:0"), ConfigError);
    CHECK(parse_int_list("k", "10,20,40") == std::vector<std::int64_t>{10, 20, 40});
}

TEST_CASE("experiment registry")
{
    CHECK(experiment_registry().size() == 7);
    for (const auto& k : experiment_registry()) {
        CHECK(parse_kind(k.name) == k.kind);
        CHECK(to_string(k.kind) == k.name);
        std::ostringstream help;
        print_kind_help(help, k);
        CHECK(help.str().find("experiment.seed") != std::string::npos);
    }
    CHECK(!parse_kind("nonsense"));
}

TEST_CASE("config validation names the key")
{
    auto spec_of = [](const std::string& text) { return make_spec(ConfigFile::parse_string(text)); };
    const std::string base = "[experiment]\nkind = rate-vs-p\n[topology]\nwidth = 10\nheight = 10\ndistance = 4\n"
                             "[sweep]\np_values = 0.5\n";
    CHECK_NOTHROW(spec_of(base));
    CHECK_THROWS_WITH_AS(spec_of(base + "[protocol]\nq = 1.5\n"), doctest::Contains("protocol.q"), ConfigError);
    CHECK_THROWS_WITH_AS(spec_of(base + "[protocol]\nbogus = 1\n"), doctest::Contains("protocol.bogus"), ConfigError);
    CHECK_THROWS_WITH_AS(spec_of(base + "[qkd]\nshares = 5\n"), doctest::Contains("qkd.shares"), ConfigError);
    CHECK_THROWS_WITH_AS(spec_of("[experiment]\nkind = nope\n"), doctest::Contains("oracle-check"), ConfigError);
    CHECK_THROWS_AS(spec_of("[experiment]\nkind = rate-vs-p\n"), ConfigError);

    Overrides o;
    o.seed = 99;
    o.threads = 3;
    const auto spec = make_spec(ConfigFile::parse_string(base), o);
    CHECK(spec.seed == 99);
    CHECK(spec.threads == 3);
    CHECK(spec.p_values == std::vector<double>{0.5});
}

TEST_CASE("topology building from a config")
{
    auto spec = make_spec(ConfigFile::parse_string(
        "[experiment]\nkind = rate-vs-p\n[topology]\nwidth = 12\nheight = 12\ndistance = 5\n"
        "[protocol]\nvariant = brickwork\nn = 3\n[sweep]\np_values = 0.5\n"));
    const auto t = build_topology(spec);
    CHECK(t.is_colored());
    CHECK(t.consumer_distance() == 5);

    auto rg = make_spec(ConfigFile::parse_string(
        "[experiment]\nkind = rate-vs-p\nseed = 4\n[topology]\ntype = configuration\nnodes = 500\ndegree = constant:4\n"
        "alice = 0\nbob = 1\n[sweep]\np_values = 0.5\n"));
    const auto a = build_topology(rg);
    const auto b = build_topology(rg);
    CHECK(a == b);
    CHECK(a.node_count() == 500);
    CHECK(a.has_consumers());
}

TEST_CASE("running experiments writes deterministic CSV")
{
    const std::string text = "[experiment]\nkind = rate-vs-p\noutput = r.csv\nseed = 3\n[topology]\nwidth = 8\n"
                             "height = 8\ndistance = 3\n[protocol]\nn = 3\nq = 0.9\ntrials = 200\n[sweep]\n"
                             "p_values = 0.5,0.9\n";
    const auto dir = scratch("run");
    std::ostringstream log;
    auto spec = make_spec(ConfigFile::parse_string(text));
    spec.out_dir = dir / "a";
    const auto files = run_experiment(spec, log);
    REQUIRE(files.size() == 1);
    const std::string a = slurp(files[0]);
    CHECK(a.rfind("# ghznet rate-vs-p\n", 0) == 0);
    CHECK(a.find("# experiment.seed = 3") != std::string::npos);
    CHECK(a.find("threads") == std::string::npos);
    CHECK(a.find("\np,") != std::string::npos);

    spec.out_dir = dir / "b";
    spec.threads = 4;
    CHECK(slurp(run_experiment(spec, log)[0]) == a);

    std::ofstream(dir / "file") << "x";
    spec.out_dir = dir / "file";
    CHECK_THROWS_AS(run_experiment(spec, log), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("every kind runs on a small config")
{
    const std::vector<std::string> configs{
        "[experiment]\nkind = rate-vs-distance\n[topology]\nwidth = 10\nheight = 10\n[protocol]\nn = 4\np = 0.7\n"
        "trials = 50\n[sweep]\ndistances = 2,4\n",
        "[experiment]\nkind = site-bond-sim\n[topology]\nwidth = 10\nheight = 10\ndistance = 4\n[protocol]\nn = 3\n"
        "trials = 50\n[sweep]\np_values = 0.9\ntol = 0.05\nthin = true\n",
        "[experiment]\nkind = site-bond-analytic\n[topology]\ndegree = constant:4\n"
        "[protocol]\nn = 3\n[sweep]\np_values = 0.5:1:0.25\nthin = true\n",
        "[experiment]\nkind = bounds-comparison\n[topology]\nwidth = 10\nheight = 10\nalice = 1,1\nbob = 8,8\n"
        "[protocol]\ntrials = 50\n[sweep]\np_values = 0.5,0.8\n",
        "[experiment]\nkind = qkd-sift\n[qkd]\nshares = 100\nm = 2\nl = 3\n",
        "[experiment]\nkind = oracle-check\n[topology]\nwidth = 2\nheight = 2\nalice = 0,0\nbob = 1,1\n"
        "[protocol]\ntrials = 2000\n[sweep]\nn_values = 2\np_values = 0.7\nq_values = 0.8\n",
    };
    const auto dir = scratch("kinds");
    int i = 0;
    for (const auto& text : configs) {
        CAPTURE(text);
        auto spec = make_spec(ConfigFile::parse_string(text));
        spec.out_dir = dir / std::to_string(i++);
        std::ostringstream log;
        const auto files = run_experiment(spec, log);
        REQUIRE(!files.empty());
        for (const auto& f : files)
            CHECK(fs::file_size(f) > 0);
    }
    fs::remove_all(dir);
}
