#include "ghznet/experiment.hpp"

#include "ghznet/analytics.hpp"
#include "ghznet/bounds.hpp"
#include "ghznet/csv.hpp"
#include "ghznet/qkd.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <ostream>
#include <sstream>

namespace ghznet {

namespace {

constexpr ParamDoc kKind{"experiment.kind", "experiment name (see `list`)"};
constexpr ParamDoc kOutput{"experiment.output", "output file name inside --out-dir (default <kind>.csv)"};
constexpr ParamDoc kSeed{"experiment.seed", "master seed (default 0; --seed overrides)"};
constexpr ParamDoc kThreads{"experiment.threads", "worker threads (default 1; --threads overrides); never affects output"};

constexpr ParamDoc kTopoType{"topology.type", "grid | configuration | file (default grid)"};
constexpr ParamDoc kWidth{"topology.width", "grid width"};
constexpr ParamDoc kHeight{"topology.height", "grid height"};
constexpr ParamDoc kDistance{"topology.distance", "consumers centred on the middle row, this many hops apart"};
constexpr ParamDoc kAlice{"topology.alice", "Alice: grid cell \"x,y\" or configuration-graph node id"};
constexpr ParamDoc kBob{"topology.bob", "Bob: grid cell \"x,y\" or configuration-graph node id"};
constexpr ParamDoc kDegree{"topology.degree", "constant:K | poisson:MEAN:DMAX | p0,p1,...,pD"};
constexpr ParamDoc kNodes{"topology.nodes", "configuration-graph node count"};
constexpr ParamDoc kFile{"topology.file", "topology text file (type = file)"};

constexpr ParamDoc kVariant{"protocol.variant", "nghz-random | brickwork | divided-nghz (default nghz-random)"};
constexpr ParamDoc kN{"protocol.n", "largest GHZ projection at a helper (default 4)"};
constexpr ParamDoc kP{"protocol.p", "link success probability"};
constexpr ParamDoc kQ{"protocol.q", "fusion success probability (default 1)"};
constexpr ParamDoc kThinning{"protocol.thinning", "p*: thin links down to this rate when p > p*"};
constexpr ParamDoc kTrials{"protocol.trials", "Monte Carlo cycles per point (default 1000)"};

constexpr ParamDoc kPValues{"sweep.p_values", "p grid: a,b,c or start:stop:step"};
constexpr ParamDoc kQValues{"sweep.q_values", "q grid: a,b,c or start:stop:step"};
constexpr ParamDoc kNValues{"sweep.n_values", "fusion caps, comma separated"};
constexpr ParamDoc kDistances{"sweep.distances", "consumer separations, comma separated"};
constexpr ParamDoc kCriterion{"sweep.criterion", "consumer-connection | giant-component | size-crossing"};
constexpr ParamDoc kLevel{"sweep.level", "crossing level (default 0.5)"};
constexpr ParamDoc kUpperLevel{"sweep.upper_level", "second level; extrapolate the two crossings to zero"};
constexpr ParamDoc kTol{"sweep.tol", "bisection half-width tolerance (default 0.005)"};
constexpr ParamDoc kRefScale{"sweep.reference_scale", "size-crossing reference grid scale (default 0.5)"};
constexpr ParamDoc kThin{"sweep.thin", "also emit the running-minimum (thinned) curve"};

constexpr ParamDoc kShares{"qkd.shares", "number of shared GHZ states (source = fixed)"};
constexpr ParamDoc kM{"qkd.m", "Alice qubits per share (source = fixed)"};
constexpr ParamDoc kL{"qkd.l", "Bob qubits per share (source = fixed)"};
constexpr ParamDoc kSource{"qkd.source", "fixed | simulated (shares from protocol.trials cycles)"};

std::vector<ParamDoc> concat(std::initializer_list<std::initializer_list<ParamDoc>> groups)
{
    std::vector<ParamDoc> out;
    for (const auto& g : groups)
        out.insert(out.end(), g.begin(), g.end());
    return out;
}

const std::initializer_list<ParamDoc> kCommon{kKind, kOutput, kSeed, kThreads};
const std::initializer_list<ParamDoc> kAnyTopology{kTopoType, kWidth,  kHeight, kDistance, kAlice,
                                                   kBob,      kDegree, kNodes,  kFile};
const std::initializer_list<ParamDoc> kGridTopology{kWidth, kHeight, kDistance, kAlice, kBob};

} // namespace

std::string_view to_string(ExperimentKind kind)
{
    return kind_info(kind).name;
}

const std::vector<KindInfo>& experiment_registry()
{
    static const std::vector<KindInfo> registry{
        {ExperimentKind::rate_vs_p, "rate-vs-p", "shared GHZ rate over a p grid at fixed q",
         concat({kCommon, kAnyTopology, {kVariant, kN, kQ, kThinning, kTrials, kPValues}})},
        {ExperimentKind::rate_vs_distance, "rate-vs-distance", "shared GHZ rate against consumer separation on a grid",
         concat({kCommon, {kWidth, kHeight, kVariant, kN, kP, kQ, kThinning, kTrials, kDistances}})},
        {ExperimentKind::site_bond_sim, "site-bond-sim", "simulated critical q_c(p) by bisection on q",
         concat({kCommon, kAnyTopology,
                 {kVariant, kN, kThinning, kTrials, kPValues, kCriterion, kLevel, kUpperLevel, kTol, kRefScale,
                  kThin}})},
        {ExperimentKind::site_bond_analytic, "site-bond-analytic",
         "generating-function critical q_c(p) for a configuration graph",
         concat({kCommon, {kDegree, kVariant, kN, kPValues, kThin}})},
        {ExperimentKind::bounds_comparison, "bounds-comparison",
         "capacity, max-flow and giant-component bounds against measured 4- and 3-GHZ rates (p = eta)",
         concat({kCommon, kGridTopology, {kQ, kTrials, kPValues}})},
        {ExperimentKind::qkd_sift, "qkd-sift", "GHZ key sifting on fixed or simulated shared states",
         concat({kCommon, kAnyTopology, {kVariant, kN, kP, kQ, kThinning, kTrials, kShares, kM, kL, kSource}})},
        {ExperimentKind::oracle_check, "oracle-check",
         "exact enumeration against Monte Carlo on a tiny grid",
         concat({kCommon, kGridTopology, {kVariant, kTrials, kPValues, kQValues, kNValues}})},
    };
    return registry;
}

const KindInfo& kind_info(ExperimentKind kind)
{
    for (const auto& k : experiment_registry())
        if (k.kind == kind)
            return k;
    throw std::logic_error("unregistered experiment kind");
}

std::optional<ExperimentKind> parse_kind(std::string_view name)
{
    for (const auto& k : experiment_registry())
        if (k.name == name)
            return k.kind;
    return std::nullopt;
}

void print_kind_help(std::ostream& out, const KindInfo& info)
{
    out << info.name << ": " << info.summary << '\n';
    for (const auto& p : info.params)
        out << "    " << p.key << std::string(p.key.size() < 24 ? 24 - p.key.size() : 1, ' ') << p.doc << '\n';
}

////////////////////////////////////////////////////////////
// ExperimentSpec construction

namespace {

class Reader {
public:
    explicit Reader(const ConfigFile& cfg) : cfg_(cfg) {}

    std::optional<std::string> str(std::string_view key) const { return cfg_.get(key); }
    bool has_key(std::string_view key) const { return cfg_.has(key); }
    std::optional<double> num(std::string_view key) const
    {
        auto v = cfg_.get(key);
        return v ? std::optional(parse_double(key, *v)) : std::nullopt;
    }
    std::optional<std::int64_t> integer(std::string_view key) const
    {
        auto v = cfg_.get(key);
        return v ? std::optional(parse_int(key, *v)) : std::nullopt;
    }
    int positive(std::string_view key, std::int64_t fallback, std::int64_t max = 1 << 30) const
    {
        const auto v = integer(key).value_or(fallback);
        if (v < 1 || v > max)
            throw ConfigError(std::string(key) + ": must be between 1 and " + std::to_string(max));
        return static_cast<int>(v);
    }
    template <typename T>
    T require(std::optional<T> v, std::string_view key) const
    {
        if (!v)
            throw ConfigError(std::string(key) + ": required");
        return *v;
    }

private:
    const ConfigFile& cfg_;
};

GridCoord parse_coord(std::string_view key, std::string_view text)
{
    const auto comma = text.find(',');
    if (comma == std::string_view::npos)
        throw ConfigError(std::string(key) + ": expected \"x,y\"");
    return {static_cast<int>(parse_int(key, text.substr(0, comma))),
            static_cast<int>(parse_int(key, text.substr(comma + 1)))};
}

std::vector<double> parse_degree(std::string_view key, std::string_view text)
{
    try {
        if (text.starts_with("constant:")) {
            const auto k = parse_int(key, text.substr(9));
            if (k < 1 || k > 10000)
                throw ConfigError(std::string(key) + ": constant degree must be between 1 and 10000");
            const auto d = DegreeDistribution::constant(static_cast<int>(k)).probabilities();
            return {d.begin(), d.end()};
        }
        if (text.starts_with("poisson:")) {
            const auto rest = text.substr(8);
            const auto colon = rest.find(':');
            if (colon == std::string_view::npos)
                throw ConfigError(std::string(key) + ": expected poisson:MEAN:DMAX");
            const double mean = parse_double(key, rest.substr(0, colon));
            const auto dmax = parse_int(key, rest.substr(colon + 1));
            if (dmax < 1 || dmax > 10000)
                throw ConfigError(std::string(key) + ": DMAX must be between 1 and 10000");
            const auto d = DegreeDistribution::poisson(mean, static_cast<int>(dmax)).probabilities();
            return {d.begin(), d.end()};
        }
        auto probs = parse_double_list(key, text);
        DegreeDistribution check(probs);
        return probs;
    }
    catch (const TopologyError& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
    }
}

void require_probabilities(std::string_view key, const std::vector<double>& xs)
{
    if (xs.empty())
        throw ConfigError(std::string(key) + ": at least one value required");
    for (double x : xs)
        if (!(x >= 0.0 && x <= 1.0))
            throw ConfigError(std::string(key) + ": values must lie in [0, 1]");
}

void require_increasing(std::string_view key, const std::vector<double>& xs)
{
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1]))
            throw ConfigError(std::string(key) + ": values must be strictly increasing");
}

} // namespace

ExperimentSpec make_spec(const ConfigFile& input, const Overrides& overrides)
{
    ExperimentSpec spec;
    spec.config = input;
    const Reader r(spec.config);

    const auto kind_name = r.require(r.str("experiment.kind"), "experiment.kind");
    const auto kind = parse_kind(kind_name);
    if (!kind) {
        std::string valid;
        for (const auto& k : experiment_registry())
            valid += (valid.empty() ? "" : ", ") + std::string(k.name);
        throw ConfigError("experiment.kind: unknown kind '" + kind_name + "' (valid: " + valid + ")");
    }
    spec.kind = *kind;
    const KindInfo& info = kind_info(spec.kind);
    for (const auto& [key, value] : spec.config.entries()) {
        const bool known = std::any_of(info.params.begin(), info.params.end(),
                                       [&](const ParamDoc& p) { return p.key == key; });
        if (!known)
            throw ConfigError(key + ": unknown key for " + std::string(info.name));
    }

    // seed and threads
    if (overrides.seed)
        spec.config.set("experiment.seed", std::to_string(*overrides.seed));
    if (auto s = r.integer("experiment.seed")) {
        if (*s < 0)
            throw ConfigError("experiment.seed: must be non-negative");
        spec.seed = static_cast<std::uint64_t>(*s);
    }
    spec.threads = overrides.threads ? *overrides.threads : r.positive("experiment.threads", 1, 1024);
    if (spec.threads < 1)
        throw ConfigError("threads: must be at least 1");
    if (overrides.out_dir)
        spec.out_dir = *overrides.out_dir;
    spec.output = r.str("experiment.output").value_or(std::string(info.name) + ".csv");
    if (spec.output.empty() || spec.output.find('/') != std::string::npos)
        throw ConfigError("experiment.output: must be a plain file name");

    // topology
    auto& t = spec.topology;
    const std::string type = r.str("topology.type").value_or("grid");
    if (type == "grid")
        t.type = TopologySpec::Type::grid;
    else if (type == "configuration")
        t.type = TopologySpec::Type::configuration;
    else if (type == "file")
        t.type = TopologySpec::Type::file;
    else
        throw ConfigError("topology.type: expected grid, configuration or file");

    const bool needs_topology = spec.kind != ExperimentKind::site_bond_analytic &&
                                !(spec.kind == ExperimentKind::qkd_sift && r.str("qkd.source").value_or("fixed") == "fixed");
    if (t.type == TopologySpec::Type::grid) {
        if (needs_topology) {
            t.width = r.positive("topology.width", 0, 100000);
            t.height = r.positive("topology.height", 0, 100000);
        }
        if (auto d = r.integer("topology.distance")) {
            if (r.has_key("topology.alice") || r.has_key("topology.bob"))
                throw ConfigError("topology.distance: give either distance or alice/bob, not both");
            if (*d < 1 || *d >= t.width)
                throw ConfigError("topology.distance: must be between 1 and width-1");
            t.distance = static_cast<int>(*d);
        }
        auto a = r.str("topology.alice");
        auto b = r.str("topology.bob");
        if (a.has_value() != b.has_value())
            throw ConfigError(std::string(a ? "topology.bob" : "topology.alice") + ": both consumers are required");
        if (a) {
            t.alice_at = parse_coord("topology.alice", *a);
            t.bob_at = parse_coord("topology.bob", *b);
            for (auto [c, key] : {std::pair{*t.alice_at, "topology.alice"}, std::pair{*t.bob_at, "topology.bob"}})
                if (c.x < 0 || c.y < 0 || c.x >= t.width || c.y >= t.height)
                    throw ConfigError(std::string(key) + ": outside the grid");
            if (*t.alice_at == *t.bob_at)
                throw ConfigError("topology.bob: must differ from alice");
        }
    }
    else if (t.type == TopologySpec::Type::configuration) {
        t.nodes = r.positive("topology.nodes", 0, 50'000'000);
        t.degree = parse_degree("topology.degree", r.require(r.str("topology.degree"), "topology.degree"));
        auto a = r.integer("topology.alice");
        auto b = r.integer("topology.bob");
        if (a.has_value() != b.has_value())
            throw ConfigError(std::string(a ? "topology.bob" : "topology.alice") + ": both consumers are required");
        if (a) {
            for (auto [v, key] : {std::pair{*a, "topology.alice"}, std::pair{*b, "topology.bob"}})
                if (v < 0 || v >= t.nodes)
                    throw ConfigError(std::string(key) + ": node id out of range");
            if (*a == *b)
                throw ConfigError("topology.bob: must differ from alice");
            t.alice_id = static_cast<NodeId>(*a);
            t.bob_id = static_cast<NodeId>(*b);
        }
    }
    else {
        t.file = r.require(r.str("topology.file"), "topology.file");
    }
    if (spec.kind == ExperimentKind::site_bond_analytic)
        t.degree = parse_degree("topology.degree", r.require(r.str("topology.degree"), "topology.degree"));

    // protocol
    auto& pc = spec.protocol;
    if (auto v = r.str("protocol.variant")) {
        auto parsed = parse_variant(*v);
        if (!parsed)
            throw ConfigError("protocol.variant: expected nghz-random, brickwork or divided-nghz");
        pc.variant = *parsed;
    }
    pc.fusion_cap = static_cast<int>(r.integer("protocol.n").value_or(4));
    pc.link_p = r.num("protocol.p").value_or(1.0);
    pc.fusion_q = r.num("protocol.q").value_or(1.0);
    pc.thinning = r.num("protocol.thinning");
    pc.trials = r.integer("protocol.trials").value_or(1000);
    pc.seed = spec.seed;
    try {
        pc.validate();
    }
    catch (const ConfigError& e) {
        throw ConfigError(std::string("protocol.") + e.what());
    }

    // sweeps
    if (auto v = r.str("sweep.p_values")) {
        spec.p_values = parse_double_list("sweep.p_values", *v);
        require_probabilities("sweep.p_values", spec.p_values);
        require_increasing("sweep.p_values", spec.p_values);
    }
    if (auto v = r.str("sweep.q_values")) {
        spec.q_values = parse_double_list("sweep.q_values", *v);
        require_probabilities("sweep.q_values", spec.q_values);
    }
    if (auto v = r.str("sweep.n_values"))
        for (auto n : parse_int_list("sweep.n_values", *v)) {
            if (n < 1 || n > 64)
                throw ConfigError("sweep.n_values: fusion caps must be between 1 and 64");
            spec.n_values.push_back(static_cast<int>(n));
        }
    if (auto v = r.str("sweep.distances"))
        for (auto d : parse_int_list("sweep.distances", *v)) {
            if (d < 1 || d >= t.width)
                throw ConfigError("sweep.distances: separations must be between 1 and width-1");
            spec.distances.push_back(static_cast<int>(d));
        }
    if (auto v = r.str("sweep.criterion")) {
        auto c = parse_criterion(*v);
        if (!c)
            throw ConfigError("sweep.criterion: expected consumer-connection, giant-component or size-crossing");
        spec.threshold.criterion = *c;
    }
    spec.threshold.level = r.num("sweep.level").value_or(0.5);
    if (!(spec.threshold.level > 0.0 && spec.threshold.level < 1.0))
        throw ConfigError("sweep.level: must lie strictly between 0 and 1");
    spec.threshold.upper_level = r.num("sweep.upper_level").value_or(0.0);
    if (r.has_key("sweep.upper_level") &&
        !(spec.threshold.upper_level > spec.threshold.level && spec.threshold.upper_level < 1.0))
        throw ConfigError("sweep.upper_level: must lie between level and 1");
    spec.threshold.tol = r.num("sweep.tol").value_or(0.005);
    if (!(spec.threshold.tol > 0.0 && spec.threshold.tol < 0.5))
        throw ConfigError("sweep.tol: must lie in (0, 0.5)");
    spec.threshold.threads = spec.threads;
    spec.reference_scale = r.num("sweep.reference_scale").value_or(0.5);
    if (!(spec.reference_scale > 0.0 && spec.reference_scale < 1.0))
        throw ConfigError("sweep.reference_scale: must lie in (0, 1)");
    spec.thin = r.str("sweep.thin") ? parse_bool("sweep.thin", *r.str("sweep.thin")) : false;

    // qkd
    const std::string source = r.str("qkd.source").value_or("fixed");
    if (source != "fixed" && source != "simulated")
        throw ConfigError("qkd.source: expected fixed or simulated");
    spec.simulated_shares = source == "simulated";
    if (spec.kind == ExperimentKind::qkd_sift && !spec.simulated_shares) {
        const auto shares = r.integer("qkd.shares").value_or(0);
        if (shares < 0 || shares > 100'000'000)
            throw ConfigError("qkd.shares: must be between 0 and 1e8");
        spec.shares = shares;
        spec.share_m = r.positive("qkd.m", 1, 1 << 20);
        spec.share_l = r.positive("qkd.l", 1, 1 << 20);
    }

    // per-kind requirements
    auto need = [&](bool ok, const char* key) {
        if (!ok)
            throw ConfigError(std::string(key) + ": required for " + std::string(info.name));
    };
    const bool has_consumers = t.distance || t.alice_at || t.alice_id || t.type == TopologySpec::Type::file;
    switch (spec.kind) {
    case ExperimentKind::rate_vs_p:
        need(!spec.p_values.empty(), "sweep.p_values");
        need(has_consumers, "topology.distance");
        break;
    case ExperimentKind::rate_vs_distance:
        need(!spec.distances.empty(), "sweep.distances");
        break;
    case ExperimentKind::site_bond_sim:
        need(!spec.p_values.empty(), "sweep.p_values");
        if (spec.threshold.criterion != Criterion::giant_component)
            need(has_consumers, "topology.distance");
        if (spec.threshold.criterion == Criterion::size_crossing)
            need(t.type == TopologySpec::Type::grid && t.distance.has_value(), "topology.distance");
        break;
    case ExperimentKind::site_bond_analytic:
        need(!spec.p_values.empty(), "sweep.p_values");
        if (pc.variant == Variant::divided)
            throw ConfigError("protocol.variant: analytic curves exist for nghz-random and brickwork only");
        break;
    case ExperimentKind::bounds_comparison:
        need(!spec.p_values.empty(), "sweep.p_values");
        need(has_consumers, "topology.distance");
        for (double p : spec.p_values)
            if (p >= 1.0)
                throw ConfigError("sweep.p_values: eta = p must stay below 1 for the capacity");
        break;
    case ExperimentKind::qkd_sift:
        if (spec.simulated_shares)
            need(has_consumers, "topology.distance");
        break;
    case ExperimentKind::oracle_check:
        need(!spec.p_values.empty(), "sweep.p_values");
        need(!spec.q_values.empty(), "sweep.q_values");
        need(!spec.n_values.empty(), "sweep.n_values");
        need(has_consumers, "topology.alice");
        if (static_cast<std::int64_t>(t.width) * (t.height - 1) + static_cast<std::int64_t>(t.height) * (t.width - 1) >
            20)
            throw ConfigError("topology.width: oracle grids are limited to 20 edges");
        break;
    }
    return spec;
}

////////////////////////////////////////////////////////////
// Running

namespace {

Topology grid_with_consumers(int width, int height, GridCoord a, GridCoord b)
{
    return build_square_grid(width, height, a, b);
}

Topology adapt_to_variant(Topology topo, const ExperimentSpec& spec)
{
    switch (spec.protocol.variant) {
    case Variant::brickwork:
        if (topo.is_colored())
            return topo;
        if (topo.is_grid())
            return apply_brickwork_coloring(topo);
        {
            Rng rng(derive_seed(spec.seed, 0, 7));
            return color_bounded_black(topo, spec.protocol.fusion_cap, rng).topology;
        }
    case Variant::divided:
        return topo.is_divided() ? topo : divide_network(topo);
    default:
        return topo;
    }
}

Topology base_topology(const ExperimentSpec& spec, std::optional<int> distance_override = std::nullopt,
                       double scale = 1.0)
{
    const auto& t = spec.topology;
    switch (t.type) {
    case TopologySpec::Type::grid: {
        const int w = scale == 1.0 ? t.width : std::max(2, static_cast<int>(std::lround(t.width * scale)));
        const int h = scale == 1.0 ? t.height : std::max(2, static_cast<int>(std::lround(t.height * scale)));
        std::optional<int> d = distance_override ? distance_override : t.distance;
        if (d && scale != 1.0)
            d = std::max(1, static_cast<int>(std::lround(*d * scale)));
        if (d) {
            auto [a, b] = centered_consumers(w, h, *d);
            return grid_with_consumers(w, h, a, b);
        }
        if (t.alice_at)
            return grid_with_consumers(w, h, *t.alice_at, *t.bob_at);
        // no consumers requested: demote the corner placeholders to helpers
        auto topo = build_square_grid(w, h, GridCoord{0, 0}, GridCoord{w - 1, h - 1});
        std::vector<Node> nodes(topo.nodes().begin(), topo.nodes().end());
        for (auto& n : nodes)
            n.role = NodeRole::helper;
        return Topology(std::move(nodes), {topo.edges().begin(), topo.edges().end()}, topo.grid());
    }
    case TopologySpec::Type::configuration: {
        Rng rng(derive_seed(spec.seed, 0, 6));
        auto topo = build_configuration_graph(DegreeDistribution(t.degree), t.nodes, rng);
        if (t.alice_id)
            topo = topo.with_consumers(*t.alice_id, *t.bob_id);
        return topo;
    }
    case TopologySpec::Type::file: {
        std::ifstream in(t.file);
        if (!in)
            throw ConfigError("topology.file: cannot open '" + t.file + "'");
        try {
            return read_topology(in);
        }
        catch (const TopologyError& e) {
            throw ConfigError("topology.file: " + std::string(e.what()));
        }
    }
    }
    throw std::logic_error("unreachable");
}

/// Hop distance between the consumers; Manhattan distance on grids.
std::optional<int> consumer_hops(const Topology& topo)
{
    if (auto d = topo.consumer_distance())
        return d;
    if (!topo.has_consumers())
        return std::nullopt;
    std::vector<int> dist(topo.node_count(), -1);
    std::deque<NodeId> queue{*topo.alice()};
    dist[*topo.alice()] = 0;
    while (!queue.empty()) {
        const NodeId n = queue.front();
        queue.pop_front();
        for (const Incidence& inc : topo.incident(n))
            if (dist[inc.neighbor] < 0) {
                dist[inc.neighbor] = dist[n] + 1;
                queue.push_back(inc.neighbor);
            }
    }
    const int d = dist[*topo.bob()];
    return d >= 0 ? std::optional(d) : std::nullopt;
}

std::string fmt_opt_int(std::optional<int> v)
{
    return v ? std::to_string(*v) : std::string("NA");
}

class CsvFile {
public:
    CsvFile(const ExperimentSpec& spec, const std::filesystem::path& path, std::vector<std::filesystem::path>& written)
        : path_(path)
    {
        std::error_code ec;
        if (!spec.out_dir.empty())
            std::filesystem::create_directories(spec.out_dir, ec);
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_)
            throw std::runtime_error("cannot write output file '" + path.string() + "'");
        out_ << "# ghznet " << to_string(spec.kind) << '\n';
        for (const auto& [k, v] : spec.config.entries())
            if (k != "experiment.threads")
                out_ << "# " << k << " = " << v << '\n';
        written.push_back(path);
    }
    std::ofstream& stream() { return out_; }
    ~CsvFile() = default;

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

void rate_header(std::ostream& out)
{
    out << "p,q,n,variant,d_AB,rate,stderr,trials,seed\n";
}

void rate_row(std::ostream& out, const ProtocolConfig& c, std::optional<int> d, const RateEstimate& r)
{
    out << fmt_double(c.link_p) << ',' << fmt_double(c.fusion_q) << ',' << c.fusion_cap << ',' << to_string(c.variant)
        << ',' << fmt_opt_int(d) << ',' << fmt_double(r.mean) << ',' << fmt_double(r.std_error) << ',' << r.trials
        << ',' << c.seed << '\n';
}

void run_rate_vs_p(const ExperimentSpec& spec, std::ostream& out, std::ostream& log)
{
    const Topology topo = build_topology(spec);
    const auto d = consumer_hops(topo);
    rate_header(out);
    for (double p : spec.p_values) {
        ProtocolConfig c = spec.protocol;
        c.link_p = p;
        const auto r = estimate_rate(topo, c, spec.threads);
        rate_row(out, c, d, r);
        log << "p=" << fmt_double(p) << " rate=" << fmt_double(r.mean) << '\n';
    }
}

void run_rate_vs_distance(const ExperimentSpec& spec, std::ostream& out, std::ostream& log)
{
    rate_header(out);
    for (int d : spec.distances) {
        const Topology topo = adapt_to_variant(base_topology(spec, d), spec);
        const auto r = estimate_rate(topo, spec.protocol, spec.threads);
        rate_row(out, spec.protocol, consumer_hops(topo), r);
        log << "d=" << d << " rate=" << fmt_double(r.mean) << '\n';
    }
}

void run_site_bond_sim(const ExperimentSpec& spec, std::ostream& out, std::ostream& log)
{
    const Topology topo = build_topology(spec);
    std::optional<Topology> reference;
    ThresholdOptions opt = spec.threshold;
    if (opt.criterion == Criterion::size_crossing) {
        reference = adapt_to_variant(base_topology(spec, std::nullopt, spec.reference_scale), spec);
        opt.reference = &*reference;
    }
    CriticalCurve curve = site_bond_curve_sim(topo, spec.protocol, spec.p_values, opt);
    for (const auto& s : curve.samples)
        log << "p=" << fmt_double(s.p) << " q_c=" << fmt_optional(s.q_c) << '\n';
    write_curve_csv(out, curve);
    if (spec.thin) {
        CriticalCurve thinned = thinned_curve(curve);
        thinned.source = "sim-thinned";
        std::ostringstream rows;
        write_curve_csv(rows, thinned);
        const std::string text = rows.str();
        out << text.substr(text.find('\n') + 1);
    }
}

void run_site_bond_analytic(const ExperimentSpec& spec, std::ostream& out, std::ostream&)
{
    const auto ctx = excess_distribution(DegreeDistribution(spec.topology.degree));
    CriticalCurve curve = analytic_curve(ctx, spec.protocol.fusion_cap, spec.p_values, spec.protocol.variant);
    write_curve_csv(out, curve);
    if (spec.thin) {
        CriticalCurve thinned = thinned_curve(curve);
        thinned.source = "analytic-thinned";
        std::ostringstream rows;
        write_curve_csv(rows, thinned);
        const std::string text = rows.str();
        out << text.substr(text.find('\n') + 1);
    }
}

void run_bounds(const ExperimentSpec& spec, std::ostream& out, std::ostream& log)
{
    const Topology topo = build_topology(spec);
    out << "eta,capacity,maxflow,gcc_bound,rate_4ghz,rate_3ghz\n";
    for (double eta : spec.p_values) {
        ProtocolConfig c4 = spec.protocol;
        c4.variant = Variant::random_ghz;
        c4.link_p = eta;
        c4.fusion_cap = 4;
        ProtocolConfig c3 = c4;
        c3.fusion_cap = 3;
        const double f = giant_component_fraction(topo, c4, spec.threads).value;
        const double r4 = estimate_rate(topo, c4, spec.threads).mean;
        const double r3 = estimate_rate(topo, c3, spec.threads).mean;
        out << fmt_double(eta) << ',' << fmt_double(ultimate_capacity(eta)) << ',' << fmt_double(max_flow_bound(eta))
            << ',' << fmt_double(gcc_bound(f)) << ',' << fmt_double(r4) << ',' << fmt_double(r3) << '\n';
        log << "eta=" << fmt_double(eta) << " F=" << fmt_double(f) << '\n';
    }
}

void run_oracle(const ExperimentSpec& spec, std::ostream& out, std::ostream& log)
{
    const Topology base = build_topology(spec);
    out << "width,height,n,p,q,exact,mc,stderr,z\n";
    for (int n : spec.n_values)
        for (double p : spec.p_values)
            for (double q : spec.q_values) {
                ProtocolConfig c = spec.protocol;
                c.fusion_cap = n;
                c.link_p = p;
                c.fusion_q = q;
                const double exact = exact_rate(base, c);
                const auto mc = estimate_rate(base, c, spec.threads);
                const double z = mc.std_error > 0.0 ? (mc.mean - exact) / mc.std_error : 0.0;
                out << spec.topology.width << ',' << spec.topology.height << ',' << n << ',' << fmt_double(p) << ','
                    << fmt_double(q) << ',' << fmt_double(exact) << ',' << fmt_double(mc.mean) << ','
                    << fmt_double(mc.std_error) << ',' << fmt_double(z) << '\n';
                log << "n=" << n << " p=" << fmt_double(p) << " q=" << fmt_double(q) << " z=" << fmt_double(z)
                    << '\n';
            }
}

std::vector<GhzShare> simulated_shares(const ExperimentSpec& spec)
{
    const Topology topo = build_topology(spec);
    check_variant_topology(topo, spec.protocol);
    std::vector<std::vector<SharedState>> per_trial(static_cast<std::size_t>(spec.protocol.trials));
    for_each_trial(spec.protocol.trials, spec.threads, [&](std::int64_t t, int) {
        CycleResult cycle = run_cycle(topo, spec.protocol, static_cast<std::uint64_t>(t));
        per_trial[static_cast<std::size_t>(t)] = count_shared_ghz(cycle.components, topo).states;
    });
    std::vector<GhzShare> shares;
    for (const auto& states : per_trial)
        for (const auto& s : states)
            shares.push_back({s.alice_qubits, s.bob_qubits});
    return shares;
}

} // namespace

Topology build_topology(const ExperimentSpec& spec)
{
    try {
        return adapt_to_variant(base_topology(spec), spec);
    }
    catch (const TopologyError& e) {
        throw ConfigError(std::string("topology: ") + e.what());
    }
}

std::vector<std::filesystem::path> run_experiment(const ExperimentSpec& spec, std::ostream& log)
{
    std::vector<std::filesystem::path> written;
    const auto path = spec.out_dir / spec.output;
    if (spec.kind == ExperimentKind::qkd_sift) {
        const auto shares = spec.simulated_shares
                                ? simulated_shares(spec)
                                : std::vector<GhzShare>(static_cast<std::size_t>(spec.shares),
                                                        GhzShare{spec.share_m, spec.share_l});
        const QkdResult result = run_qkd(shares, spec.seed, spec.threads);
        {
            CsvFile csv(spec, path, written);
            write_rounds_csv(csv.stream(), result);
        }
        auto key_path = path;
        key_path.replace_extension(".key");
        std::ofstream key(key_path, std::ios::binary | std::ios::trunc);
        if (!key)
            throw std::runtime_error("cannot write output file '" + key_path.string() + "'");
        write_key_hex(key, result.alice_key);
        written.push_back(key_path);
        log << "shares=" << shares.size() << " sifted=" << result.alice_key.size()
            << " sift_rate=" << fmt_double(result.sift_rate()) << " mismatches=" << result.mismatches << '\n';
        return written;
    }

    CsvFile csv(spec, path, written);
    auto& out = csv.stream();
    switch (spec.kind) {
    case ExperimentKind::rate_vs_p: run_rate_vs_p(spec, out, log); break;
    case ExperimentKind::rate_vs_distance: run_rate_vs_distance(spec, out, log); break;
    case ExperimentKind::site_bond_sim: run_site_bond_sim(spec, out, log); break;
    case ExperimentKind::site_bond_analytic: run_site_bond_analytic(spec, out, log); break;
    case ExperimentKind::bounds_comparison: run_bounds(spec, out, log); break;
    case ExperimentKind::oracle_check: run_oracle(spec, out, log); break;
    case ExperimentKind::qkd_sift: break;
    }
    out.flush();
    if (!out)
        throw std::runtime_error("write failed for '" + path.string() + "'");
    return written;
}

} // namespace ghznet
