#pragma once

#include "ghznet/config.hpp"
#include "ghznet/percolation.hpp"
#include "ghznet/protocol.hpp"
#include "ghznet/topology.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ghznet {

enum class ExperimentKind : std::uint8_t {
    rate_vs_p,
    rate_vs_distance,
    site_bond_sim,
    site_bond_analytic,
    bounds_comparison,
    qkd_sift,
    oracle_check,
};

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(std::string_view name);

struct ParamDoc {
    std::string_view key;  ///< "section.key"
    std::string_view doc;
};

struct KindInfo {
    ExperimentKind kind;
    std::string_view name;
    std::string_view summary;
    std::vector<ParamDoc> params;  ///< every key the kind accepts
};

const std::vector<KindInfo>& experiment_registry();
const KindInfo& kind_info(ExperimentKind kind);
void print_kind_help(std::ostream& out, const KindInfo& info);

struct TopologySpec {
    enum class Type : std::uint8_t { grid, configuration, file };
    Type type = Type::grid;
    int width = 0;
    int height = 0;
    std::optional<int> distance;            ///< centred consumers on the middle row
    std::optional<GridCoord> alice_at, bob_at;
    std::optional<NodeId> alice_id, bob_id;  ///< consumers of a configuration graph
    std::vector<double> degree;             ///< p_d of a configuration graph
    int nodes = 0;
    std::string file;
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::rate_vs_p;
    ConfigFile config;  ///< resolved config, echoed into output headers
    std::uint64_t seed = 0;
    int threads = 1;
    std::filesystem::path out_dir = ".";
    std::string output;

    TopologySpec topology;
    ProtocolConfig protocol;

    std::vector<double> p_values;
    std::vector<double> q_values;
    std::vector<int> n_values;
    std::vector<int> distances;
    ThresholdOptions threshold;
    double reference_scale = 0.5;
    bool thin = false;

    std::int64_t shares = 0;
    int share_m = 1;
    int share_l = 1;
    bool simulated_shares = false;
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::filesystem::path> out_dir;
};

/// Validates every key and value before anything runs. Throws ConfigError
/// naming the offending key.
ExperimentSpec make_spec(const ConfigFile& config, const Overrides& overrides = {});

/// Builds the topology described by the spec, adapted to the variant
/// (brickwork coloring, division into four partitions).
Topology build_topology(const ExperimentSpec& spec);

/// Runs the experiment and returns the files written. Progress lines go to `log`.
std::vector<std::filesystem::path> run_experiment(const ExperimentSpec& spec, std::ostream& log);

} // namespace ghznet
