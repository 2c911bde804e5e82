#pragma once

#include "ghznet/protocol.hpp"
#include "ghznet/topology.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ghznet {

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t trials = 0;
};

/// Fraction of helper nodes in the largest post-fusion component of one cycle.
///
/// A helper belongs to the component of its successful fusion. A helper with a
/// single successful link (X-measured, no fusion) belongs to the component of
/// the memory on the far side of that link when that memory is active, which
/// makes the measure coincide with plain bond percolation when every helper
/// fuses all its links. Consumers are not counted.
double largest_component_fraction(const Topology& topology, const FusionPlan& plan, const ComponentSet& components);

Estimate giant_component_fraction(const Topology& topology, const ProtocolConfig& config, int threads = 1);

/// Fraction of cycles in which the consumers share at least one GHZ state.
Estimate connection_probability(const Topology& topology, const ProtocolConfig& config, int threads = 1);

struct SweepResult {
    std::vector<double> p;
    std::vector<double> connection;        ///< P(consumers connected) at each p
    std::vector<double> connection_err;
    std::vector<double> giant;             ///< largest-component helper fraction at each p
    std::vector<double> giant_err;         ///< conservative bound on the standard error
    std::vector<double> micro_connection;  ///< index m = occupied bonds, 0..E
    std::vector<double> micro_giant;
    std::vector<double> micro_giant_sd;    ///< per-trial spread of the largest-component fraction
    std::int64_t trials = 0;
};

/// Binomial pmf B(m; E, p) for m = 0..E, evaluated in log space.
std::vector<double> binomial_pmf(std::size_t e, double p);

/// sum_m B(m; E, p) * micro[m] with E = micro.size() - 1.
double canonical_average(std::span<const double> micro, double p);

/// True when a cycle reduces to plain bond percolation: q = 1, no thinning,
/// no brickwork priorities and no helper with more links than the fusion cap.
bool bond_sweep_applicable(const Topology& topology, const ProtocolConfig& config);

/// Newman-Ziff sweep for the pure bond problem: q = 1, no thinning, and a
/// fusion cap no smaller than any helper degree. Consumers are split into one
/// leaf per memory so that they never relay.
SweepResult newman_ziff_bond_sweep(const Topology& topology, const ProtocolConfig& config,
                                   std::span<const double> p_grid, int threads = 1);

enum class Criterion : std::uint8_t {
    consumer_connection,  ///< consumer connection probability crosses `level`
    giant_component,      ///< largest-component helper fraction crosses `level`
    size_crossing,        ///< connection curves of the topology and a smaller reference cross
};

std::string_view to_string(Criterion c);
std::optional<Criterion> parse_criterion(std::string_view name);

struct ThresholdOptions {
    Criterion criterion = Criterion::consumer_connection;
    double level = 0.5;
    /// When above `level`, the threshold is the zero of the straight line
    /// through the crossings at `level` and `upper_level`.
    double upper_level = 0.0;
    /// size_crossing: same geometry at a smaller scale, consumers included.
    const Topology* reference = nullptr;
    /// size_crossing: the search bracket starts where the large system's
    /// connection probability reaches this value and ends where it reaches `level`.
    double crossing_floor = 0.05;
    double tol = 0.005;          ///< bisection stops once the bracket half-width is below tol
    double slope_window = 0.02;  ///< half-width used to estimate the crossing slope
    int threads = 1;
};

struct CriticalPoint {
    double value = 0.0;
    double uncertainty = 0.0;       ///< bracket half-width plus statistical half-width
    int depth = 0;                  ///< bisection steps taken
    bool finite_size_caveat = false;  ///< crossing is broad (10-90% width above 0.1)
};

/// Observable used by the threshold searches at the given configuration.
Estimate threshold_observable(const Topology& topology, const ProtocolConfig& config, const ThresholdOptions& opt);

/// Bisection on q at fixed p. std::nullopt when the observable stays below
/// the level even at q = 1.
std::optional<CriticalPoint> critical_q(const Topology& topology, double p, const ProtocolConfig& config,
                                        const ThresholdOptions& opt);

/// Bisection on p at fixed q (the q = 1 thresholds p_c of each variant).
/// Pure bond problems are answered from one Newman-Ziff sweep per topology
/// with config.trials orderings.
std::optional<CriticalPoint> critical_p(const Topology& topology, double q, const ProtocolConfig& config,
                                        const ThresholdOptions& opt);

struct CriticalCurve {
    struct Sample {
        double p = 0.0;
        std::optional<double> q_c;
        double uncertainty = 0.0;
    };
    std::vector<Sample> samples;
    std::size_t system_size = 0;
    std::string criterion;
    std::string variant;
    std::string source = "sim";
};

CriticalCurve site_bond_curve_sim(const Topology& topology, const ProtocolConfig& config,
                                  std::span<const double> p_grid, const ThresholdOptions& opt);

/// Writes `p,q_c,uncertainty,size,variant,criterion,source` rows.
void write_curve_csv(std::ostream& out, const CriticalCurve& curve);

} // namespace ghznet
