#pragma once

#include "ghznet/percolation.hpp"
#include "ghznet/topology.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace ghznet {

class DivergenceError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Degree and excess-degree distributions of a configuration graph.
struct GenFnContext {
    std::vector<double> degree;  ///< p_d, d = 0..d_max
    std::vector<double> excess;  ///< e_d = (d+1) p_{d+1} / z, d = 0..d_max-1
    double z = 0.0;
    int d_max = 0;
};

GenFnContext excess_distribution(const DegreeDistribution& dist);

/// C(k, l) as a double, exact for the sizes used here.
double binomial_coefficient(int k, int l);

/// P(l|k) = C(k,l) p^l (1-p)^(k-l). Throws std::invalid_argument when l > k.
double link_binomial(int l, int k, double p);

/// Coefficient B(p) of H1'(1) in the derivative of the H1 sum rule at x = 1.
double criticality_sum(const GenFnContext& ctx, int n, double p);

/// Constant term A(p) of the same derivative (weight of the x-terms at x = 1).
double criticality_constant(const GenFnContext& ctx, int n, double p);

/// q_c = 1/B(p), or nullopt when B(p) < 1.
std::optional<double> analytic_q_c(const GenFnContext& ctx, int n, double p);

/// The H1 sum rule evaluated at x = 1 (equals 1 for a proper distribution).
double h1_at_one(const GenFnContext& ctx, int n, double p, double q);

/// Mean size of the component containing a random node. A node with l links
/// joins the components behind min(l, n) of them. Throws DivergenceError
/// unless q B(p) < 1.
double mean_component_size(const GenFnContext& ctx, int n, double p, double q);

/// Linear system for the black/red (brickwork-like) rule:
///   [H11'; H12'] = [C1; C2] + q S [H11'; H12'].
struct BrickworkSystem {
    double s11 = 0.0, s12 = 0.0, s21 = 0.0, s22 = 0.0;
    double c1 = 0.0, c2 = 0.0;

    Eigen::Matrix2d matrix() const
    {
        Eigen::Matrix2d s;
        s << s11, s12, s21, s22;
        return s;
    }
};

BrickworkSystem brickwork_s_matrix(const GenFnContext& ctx, int n, double p, double q = 1.0);

/// Smallest q in (0,1] with det(I - q S) = 0, or nullopt.
std::optional<double> brickwork_q_c(const BrickworkSystem& system);
std::optional<double> brickwork_q_c(const GenFnContext& ctx, int n, double p);

/// 1 / spectral radius of S, computed with Eigen; the same threshold as
/// brickwork_q_c whenever that exists.
double brickwork_q_c_spectral(const BrickworkSystem& system);

/// Analytic site-bond curve on a p grid, tagged source=analytic.
CriticalCurve analytic_curve(const GenFnContext& ctx, int n, std::span<const double> p_grid, Variant variant);

/// Running minimum of q_c over increasing p (effect of link thinning).
/// Points before the first defined q_c stay undefined.
CriticalCurve thinned_curve(const CriticalCurve& curve);

} // namespace ghznet
