#include "ghznet/analytics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ghznet {

GenFnContext excess_distribution(const DegreeDistribution& dist)
{
    GenFnContext ctx;
    const auto probs = dist.probabilities();
    ctx.degree.assign(probs.begin(), probs.end());
    ctx.d_max = dist.max_degree();
    ctx.z = 0.0;
    for (std::size_t d = 0; d < probs.size(); ++d)
        ctx.z += static_cast<double>(d) * probs[d];
    if (!(ctx.z > 0.0))
        throw std::invalid_argument("degree distribution: mean degree must be positive");
    ctx.excess.assign(static_cast<std::size_t>(std::max(ctx.d_max, 1)), 0.0);
    for (int d = 0; d < ctx.d_max; ++d)
        ctx.excess[static_cast<std::size_t>(d)] = (d + 1) * probs[static_cast<std::size_t>(d + 1)] / ctx.z;
    double total = 0.0;
    for (double e : ctx.excess)
        total += e;
    for (double& e : ctx.excess)
        e /= total;
    return ctx;
}

double binomial_coefficient(int k, int l)
{
    if (l < 0 || l > k)
        return 0.0;
    l = std::min(l, k - l);
    double c = 1.0;
    for (int i = 1; i <= l; ++i)
        c = c * (k - l + i) / i;
    return c;
}

namespace {

double pow_int(double x, int e)
{
    return e == 0 ? 1.0 : std::pow(x, e);
}

double bernoulli_weight(double p, int successes, int trials)
{
    return pow_int(p, successes) * pow_int(1.0 - p, trials - successes);
}

void check_n(int n)
{
    if (n < 1)
        throw std::invalid_argument("n: fusion cap must be at least 1");
}

struct GhzSums {
    double a = 0.0;  // weight of x-terms at x = 1
    double b = 0.0;  // coefficient of H1'(1)
};

GhzSums ghz_sums(const GenFnContext& ctx, int n, double p)
{
    check_n(n);
    GhzSums s;
    for (int k = 0; k < static_cast<int>(ctx.excess.size()); ++k) {
        const double ek = ctx.excess[static_cast<std::size_t>(k)];
        if (ek == 0.0)
            continue;
        double a = 0.0, b = 0.0;
        for (int l = 0; l <= k; ++l) {
            const double w = link_binomial(l, k, p);
            if (k < n || l < n) {
                a += w;
                b += l * w;
            }
            else {
                a += w * n / (l + 1.0);
                b += w * n * (n - 1.0) / (l + 1.0);
            }
        }
        s.a += ek * a;
        s.b += ek * b;
    }
    return s;
}

} // namespace

double link_binomial(int l, int k, double p)
{
    if (l < 0 || l > k)
        throw std::invalid_argument("link_binomial: need 0 <= l <= k");
    return binomial_coefficient(k, l) * bernoulli_weight(p, l, k);
}

double criticality_sum(const GenFnContext& ctx, int n, double p)
{
    return ghz_sums(ctx, n, p).b;
}

double criticality_constant(const GenFnContext& ctx, int n, double p)
{
    return ghz_sums(ctx, n, p).a;
}

std::optional<double> analytic_q_c(const GenFnContext& ctx, int n, double p)
{
    const double b = criticality_sum(ctx, n, p);
    if (b < 1.0)
        return std::nullopt;
    return 1.0 / b;
}

double h1_at_one(const GenFnContext& ctx, int n, double p, double q)
{
    check_n(n);
    // Sum rule at x = 1 with H1(1) = 1: fused terms plus the excluded-link term.
    double fused = 0.0, excluded = 0.0;
    for (int k = 0; k < static_cast<int>(ctx.excess.size()); ++k) {
        const double ek = ctx.excess[static_cast<std::size_t>(k)];
        for (int l = 0; l <= k; ++l) {
            const double w = ek * link_binomial(l, k, p);
            if (k < n || l < n) {
                fused += w;
            }
            else {
                fused += w * n / (l + 1.0);
                excluded += w * (l + 1.0 - n) / (l + 1.0);
            }
        }
    }
    return 1.0 - q + q * fused + q * excluded;
}

double mean_component_size(const GenFnContext& ctx, int n, double p, double q)
{
    const GhzSums s = ghz_sums(ctx, n, p);
    if (q * s.b >= 1.0)
        throw DivergenceError("mean component size diverges: q B(p) >= 1");
    const double h1 = q * s.a / (1.0 - q * s.b);
    double acc = 0.0;
    for (int k = 0; k <= ctx.d_max; ++k) {
        const double pk = ctx.degree[static_cast<std::size_t>(k)];
        if (pk == 0.0)
            continue;
        for (int l = 0; l <= k; ++l)
            acc += pk * link_binomial(l, k, p) * (1.0 + std::min(l, n) * h1);
    }
    return q * acc;
}

BrickworkSystem brickwork_s_matrix(const GenFnContext& ctx, int n, double p, double q)
{
    check_n(n);
    BrickworkSystem sys;
    double w1 = 0.0, w2 = 0.0;
    for (int k = 0; k < static_cast<int>(ctx.excess.size()); ++k) {
        const double ek = ctx.excess[static_cast<std::size_t>(k)];
        if (ek == 0.0)
            continue;
        if (k < n) {
            // every edge of the vertex is black
            for (int l = 0; l <= k; ++l) {
                const double w = ek * link_binomial(l, k, p);
                w1 += w;
                sys.s11 += w * l;
            }
            continue;
        }
        // arrived on a black edge: n-1 black and k-n+1 red excess edges
        for (int l1 = 0; l1 <= n - 1; ++l1) {
            const double c1 = binomial_coefficient(n - 1, l1);
            for (int l2 = 0; l2 <= k - n + 1; ++l2) {
                const double w = ek * c1 * binomial_coefficient(k - n + 1, l2) * bernoulli_weight(p, l1 + l2, k);
                const int red_used = std::min(l2, n - 1 - l1);
                w1 += w;
                sys.s11 += w * l1;
                sys.s12 += w * red_used;
            }
        }
        // arrived on a red edge: n black and k-n red excess edges
        for (int l1 = 0; l1 <= n - 1; ++l1) {
            const double c1 = binomial_coefficient(n, l1);
            for (int l2 = 0; l2 <= k - n; ++l2) {
                const double w = ek * c1 * binomial_coefficient(k - n, l2) * bernoulli_weight(p, l1 + l2, k);
                if (l2 <= n - 1 - l1) {
                    w2 += w;
                    sys.s21 += w * l1;
                    sys.s22 += w * l2;
                }
                else {
                    const double chosen = (n - l1) / (l2 + 1.0);
                    w2 += w * chosen;
                    sys.s21 += w * chosen * l1;
                    sys.s22 += w * chosen * (n - 1 - l1);
                }
            }
        }
    }
    sys.c1 = q * w1;
    sys.c2 = q * w2;
    return sys;
}

std::optional<double> brickwork_q_c(const BrickworkSystem& s)
{
    const double t = s.s11 + s.s22;
    const double d = s.s12 * s.s21 - s.s11 * s.s22;
    double root;
    if (std::abs(d) < 1e-14) {
        if (!(t > 0.0))
            return std::nullopt;
        root = 1.0 / t;
    }
    else {
        const double disc = t * t + 4.0 * d;
        if (disc < 0.0 || !(t + std::sqrt(disc) > 0.0))
            return std::nullopt;
        // 2/(T + sqrt(T^2+4D)) is the smaller positive root of D q^2 + T q - 1,
        // written without cancellation.
        root = 2.0 / (t + std::sqrt(disc));
    }
    if (!(root > 0.0) || root > 1.0)
        return std::nullopt;
    return root;
}

std::optional<double> brickwork_q_c(const GenFnContext& ctx, int n, double p)
{
    return brickwork_q_c(brickwork_s_matrix(ctx, n, p));
}

double brickwork_q_c_spectral(const BrickworkSystem& system)
{
    const Eigen::Vector2cd ev = system.matrix().eigenvalues();
    const double rho = std::max(std::abs(ev[0]), std::abs(ev[1]));
    return rho > 0.0 ? 1.0 / rho : std::numeric_limits<double>::infinity();
}

CriticalCurve analytic_curve(const GenFnContext& ctx, int n, std::span<const double> p_grid, Variant variant)
{
    CriticalCurve curve;
    curve.source = "analytic";
    curve.variant = std::string(to_string(variant));
    curve.criterion = "mean-size-divergence";
    curve.system_size = 0;
    for (double p : p_grid) {
        CriticalCurve::Sample s;
        s.p = p;
        s.q_c = variant == Variant::brickwork ? brickwork_q_c(ctx, n, p) : analytic_q_c(ctx, n, p);
        curve.samples.push_back(s);
    }
    return curve;
}

CriticalCurve thinned_curve(const CriticalCurve& curve)
{
    for (std::size_t i = 1; i < curve.samples.size(); ++i)
        if (!(curve.samples[i].p > curve.samples[i - 1].p))
            throw std::invalid_argument("p grid must be strictly increasing");
    CriticalCurve out = curve;
    std::optional<double> best;
    double best_unc = 0.0;
    for (auto& s : out.samples) {
        if (s.q_c && (!best || *s.q_c <= *best)) {
            best = s.q_c;
            best_unc = s.uncertainty;
        }
        else if (best) {
            s.q_c = best;
            s.uncertainty = best_unc;
        }
    }
    return out;
}

} // namespace ghznet
