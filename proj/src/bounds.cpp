#include "ghznet/bounds.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ghznet {

namespace {

void check_unit(double x, const char* what)
{
    if (!(x >= 0.0 && x <= 1.0))
        throw std::invalid_argument(std::string(what) + ": must lie in [0, 1]");
}

} // namespace

double ultimate_capacity(double eta)
{
    if (!(eta >= 0.0 && eta < 1.0))
        throw std::invalid_argument("eta: must lie in [0, 1)");
    return -4.0 * std::log2(1.0 - eta);
}

double max_flow_bound(double p)
{
    check_unit(p, "p");
    return 4.0 * p;
}

double gcc_bound(double giant_fraction)
{
    check_unit(giant_fraction, "F");
    return giant_fraction * giant_fraction;
}

double bsm_rate_bound(double giant_fraction, double q, int distance)
{
    check_unit(giant_fraction, "F");
    check_unit(q, "q");
    if (distance < 1)
        throw std::invalid_argument("d_AB: must be at least 1");
    return 4.0 * giant_fraction * giant_fraction * std::pow(q, distance - 1);
}

} // namespace ghznet
