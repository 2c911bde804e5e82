#pragma once

namespace ghznet {

/// -4 log2(1 - eta): ebits per mode across the four-edge cut of a grid node.
double ultimate_capacity(double eta);

/// 4p: expected max-flow of the grid min-cut around a consumer.
double max_flow_bound(double p);

/// F^2 for giant-component fraction F.
double gcc_bound(double giant_fraction);

/// 4 F^2 q^(d-1): upper bound for protocols that only use Bell measurements.
double bsm_rate_bound(double giant_fraction, double q, int distance);

} // namespace ghznet
