#pragma once

// Closed-form deterministic dividend discount models. All growth inputs here
// are net rates (0.02 means +2% per period), unlike the Markov modules which
// work with gross factors.

#include <cstddef>
#include <vector>

namespace ddm::deterministic {

struct GordonParams {
    double d0 = 0.0;
    double g = 0.0;
    double k_e = 0.0;
};

struct TwoStageParams {
    double d0 = 0.0;
    double g_h = 0.0;
    double k_e_h = 0.0;
    int n = 1;
    double g_st = 0.0;
    double k_e_st = 0.0;
};

struct HModelParams {
    double d0 = 0.0;
    double g_a = 0.0;
    double g_n = 0.0;
    double h = 0.0;
    double k_e = 0.0;
};

struct ThreeStageParams {
    double eps0 = 0.0;
    double pi_a = 0.0;
    double pi_n = 0.0;
    double g_a = 0.0;
    double g_n = 0.0;
    int n1 = 0;
    int n2 = 0;
    double k_e_h = 0.0;
    double k_e_d = 0.0;
    double k_e_st = 0.0;
    /// Dividends paid in periods n1+1 .. n2 (length n2 - n1).
    std::vector<double> decline_dividends;
};

struct BarskyParams {
    double theta = 0.0;
    double g0 = 0.0;
    /// dividend_changes[i] is the dividend change at period i.
    std::vector<double> dividend_changes;
};

/// d0 (1+g) / (k_e - g). Throws NonConvergent when g >= k_e.
double gordon_price(const GordonParams& p);

/// High-growth annuity for n periods plus the stable-phase Gordon value at n,
/// discounted at the high-phase rate.
double two_stage_price(const TwoStageParams& p);

/// H-model value with the first numerator carrying (1 + g_a).
///
/// Note: the more common statement of the H-model uses (1 + g_n) in the first
/// term; this one is larger by exactly d0 (g_a - g_n) / (k_e - g_n).
double h_model_price(const HModelParams& p);

double three_stage_price(const ThreeStageParams& p);

/// Middle-phase dividends for a three-stage model, with growth and payout both
/// interpolated linearly from (g_a, pi_a) at n1 to (g_n, pi_n) at n2.
std::vector<double> interpolate_decline_dividends(const ThreeStageParams& p);

/// Exponentially weighted average of past dividend changes seeded with g(0).
/// Weights are (1-theta) theta^i on the changes and theta^(t+1) on g(0), so
/// they sum to one.
double barsky_growth(const BarskyParams& p, std::size_t t);

/// Quarterly rate equivalent to the annual rate k_e under quarterly compounding.
double quarterly_rate(double k_e);

}  // namespace ddm::deterministic
