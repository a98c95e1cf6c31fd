#include "ddm/deterministic.hpp"

#include <cmath>
#include <sstream>

#include "ddm/error.hpp"

namespace ddm::deterministic {

namespace {

// Below this gap the annuity closed form loses precision; sum directly.
constexpr double kAnnuityGap = 1e-8;

void require_positive(double x, const char* name) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        fail(ErrorKind::InvalidArgument, std::string(name) + " must be positive");
    }
}

void require_convergent(double g, double k, const char* phase) {
    if (!(g < k)) {
        std::ostringstream msg;
        msg << phase << " growth " << g << " >= discount rate " << k;
        fail(ErrorKind::NonConvergent, msg.str());
    }
}

}  // namespace

double gordon_price(const GordonParams& p) {
    require_positive(p.d0, "d0");
    require_positive(p.k_e, "k_e");
    require_convergent(p.g, p.k_e, "constant");
    return p.d0 * (1.0 + p.g) / (p.k_e - p.g);
}

double two_stage_price(const TwoStageParams& p) {
    require_positive(p.d0, "d0");
    require_positive(p.k_e_h, "k_e_h");
    require_positive(p.k_e_st, "k_e_st");
    if (p.n < 1) fail(ErrorKind::DegeneratePhase, "high-growth phase needs n >= 1");
    require_convergent(p.g_st, p.k_e_st, "stable");

    const double ratio = (1.0 + p.g_h) / (1.0 + p.k_e_h);
    double annuity = 0.0;
    if (std::abs(p.k_e_h - p.g_h) < kAnnuityGap) {
        double term = 1.0;
        for (int i = 1; i <= p.n; ++i) {
            term *= ratio;
            annuity += term;
        }
        annuity *= p.d0;
    } else {
        annuity = p.d0 * (1.0 + p.g_h) * (1.0 - std::pow(ratio, p.n)) / (p.k_e_h - p.g_h);
    }
    const double d_n = p.d0 * std::pow(1.0 + p.g_h, p.n);
    const double terminal = d_n * (1.0 + p.g_st) / (p.k_e_st - p.g_st);
    return annuity + terminal / std::pow(1.0 + p.k_e_h, p.n);
}

double h_model_price(const HModelParams& p) {
    require_positive(p.d0, "d0");
    require_positive(p.k_e, "k_e");
    if (p.h < 0.0) fail(ErrorKind::InvalidArgument, "h must be non-negative");
    require_convergent(p.g_n, p.k_e, "stable");
    const double spread = p.k_e - p.g_n;
    return p.d0 * (1.0 + p.g_a) / spread + p.d0 * p.h * (p.g_a - p.g_n) / spread;
}

double three_stage_price(const ThreeStageParams& p) {
    require_positive(p.eps0, "eps0");
    require_positive(p.k_e_h, "k_e_h");
    require_positive(p.k_e_d, "k_e_d");
    require_positive(p.k_e_st, "k_e_st");
    if (p.n1 < 0 || p.n2 < p.n1) fail(ErrorKind::InvalidArgument, "need 0 <= n1 <= n2");
    if (p.pi_a < 0.0 || p.pi_a > 1.0 || p.pi_n < 0.0 || p.pi_n > 1.0) {
        fail(ErrorKind::InvalidArgument, "payout ratios must lie in [0,1]");
    }
    if (p.decline_dividends.size() != static_cast<std::size_t>(p.n2 - p.n1)) {
        fail(ErrorKind::DimensionMismatch, "decline_dividends must have n2 - n1 entries");
    }
    require_convergent(p.g_n, p.k_e_st, "stable");

    double high = 0.0;
    const double ratio = (1.0 + p.g_a) / (1.0 + p.k_e_h);
    double term = p.eps0 * p.pi_a;
    for (int i = 0; i <= p.n1; ++i) {
        high += term;
        term *= ratio;
    }

    double decline = 0.0;
    for (int i = p.n1 + 1; i <= p.n2; ++i) {
        decline += p.decline_dividends[static_cast<std::size_t>(i - p.n1 - 1)] /
                   std::pow(1.0 + p.k_e_d, i);
    }

    // Dividend at n2 under the final payout ratio: the last declining-phase
    // dividend, or the high-phase earnings path when there is no middle phase.
    const double final_dividend = p.n2 > p.n1
                                      ? p.decline_dividends.back()
                                      : p.eps0 * std::pow(1.0 + p.g_a, p.n1) * p.pi_n;
    const double discount =
        std::pow(1.0 + p.k_e_h, p.n1) * std::pow(1.0 + p.k_e_d, p.n2 - p.n1);
    const double terminal = final_dividend * (1.0 + p.g_n) / ((p.k_e_st - p.g_n) * discount);
    return high + decline + terminal;
}

std::vector<double> interpolate_decline_dividends(const ThreeStageParams& p) {
    if (p.n1 < 0 || p.n2 < p.n1) fail(ErrorKind::InvalidArgument, "need 0 <= n1 <= n2");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(p.n2 - p.n1));
    double eps = p.eps0 * std::pow(1.0 + p.g_a, p.n1);
    const double span = static_cast<double>(p.n2 - p.n1);
    for (int i = p.n1 + 1; i <= p.n2; ++i) {
        const double frac = static_cast<double>(i - p.n1) / span;
        const double g = p.g_a + frac * (p.g_n - p.g_a);
        const double payout = p.pi_a + frac * (p.pi_n - p.pi_a);
        eps *= 1.0 + g;
        out.push_back(eps * payout);
    }
    return out;
}

double barsky_growth(const BarskyParams& p, std::size_t t) {
    if (!(p.theta >= 0.0 && p.theta < 1.0)) {
        fail(ErrorKind::InvalidArgument, "theta must lie in [0,1)");
    }
    if (p.dividend_changes.size() <= t) {
        fail(ErrorKind::InsufficientHistory, "need dividend changes for periods 0.." +
                                                 std::to_string(t));
    }
    double acc = 0.0;
    double weight = 1.0;
    for (std::size_t i = 0; i <= t; ++i) {
        acc += weight * p.dividend_changes[t - i];
        weight *= p.theta;
    }
    // weight == theta^(t+1) here
    return (1.0 - p.theta) * acc + weight * p.g0;
}

double quarterly_rate(double k_e) {
    if (!(k_e > -1.0)) fail(ErrorKind::InvalidArgument, "k_e must exceed -1");
    return std::pow(1.0 + k_e, 0.25) - 1.0;
}

}  // namespace ddm::deterministic
