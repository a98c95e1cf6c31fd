#include "ddm/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ddm::markov {

namespace {

[[noreturn]] void violated(const char* which, double lhs, double rhs) {
    std::ostringstream msg;
    msg << which << ": " << lhs << " >= " << rhs;
    fail(ErrorKind::TransversalityViolated, msg.str());
}

// (scale·I - P·diag(weights)) x = P·rhs_weights
Vector solve_weighted(const Matrix& p, double scale, std::span<const double> weights,
                      std::span<const double> rhs) {
    const std::size_t m = p.rows();
    Matrix a(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) a(i, j) = -p(i, j) * weights[j];
        a(i, i) += scale;
    }
    return solve_linear_system(a, multiply(p, rhs));
}

}  // namespace

TransversalityReport check_conditions(const MarkovGrowthModel& m) {
    const auto& p = m.transition().matrix();
    const auto& g = m.states().factors();
    TransversalityReport rep;
    rep.g_bar = -std::numeric_limits<double>::infinity();
    rep.g_bar2 = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double first = 0.0;
        double second = 0.0;
        for (std::size_t j = 0; j < p.cols(); ++j) {
            first += p(i, j) * g[j];
            second += p(i, j) * g[j] * g[j];
        }
        rep.g_bar = std::max(rep.g_bar, first);
        rep.g_bar2 = std::max(rep.g_bar2, second);
    }
    const double r = m.discount().gross();
    rep.a1_holds = rep.g_bar < r;
    rep.a2_holds = rep.g_bar2 < r * r;
    return rep;
}

PriceDividendSolution solve_psi1(const MarkovGrowthModel& m) {
    const auto rep = check_conditions(m);
    const double r = m.discount().gross();
    if (!rep.a1_holds) violated("A1", rep.g_bar, r);
    const auto& g = m.states().factors();
    return PriceDividendSolution(solve_weighted(m.transition().matrix(), r, g, g));
}

PriceDividendSolution solve_psi2(const MarkovGrowthModel& m, const PriceDividendSolution& psi1) {
    const auto rep = check_conditions(m);
    const double r = m.discount().gross();
    if (!rep.a1_holds) violated("A1", rep.g_bar, r);
    if (!rep.a2_holds) violated("A2", rep.g_bar2, r * r);
    if (psi1.size() != m.size()) fail(ErrorKind::DimensionMismatch, "psi1 length vs state count");

    const auto& g = m.states().factors();
    Vector g2(g.size());
    Vector rhs(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        g2[j] = g[j] * g[j];
        rhs[j] = g2[j] + 2.0 * psi1.psi1()[j] * g2[j];
    }
    return PriceDividendSolution(psi1.psi1(),
                                 solve_weighted(m.transition().matrix(), r * r, g2, rhs));
}

PriceDividendSolution solve(const MarkovGrowthModel& m) { return solve_psi2(m, solve_psi1(m)); }

PriceRisk price_and_risk(const MarkovGrowthModel& m, const PriceDividendSolution& s,
                         std::size_t state, double d) {
    if (state >= m.size() || state >= s.size()) {
        fail(ErrorKind::StateOutOfRange,
             "state " + std::to_string(state) + " of " + std::to_string(m.size()));
    }
    if (!(d > 0.0)) fail(ErrorKind::InvalidArgument, "dividend must be positive");
    if (!s.psi2()) fail(ErrorKind::InvalidArgument, "second-order ratios not computed");
    const double psi1 = s.psi1()[state];
    const double psi2 = (*s.psi2())[state];
    PriceRisk out;
    out.price = d * psi1;
    out.second_moment = d * d * psi2;
    out.variance = d * d * (psi2 - psi1 * psi1);
    return out;
}

double psi1_residual(const MarkovGrowthModel& m, std::span<const double> psi1) {
    const auto& p = m.transition().matrix();
    const auto& g = m.states().factors();
    const double r = m.discount().gross();
    double worst = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double rhs = 0.0;
        for (std::size_t j = 0; j < p.cols(); ++j) rhs += p(i, j) * (psi1[j] * g[j] + g[j]) / r;
        worst = std::max(worst, std::abs(psi1[i] - rhs));
    }
    return worst;
}

}  // namespace ddm::markov
