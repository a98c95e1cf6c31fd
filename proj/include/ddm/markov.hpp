#pragma once

// Markov-chain dividend growth: price-dividend ratios per growth state, their
// second-order counterparts, and the transversality conditions that make the
// underlying discounted series converge.

#include <cstddef>

#include "ddm/core.hpp"

namespace ddm::markov {

struct TransversalityReport {
    double g_bar = 0.0;   ///< max_i Σ_j p_ij g_j
    double g_bar2 = 0.0;  ///< max_i Σ_j p_ij g_j²
    bool a1_holds = false;  ///< g_bar < r
    bool a2_holds = false;  ///< g_bar2 < r²
};

TransversalityReport check_conditions(const MarkovGrowthModel& m);

/// Solves (rI - P·diag(g)) ψ1 = P g.
/// Throws TransversalityViolated when g_bar >= r.
PriceDividendSolution solve_psi1(const MarkovGrowthModel& m);

/// Solves (r²I - P·diag(g²)) ψ2 = P (g² + 2 ψ1∘g²) and returns ψ1 and ψ2.
/// Throws TransversalityViolated when either condition fails.
PriceDividendSolution solve_psi2(const MarkovGrowthModel& m, const PriceDividendSolution& psi1);

/// Convenience: ψ1 then ψ2.
PriceDividendSolution solve(const MarkovGrowthModel& m);

struct PriceRisk {
    double price = 0.0;
    double second_moment = 0.0;
    double variance = 0.0;
};

/// Price, second moment and variance at `state` for current dividend `d`.
PriceRisk price_and_risk(const MarkovGrowthModel& m, const PriceDividendSolution& s,
                         std::size_t state, double d);

/// Max-norm residual of ψ1 in the fixed-point system
/// ψ_i = Σ_j p_ij (ψ_j g_j + g_j) / r.
double psi1_residual(const MarkovGrowthModel& m, std::span<const double> psi1);

}  // namespace ddm::markov
