#pragma once

// Parameter estimation from observed data: dividend growth, growth-state
// discretisation, transition matrices, MTD mixture weights, CAPM cost of equity.

#include <cstddef>
#include <vector>

#include "ddm/core.hpp"

namespace ddm::estimation {

/// Net growth rates g(t) = (D(t+1) - D(t)) / D(t) between consecutive observations.
Vector growth_series(const DividendSeries& d);
Vector growth_series(std::span<const double> dividends);

struct Discretization {
    GrowthStateSpace states;
    /// 0-based state index for each growth observation.
    std::vector<std::size_t> indices;
};

/// Quantile binning of net growth rates into m bins. Each state is the gross
/// factor 1 + (mean growth in the bin). Values equal up to 1e-12 relative are
/// treated as one value, and ties at a bin boundary go to the lower bin.
Discretization discretize_states(std::span<const double> growth, std::size_t m);

/// Number of distinct growth values under the same tie rule as discretize_states.
std::size_t distinct_values(std::span<const double> growth);

/// Maximum-likelihood transition matrix with optional additive smoothing.
/// Rows with no observed departures are uniform.
TransitionMatrix estimate_transition_matrix(std::span<const std::size_t> indices, std::size_t m,
                                            double smoothing = 0.0);

/// Cross transition counts: from[k] -> to[k+1], the empirical P^{(β,α)} when
/// `from` is stock β's state path and `to` is stock α's.
TransitionMatrix estimate_cross_transition(std::span<const std::size_t> from,
                                           std::span<const std::size_t> to, std::size_t m,
                                           double smoothing = 0.0);

struct LambdaFit {
    Matrix lambda;
    /// Mean squared one-step prediction error per destination stock, recorded
    /// after every sweep (non-increasing).
    std::vector<std::vector<double>> objective_trace;
    std::size_t iterations = 0;
};

inline constexpr std::size_t kLambdaMaxIterations = 100000;
inline constexpr double kLambdaTolerance = 1e-10;

/// Chooses each λ column on the simplex to minimise the squared error between
/// the observed next state of stock α (as a unit vector) and the MTD
/// prediction Σ_β λ_{β,α} e^{(β)}(k) P^{(β,α)}. Pairwise coordinate descent;
/// stops when a full sweep improves the objective by less than 1e-10.
/// `cross[beta][alpha]` follows the MtdModel convention.
LambdaFit estimate_lambda(const std::vector<std::vector<std::size_t>>& paths,
                          const std::vector<std::vector<TransitionMatrix>>& cross);

struct CapmInputs {
    Vector stock_returns;
    Vector market_returns;
    /// Either one constant or one value per period.
    Vector risk_free;
};

struct CapmEstimate {
    double beta = 0.0;
    double alpha = 0.0;
    double k_e = 0.0;
};

inline constexpr std::size_t kCapmMinObservations = 8;

/// OLS of stock excess returns on market excess returns;
/// k_e = mean(R_f) + beta (mean(R_m) - mean(R_f)).
CapmEstimate capm_cost_of_equity(const CapmInputs& c);

}  // namespace ddm::estimation
