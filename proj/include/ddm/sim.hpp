#pragma once

// Independent verification engines: truncated evaluation of the ψ1 series,
// Monte Carlo simulation of discounted dividend sums for every stochastic
// dividend process in the library, and simulation of a joint growth/discount
// process.
//
// Paths draw from a counter-based generator keyed on (seed, path index) and
// are reduced in path order, so results are bit-identical for any thread count.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "ddm/binomial.hpp"
#include "ddm/core.hpp"
#include "ddm/mtd.hpp"

namespace ddm::sim {

struct SimConfig {
    std::size_t paths = 100000;
    /// Number of discounted dividends per path; 0 picks the smallest horizon
    /// whose geometric tail bound is below tail_tolerance.
    std::size_t horizon = 0;
    std::uint64_t seed = 0;
    double tail_tolerance = 1e-8;
    /// Worker threads; 0 uses the hardware concurrency.
    std::size_t threads = 1;
};

inline constexpr std::size_t kMaxHorizon = 1'000'000;

/// SplitMix64 evaluated at (key, counter): stateless apart from the counter,
/// so any path's stream can be regenerated independently.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
    result_type operator()() noexcept;

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

struct SeriesResult {
    Vector values;
    double tail_bound = 0.0;
    std::size_t horizon = 0;
};

/// Σ_{i=1}^{n} r^{-i} (P·diag(g))^i 1 per state, with the geometric bound
/// (ḡ/r)^{n+1} / (1 - ḡ/r) on what the truncation leaves out.
/// Throws TransversalityViolated when ḡ >= r.
SeriesResult truncated_psi1_series(const MarkovGrowthModel& m, std::size_t n);

/// Same partial sums without any convergence check, for exhibiting divergence.
Vector psi1_partial_sums(const MarkovGrowthModel& m, std::size_t n);

/// Smallest n with ratio^{n+1} / (1 - ratio) * scale < tolerance.
std::size_t geometric_horizon(double ratio, double tolerance, double scale = 1.0);

struct SimSummary {
    double mean = 0.0;            ///< of S = Σ_{i=1}^{H} D(i) / r^i
    double variance = 0.0;        ///< sample variance of S
    double std_error = 0.0;       ///< of the mean
    double second_moment = 0.0;   ///< mean of S²
    double second_moment_se = 0.0;
    double tail_bound = 0.0;      ///< bound on the mean's truncation error
    std::size_t horizon = 0;
    std::size_t paths = 0;
    std::size_t floor_hits = 0;   ///< additive paths whose dividend was floored at 0
};

enum class StepKind { Additive, Geometric };

/// Dividend process with i.i.d. per-period moves drawn from `outcomes`, plus
/// an absorbing bankruptcy state reached with probability `bankruptcy`.
/// Probabilities of outcomes and bankruptcy must sum to one.
struct IidDividendProcess {
    StepKind kind = StepKind::Geometric;
    std::vector<binomial::Outcome> outcomes;
    double bankruptcy = 0.0;
    double k_e = 0.0;

    static IidDividendProcess hurley_additive(const binomial::BinomialAdditiveParams& p);
    static IidDividendProcess hurley_geometric(const binomial::BinomialGeometricParams& p);
    static IidDividendProcess general(StepKind kind, const binomial::GeneralizedOutcomes& o,
                                      double k_e);
    static IidDividendProcess yao(StepKind kind, const binomial::TrinomialParams& p);
};

SimSummary simulate_dividend_paths(const IidDividendProcess& process, double d0,
                                   const SimConfig& cfg);

SimSummary simulate_dividend_paths(const MarkovGrowthModel& m, std::size_t start_state, double d0,
                                   const SimConfig& cfg);

struct JointSimSummary {
    std::vector<SimSummary> per_stock;
    Matrix cross_moment;     ///< mean of S_α S_β
    Matrix cross_moment_se;
    Matrix covariance;       ///< sample covariance of S_α, S_β
    Matrix covariance_se;
    std::size_t horizon = 0;
};

JointSimSummary simulate_dividend_paths(const mtd::MtdModel& m, const mtd::JointState& start,
                                        std::span<const double> d0, const SimConfig& cfg);

/// Draws one per-period rate (growth g or discount k) from the path's stream.
using RateSampler = std::function<double(CounterRng&)>;

struct MomentEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Averages d0 Σ_{i=0}^{H-1} Π_{j=0}^{i} y_{j+1} over paths, with
/// y = (1+g)/(1+k) sampled fresh each period. When `factor_bound` (an upper
/// bound on E[y]) is given, the horizon is checked against tail_tolerance.
MomentEstimate dk_simulate(const RateSampler& growth, const RateSampler& discount, double d0,
                           const SimConfig& cfg, std::optional<double> factor_bound = std::nullopt);

}  // namespace ddm::sim
