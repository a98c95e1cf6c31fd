#pragma once

// Valuations where dividend changes are i.i.d. draws from a small set of
// outcomes: the binomial additive/geometric models with bankruptcy, their
// n-outcome generalisation, and the trinomial up/down/flat variants.

#include <vector>

namespace ddm::binomial {

struct BinomialAdditiveParams {
    double d0 = 0.0;
    double delta = 0.0;  ///< additive dividend step on an up-move
    double q = 0.0;      ///< probability of an up-move
    double q_b = 0.0;    ///< probability of bankruptcy
    double k_e = 0.0;
};

struct BinomialGeometricParams {
    double d0 = 0.0;
    double g = 0.0;  ///< growth rate on an up-move
    double q = 0.0;
    double q_b = 0.0;
    double k_e = 0.0;
};

struct Outcome {
    double value = 0.0;  ///< additive step or growth rate
    double probability = 0.0;
};

/// Outcome list plus the implied probability q0 that the dividend stays put.
class GeneralizedOutcomes {
public:
    explicit GeneralizedOutcomes(std::vector<Outcome> outcomes);

    const std::vector<Outcome>& outcomes() const noexcept { return outcomes_; }
    double residual_probability() const noexcept { return q0_; }
    /// Σ q_i · value_i
    double drift() const noexcept;

private:
    std::vector<Outcome> outcomes_;
    double q0_ = 1.0;
};

struct TrinomialParams {
    double d0 = 0.0;
    double step = 0.0;  ///< Δ for the additive model, g for the geometric one
    double q_u = 0.0;
    double q_d = 0.0;
    double k_e = 0.0;

    double q_c() const noexcept { return 1.0 - q_u - q_d; }
};

struct BoundedValue {
    double value = 0.0;
    double lower_bound = 0.0;
};

BoundedValue hurley_additive(const BinomialAdditiveParams& p);
BoundedValue hurley_geometric(const BinomialGeometricParams& p);

double hurley_general_additive(double d0, double k_e, const GeneralizedOutcomes& outcomes);
double hurley_general_geometric(double d0, double k_e, const GeneralizedOutcomes& outcomes);

double yao_additive(const TrinomialParams& p);
double yao_geometric(const TrinomialParams& p);

}  // namespace ddm::binomial
