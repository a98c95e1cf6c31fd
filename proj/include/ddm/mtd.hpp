#pragma once

// Multivariate Markov stock model built on a mixture transition distribution
// (MTD). Each stock's next growth state is drawn from a λ-weighted mixture of
// transition rows, one per stock in the portfolio, conditioned on that
// stock's current state. Given the joint state, stocks move independently,
// so the joint chain over m^γ states has transition probabilities
//
//     Q(a, j) = Π_f Σ_w λ_{w,f} P^{(w,f)}_{a_w, j_f}.
//
// Price-dividend ratios live on that joint chain.

#include <cstddef>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "ddm/core.hpp"
#include "ddm/markov.hpp"

namespace ddm::mtd {

/// Joint growth state (a_1, ..., a_γ), 0-based per-stock state indices.
/// Joint states are enumerated lexicographically with a_1 most significant.
class JointState {
public:
    explicit JointState(std::vector<std::size_t> indices) : indices_(std::move(indices)) {}

    const std::vector<std::size_t>& indices() const noexcept { return indices_; }
    std::size_t operator[](std::size_t stock) const noexcept { return indices_[stock]; }
    std::size_t stocks() const noexcept { return indices_.size(); }

    friend bool operator==(const JointState&, const JointState&) = default;

private:
    std::vector<std::size_t> indices_;
};

class MtdModel {
public:
    /// `cross[beta][alpha]` is P^{(β,α)}: the transition of stock α given the
    /// state of stock β. `lambda(beta, alpha)` weighs it; each column of
    /// lambda must sum to one.
    MtdModel(std::vector<GrowthStateSpace> states, Matrix lambda,
             std::vector<std::vector<TransitionMatrix>> cross, std::vector<DiscountRate> discounts);

    std::size_t stocks() const noexcept { return states_.size(); }
    std::size_t states_per_stock() const noexcept { return states_.front().size(); }
    /// m^γ, saturating at SIZE_MAX.
    std::size_t joint_size() const noexcept { return joint_size_; }

    const GrowthStateSpace& states(std::size_t alpha) const { return states_.at(alpha); }
    double lambda(std::size_t beta, std::size_t alpha) const { return lambda_(beta, alpha); }
    const Matrix& lambda() const noexcept { return lambda_; }
    const TransitionMatrix& cross(std::size_t beta, std::size_t alpha) const {
        return cross_.at(beta).at(alpha);
    }
    const DiscountRate& discount(std::size_t alpha) const { return discounts_.at(alpha); }

    std::size_t encode(const JointState& s) const;
    JointState decode(std::size_t index) const;

    /// Next-state distribution of stock `alpha` given the current joint state.
    Vector next_distribution(std::size_t alpha, const JointState& s) const;

    /// Dense m^γ × m^γ joint transition matrix. Throws SystemTooLarge above the cap.
    Matrix joint_transition() const;

private:
    std::vector<GrowthStateSpace> states_;
    Matrix lambda_;
    std::vector<std::vector<TransitionMatrix>> cross_;
    std::vector<DiscountRate> discounts_;
    std::size_t joint_size_ = 0;
};

/// Per-stock state distribution A^{(α)}(k).
using StockDistribution = Vector;

/// One step of the MTD recursion A^{(α)}(k+1) = Σ_β A^{(β)}(k) λ_{β,α} P^{(β,α)}.
std::vector<StockDistribution> mtd_step(const MtdModel& m,
                                        const std::vector<StockDistribution>& dist);

/// Per-stock first/second-order transversality bounds, maximised over all
/// joint configurations.
std::vector<markov::TransversalityReport> check_multi_conditions(const MtdModel& m);

/// Ratios indexed by joint state (lexicographic order). psi2 and the product
/// ratios are filled in by the later solve steps.
struct JointSolution {
    std::vector<Vector> psi1;
    std::vector<std::optional<Vector>> psi2;
    /// Keyed by (min(α,β), max(α,β)).
    std::map<std::pair<std::size_t, std::size_t>, Vector> psi2_cross;

    const Vector& cross(std::size_t alpha, std::size_t beta) const;
};

JointSolution solve_joint_psi1(const MtdModel& m);
JointSolution solve_joint_psi2(const MtdModel& m, JointSolution s);

/// Product price-dividend ratio ψ2^{(α,β)} over joint states.
Vector solve_price_product(const MtdModel& m, const JointSolution& s, std::size_t alpha,
                           std::size_t beta);

/// ψ1, ψ2 and every product ratio (including α = β).
JointSolution solve_all(const MtdModel& m);

/// d_α d_β (ψ2^{(α,β)} - ψ1^{(α)} ψ1^{(β)}) at `state`.
double covariance(const MtdModel& m, const JointSolution& s, const JointState& state,
                  double d_alpha, double d_beta, std::size_t alpha, std::size_t beta);

/// γ × γ covariance block at `state` for the given current dividends.
Matrix covariance_matrix(const MtdModel& m, const JointSolution& s, const JointState& state,
                         std::span<const double> dividends);

}  // namespace ddm::mtd
