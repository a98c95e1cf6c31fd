#pragma once

#include <chrono>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddm/error.hpp"

namespace ddm {

using Vector = std::vector<double>;

/// Dense row-major matrix. Sized for the small systems that appear in
/// price-dividend ratio computations (at most a few thousand unknowns).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix from_rows(const std::vector<Vector>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Vector multiply(const Matrix& a, std::span<const double> v);
Matrix multiply(const Matrix& a, const Matrix& b);
/// Row vector times matrix: returns v·a.
Vector left_multiply(std::span<const double> v, const Matrix& a);

/// Largest number of unknowns any dense solve in this library will attempt.
inline constexpr std::size_t kMaxSystemSize = 4096;

/// Solves a·x = b by Gaussian elimination with partial pivoting.
/// Throws SingularMatrix when a pivot falls below 1e-14 in magnitude.
Vector solve_linear_system(const Matrix& a, std::span<const double> b);

/// Returns aⁿ·v by n repeated applications.
Vector matrix_power_apply(const Matrix& a, std::span<const double> v, std::size_t n);

struct StochasticDiagnostics {
    double max_row_deviation = 0.0;
};

inline constexpr double kRowSumTolerance = 1e-12;
inline constexpr double kRenormalizeTolerance = 1e-9;

/// Checks entries lie in [0,1] and every row sums to 1 within 1e-12.
/// Throws NotStochastic naming the offending rows.
StochasticDiagnostics validate_stochastic(const Matrix& p);

// ---------------------------------------------------------------------------
// Domain types

struct DividendObservation {
    std::chrono::year_month_day date;
    double dividend = 0.0;
};

/// Dated per-share cash dividends of one stock, strictly increasing in date.
class DividendSeries {
public:
    DividendSeries(std::string ticker, std::vector<DividendObservation> observations);

    const std::string& ticker() const noexcept { return ticker_; }
    const std::vector<DividendObservation>& observations() const noexcept { return obs_; }
    std::size_t size() const noexcept { return obs_.size(); }
    Vector dividends() const;
    double last_dividend() const noexcept { return obs_.back().dividend; }

private:
    std::string ticker_;
    std::vector<DividendObservation> obs_;
};

/// Annual required rate of return k_e together with the gross factor r = 1 + k_e.
class DiscountRate {
public:
    explicit DiscountRate(double k_e);

    double rate() const noexcept { return k_e_; }
    double gross() const noexcept { return 1.0 + k_e_; }

private:
    double k_e_;
};

/// Ordered gross growth factors g_1 < ... < g_m of a Markov growth chain.
class GrowthStateSpace {
public:
    explicit GrowthStateSpace(Vector factors);

    std::size_t size() const noexcept { return factors_.size(); }
    const Vector& factors() const noexcept { return factors_; }
    double operator[](std::size_t i) const noexcept { return factors_[i]; }

    /// Index of the state whose factor is closest to `factor` (lower index on ties).
    std::size_t nearest(double factor) const;

private:
    Vector factors_;
};

/// Row-stochastic transition matrix. Row sums off by less than 1e-9 are
/// renormalized; anything larger is rejected.
class TransitionMatrix {
public:
    explicit TransitionMatrix(Matrix p);

    std::size_t size() const noexcept { return p_.rows(); }
    const Matrix& matrix() const noexcept { return p_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return p_(i, j); }

private:
    Matrix p_;
};

class MarkovGrowthModel {
public:
    MarkovGrowthModel(GrowthStateSpace states, TransitionMatrix transition, DiscountRate discount);

    const GrowthStateSpace& states() const noexcept { return states_; }
    const TransitionMatrix& transition() const noexcept { return transition_; }
    const DiscountRate& discount() const noexcept { return discount_; }
    std::size_t size() const noexcept { return states_.size(); }

private:
    GrowthStateSpace states_;
    TransitionMatrix transition_;
    DiscountRate discount_;
};

/// First- and (optionally) second-order price-dividend ratios per growth state.
/// Construction asserts psi1 >= 0, psi2 >= 0 and psi2 >= psi1^2.
class PriceDividendSolution {
public:
    explicit PriceDividendSolution(Vector psi1, std::optional<Vector> psi2 = std::nullopt);

    const Vector& psi1() const noexcept { return psi1_; }
    const std::optional<Vector>& psi2() const noexcept { return psi2_; }
    std::size_t size() const noexcept { return psi1_.size(); }

private:
    Vector psi1_;
    std::optional<Vector> psi2_;
};

/// Throws InvariantViolated unless psi2[i] >= psi1[i]^2 up to rounding.
void check_jensen(std::span<const double> psi1, std::span<const double> psi2);

}  // namespace ddm
