#include "ddm/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace ddm {

namespace {

constexpr double kPivotFloor = 1e-14;

void require_same(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        std::ostringstream msg;
        msg << what << " (" << a << " vs " << b << ")";
        fail(ErrorKind::DimensionMismatch, msg.str());
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        require_same(r.size(), cols_, "ragged matrix literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    Matrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require_same(rows[i].size(), cols, "ragged matrix rows");
        std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
}

Vector multiply(const Matrix& a, std::span<const double> v) {
    require_same(a.cols(), v.size(), "matrix-vector product");
    Vector out(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        const auto row = a.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * v[j];
        out[i] = acc;
    }
    return out;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
    require_same(a.cols(), b.rows(), "matrix-matrix product");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    return out;
}

Vector left_multiply(std::span<const double> v, const Matrix& a) {
    require_same(v.size(), a.rows(), "vector-matrix product");
    Vector out(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        if (v[i] == 0.0) continue;
        const auto row = a.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) out[j] += v[i] * row[j];
    }
    return out;
}

Vector solve_linear_system(const Matrix& a, std::span<const double> b) {
    if (!a.square()) fail(ErrorKind::DimensionMismatch, "coefficient matrix is not square");
    require_same(a.rows(), b.size(), "right-hand side length");
    const std::size_t n = a.rows();
    if (n > kMaxSystemSize) {
        fail(ErrorKind::SystemTooLarge,
             std::to_string(n) + " unknowns exceeds cap of " + std::to_string(kMaxSystemSize));
    }

    Matrix lu = a;
    Vector x(b.begin(), b.end());
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(lu(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(lu(r, col));
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best < kPivotFloor) {
            std::ostringstream msg;
            msg << "pivot " << best << " in column " << col;
            fail(ErrorKind::SingularMatrix, msg.str());
        }
        if (pivot != col) {
            std::swap_ranges(lu.row(col).begin(), lu.row(col).end(), lu.row(pivot).begin());
            std::swap(x[col], x[pivot]);
        }
        const double diag = lu(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = lu(r, col) / diag;
            if (factor == 0.0) continue;
            lu(r, col) = 0.0;
            auto target = lu.row(r);
            const auto source = lu.row(col);
            for (std::size_t c = col + 1; c < n; ++c) target[c] -= factor * source[c];
            x[r] -= factor * x[col];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double acc = x[i];
        const auto row = lu.row(i);
        for (std::size_t c = i + 1; c < n; ++c) acc -= row[c] * x[c];
        x[i] = acc / row[i];
    }
    return x;
}

Vector matrix_power_apply(const Matrix& a, std::span<const double> v, std::size_t n) {
    if (!a.square()) fail(ErrorKind::DimensionMismatch, "matrix power needs a square matrix");
    require_same(a.cols(), v.size(), "matrix power operand");
    Vector out(v.begin(), v.end());
    for (std::size_t k = 0; k < n; ++k) out = multiply(a, out);
    return out;
}

StochasticDiagnostics validate_stochastic(const Matrix& p) {
    if (!p.square() || p.rows() == 0) {
        fail(ErrorKind::NotStochastic, "transition matrix must be square and non-empty");
    }
    StochasticDiagnostics diag;
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double sum = 0.0;
        bool entries_ok = true;
        for (double x : p.row(i)) {
            if (!(x >= 0.0 && x <= 1.0)) entries_ok = false;
            sum += x;
        }
        const double dev = std::abs(sum - 1.0);
        diag.max_row_deviation = std::max(diag.max_row_deviation, dev);
        if (!entries_ok || !(dev <= kRowSumTolerance)) bad.push_back(i);
    }
    if (!bad.empty()) {
        std::ostringstream msg;
        msg << "rows";
        for (auto r : bad) msg << ' ' << r;
        msg << " are not probability distributions";
        fail(ErrorKind::NotStochastic, msg.str());
    }
    return diag;
}

// ---------------------------------------------------------------------------

DividendSeries::DividendSeries(std::string ticker, std::vector<DividendObservation> observations)
    : ticker_(std::move(ticker)), obs_(std::move(observations)) {
    if (obs_.empty()) fail(ErrorKind::InsufficientHistory, "dividend series is empty");
    for (std::size_t i = 0; i < obs_.size(); ++i) {
        if (!(obs_[i].dividend > 0.0)) {
            fail(ErrorKind::NonPositiveDividend, "observation " + std::to_string(i));
        }
        if (i > 0 && !(obs_[i - 1].date < obs_[i].date)) {
            fail(ErrorKind::InvalidArgument, "dates not strictly increasing at observation " +
                                                 std::to_string(i));
        }
    }
}

Vector DividendSeries::dividends() const {
    Vector out;
    out.reserve(obs_.size());
    for (const auto& o : obs_) out.push_back(o.dividend);
    return out;
}

DiscountRate::DiscountRate(double k_e) : k_e_(k_e) {
    if (!(k_e > 0.0) || !std::isfinite(k_e)) {
        fail(ErrorKind::InvalidArgument, "required return k_e must be positive");
    }
}

GrowthStateSpace::GrowthStateSpace(Vector factors) : factors_(std::move(factors)) {
    if (factors_.empty()) fail(ErrorKind::InvalidArgument, "state space needs at least one factor");
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        if (!(factors_[i] > 0.0) || !std::isfinite(factors_[i])) {
            fail(ErrorKind::InvalidArgument, "growth factors must be positive");
        }
        if (i > 0 && !(factors_[i - 1] < factors_[i])) {
            fail(ErrorKind::InvalidArgument, "growth factors must be strictly increasing");
        }
    }
}

std::size_t GrowthStateSpace::nearest(double factor) const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < factors_.size(); ++i) {
        if (std::abs(factors_[i] - factor) < std::abs(factors_[best] - factor)) best = i;
    }
    return best;
}

TransitionMatrix::TransitionMatrix(Matrix p) : p_(std::move(p)) {
    if (!p_.square() || p_.rows() == 0) {
        fail(ErrorKind::NotStochastic, "transition matrix must be square and non-empty");
    }
    for (std::size_t i = 0; i < p_.rows(); ++i) {
        double sum = 0.0;
        for (double x : p_.row(i)) sum += x;
        const double dev = std::abs(sum - 1.0);
        if (dev > kRowSumTolerance && dev < kRenormalizeTolerance) {
            for (double& x : p_.row(i)) x /= sum;
        }
    }
    validate_stochastic(p_);
}

MarkovGrowthModel::MarkovGrowthModel(GrowthStateSpace states, TransitionMatrix transition,
                                     DiscountRate discount)
    : states_(std::move(states)), transition_(std::move(transition)), discount_(discount) {
    require_same(states_.size(), transition_.size(), "state space vs transition matrix");
}

void check_jensen(std::span<const double> psi1, std::span<const double> psi2) {
    require_same(psi1.size(), psi2.size(), "psi1 vs psi2");
    for (std::size_t i = 0; i < psi1.size(); ++i) {
        const double sq = psi1[i] * psi1[i];
        if (psi2[i] < sq - 1e-9 * std::max(1.0, sq)) {
            std::ostringstream msg;
            msg << "psi2[" << i << "]=" << psi2[i] << " < psi1^2=" << sq;
            fail(ErrorKind::InvariantViolated, msg.str());
        }
    }
}

PriceDividendSolution::PriceDividendSolution(Vector psi1, std::optional<Vector> psi2)
    : psi1_(std::move(psi1)), psi2_(std::move(psi2)) {
    for (double x : psi1_) {
        if (!(x >= 0.0)) fail(ErrorKind::InvariantViolated, "negative first-order ratio");
    }
    if (psi2_) {
        for (double x : *psi2_) {
            if (!(x >= 0.0)) fail(ErrorKind::InvariantViolated, "negative second-order ratio");
        }
        check_jensen(psi1_, *psi2_);
    }
}

}  // namespace ddm
