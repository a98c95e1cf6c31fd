#include "ddm/mtd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ddm::mtd {

namespace {

std::size_t saturating_power(std::size_t base, std::size_t exp) {
    std::size_t out = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        if (base != 0 && out > std::numeric_limits<std::size_t>::max() / base) {
            return std::numeric_limits<std::size_t>::max();
        }
        out *= base;
    }
    return out;
}

void require_solvable_size(const MtdModel& m) {
    if (m.joint_size() > kMaxSystemSize) {
        std::ostringstream msg;
        msg << m.states_per_stock() << "^" << m.stocks() << " joint states exceeds the cap of "
            << kMaxSystemSize << "; use Monte Carlo estimation instead";
        fail(ErrorKind::SystemTooLarge, msg.str());
    }
}

void require_stock(const MtdModel& m, std::size_t alpha) {
    if (alpha >= m.stocks()) {
        fail(ErrorKind::InvalidArgument, "stock index " + std::to_string(alpha) + " out of range");
    }
}

[[noreturn]] void violated(std::size_t alpha, const char* which, double lhs, double rhs) {
    std::ostringstream msg;
    msg << "stock " << alpha << ' ' << which << ": " << lhs << " >= " << rhs;
    fail(ErrorKind::TransversalityViolated, msg.str());
}

// Solves (scale·I - Q·diag(w)) x = Q·rhs over the joint chain.
Vector solve_joint(const Matrix& q, double scale, std::span<const double> w,
                   std::span<const double> rhs) {
    const std::size_t n = q.rows();
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto qi = q.row(i);
        auto ai = a.row(i);
        for (std::size_t j = 0; j < n; ++j) ai[j] = -qi[j] * w[j];
        ai[i] += scale;
    }
    return solve_linear_system(a, multiply(q, rhs));
}

// Growth factor of stock alpha in every joint state.
Vector joint_factors(const MtdModel& m, std::size_t alpha) {
    Vector out(m.joint_size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = m.states(alpha)[m.decode(j)[alpha]];
    return out;
}

}  // namespace

MtdModel::MtdModel(std::vector<GrowthStateSpace> states, Matrix lambda,
                   std::vector<std::vector<TransitionMatrix>> cross,
                   std::vector<DiscountRate> discounts)
    : states_(std::move(states)),
      lambda_(std::move(lambda)),
      cross_(std::move(cross)),
      discounts_(std::move(discounts)) {
    const std::size_t gamma = states_.size();
    if (gamma == 0) fail(ErrorKind::InvalidArgument, "MTD model needs at least one stock");
    const std::size_t m = states_.front().size();
    for (const auto& s : states_) {
        if (s.size() != m) {
            fail(ErrorKind::DimensionMismatch, "every stock needs the same number of growth states");
        }
    }
    if (lambda_.rows() != gamma || lambda_.cols() != gamma) {
        fail(ErrorKind::DimensionMismatch, "lambda must be gamma x gamma");
    }
    if (discounts_.size() != gamma) fail(ErrorKind::DimensionMismatch, "one discount rate per stock");
    if (cross_.size() != gamma) fail(ErrorKind::DimensionMismatch, "cross kernels must be gamma x gamma");
    for (const auto& row : cross_) {
        if (row.size() != gamma) fail(ErrorKind::DimensionMismatch, "cross kernels must be gamma x gamma");
        for (const auto& p : row) {
            if (p.size() != m) fail(ErrorKind::DimensionMismatch, "cross kernel size must equal m");
        }
    }
    for (std::size_t alpha = 0; alpha < gamma; ++alpha) {
        double sum = 0.0;
        for (std::size_t beta = 0; beta < gamma; ++beta) {
            const double w = lambda_(beta, alpha);
            if (!(w >= 0.0 && w <= 1.0)) fail(ErrorKind::InvalidArgument, "lambda entries must lie in [0,1]");
            sum += w;
        }
        const double dev = std::abs(sum - 1.0);
        if (dev > kRowSumTolerance && dev < kRenormalizeTolerance) {
            for (std::size_t beta = 0; beta < gamma; ++beta) lambda_(beta, alpha) /= sum;
        } else if (dev > kRowSumTolerance) {
            fail(ErrorKind::InvalidArgument,
                 "lambda column " + std::to_string(alpha) + " does not sum to 1");
        }
    }
    joint_size_ = saturating_power(m, gamma);
}

std::size_t MtdModel::encode(const JointState& s) const {
    if (s.stocks() != stocks()) fail(ErrorKind::DimensionMismatch, "joint state length");
    const std::size_t m = states_per_stock();
    std::size_t index = 0;
    for (std::size_t a : s.indices()) {
        if (a >= m) fail(ErrorKind::StateOutOfRange, "state index " + std::to_string(a));
        index = index * m + a;
    }
    return index;
}

JointState MtdModel::decode(std::size_t index) const {
    if (index >= joint_size_) fail(ErrorKind::StateOutOfRange, "joint index " + std::to_string(index));
    const std::size_t m = states_per_stock();
    std::vector<std::size_t> idx(stocks());
    for (std::size_t k = stocks(); k-- > 0;) {
        idx[k] = index % m;
        index /= m;
    }
    return JointState(std::move(idx));
}

Vector MtdModel::next_distribution(std::size_t alpha, const JointState& s) const {
    require_stock(*this, alpha);
    if (s.stocks() != stocks()) fail(ErrorKind::DimensionMismatch, "joint state length");
    Vector out(states_per_stock(), 0.0);
    for (std::size_t beta = 0; beta < stocks(); ++beta) {
        const double w = lambda_(beta, alpha);
        if (w == 0.0) continue;
        const auto row = cross_[beta][alpha].matrix().row(s[beta]);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += w * row[j];
    }
    return out;
}

Matrix MtdModel::joint_transition() const {
    require_solvable_size(*this);
    const std::size_t n = joint_size_;
    const std::size_t gamma = stocks();
    Matrix q(n, n);
    std::vector<JointState> all;
    all.reserve(n);
    for (std::size_t a = 0; a < n; ++a) all.push_back(decode(a));
    std::vector<Vector> marginals(gamma);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t f = 0; f < gamma; ++f) marginals[f] = next_distribution(f, all[a]);
        for (std::size_t j = 0; j < n; ++j) {
            const JointState& to = all[j];
            double prob = 1.0;
            for (std::size_t f = 0; f < gamma && prob != 0.0; ++f) prob *= marginals[f][to[f]];
            q(a, j) = prob;
        }
    }
    return q;
}

std::vector<StockDistribution> mtd_step(const MtdModel& m,
                                        const std::vector<StockDistribution>& dist) {
    if (dist.size() != m.stocks()) fail(ErrorKind::DimensionMismatch, "one distribution per stock");
    for (const auto& d : dist) {
        if (d.size() != m.states_per_stock()) fail(ErrorKind::DimensionMismatch, "distribution length");
    }
    std::vector<StockDistribution> out(m.stocks(), Vector(m.states_per_stock(), 0.0));
    for (std::size_t alpha = 0; alpha < m.stocks(); ++alpha) {
        for (std::size_t beta = 0; beta < m.stocks(); ++beta) {
            const double w = m.lambda(beta, alpha);
            if (w == 0.0) continue;
            const Vector moved = left_multiply(dist[beta], m.cross(beta, alpha).matrix());
            for (std::size_t j = 0; j < moved.size(); ++j) out[alpha][j] += w * moved[j];
        }
    }
    return out;
}

std::vector<markov::TransversalityReport> check_multi_conditions(const MtdModel& m) {
    // The bracketed sum splits into one term per conditioning stock β that
    // depends only on that stock's own state, so the maximum over joint
    // configurations is the sum of per-β row maxima.
    std::vector<markov::TransversalityReport> out(m.stocks());
    for (std::size_t alpha = 0; alpha < m.stocks(); ++alpha) {
        const auto& g = m.states(alpha).factors();
        double first = 0.0;
        double second = 0.0;
        for (std::size_t beta = 0; beta < m.stocks(); ++beta) {
            const auto& p = m.cross(beta, alpha).matrix();
            double best1 = -std::numeric_limits<double>::infinity();
            double best2 = -std::numeric_limits<double>::infinity();
            for (std::size_t h = 0; h < p.rows(); ++h) {
                double s1 = 0.0;
                double s2 = 0.0;
                for (std::size_t j = 0; j < p.cols(); ++j) {
                    s1 += p(h, j) * g[j];
                    s2 += p(h, j) * g[j] * g[j];
                }
                best1 = std::max(best1, s1);
                best2 = std::max(best2, s2);
            }
            first += m.lambda(beta, alpha) * best1;
            second += m.lambda(beta, alpha) * best2;
        }
        const double r = m.discount(alpha).gross();
        out[alpha] = {first, second, first < r, second < r * r};
    }
    return out;
}

const Vector& JointSolution::cross(std::size_t alpha, std::size_t beta) const {
    const auto it = psi2_cross.find({std::min(alpha, beta), std::max(alpha, beta)});
    if (it == psi2_cross.end()) {
        fail(ErrorKind::InvalidArgument, "product ratio (" + std::to_string(alpha) + "," +
                                             std::to_string(beta) + ") not computed");
    }
    return it->second;
}

JointSolution solve_joint_psi1(const MtdModel& m) {
    require_solvable_size(m);
    const auto reports = check_multi_conditions(m);
    for (std::size_t alpha = 0; alpha < m.stocks(); ++alpha) {
        if (!reports[alpha].a1_holds) {
            violated(alpha, "first-order condition", reports[alpha].g_bar, m.discount(alpha).gross());
        }
    }
    const Matrix q = m.joint_transition();
    JointSolution s;
    s.psi2.assign(m.stocks(), std::nullopt);
    for (std::size_t alpha = 0; alpha < m.stocks(); ++alpha) {
        const Vector g = joint_factors(m, alpha);
        Vector psi = solve_joint(q, m.discount(alpha).gross(), g, g);
        for (double x : psi) {
            if (!(x >= 0.0)) fail(ErrorKind::InvariantViolated, "negative joint price-dividend ratio");
        }
        s.psi1.push_back(std::move(psi));
    }
    return s;
}

JointSolution solve_joint_psi2(const MtdModel& m, JointSolution s) {
    require_solvable_size(m);
    if (s.psi1.size() != m.stocks()) fail(ErrorKind::DimensionMismatch, "psi1 per stock");
    const auto reports = check_multi_conditions(m);
    for (std::size_t alpha = 0; alpha < m.stocks(); ++alpha) {
        const double r = m.discount(alpha).gross();
        if (!reports[alpha].a1_holds) violated(alpha, "first-order condition", reports[alpha].g_bar, r);
        if (!reports[alpha].a2_holds) {
            violated(alpha, "second-order condition", reports[alpha].g_bar2, r * r);
        }
    }
    const Matrix q = m.joint_transition();
    s.psi2.assign(m.stocks(), std::nullopt);
    for (std::size_t alpha = 0; alpha < m.stocks(); ++alpha) {
        const Vector g = joint_factors(m, alpha);
        Vector g2(g.size());
        Vector rhs(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) {
            g2[j] = g[j] * g[j];
            rhs[j] = g2[j] * (1.0 + 2.0 * s.psi1[alpha][j]);
        }
        const double r = m.discount(alpha).gross();
        Vector psi2 = solve_joint(q, r * r, g2, rhs);
        check_jensen(s.psi1[alpha], psi2);
        s.psi2[alpha] = std::move(psi2);
    }
    return s;
}

Vector solve_price_product(const MtdModel& m, const JointSolution& s, std::size_t alpha,
                           std::size_t beta) {
    require_stock(m, alpha);
    require_stock(m, beta);
    require_solvable_size(m);
    if (s.psi1.size() != m.stocks()) fail(ErrorKind::DimensionMismatch, "psi1 per stock");
    const auto reports = check_multi_conditions(m);
    // Cauchy-Schwarz: both second-order conditions bound the cross series.
    for (std::size_t k : {alpha, beta}) {
        const double r = m.discount(k).gross();
        if (!reports[k].a1_holds) violated(k, "first-order condition", reports[k].g_bar, r);
        if (!reports[k].a2_holds) violated(k, "second-order condition", reports[k].g_bar2, r * r);
    }
    const Matrix q = m.joint_transition();
    const Vector ga = joint_factors(m, alpha);
    const Vector gb = joint_factors(m, beta);
    Vector w(ga.size());
    Vector rhs(ga.size());
    for (std::size_t j = 0; j < w.size(); ++j) {
        w[j] = ga[j] * gb[j];
        rhs[j] = w[j] * (1.0 + s.psi1[alpha][j] + s.psi1[beta][j]);
    }
    return solve_joint(q, m.discount(alpha).gross() * m.discount(beta).gross(), w, rhs);
}

JointSolution solve_all(const MtdModel& m) {
    JointSolution s = solve_joint_psi2(m, solve_joint_psi1(m));
    for (std::size_t alpha = 0; alpha < m.stocks(); ++alpha) {
        for (std::size_t beta = alpha; beta < m.stocks(); ++beta) {
            s.psi2_cross[{alpha, beta}] = solve_price_product(m, s, alpha, beta);
        }
    }
    return s;
}

double covariance(const MtdModel& m, const JointSolution& s, const JointState& state,
                  double d_alpha, double d_beta, std::size_t alpha, std::size_t beta) {
    require_stock(m, alpha);
    require_stock(m, beta);
    if (state.stocks() != m.stocks()) fail(ErrorKind::StateOutOfRange, "joint state length");
    for (std::size_t a : state.indices()) {
        if (a >= m.states_per_stock()) fail(ErrorKind::StateOutOfRange, "state index " + std::to_string(a));
    }
    if (!(d_alpha > 0.0) || !(d_beta > 0.0)) fail(ErrorKind::InvalidArgument, "dividends must be positive");
    const std::size_t idx = m.encode(state);
    const double product = s.cross(alpha, beta)[idx];
    return d_alpha * d_beta * (product - s.psi1.at(alpha)[idx] * s.psi1.at(beta)[idx]);
}

Matrix covariance_matrix(const MtdModel& m, const JointSolution& s, const JointState& state,
                         std::span<const double> dividends) {
    if (dividends.size() != m.stocks()) fail(ErrorKind::DimensionMismatch, "one dividend per stock");
    Matrix out(m.stocks(), m.stocks());
    for (std::size_t a = 0; a < m.stocks(); ++a) {
        for (std::size_t b = a; b < m.stocks(); ++b) {
            out(a, b) = covariance(m, s, state, dividends[a], dividends[b], a, b);
            out(b, a) = out(a, b);
        }
    }
    return out;
}

}  // namespace ddm::mtd
