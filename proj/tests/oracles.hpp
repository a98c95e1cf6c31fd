#pragma once

// Reference computations for the test suites. Nothing in this file calls the
// library's solvers or closed forms: values come from term-by-term summation,
// fixed-point iteration or exhaustive enumeration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

#include "ddm/core.hpp"
#include "ddm/mtd.hpp"

namespace oracle {

using ddm::Matrix;
using ddm::Vector;

/// Σ_{i≥0} first·ratio^i, summed term by term until the geometric tail
/// bound falls below `tail` (0 <= ratio < 1).
inline double stream(double first, double ratio, double tail = 1e-10) {
    if (!(ratio < 1.0)) throw std::invalid_argument("stream ratio must be below 1");
    double sum = 0.0;
    double term = first;
    while (true) {
        sum += term;
        term *= ratio;
        if (std::abs(term) / (1.0 - std::max(ratio, 0.0)) < tail) break;
    }
    return sum;
}

inline double gordon(double d0, double g, double k) {
    const double x = (1.0 + g) / (1.0 + k);
    return stream(d0 * x, x);
}

inline double two_stage(double d0, double g_h, double k_h, int n, double g_st, double k_st) {
    double high = 0.0;
    for (int i = 1; i <= n; ++i) high += d0 * std::pow(1.0 + g_h, i) / std::pow(1.0 + k_h, i);
    const double d_n = d0 * std::pow(1.0 + g_h, n);
    const double x = (1.0 + g_st) / (1.0 + k_st);
    return high + stream(d_n * x, x) / std::pow(1.0 + k_h, n);
}

/// Dividend stream whose discounted value is the H-model price as implemented:
/// D(i) = d0 [(1+g_a) + h (g_a-g_n)] (1+g_n)^{i-1}.
inline double h_model(double d0, double g_a, double g_n, double h, double k) {
    const double first = d0 * ((1.0 + g_a) + h * (g_a - g_n));
    return stream(first / (1.0 + k), (1.0 + g_n) / (1.0 + k));
}

/// Growth falls linearly from g_a to g_n over 2h periods, then stays at g_n.
inline double linear_decline(double d0, double g_a, double g_n, double h, double k) {
    const int span = static_cast<int>(std::lround(2.0 * h));
    double d = d0;
    double sum = 0.0;
    for (int i = 1; i <= span; ++i) {
        const double g = g_a + (g_n - g_a) * static_cast<double>(i - 1) / static_cast<double>(span);
        d *= 1.0 + g;
        sum += d / std::pow(1.0 + k, i);
    }
    const double x = (1.0 + g_n) / (1.0 + k);
    return sum + stream(d * x, x) / std::pow(1.0 + k, span);
}

struct ThreeStage {
    double eps0, pi_a, pi_n, g_a, g_n;
    int n1, n2;
    double k_h, k_d, k_st;
};

/// Middle-phase dividends with growth and payout interpolated linearly.
inline std::vector<double> decline_schedule(const ThreeStage& p) {
    std::vector<double> out;
    for (int i = p.n1 + 1; i <= p.n2; ++i) {
        const double w = static_cast<double>(i - p.n1) / static_cast<double>(p.n2 - p.n1);
        double eps = p.eps0 * std::pow(1.0 + p.g_a, p.n1);
        for (int j = p.n1 + 1; j <= i; ++j) {
            const double wj = static_cast<double>(j - p.n1) / static_cast<double>(p.n2 - p.n1);
            eps *= 1.0 + (1.0 - wj) * p.g_a + wj * p.g_n;
        }
        out.push_back(eps * ((1.0 - w) * p.pi_a + w * p.pi_n));
    }
    return out;
}

inline double three_stage(const ThreeStage& p, const std::vector<double>& decline) {
    double sum = 0.0;
    for (int i = 0; i <= p.n1; ++i) {
        sum += p.eps0 * std::pow(1.0 + p.g_a, i) * p.pi_a / std::pow(1.0 + p.k_h, i);
    }
    for (int i = p.n1 + 1; i <= p.n2; ++i) {
        sum += decline[static_cast<std::size_t>(i - p.n1 - 1)] / std::pow(1.0 + p.k_d, i);
    }
    const double last = p.n2 > p.n1 ? decline.back() : p.eps0 * std::pow(1.0 + p.g_a, p.n1) * p.pi_n;
    const double x = (1.0 + p.g_n) / (1.0 + p.k_st);
    const double at_n2 = std::pow(1.0 + p.k_h, p.n1) * std::pow(1.0 + p.k_d, p.n2 - p.n1);
    return sum + stream(last * x, x) / at_n2;
}

// ---------------------------------------------------------------------------
// Markov chains

/// ψ1 as the fixed point of ψ_i = Σ_j p_ij g_j (1 + ψ_j) / r, by iteration from 0.
inline Vector psi1_iterate(const Matrix& p, const Vector& g, double r) {
    const std::size_t m = g.size();
    Vector psi(m, 0.0);
    for (int iter = 0; iter < 1000000; ++iter) {
        Vector next(m, 0.0);
        double change = 0.0;
        double scale = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) next[i] += p(i, j) * g[j] * (1.0 + psi[j]);
            next[i] /= r;
            change = std::max(change, std::abs(next[i] - psi[i]));
            scale = std::max(scale, std::abs(next[i]));
        }
        psi = next;
        if (change < 1e-15 * scale) return psi;
    }
    throw std::runtime_error("psi1 iteration did not converge");
}

/// ψ2 as the fixed point of ψ2_i = Σ_j p_ij g_j² (1 + 2ψ1_j + ψ2_j) / r².
inline Vector psi2_iterate(const Matrix& p, const Vector& g, double r, const Vector& psi1) {
    const std::size_t m = g.size();
    Vector psi(m, 0.0);
    for (int iter = 0; iter < 1000000; ++iter) {
        Vector next(m, 0.0);
        double change = 0.0;
        double scale = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                next[i] += p(i, j) * g[j] * g[j] * (1.0 + 2.0 * psi1[j] + psi[j]);
            }
            next[i] /= r * r;
            change = std::max(change, std::abs(next[i] - psi[i]));
            scale = std::max(scale, std::abs(next[i]));
        }
        psi = next;
        if (change < 1e-15 * scale) return psi;
    }
    throw std::runtime_error("psi2 iteration did not converge");
}

struct FiniteMoments {
    Vector first;   ///< E[S_n] / d per start state
    Vector second;  ///< E[S_n²] / d² per start state
};

/// Exact first and second moments of S_n = Σ_{i=1}^{n} D(i)/r^i by backward
/// recursion over the horizon. Valid whether or not the infinite sums converge.
inline FiniteMoments finite_moments(const Matrix& p, const Vector& g, double r, std::size_t n) {
    const std::size_t m = g.size();
    FiniteMoments cur{Vector(m, 0.0), Vector(m, 0.0)};
    for (std::size_t step = 0; step < n; ++step) {
        FiniteMoments next{Vector(m, 0.0), Vector(m, 0.0)};
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                next.first[i] += p(i, j) * g[j] * (1.0 + cur.first[j]) / r;
                next.second[i] += p(i, j) * g[j] * g[j] * (1.0 + 2.0 * cur.first[j] + cur.second[j]) / (r * r);
            }
        }
        cur = next;
    }
    return cur;
}

// ---------------------------------------------------------------------------
// MTD

inline std::vector<std::size_t> decode(std::size_t index, std::size_t gamma, std::size_t m) {
    std::vector<std::size_t> a(gamma);
    for (std::size_t f = gamma; f-- > 0;) {
        a[f] = index % m;
        index /= m;
    }
    return a;
}

inline std::size_t joint_count(std::size_t gamma, std::size_t m) {
    std::size_t n = 1;
    for (std::size_t f = 0; f < gamma; ++f) n *= m;
    return n;
}

/// Q(a, b) = Π_f Σ_w λ_{w,f} P^{(w,f)}_{a_w, b_f}, enumerated entry by entry.
inline Matrix joint_transition(const ddm::mtd::MtdModel& model) {
    const std::size_t gamma = model.stocks();
    const std::size_t m = model.states_per_stock();
    const std::size_t n = joint_count(gamma, m);
    Matrix q(n, n);
    for (std::size_t a = 0; a < n; ++a) {
        const auto sa = decode(a, gamma, m);
        for (std::size_t b = 0; b < n; ++b) {
            const auto sb = decode(b, gamma, m);
            double prob = 1.0;
            for (std::size_t f = 0; f < gamma; ++f) {
                double mix = 0.0;
                for (std::size_t w = 0; w < gamma; ++w) {
                    mix += model.lambda(w, f) * model.cross(w, f)(sa[w], sb[f]);
                }
                prob *= mix;
            }
            q(a, b) = prob;
        }
    }
    return q;
}

/// max over every joint configuration of Σ_j Σ_β λ_{β,α} P^{(β,α)}_{a_β, j} g_j^power.
inline double multi_bound(const ddm::mtd::MtdModel& model, std::size_t alpha, int power) {
    const std::size_t gamma = model.stocks();
    const std::size_t m = model.states_per_stock();
    double best = -1.0;
    for (std::size_t a = 0; a < joint_count(gamma, m); ++a) {
        const auto sa = decode(a, gamma, m);
        double v = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t beta = 0; beta < gamma; ++beta) {
                v += model.lambda(beta, alpha) * model.cross(beta, alpha)(sa[beta], j) *
                     std::pow(model.states(alpha)[j], power);
            }
        }
        best = std::max(best, v);
    }
    return best;
}

/// ψ2^{(α,β)} (or ψ1^{(α)} when `second` is false) on the joint chain by
/// fixed-point iteration:
///   ψ1(a) = Σ_b Q(a,b) g_α(b) (1 + ψ1(b)) / r_α
///   ψ2(a) = Σ_b Q(a,b) g_α(b) g_β(b) (1 + ψ1^α(b) + ψ1^β(b) + ψ2(b)) / (r_α r_β)
inline Vector joint_iterate(const ddm::mtd::MtdModel& model, const Matrix& q, std::size_t alpha,
                            std::size_t beta, bool second, const Vector& psi_a = {},
                            const Vector& psi_b = {}) {
    const std::size_t gamma = model.stocks();
    const std::size_t m = model.states_per_stock();
    const std::size_t n = q.rows();
    const double ra = model.discount(alpha).gross();
    const double rb = model.discount(beta).gross();
    Vector weight(n);
    for (std::size_t b = 0; b < n; ++b) {
        const auto sb = decode(b, gamma, m);
        weight[b] = second ? model.states(alpha)[sb[alpha]] * model.states(beta)[sb[beta]] / (ra * rb)
                           : model.states(alpha)[sb[alpha]] / ra;
    }
    Vector psi(n, 0.0);
    for (int iter = 0; iter < 1000000; ++iter) {
        Vector next(n, 0.0);
        double change = 0.0;
        double scale = 1.0;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                const double inner = second ? 1.0 + psi_a[b] + psi_b[b] + psi[b] : 1.0 + psi[b];
                next[a] += q(a, b) * weight[b] * inner;
            }
            change = std::max(change, std::abs(next[a] - psi[a]));
            scale = std::max(scale, std::abs(next[a]));
        }
        psi = next;
        if (change < 1e-15 * scale) return psi;
    }
    throw std::runtime_error("joint iteration did not converge");
}

// ---------------------------------------------------------------------------
// Random models

inline Matrix random_stochastic(std::mt19937_64& rng, std::size_t m) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Matrix p(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) total += p(i, j) = u(rng);
        for (std::size_t j = 0; j < m; ++j) p(i, j) /= total;
    }
    return p;
}

inline Vector random_factors(std::mt19937_64& rng, std::size_t m, double lo = 0.9, double hi = 1.15) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vector g;
    while (g.size() < m) {
        const double x = u(rng);
        if (std::none_of(g.begin(), g.end(), [&](double y) { return std::abs(x - y) < 1e-3; })) g.push_back(x);
    }
    std::sort(g.begin(), g.end());
    return g;
}

/// Largest one-step first and second conditional moments of the growth factor.
inline std::pair<double, double> bounds(const Matrix& p, const Vector& g) {
    double g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double a = 0.0, b = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            a += p(i, j) * g[j];
            b += p(i, j) * g[j] * g[j];
        }
        g1 = std::max(g1, a);
        g2 = std::max(g2, b);
    }
    return {g1, g2};
}

/// Random valid chain whose convergence ratio max(ḡ, √ḡ2)/r lies in [lo, hi].
inline ddm::MarkovGrowthModel random_markov(std::mt19937_64& rng, std::size_t m, double lo = 0.75,
                                            double hi = 0.9) {
    while (true) {
        const Vector g = random_factors(rng, m);
        const Matrix p = random_stochastic(rng, m);
        const auto [g1, g2] = bounds(p, g);
        const double ratio = std::uniform_real_distribution<double>(lo, hi)(rng);
        const double r = std::max(g1, std::sqrt(g2)) / ratio;
        if (r > 1.0) {
            return ddm::MarkovGrowthModel(ddm::GrowthStateSpace(g), ddm::TransitionMatrix(p),
                                          ddm::DiscountRate(r - 1.0));
        }
    }
}

/// Random γ-stock MTD model with random λ columns; each stock's discount is
/// set so that max(ḡ, √ḡ2)/r equals `ratio`.
inline ddm::mtd::MtdModel random_mtd(std::mt19937_64& rng, std::size_t gamma, std::size_t m,
                                     double ratio = 0.85) {
    std::vector<ddm::GrowthStateSpace> states;
    for (std::size_t f = 0; f < gamma; ++f) states.emplace_back(random_factors(rng, m));
    Matrix lambda(gamma, gamma);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (std::size_t f = 0; f < gamma; ++f) {
        double total = 0.0;
        for (std::size_t w = 0; w < gamma; ++w) total += lambda(w, f) = u(rng);
        for (std::size_t w = 0; w < gamma; ++w) lambda(w, f) /= total;
    }
    std::vector<std::vector<ddm::TransitionMatrix>> cross(gamma);
    for (std::size_t w = 0; w < gamma; ++w)
        for (std::size_t f = 0; f < gamma; ++f) cross[w].emplace_back(random_stochastic(rng, m));
    // Every joint configuration mixes rows whose moments are at most the
    // per-kernel maxima, so those maxima bound the conditions.
    std::vector<ddm::DiscountRate> discounts;
    for (std::size_t f = 0; f < gamma; ++f) {
        double g1 = 0.0, g2 = 0.0;
        for (std::size_t w = 0; w < gamma; ++w) {
            const auto [a, b] = bounds(cross[w][f].matrix(), states[f].factors());
            g1 = std::max(g1, a);
            g2 = std::max(g2, b);
        }
        discounts.emplace_back(std::max(1.0 + 1e-3, std::max(g1, std::sqrt(g2)) / ratio) - 1.0);
    }
    return ddm::mtd::MtdModel(std::move(states), std::move(lambda), std::move(cross), std::move(discounts));
}

/// Diagonal-λ version of a model: every stock evolves on its own kernel.
inline ddm::mtd::MtdModel independent_copy(const ddm::mtd::MtdModel& model) {
    const std::size_t gamma = model.stocks();
    std::vector<ddm::GrowthStateSpace> states;
    std::vector<std::vector<ddm::TransitionMatrix>> cross(gamma);
    std::vector<ddm::DiscountRate> discounts;
    for (std::size_t f = 0; f < gamma; ++f) {
        states.push_back(model.states(f));
        discounts.push_back(model.discount(f));
        for (std::size_t w = 0; w < gamma; ++w) cross[f].push_back(model.cross(f, w));
    }
    return ddm::mtd::MtdModel(std::move(states), Matrix::identity(gamma), std::move(cross),
                              std::move(discounts));
}

}  // namespace oracle
