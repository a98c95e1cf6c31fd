#include "ddm/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ddm::estimation {

namespace {

bool same_value(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

// Sorted cluster representatives: runs of values equal under same_value.
Vector distinct_sorted(std::span<const double> values) {
    Vector sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    Vector reps;
    for (double x : sorted) {
        if (reps.empty() || !same_value(reps.back(), x)) reps.push_back(x);
    }
    return reps;
}

double representative(const Vector& reps, double x) {
    for (double r : reps) {
        if (same_value(r, x)) return r;
    }
    return x;
}

TransitionMatrix counts_to_matrix(const Matrix& counts, double smoothing) {
    const std::size_t m = counts.rows();
    Matrix p(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        double total = 0.0;
        for (double c : counts.row(i)) total += c;
        const double denom = total + static_cast<double>(m) * smoothing;
        for (std::size_t j = 0; j < m; ++j) {
            p(i, j) = denom > 0.0 ? (counts(i, j) + smoothing) / denom : 1.0 / static_cast<double>(m);
        }
    }
    return TransitionMatrix(std::move(p));
}

void require_indices(std::span<const std::size_t> idx, std::size_t m) {
    for (std::size_t i : idx) {
        if (i >= m) fail(ErrorKind::StateOutOfRange, "state index " + std::to_string(i));
    }
}

double mean(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

}  // namespace

Vector growth_series(std::span<const double> dividends) {
    if (dividends.size() < 2) fail(ErrorKind::InsufficientHistory, "need at least two dividends");
    Vector out;
    out.reserve(dividends.size() - 1);
    for (std::size_t t = 0; t + 1 < dividends.size(); ++t) {
        out.push_back((dividends[t + 1] - dividends[t]) / dividends[t]);
    }
    return out;
}

Vector growth_series(const DividendSeries& d) { return growth_series(d.dividends()); }

std::size_t distinct_values(std::span<const double> growth) {
    return distinct_sorted(growth).size();
}

Discretization discretize_states(std::span<const double> growth, std::size_t m) {
    if (m == 0) fail(ErrorKind::InvalidArgument, "state count must be at least 1");
    if (growth.empty()) fail(ErrorKind::InsufficientHistory, "no growth observations");
    const Vector reps = distinct_sorted(growth);
    if (reps.size() < m) {
        fail(ErrorKind::DegenerateBins, std::to_string(reps.size()) + " distinct values for " +
                                            std::to_string(m) + " states");
    }

    Vector canon(growth.size());
    for (std::size_t i = 0; i < growth.size(); ++i) canon[i] = representative(reps, growth[i]);
    Vector sorted = canon;
    std::sort(sorted.begin(), sorted.end());

    // Upper edge of each of the first m-1 bins, taken at the empirical
    // quantile but kept inside the range that leaves every bin non-empty.
    const std::size_t n = sorted.size();
    const std::size_t d = reps.size();
    Vector upper(m - 1);
    for (std::size_t b = 0; b + 1 < m; ++b) {
        const std::size_t pos = ((b + 1) * n + m - 1) / m - 1;
        double edge = sorted[pos];
        if (b > 0) {
            const auto next = std::upper_bound(reps.begin(), reps.end(), upper[b - 1]);
            edge = std::max(edge, *next);
        }
        upper[b] = std::clamp(edge, reps[b], reps[d - m + b]);
    }

    std::vector<std::size_t> indices(n);
    Vector sums(m, 0.0);
    std::vector<std::size_t> counts(m, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t bin = m - 1;
        for (std::size_t b = 0; b + 1 < m; ++b) {
            if (canon[i] <= upper[b]) {
                bin = b;
                break;
            }
        }
        indices[i] = bin;
        sums[bin] += growth[i];
        ++counts[bin];
    }
    Vector factors(m);
    for (std::size_t b = 0; b < m; ++b) {
        if (counts[b] == 0) fail(ErrorKind::DegenerateBins, "bin " + std::to_string(b) + " is empty");
        factors[b] = 1.0 + sums[b] / static_cast<double>(counts[b]);
    }
    return {GrowthStateSpace(std::move(factors)), std::move(indices)};
}

TransitionMatrix estimate_transition_matrix(std::span<const std::size_t> indices, std::size_t m,
                                            double smoothing) {
    if (indices.size() < 2) fail(ErrorKind::InsufficientHistory, "need at least two states");
    return estimate_cross_transition(indices, indices, m, smoothing);
}

TransitionMatrix estimate_cross_transition(std::span<const std::size_t> from,
                                           std::span<const std::size_t> to, std::size_t m,
                                           double smoothing) {
    if (m == 0) fail(ErrorKind::InvalidArgument, "state count must be at least 1");
    if (!(smoothing >= 0.0)) fail(ErrorKind::InvalidArgument, "smoothing must be non-negative");
    if (from.size() != to.size()) fail(ErrorKind::DimensionMismatch, "state paths must be aligned");
    if (from.size() < 2) fail(ErrorKind::InsufficientHistory, "need at least two states");
    require_indices(from, m);
    require_indices(to, m);
    Matrix counts(m, m);
    for (std::size_t k = 0; k + 1 < from.size(); ++k) counts(from[k], to[k + 1]) += 1.0;
    return counts_to_matrix(counts, smoothing);
}

LambdaFit estimate_lambda(const std::vector<std::vector<std::size_t>>& paths,
                          const std::vector<std::vector<TransitionMatrix>>& cross) {
    const std::size_t gamma = paths.size();
    if (gamma == 0) fail(ErrorKind::InvalidArgument, "need at least one state path");
    if (cross.size() != gamma) fail(ErrorKind::DimensionMismatch, "cross kernels must be gamma x gamma");
    const std::size_t len = paths.front().size();
    if (len < 2) fail(ErrorKind::InsufficientHistory, "need at least two aligned observations");
    const std::size_t m = cross.front().empty() ? 0 : cross.front().front().size();
    for (std::size_t b = 0; b < gamma; ++b) {
        if (paths[b].size() != len) fail(ErrorKind::DimensionMismatch, "state paths must be aligned");
        if (cross[b].size() != gamma) fail(ErrorKind::DimensionMismatch, "cross kernels must be gamma x gamma");
        require_indices(paths[b], m);
        for (const auto& p : cross[b]) {
            if (p.size() != m) fail(ErrorKind::DimensionMismatch, "cross kernel size");
        }
    }

    LambdaFit fit{Matrix(gamma, gamma), std::vector<std::vector<double>>(gamma), 0};
    const double samples = static_cast<double>(len - 1);

    for (std::size_t alpha = 0; alpha < gamma; ++alpha) {
        // Quadratic form of the objective: (λᵀHλ - 2cᵀλ + samples) / samples.
        Matrix h(gamma, gamma);
        Vector c(gamma, 0.0);
        for (std::size_t k = 0; k + 1 < len; ++k) {
            const std::size_t next = paths[alpha][k + 1];
            for (std::size_t b1 = 0; b1 < gamma; ++b1) {
                const auto v1 = cross[b1][alpha].matrix().row(paths[b1][k]);
                c[b1] += v1[next];
                for (std::size_t b2 = b1; b2 < gamma; ++b2) {
                    const auto v2 = cross[b2][alpha].matrix().row(paths[b2][k]);
                    double dot = 0.0;
                    for (std::size_t j = 0; j < m; ++j) dot += v1[j] * v2[j];
                    h(b1, b2) += dot;
                }
            }
        }
        for (std::size_t b1 = 0; b1 < gamma; ++b1)
            for (std::size_t b2 = 0; b2 < b1; ++b2) h(b1, b2) = h(b2, b1);

        Vector lam(gamma, 1.0 / static_cast<double>(gamma));
        Vector h_lam = multiply(h, lam);
        auto objective = [&] {
            double quad = 0.0;
            for (std::size_t i = 0; i < gamma; ++i) quad += lam[i] * (h_lam[i] - 2.0 * c[i]);
            return (quad + samples) / samples;
        };

        auto& trace = fit.objective_trace[alpha];
        trace.push_back(objective());
        std::size_t iter = 0;
        while (gamma > 1) {
            if (++iter > kLambdaMaxIterations) {
                fail(ErrorKind::NonConvergent, "lambda estimation did not converge for stock " +
                                                   std::to_string(alpha));
            }
            for (std::size_t i = 0; i < gamma; ++i) {
                for (std::size_t j = i + 1; j < gamma; ++j) {
                    // Move t units of weight from j to i.
                    const double curvature = h(i, i) + h(j, j) - 2.0 * h(i, j);
                    const double slope = (h_lam[i] - h_lam[j]) - (c[i] - c[j]);
                    double t = 0.0;
                    if (curvature > 0.0) {
                        t = std::clamp(-slope / curvature, -lam[i], lam[j]);
                    } else if (slope != 0.0) {
                        t = slope < 0.0 ? lam[j] : -lam[i];
                    }
                    if (t == 0.0 || !(curvature * t * t + 2.0 * slope * t < 0.0)) continue;
                    lam[i] += t;
                    lam[j] -= t;
                    for (std::size_t k = 0; k < gamma; ++k) h_lam[k] += t * (h(k, i) - h(k, j));
                }
            }
            const double f = objective();
            const double improvement = trace.back() - f;
            trace.push_back(f);
            if (improvement < kLambdaTolerance) break;
        }
        fit.iterations = std::max(fit.iterations, iter);
        double total = 0.0;
        for (double& x : lam) {
            x = std::clamp(x, 0.0, 1.0);
            total += x;
        }
        for (std::size_t b = 0; b < gamma; ++b) fit.lambda(b, alpha) = lam[b] / total;
    }
    return fit;
}

CapmEstimate capm_cost_of_equity(const CapmInputs& c) {
    const std::size_t n = c.stock_returns.size();
    if (c.market_returns.size() != n) {
        fail(ErrorKind::DimensionMismatch, "stock and market return series differ in length");
    }
    if (n < kCapmMinObservations) {
        fail(ErrorKind::InsufficientHistory,
             "CAPM needs at least " + std::to_string(kCapmMinObservations) + " observations");
    }
    if (c.risk_free.size() != 1 && c.risk_free.size() != n) {
        fail(ErrorKind::DimensionMismatch, "risk-free must be a constant or one value per period");
    }
    auto rf = [&](std::size_t t) { return c.risk_free.size() == 1 ? c.risk_free[0] : c.risk_free[t]; };

    Vector zi(n), zm(n);
    for (std::size_t t = 0; t < n; ++t) {
        zi[t] = c.stock_returns[t] - rf(t);
        zm[t] = c.market_returns[t] - rf(t);
    }
    const double mi = mean(zi);
    const double mm = mean(zm);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        sxy += (zi[t] - mi) * (zm[t] - mm);
        sxx += (zm[t] - mm) * (zm[t] - mm);
    }
    const double scale = std::max(1.0, std::abs(mm));
    if (!(sxx / static_cast<double>(n) > 1e-24 * scale * scale)) {
        fail(ErrorKind::ZeroVarianceMarket, "market excess returns have zero variance");
    }
    CapmEstimate est;
    est.beta = sxy / sxx;
    est.alpha = mi - est.beta * mm;
    const double mean_rf = mean(c.risk_free);
    est.k_e = mean_rf + est.beta * (mean(c.market_returns) - mean_rf);
    return est;
}

}  // namespace ddm::estimation
