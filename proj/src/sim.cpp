#include "ddm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "ddm/markov.hpp"

namespace ddm::sim {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Neumaier compensated sum, accumulated in input order.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
    double std_error = 0.0;
};

// Sample moments of get(k) for k in [0, count), summed in index order.
template <class Get>
Moments moments(std::size_t count, Get&& get) {
    CompensatedSum sum;
    for (std::size_t k = 0; k < count; ++k) sum.add(get(k));
    const double n = static_cast<double>(count);
    Moments out;
    out.mean = sum.value() / n;
    if (count > 1) {
        CompensatedSum dev;
        for (std::size_t k = 0; k < count; ++k) {
            const double d = get(k) - out.mean;
            dev.add(d * d);
        }
        out.variance = dev.value() / (n - 1.0);
        out.std_error = std::sqrt(out.variance / n);
    }
    return out;
}

// Runs fn(rng, row) for every path; row is that path's slice of the output.
template <class F>
std::vector<double> run_paths(const SimConfig& cfg, std::size_t width, F&& fn) {
    std::vector<double> out(cfg.paths * width, 0.0);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            CounterRng rng(cfg.seed, p);
            fn(rng, std::span<double>(out.data() + p * width, width));
        }
    };
    std::size_t threads = cfg.threads == 0 ? std::thread::hardware_concurrency() : cfg.threads;
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(cfg.paths, 1));
    if (threads == 1) {
        work(0, cfg.paths);
        return out;
    }
    {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (cfg.paths + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(cfg.paths, begin + chunk);
            if (begin < end) pool.emplace_back(work, begin, end);
        }
    }
    return out;
}

void require_config(const SimConfig& cfg) {
    if (cfg.paths == 0) fail(ErrorKind::InvalidArgument, "need at least one path");
    if (!(cfg.tail_tolerance > 0.0)) fail(ErrorKind::InvalidArgument, "tail tolerance must be positive");
}

[[noreturn]] void horizon_too_short(std::size_t horizon, double bound, double tol) {
    std::ostringstream msg;
    msg << "tail bound " << bound << " at horizon " << horizon << " exceeds " << tol;
    fail(ErrorKind::HorizonTooShort, msg.str());
}

// Sampling table: cumulative probabilities with the last entry pinned to 1.
Vector cumulative(std::span<const double> probs) {
    Vector out(probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        out[i] = acc;
    }
    if (!out.empty()) out.back() = 1.0;
    return out;
}

std::size_t draw(const double* cum, std::size_t n, double u) noexcept {
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (u < cum[i]) return i;
    }
    return n - 1;
}

SimSummary summarize(const std::vector<double>& sums, std::size_t paths, std::size_t width,
                     std::size_t column) {
    SimSummary s;
    s.paths = paths;
    const auto first = moments(paths, [&](std::size_t k) { return sums[k * width + column]; });
    const auto second = moments(paths, [&](std::size_t k) {
        const double v = sums[k * width + column];
        return v * v;
    });
    s.mean = first.mean;
    s.variance = first.variance;
    s.std_error = first.std_error;
    s.second_moment = second.mean;
    s.second_moment_se = second.std_error;
    return s;
}

// Σ_{i>n} (d0 + i s) x^i for 0 < x < 1.
double additive_tail(double d0, double s, double x, std::size_t n) {
    const double xn1 = std::pow(x, static_cast<double>(n + 1));
    const double nn = static_cast<double>(n);
    const double geometric = xn1 / (1.0 - x);
    const double weighted = xn1 * ((nn + 1.0) - nn * x) / ((1.0 - x) * (1.0 - x));
    return d0 * geometric + s * weighted;
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(mix64(seed ^ mix64(stream + kGolden))) {}

CounterRng::result_type CounterRng::operator()() noexcept {
    return mix64(key_ + (++counter_) * kGolden);
}

double CounterRng::uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------

Vector psi1_partial_sums(const MarkovGrowthModel& m, std::size_t n) {
    const auto& p = m.transition().matrix();
    const auto& g = m.states().factors();
    const double r = m.discount().gross();
    Matrix step(p.rows(), p.cols());
    for (std::size_t i = 0; i < p.rows(); ++i)
        for (std::size_t j = 0; j < p.cols(); ++j) step(i, j) = p(i, j) * g[j] / r;
    Vector term(m.size(), 1.0);
    Vector total(m.size(), 0.0);
    for (std::size_t i = 1; i <= n; ++i) {
        term = matrix_power_apply(step, term, 1);
        for (std::size_t s = 0; s < total.size(); ++s) total[s] += term[s];
    }
    return total;
}

SeriesResult truncated_psi1_series(const MarkovGrowthModel& m, std::size_t n) {
    const auto rep = markov::check_conditions(m);
    const double r = m.discount().gross();
    if (!rep.a1_holds) {
        std::ostringstream msg;
        msg << "A1: " << rep.g_bar << " >= " << r;
        fail(ErrorKind::TransversalityViolated, msg.str());
    }
    const double ratio = std::max(0.0, rep.g_bar / r);
    SeriesResult out;
    out.values = psi1_partial_sums(m, n);
    out.horizon = n;
    out.tail_bound = std::pow(ratio, static_cast<double>(n + 1)) / (1.0 - ratio);
    return out;
}

std::size_t geometric_horizon(double ratio, double tolerance, double scale) {
    if (!(ratio < 1.0)) fail(ErrorKind::NonConvergent, "geometric ratio must be below 1");
    if (ratio <= 0.0) return 1;
    // ratio^{n+1} < tolerance (1 - ratio) / scale
    const double target = tolerance * (1.0 - ratio) / scale;
    const double n = std::ceil(std::log(target) / std::log(ratio)) - 1.0;
    if (!(n <= static_cast<double>(kMaxHorizon))) {
        fail(ErrorKind::HorizonTooShort, "required horizon exceeds " + std::to_string(kMaxHorizon));
    }
    std::size_t horizon = n < 1.0 ? 1 : static_cast<std::size_t>(n);
    while (scale * std::pow(ratio, static_cast<double>(horizon + 1)) / (1.0 - ratio) >= tolerance) {
        ++horizon;
    }
    if (horizon > kMaxHorizon) {
        fail(ErrorKind::HorizonTooShort, "required horizon exceeds " + std::to_string(kMaxHorizon));
    }
    return horizon;
}

// ---------------------------------------------------------------------------

IidDividendProcess IidDividendProcess::hurley_additive(const binomial::BinomialAdditiveParams& p) {
    binomial::hurley_additive(p);  // validates
    return {StepKind::Additive, {{p.delta, p.q}, {0.0, 1.0 - p.q - p.q_b}}, p.q_b, p.k_e};
}

IidDividendProcess IidDividendProcess::hurley_geometric(const binomial::BinomialGeometricParams& p) {
    if (!(p.q >= 0.0 && p.q_b >= 0.0 && p.q + p.q_b <= 1.0 + 1e-12)) {
        fail(ErrorKind::InvalidArgument, "q and q_b must be non-negative and sum to at most 1");
    }
    return {StepKind::Geometric, {{p.g, p.q}, {0.0, 1.0 - p.q - p.q_b}}, p.q_b, p.k_e};
}

IidDividendProcess IidDividendProcess::general(StepKind kind, const binomial::GeneralizedOutcomes& o,
                                               double k_e) {
    IidDividendProcess out{kind, o.outcomes(), 0.0, k_e};
    out.outcomes.push_back({0.0, o.residual_probability()});
    return out;
}

IidDividendProcess IidDividendProcess::yao(StepKind kind, const binomial::TrinomialParams& p) {
    if (!(p.q_u >= 0.0 && p.q_d >= 0.0 && p.q_u + p.q_d <= 1.0 + 1e-12)) {
        fail(ErrorKind::InvalidArgument, "q_u and q_d must be non-negative and sum to at most 1");
    }
    return {kind, {{p.step, p.q_u}, {-p.step, p.q_d}, {0.0, p.q_c()}}, 0.0, p.k_e};
}

SimSummary simulate_dividend_paths(const IidDividendProcess& process, double d0,
                                   const SimConfig& cfg) {
    require_config(cfg);
    if (!(d0 > 0.0)) fail(ErrorKind::InvalidArgument, "d0 must be positive");
    if (!(process.k_e > 0.0)) fail(ErrorKind::InvalidArgument, "k_e must be positive");
    double total = process.bankruptcy;
    for (const auto& o : process.outcomes) {
        if (!(o.probability >= 0.0)) fail(ErrorKind::InvalidArgument, "negative outcome probability");
        total += o.probability;
    }
    if (!(process.bankruptcy >= 0.0) || std::abs(total - 1.0) > 1e-12) {
        fail(ErrorKind::InvalidArgument, "outcome and bankruptcy probabilities must sum to 1");
    }
    const double r = 1.0 + process.k_e;

    // Sampling table: outcomes first, bankruptcy last.
    Vector probs;
    for (const auto& o : process.outcomes) probs.push_back(o.probability);
    probs.push_back(process.bankruptcy);
    const Vector cum = cumulative(probs);
    const std::size_t bankrupt = process.outcomes.size();

    std::size_t horizon = cfg.horizon;
    double tail = 0.0;
    if (process.kind == StepKind::Geometric) {
        double mu1 = 0.0, mu2 = 0.0;
        for (const auto& o : process.outcomes) {
            mu1 += o.probability * (1.0 + o.value);
            mu2 += o.probability * (1.0 + o.value) * (1.0 + o.value);
        }
        const double ratio = mu1 / r;
        if (!(ratio < 1.0)) fail(ErrorKind::NonConvergent, "expected growth factor >= discount factor");
        const double ratio2 = std::sqrt(mu2) / r;
        if (horizon == 0) {
            horizon = geometric_horizon(ratio2 < 1.0 ? std::max(ratio, ratio2) : ratio,
                                        cfg.tail_tolerance, d0);
        }
        tail = d0 * std::pow(ratio, static_cast<double>(horizon + 1)) / (1.0 - ratio);
    } else {
        double step = 0.0;
        for (const auto& o : process.outcomes) step = std::max(step, o.value);
        const double x = 1.0 / r;
        if (horizon == 0) {
            horizon = 1;
            while (additive_tail(d0, step, x, horizon) >= cfg.tail_tolerance) {
                if (++horizon > kMaxHorizon) horizon_too_short(horizon, additive_tail(d0, step, x, horizon), cfg.tail_tolerance);
            }
        }
        tail = additive_tail(d0, step, x, horizon);
    }
    if (tail > cfg.tail_tolerance) horizon_too_short(horizon, tail, cfg.tail_tolerance);

    const bool additive = process.kind == StepKind::Additive;
    const auto values = run_paths(cfg, 2, [&](CounterRng& rng, std::span<double> row) {
        double d = d0;
        double disc = 1.0;
        double sum = 0.0;
        bool floored = false;
        for (std::size_t i = 1; i <= horizon; ++i) {
            const std::size_t k = draw(cum.data(), cum.size(), rng.uniform());
            if (k == bankrupt) break;
            const double v = process.outcomes[k].value;
            if (additive) {
                d += v;
                if (d < 0.0) {
                    d = 0.0;
                    floored = true;
                }
            } else {
                d *= 1.0 + v;
            }
            disc /= r;
            sum += d * disc;
        }
        row[0] = sum;
        row[1] = floored ? 1.0 : 0.0;
    });

    SimSummary s = summarize(values, cfg.paths, 2, 0);
    s.horizon = horizon;
    s.tail_bound = tail;
    for (std::size_t p = 0; p < cfg.paths; ++p) s.floor_hits += values[p * 2 + 1] != 0.0 ? 1 : 0;
    return s;
}

SimSummary simulate_dividend_paths(const MarkovGrowthModel& m, std::size_t start_state, double d0,
                                   const SimConfig& cfg) {
    require_config(cfg);
    if (start_state >= m.size()) fail(ErrorKind::StateOutOfRange, "start state " + std::to_string(start_state));
    if (!(d0 > 0.0)) fail(ErrorKind::InvalidArgument, "d0 must be positive");
    const auto rep = markov::check_conditions(m);
    const double r = m.discount().gross();
    if (!rep.a1_holds) {
        std::ostringstream msg;
        msg << "A1: " << rep.g_bar << " >= " << r;
        fail(ErrorKind::TransversalityViolated, msg.str());
    }
    const double ratio = std::max(0.0, rep.g_bar / r);
    std::size_t horizon = cfg.horizon;
    if (horizon == 0) {
        const double ratio2 = rep.a2_holds ? std::sqrt(rep.g_bar2) / r : 0.0;
        horizon = geometric_horizon(std::max(ratio, ratio2), cfg.tail_tolerance, d0);
    }
    const double tail = d0 * std::pow(ratio, static_cast<double>(horizon + 1)) / (1.0 - ratio);
    if (tail > cfg.tail_tolerance) horizon_too_short(horizon, tail, cfg.tail_tolerance);

    const std::size_t n = m.size();
    Matrix cum(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vector c = cumulative(m.transition().matrix().row(i));
        std::copy(c.begin(), c.end(), cum.row(i).begin());
    }
    const auto& g = m.states().factors();

    const auto values = run_paths(cfg, 1, [&](CounterRng& rng, std::span<double> row) {
        std::size_t state = start_state;
        double scaled = d0;  // D(i) / r^i
        double sum = 0.0;
        for (std::size_t i = 1; i <= horizon; ++i) {
            state = draw(cum.row(state).data(), n, rng.uniform());
            scaled *= g[state] / r;
            sum += scaled;
        }
        row[0] = sum;
    });

    SimSummary s = summarize(values, cfg.paths, 1, 0);
    s.horizon = horizon;
    s.tail_bound = tail;
    return s;
}

JointSimSummary simulate_dividend_paths(const mtd::MtdModel& m, const mtd::JointState& start,
                                        std::span<const double> d0, const SimConfig& cfg) {
    require_config(cfg);
    const std::size_t gamma = m.stocks();
    const std::size_t n = m.states_per_stock();
    if (d0.size() != gamma) fail(ErrorKind::DimensionMismatch, "one initial dividend per stock");
    m.encode(start);  // validates the start state
    for (double d : d0) {
        if (!(d > 0.0)) fail(ErrorKind::InvalidArgument, "initial dividends must be positive");
    }

    const auto reports = mtd::check_multi_conditions(m);
    std::size_t horizon = cfg.horizon;
    double worst_tail = 0.0;
    std::vector<double> ratios(gamma);
    for (std::size_t a = 0; a < gamma; ++a) {
        const double r = m.discount(a).gross();
        if (!reports[a].a1_holds) {
            std::ostringstream msg;
            msg << "stock " << a << " first-order condition: " << reports[a].g_bar << " >= " << r;
            fail(ErrorKind::TransversalityViolated, msg.str());
        }
        ratios[a] = std::max(0.0, reports[a].g_bar / r);
    }
    if (horizon == 0) {
        for (std::size_t a = 0; a < gamma; ++a) {
            const double r = m.discount(a).gross();
            const double ratio2 = reports[a].a2_holds ? std::sqrt(reports[a].g_bar2) / r : 0.0;
            horizon = std::max(horizon,
                               geometric_horizon(std::max(ratios[a], ratio2), cfg.tail_tolerance, d0[a]));
        }
    }
    for (std::size_t a = 0; a < gamma; ++a) {
        worst_tail = std::max(worst_tail, d0[a] * std::pow(ratios[a], static_cast<double>(horizon + 1)) /
                                              (1.0 - ratios[a]));
    }
    if (worst_tail > cfg.tail_tolerance) horizon_too_short(horizon, worst_tail, cfg.tail_tolerance);

    // Mixture sampling: stock f first picks a conditioning stock w with
    // probability λ_{w,f}, then moves along row a_w of P^{(w,f)}.
    std::vector<Vector> lambda_cum(gamma);
    for (std::size_t f = 0; f < gamma; ++f) {
        Vector col(gamma);
        for (std::size_t w = 0; w < gamma; ++w) col[w] = m.lambda(w, f);
        lambda_cum[f] = cumulative(col);
    }
    std::vector<std::vector<Matrix>> kernel_cum(gamma, std::vector<Matrix>(gamma));
    for (std::size_t w = 0; w < gamma; ++w) {
        for (std::size_t f = 0; f < gamma; ++f) {
            Matrix c(n, n);
            for (std::size_t i = 0; i < n; ++i) {
                const Vector row = cumulative(m.cross(w, f).matrix().row(i));
                std::copy(row.begin(), row.end(), c.row(i).begin());
            }
            kernel_cum[w][f] = std::move(c);
        }
    }
    std::vector<double> gross(gamma);
    for (std::size_t a = 0; a < gamma; ++a) gross[a] = m.discount(a).gross();

    const auto values = run_paths(cfg, gamma, [&](CounterRng& rng, std::span<double> row) {
        std::vector<std::size_t> state = start.indices();
        std::vector<std::size_t> next(gamma);
        std::vector<double> scaled(d0.begin(), d0.end());
        std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t i = 1; i <= horizon; ++i) {
            for (std::size_t f = 0; f < gamma; ++f) {
                const std::size_t w = draw(lambda_cum[f].data(), gamma, rng.uniform());
                next[f] = draw(kernel_cum[w][f].row(state[w]).data(), n, rng.uniform());
            }
            state.swap(next);
            for (std::size_t f = 0; f < gamma; ++f) {
                scaled[f] *= m.states(f)[state[f]] / gross[f];
                row[f] += scaled[f];
            }
        }
    });

    JointSimSummary out;
    out.horizon = horizon;
    out.cross_moment = Matrix(gamma, gamma);
    out.cross_moment_se = Matrix(gamma, gamma);
    out.covariance = Matrix(gamma, gamma);
    out.covariance_se = Matrix(gamma, gamma);
    for (std::size_t a = 0; a < gamma; ++a) {
        SimSummary s = summarize(values, cfg.paths, gamma, a);
        s.horizon = horizon;
        s.tail_bound = d0[a] * std::pow(ratios[a], static_cast<double>(horizon + 1)) / (1.0 - ratios[a]);
        out.per_stock.push_back(s);
    }
    for (std::size_t a = 0; a < gamma; ++a) {
        for (std::size_t b = a; b < gamma; ++b) {
            const auto prod = moments(cfg.paths, [&](std::size_t k) {
                return values[k * gamma + a] * values[k * gamma + b];
            });
            const double ma = out.per_stock[a].mean;
            const double mb = out.per_stock[b].mean;
            const auto centered = moments(cfg.paths, [&](std::size_t k) {
                return (values[k * gamma + a] - ma) * (values[k * gamma + b] - mb);
            });
            const double nn = static_cast<double>(cfg.paths);
            const double cov = nn > 1.0 ? centered.mean * nn / (nn - 1.0) : 0.0;
            out.cross_moment(a, b) = out.cross_moment(b, a) = prod.mean;
            out.cross_moment_se(a, b) = out.cross_moment_se(b, a) = prod.std_error;
            out.covariance(a, b) = out.covariance(b, a) = cov;
            out.covariance_se(a, b) = out.covariance_se(b, a) = centered.std_error;
        }
    }
    return out;
}

MomentEstimate dk_simulate(const RateSampler& growth, const RateSampler& discount, double d0,
                           const SimConfig& cfg, std::optional<double> factor_bound) {
    require_config(cfg);
    if (!(d0 > 0.0)) fail(ErrorKind::InvalidArgument, "d0 must be positive");
    std::size_t horizon = cfg.horizon;
    if (factor_bound) {
        if (!(*factor_bound < 1.0)) fail(ErrorKind::NonConvergent, "factor bound must be below 1");
        if (horizon == 0) horizon = geometric_horizon(*factor_bound, cfg.tail_tolerance, d0);
        const double tail =
            d0 * std::pow(std::max(0.0, *factor_bound), static_cast<double>(horizon + 1)) /
            (1.0 - *factor_bound);
        if (tail > cfg.tail_tolerance) horizon_too_short(horizon, tail, cfg.tail_tolerance);
    } else if (horizon == 0) {
        fail(ErrorKind::InvalidArgument, "an explicit horizon or a factor bound is required");
    }

    const auto values = run_paths(cfg, 1, [&](CounterRng& rng, std::span<double> row) {
        double product = 1.0;
        double sum = 0.0;
        for (std::size_t i = 0; i < horizon; ++i) {
            const double g = growth(rng);
            const double k = discount(rng);
            product *= (1.0 + g) / (1.0 + k);
            sum += product;
        }
        row[0] = d0 * sum;
    });
    const auto mom = moments(cfg.paths, [&](std::size_t k) { return values[k]; });
    return {mom.mean, mom.std_error};
}

}  // namespace ddm::sim
