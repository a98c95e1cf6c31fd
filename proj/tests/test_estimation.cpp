#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "check.hpp"
#include "ddm/deterministic.hpp"
#include "ddm/estimation.hpp"
#include "ddm/markov.hpp"
#include "ddm/mtd.hpp"
#include "oracles.hpp"

using namespace ddm;
using namespace ddm::estimation;
using check::kind_of;

namespace {

std::size_t sample(std::mt19937_64& rng, std::span<const double> probs) {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (std::size_t j = 0; j + 1 < probs.size(); ++j) {
        if (u < probs[j]) return j;
        u -= probs[j];
    }
    return probs.size() - 1;
}

std::vector<std::size_t> chain_path(std::mt19937_64& rng, const Matrix& p, std::size_t steps) {
    std::vector<std::size_t> path{0};
    while (path.size() < steps) path.push_back(sample(rng, p.row(path.back())));
    return path;
}

// Joint state paths of an MTD model, one vector per stock.
std::vector<std::vector<std::size_t>> mtd_paths(std::mt19937_64& rng, const mtd::MtdModel& m, std::size_t steps) {
    std::vector<std::vector<std::size_t>> paths(m.stocks(), std::vector<std::size_t>{0});
    std::vector<std::size_t> state(m.stocks(), 0);
    for (std::size_t t = 1; t < steps; ++t) {
        const mtd::JointState now(state);
        for (std::size_t a = 0; a < m.stocks(); ++a) state[a] = sample(rng, m.next_distribution(a, now));
        for (std::size_t a = 0; a < m.stocks(); ++a) paths[a].push_back(state[a]);
    }
    return paths;
}

}  // namespace

TEST_CASE("growth_series examples") {
    CHECK(growth_series(Vector{1.0, 1.1})[0] == doctest::Approx(0.1).epsilon(1e-15));
    for (double g : growth_series(Vector{3.0, 3.0, 3.0, 3.0})) CHECK(g == 0.0);
    CHECK(growth_series(Vector{2.0, 1.0})[0] == -0.5);
    CHECK(kind_of([] { growth_series(Vector{1.0}); }) == ErrorKind::InsufficientHistory);
}

TEST_CASE("discretize_states examples") {
    const Vector growth{0.01, 0.03, -0.02, 0.05};
    const auto one = discretize_states(growth, 1);
    CHECK(one.states.size() == 1);
    CHECK(one.states[0] == doctest::Approx(1.0175).epsilon(1e-15));
    CHECK(std::all_of(one.indices.begin(), one.indices.end(), [](std::size_t i) { return i == 0; }));

    const auto two = discretize_states(Vector{-0.1, -0.1, 0.1, 0.1}, 2);
    CHECK(two.states[0] == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(two.states[1] == doctest::Approx(1.1).epsilon(1e-15));
    CHECK(two.indices == std::vector<std::size_t>{0, 0, 1, 1});

    CHECK(kind_of([] { discretize_states(Vector{0.1, 0.1, 0.1}, 2); }) == ErrorKind::DegenerateBins);
    CHECK(kind_of([] { discretize_states(Vector{0.1, 0.2}, 3); }) == ErrorKind::DegenerateBins);
    CHECK(distinct_values(Vector{0.1, 0.1 * (1 + 1e-14), 0.2}) == 2);
}

TEST_CASE("discretize_states: boundary ties go to the lower bin") {
    const auto d = discretize_states(Vector{0.0, 0.1, 0.1, 0.1, 0.2}, 2);
    // The median value 0.1 sits on the edge and joins the lower bin.
    CHECK(d.indices == std::vector<std::size_t>{0, 0, 0, 0, 1});
    CHECK(d.states[0] == doctest::Approx(1.075).epsilon(1e-14));
    CHECK(d.states[1] == doctest::Approx(1.2).epsilon(1e-14));
}

TEST_CASE("discretize_states: every bin non-empty and ordered") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z(0.03, 0.05);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 5 + rng() % 60;
        Vector g(n);
        for (auto& x : g) x = std::round(z(rng) * 100.0) / 100.0;  // force ties
        const std::size_t m = 1 + rng() % std::min<std::size_t>(6, distinct_values(g));
        const auto d = discretize_states(g, m);
        CHECK(d.states.size() == m);
        std::vector<std::size_t> counts(m, 0);
        for (std::size_t i = 0; i < n; ++i) ++counts[d.indices[i]];
        for (auto c : counts) CHECK(c > 0);
        // Bins are contiguous in value.
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (g[i] < g[j]) CHECK(d.indices[i] <= d.indices[j]);
    }
}

TEST_CASE("discretize_states: two-regime round trip") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> noise(0.0, 0.005);
    std::vector<int> regime(100);
    for (std::size_t i = 0; i < regime.size(); ++i) regime[i] = i < 50 ? 0 : 1;
    std::shuffle(regime.begin(), regime.end(), rng);
    const double means[] = {-0.03, 0.06};
    Vector growth;
    for (int r : regime) growth.push_back(means[r] + noise(rng));
    const auto d = discretize_states(growth, 2);
    CHECK(std::abs(d.states[0] - (1.0 + means[0])) < 0.01);
    CHECK(std::abs(d.states[1] - (1.0 + means[1])) < 0.01);
}

TEST_CASE("estimate_transition_matrix examples") {
    const auto p = estimate_transition_matrix(std::vector<std::size_t>{0, 0, 1, 0}, 2);
    CHECK(p(0, 0) == 0.5);
    CHECK(p(0, 1) == 0.5);
    CHECK(p(1, 0) == 1.0);
    CHECK(p(1, 1) == 0.0);

    const auto q = estimate_transition_matrix(std::vector<std::size_t>{0, 0, 0, 0}, 2);
    CHECK(q(0, 0) == 1.0);
    CHECK(q(1, 0) == 0.5);
    CHECK(q(1, 1) == 0.5);

    const auto s = estimate_transition_matrix(std::vector<std::size_t>{0, 0, 1, 0}, 2, 1.0);
    CHECK(s(0, 0) == doctest::Approx(0.5));
    CHECK(s(1, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(s(1, 1) == doctest::Approx(1.0 / 3.0));

    CHECK(kind_of([] { estimate_transition_matrix(std::vector<std::size_t>{0}, 2); }) ==
          ErrorKind::InsufficientHistory);
    CHECK(kind_of([] { estimate_transition_matrix(std::vector<std::size_t>{0, 2}, 2); }) ==
          ErrorKind::StateOutOfRange);
}

TEST_CASE("estimate_transition_matrix: round trip and stochasticity") {
    std::mt19937_64 rng(99);
    const Matrix truth{{0.6, 0.3, 0.1}, {0.2, 0.5, 0.3}, {0.25, 0.25, 0.5}};
    const auto p = estimate_transition_matrix(chain_path(rng, truth, 10000), 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(p(i, j) - truth(i, j)) < 0.02);

    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 1 + rng() % 5;
        std::vector<std::size_t> idx(2 + rng() % 30);
        for (auto& i : idx) i = rng() % m;
        const double smoothing = trial % 2 ? 0.5 : 0.0;
        CHECK_NOTHROW(validate_stochastic(estimate_transition_matrix(idx, m, smoothing).matrix()));
    }
}

TEST_CASE("estimate_cross_transition pairs from[k] with to[k+1]") {
    const std::vector<std::size_t> from{0, 1, 1, 0};
    const std::vector<std::size_t> to{1, 1, 0, 0};
    const auto p = estimate_cross_transition(from, to, 2);
    // Pairs: (0,1) (1,0) (1,0)
    CHECK(p(0, 1) == 1.0);
    CHECK(p(1, 0) == 1.0);
}

TEST_CASE("estimate_lambda: one stock") {
    std::mt19937_64 rng(3);
    const Matrix truth{{0.7, 0.3}, {0.4, 0.6}};
    const auto path = chain_path(rng, truth, 200);
    const auto fit = estimate_lambda({path}, {{TransitionMatrix(truth)}});
    CHECK(fit.lambda(0, 0) == 1.0);
}

TEST_CASE("estimate_lambda: independent chains") {
    std::mt19937_64 rng(41);
    std::vector<std::vector<TransitionMatrix>> cross(2);
    cross[0] = {TransitionMatrix(Matrix{{0.9, 0.1}, {0.2, 0.8}}), TransitionMatrix(Matrix{{0.5, 0.5}, {0.5, 0.5}})};
    cross[1] = {TransitionMatrix(Matrix{{0.5, 0.5}, {0.5, 0.5}}), TransitionMatrix(Matrix{{0.15, 0.85}, {0.7, 0.3}})};
    const mtd::MtdModel m({GrowthStateSpace({1.0, 1.1}), GrowthStateSpace({1.0, 1.1})}, Matrix::identity(2), cross,
                          {DiscountRate(0.2), DiscountRate(0.2)});
    const auto fit = estimate_lambda(mtd_paths(rng, m, 10000), cross);
    CHECK(fit.lambda(0, 1) < 0.05);
    CHECK(fit.lambda(1, 0) < 0.05);
    for (std::size_t a = 0; a < 2; ++a) {
        CHECK(fit.lambda(0, a) + fit.lambda(1, a) == doctest::Approx(1.0).epsilon(1e-12));
        const auto& trace = fit.objective_trace[a];
        for (std::size_t k = 1; k < trace.size(); ++k) CHECK(trace[k] <= trace[k - 1] + 1e-15);
    }
}

TEST_CASE("estimate_lambda: mixed column") {
    std::mt19937_64 rng(77);
    std::vector<std::vector<TransitionMatrix>> cross(2);
    cross[0] = {TransitionMatrix(Matrix{{0.9, 0.1}, {0.1, 0.9}}), TransitionMatrix(Matrix{{0.95, 0.05}, {0.1, 0.9}})};
    cross[1] = {TransitionMatrix(Matrix{{0.2, 0.8}, {0.85, 0.15}}), TransitionMatrix(Matrix{{0.8, 0.2}, {0.3, 0.7}})};
    const Matrix lambda{{0.3, 0.6}, {0.7, 0.4}};
    const mtd::MtdModel m({GrowthStateSpace({1.0, 1.1}), GrowthStateSpace({1.0, 1.1})}, lambda, cross,
                          {DiscountRate(0.2), DiscountRate(0.2)});
    const auto fit = estimate_lambda(mtd_paths(rng, m, 10000), cross);
    CHECK(std::abs(fit.lambda(0, 0) - 0.3) < 0.05);
    CHECK(std::abs(fit.lambda(1, 0) - 0.7) < 0.05);
    CHECK(std::abs(fit.lambda(0, 1) - 0.6) < 0.05);
    for (const auto& trace : fit.objective_trace)
        for (std::size_t k = 1; k < trace.size(); ++k) CHECK(trace[k] <= trace[k - 1] + 1e-15);
}

TEST_CASE("estimate_lambda argument checks") {
    std::vector<std::vector<TransitionMatrix>> cross(2, std::vector<TransitionMatrix>(2, TransitionMatrix(Matrix::identity(2))));
    CHECK(kind_of([&] { estimate_lambda({{0, 1, 0}, {0, 1}}, cross); }) == ErrorKind::DimensionMismatch);
    CHECK(kind_of([&] { estimate_lambda({{0}, {1}}, cross); }) == ErrorKind::InsufficientHistory);
}

TEST_CASE("capm examples") {
    const Vector market{0.01, -0.02, 0.03, 0.015, -0.005, 0.02, 0.0, 0.01, -0.01, 0.025};
    const auto same = capm_cost_of_equity({market, market, {0.002}});
    CHECK(same.beta == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(same.alpha) < 1e-15);

    // Orthogonal excess returns: market (+,-,+,-), stock (+,+,-,-).
    Vector m2, s2;
    const double rf = 0.001;
    for (int rep = 0; rep < 3; ++rep) {
        for (double x : {0.02, -0.02, 0.02, -0.02}) m2.push_back(rf + x);
        for (double x : {0.01, 0.01, -0.01, -0.01}) s2.push_back(rf + x);
    }
    const auto flat = capm_cost_of_equity({s2, m2, {rf}});
    CHECK(std::abs(flat.beta) < 1e-12);
    CHECK(flat.k_e == doctest::Approx(rf).epsilon(1e-12));

    CHECK(kind_of([] { capm_cost_of_equity({Vector(10, 0.01), Vector(10, 0.02), {0.0}}); }) ==
          ErrorKind::ZeroVarianceMarket);
    CHECK(kind_of([] { capm_cost_of_equity({Vector(5, 0.01), Vector(5, 0.02), {0.0}}); }) ==
          ErrorKind::InsufficientHistory);
    CHECK(kind_of([] { capm_cost_of_equity({Vector(9, 0.01), Vector(10, 0.02), {0.0}}); }) ==
          ErrorKind::DimensionMismatch);
}

TEST_CASE("capm recovers a planted beta") {
    std::mt19937_64 rng(1300);
    std::normal_distribution<double> mkt(0.006, 0.05), eps(0.0, 0.01);
    Vector s, m, rf;
    for (int t = 0; t < 500; ++t) {
        rf.push_back(0.001 + 0.0005 * std::sin(t / 20.0));
        const double zm = mkt(rng);
        m.push_back(rf.back() + zm);
        s.push_back(rf.back() + 1.3 * zm + eps(rng));
    }
    const auto e = capm_cost_of_equity({s, m, rf});
    CHECK(std::abs(e.beta - 1.3) < 0.05);
    const double rf_bar = std::accumulate(rf.begin(), rf.end(), 0.0) / 500.0;
    const double rm_bar = std::accumulate(m.begin(), m.end(), 0.0) / 500.0;
    CHECK(e.k_e == doctest::Approx(rf_bar + e.beta * (rm_bar - rf_bar)).epsilon(1e-12));
}

TEST_CASE("capm beta is linear in stock excess returns") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(0.0, 0.04);
    const double rf = 0.002;
    Vector s, m;
    for (int t = 0; t < 60; ++t) {
        m.push_back(rf + z(rng));
        s.push_back(rf + 0.8 * (m.back() - rf) + z(rng) / 3);
    }
    const double base = capm_cost_of_equity({s, m, {rf}}).beta;
    for (double c : {-2.0, 0.5, 3.0, 10.0}) {
        Vector scaled;
        for (double x : s) scaled.push_back(rf + c * (x - rf));
        CHECK(capm_cost_of_equity({scaled, m, {rf}}).beta == doctest::Approx(c * base).epsilon(1e-10));
    }
}

TEST_CASE("constant growth pipeline reproduces the Gordon price") {
    Vector divs{1.0};
    for (int t = 0; t < 20; ++t) divs.push_back(divs.back() * 1.02);
    const auto growth = growth_series(divs);
    CHECK(distinct_values(growth) == 1);
    const auto d = discretize_states(growth, 1);
    const auto p = estimate_transition_matrix(d.indices, 1);
    CHECK(p(0, 0) == 1.0);
    const MarkovGrowthModel model(d.states, p, DiscountRate(0.1));
    const double psi = markov::solve_psi1(model).psi1()[0];
    const double d0 = divs.back();
    CHECK(d0 * psi == doctest::Approx(deterministic::gordon_price({d0, 0.02, 0.1})).epsilon(1e-12));
}
