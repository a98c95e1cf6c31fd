#include <doctest.h>

#include <cmath>

#include "check.hpp"
#include "ddm/binomial.hpp"
#include "ddm/deterministic.hpp"
#include "ddm/sim.hpp"
#include "oracles.hpp"

using namespace ddm;
using namespace ddm::binomial;
using check::kind_of;

namespace {

sim::SimConfig mc(std::uint64_t seed) {
    sim::SimConfig cfg;
    cfg.paths = 100000;
    cfg.seed = seed;
    cfg.threads = 0;
    return cfg;
}

// Σ_{i≥1} E[D(i)] / (1+k)^i with E[D(i)] = d0 + i·drift, summed term by term.
double additive_stream(double d0, double drift, double k) {
    double sum = 0.0;
    for (int i = 1; i < 20000; ++i) sum += (d0 + i * drift) / std::pow(1.0 + k, i);
    return sum;
}

}  // namespace

TEST_CASE("hurley_additive examples") {
    const auto v = hurley_additive({1, 0.1, 0.5, 0, 0.1});
    CHECK(v.value == doctest::Approx(15.5).epsilon(1e-14));
    CHECK(v.lower_bound == doctest::Approx(15.5).epsilon(1e-14));
    const auto flat = hurley_additive({2, 0.1, 0, 0, 0.08});
    CHECK(flat.value == doctest::Approx(25.0).epsilon(1e-14));
    const auto risky = hurley_additive({1, 0.1, 0.5, 0.02, 0.1});
    CHECK(risky.lower_bound < risky.value);
    CHECK(kind_of([] { hurley_additive({1, 0.1, 0.7, 0.4, 0.1}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("hurley_additive value is the discounted expected dividend stream") {
    for (double q : {0.0, 0.3, 0.8}) {
        for (double delta : {-0.05, 0.1, 0.4}) {
            const auto v = hurley_additive({1.3, delta, q, 0, 0.09});
            CHECK(std::abs(v.value - additive_stream(1.3, q * delta, 0.09)) < 1e-8);
        }
    }
}

TEST_CASE("hurley_additive with bankruptcy: simulated value below both closed forms") {
    const BinomialAdditiveParams p{1, 0.1, 0.5, 0.02, 0.1};
    const auto v = hurley_additive(p);
    const auto s = sim::simulate_dividend_paths(sim::IidDividendProcess::hurley_additive(p), 1.0, mc(3));
    CHECK(s.floor_hits == 0);
    CHECK(s.mean < v.lower_bound);
    CHECK(v.lower_bound < v.value);
    // Exact bankruptcy-adjusted value for this process.
    const double kb = p.k_e + p.q_b;
    const double exact = p.d0 * (1 - p.q_b) / kb + p.q * p.delta * (1 + p.k_e) / (kb * kb);
    CHECK(std::abs(s.mean - exact) < 3 * s.std_error);
}

TEST_CASE("hurley_geometric examples") {
    const auto v = hurley_geometric({1, 0.04, 0.5, 0, 0.07});
    CHECK(v.value == doctest::Approx(20.4).epsilon(1e-14));
    CHECK(v.lower_bound == v.value);
    CHECK(hurley_geometric({1.7, 0.03, 1, 0, 0.09}).value == doctest::Approx(deterministic::gordon_price({1.7, 0.03, 0.09})).epsilon(1e-14));
    CHECK(kind_of([] { hurley_geometric({1, 0.2, 0.5, 0, 0.07}); }) == ErrorKind::NonConvergent);
}

TEST_CASE("hurley_geometric matches Monte Carlo") {
    const BinomialGeometricParams p{1, 0.03, 0.6, 0, 0.08};
    const auto s = sim::simulate_dividend_paths(sim::IidDividendProcess::hurley_geometric(p), 1.0, mc(17));
    CHECK(std::abs(s.mean - hurley_geometric(p).value) < 3 * s.std_error);
    CHECK(s.tail_bound < 1e-8);

    // With bankruptcy the lower bound is the exact absorbed-stream value.
    const BinomialGeometricParams b{1, 0.05, 0.6, 0.01, 0.08};
    const auto sb = sim::simulate_dividend_paths(sim::IidDividendProcess::hurley_geometric(b), 1.0, mc(18));
    CHECK(std::abs(sb.mean - hurley_geometric(b).lower_bound) < 3 * sb.std_error);
}

TEST_CASE("lower_bound <= value, with equality iff q_b = 0") {
    for (double qb : {0.0, 0.01, 0.05, 0.2}) {
        const auto a = hurley_additive({1, 0.2, 0.4, qb, 0.1});
        const auto g = hurley_geometric({1, 0.05, 0.4, qb, 0.1});
        CHECK(a.lower_bound <= a.value);
        CHECK(g.lower_bound <= g.value);
        CHECK((a.lower_bound == a.value) == (qb == 0.0));
        CHECK((g.lower_bound == g.value) == (qb == 0.0));
    }
}

TEST_CASE("generalized outcomes") {
    const GeneralizedOutcomes three({{0.1, 0.3}, {0, 0.5}, {-0.05, 0.2}});
    CHECK(hurley_general_additive(1, 0.1, three) == doctest::Approx(12.2).epsilon(1e-14));
    CHECK(three.residual_probability() == doctest::Approx(0.0).epsilon(1e-14));

    const GeneralizedOutcomes one({{0.1, 0.5}});
    CHECK(one.residual_probability() == doctest::Approx(0.5));
    CHECK(hurley_general_additive(1, 0.1, one) == doctest::Approx(hurley_additive({1, 0.1, 0.5, 0, 0.1}).value).epsilon(1e-14));
    const GeneralizedOutcomes sym({{0.1, 0.3}, {-0.1, 0.3}});
    CHECK(hurley_general_additive(1, 0.1, sym) == doctest::Approx(10.0).epsilon(1e-14));

    const GeneralizedOutcomes g1({{0.04, 0.5}});
    CHECK(hurley_general_geometric(1, 0.07, g1) == doctest::Approx(hurley_geometric({1, 0.04, 0.5, 0, 0.07}).value).epsilon(1e-14));
    const GeneralizedOutcomes zero({{0.05, 0.2}, {-0.05, 0.2}});
    CHECK(hurley_general_geometric(1, 0.1, zero) == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(kind_of([] { GeneralizedOutcomes({{0.1, 0.7}, {0.2, 0.4}}); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { GeneralizedOutcomes({{0.1, -0.1}}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("generalized geometric matches Monte Carlo") {
    const GeneralizedOutcomes o({{0.05, 0.4}, {-0.02, 0.3}});
    const double v = hurley_general_geometric(1, 0.09, o);
    CHECK(v == doctest::Approx(1.014 / 0.076).epsilon(1e-13));
    const auto s = sim::simulate_dividend_paths(
        sim::IidDividendProcess::general(sim::StepKind::Geometric, o, 0.09), 1.0, mc(23));
    CHECK(std::abs(s.mean - v) < 3 * s.std_error);
}

TEST_CASE("yao models") {
    CHECK(yao_additive({1, 0.3, 0.25, 0.25, 0.1}) == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(yao_geometric({1, 0.05, 0.25, 0.25, 0.1}) == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(yao_additive({1, 0.1, 0.5, 0, 0.1}) == hurley_additive({1, 0.1, 0.5, 0, 0.1}).value);
    CHECK(yao_geometric({1, 0.04, 0.5, 0, 0.07}) == hurley_geometric({1, 0.04, 0.5, 0, 0.07}).value);
    const TrinomialParams p{1, 0.05, 0.5, 0.2, 0.08};
    CHECK(yao_geometric(p) == doctest::Approx(1.015 / 0.065).epsilon(1e-13));
    const auto s = sim::simulate_dividend_paths(sim::IidDividendProcess::yao(sim::StepKind::Geometric, p), 1.0, mc(29));
    CHECK(std::abs(s.mean - yao_geometric(p)) < 3 * s.std_error);
    CHECK(kind_of([] { yao_geometric({1, 0.2, 0.6, 0.1, 0.08}); }) == ErrorKind::NonConvergent);
}

TEST_CASE("yao depends on the drift q_u - q_d only") {
    const double base = yao_geometric({1, 0.05, 0.5, 0.2, 0.08});
    for (double c : {0.0, 0.1, 0.2}) {
        CHECK(yao_geometric({1, 0.05, 0.4 + c, 0.1 + c, 0.08}) == doctest::Approx(base).epsilon(1e-13));
        CHECK(yao_additive({1, 0.2, 0.4 + c, 0.1 + c, 0.08}) ==
              doctest::Approx(yao_additive({1, 0.2, 0.5, 0.2, 0.08})).epsilon(1e-13));
    }
}

TEST_CASE("yao additive matches Monte Carlo when no path hits zero") {
    const TrinomialParams p{2, 0.05, 0.45, 0.2, 0.1};
    const auto s = sim::simulate_dividend_paths(sim::IidDividendProcess::yao(sim::StepKind::Additive, p), 2.0, mc(31));
    if (s.floor_hits == 0) {
        CHECK(std::abs(s.mean - yao_additive(p)) < 3 * s.std_error);
    } else {
        MESSAGE("floored paths: " << s.floor_hits << ", closed form not comparable");
    }
}

TEST_CASE("geometric models are Gordon with effective growth") {
    const double k = 0.09;
    CHECK(hurley_geometric({1, 0.05, 0.6, 0, k}).value == doctest::Approx(deterministic::gordon_price({1, 0.03, k})).epsilon(1e-13));
    CHECK(hurley_geometric({1, 0.05, 0.6, 0.01, k}).lower_bound ==
          doctest::Approx(deterministic::gordon_price({1, 0.02, k})).epsilon(1e-13));
    CHECK(yao_geometric({1, 0.05, 0.5, 0.1, k}) == doctest::Approx(deterministic::gordon_price({1, 0.02, k})).epsilon(1e-13));
    const GeneralizedOutcomes o({{0.05, 0.4}, {-0.02, 0.3}});
    CHECK(hurley_general_geometric(1, k, o) == doctest::Approx(deterministic::gordon_price({1, 0.014, k})).epsilon(1e-13));
}
