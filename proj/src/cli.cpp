#include "ddm/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>

#include "ddm/binomial.hpp"
#include "ddm/deterministic.hpp"
#include "ddm/estimation.hpp"
#include "ddm/io.hpp"
#include "ddm/markov.hpp"
#include "ddm/mtd.hpp"
#include "ddm/sim.hpp"

namespace ddm::cli {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::uint64_t kDefaultSeed = 1;

const std::vector<std::string> kModels = {
    "gordon",       "two-stage",    "h-model",          "three-stage", "hurley-additive", "hurley-geometric",
    "yao-additive", "yao-geometric", "markov",          "mtd",         "capm"};

struct ScalarFlag {
    const char* name;
    const char* help;
};

const std::vector<ScalarFlag> kScalars = {
    {"d0", "current dividend D(0)"},
    {"g", "growth rate (0.02 = 2%)"},
    {"g-h", "high-phase growth rate"},
    {"ke-h", "high-phase required return"},
    {"n", "high-phase length in periods"},
    {"g-st", "stable-phase growth rate"},
    {"ke-st", "stable-phase required return"},
    {"g-a", "initial growth rate"},
    {"g-n", "long-run growth rate"},
    {"h", "half-length of the growth decline"},
    {"eps0", "current earnings per share"},
    {"pi-a", "initial payout ratio"},
    {"pi-n", "long-run payout ratio"},
    {"n1", "end of the high-growth phase"},
    {"n2", "end of the decline phase"},
    {"ke-d", "decline-phase required return"},
    {"delta", "additive dividend step"},
    {"q", "probability of an up-move"},
    {"qb", "probability of bankruptcy"},
    {"step", "trinomial step (additive amount or growth rate)"},
    {"qu", "probability of an up-move"},
    {"qd", "probability of a down-move"},
    {"rf", "constant risk-free rate per period"},
};

struct Options {
    std::string model;
    std::string format = "table";
    std::string params;
    std::string input;
    std::vector<std::string> inputs;
    std::string stock;
    std::string market;
    std::string rf_input;
    std::uint64_t seed = 0;
    std::size_t paths = 100000;
    std::size_t horizon = 0;
    std::size_t threads = 1;
    std::size_t states = 2;
    double smoothing = 0.0;
    std::vector<double> ke;
    std::vector<double> rates;
    std::vector<double> matrix;
    std::vector<double> decline;
    std::vector<std::size_t> state;
    std::map<std::string, double> scalars;
    std::map<std::string, CLI::Option*> flags;
};

std::string underscore(std::string s) {
    std::replace(s.begin(), s.end(), '-', '_');
    return s;
}

void add_options(CLI::App* cmd, Options& o) {
    // `--h` is the H-model half-life, so help is long-form only.
    cmd->set_help_flag("--help", "print this help and exit");
    auto flag = [&](const std::string& name, CLI::Option* opt) { o.flags[name] = opt; };
    flag("model", cmd->add_option("--model", o.model, "model identifier")
                      ->check(CLI::IsMember(kModels)));
    cmd->add_option("--format", o.format, "output format")->check(CLI::IsMember({"table", "json"}));
    flag("params", cmd->add_option("--params", o.params, "re-run from a JSON report's model and inputs"));
    flag("input", cmd->add_option("--input", o.input, "dividend CSV (date,dividend)"));
    flag("inputs", cmd->add_option("--inputs", o.inputs, "one dividend CSV per stock (mtd)"));
    flag("stock", cmd->add_option("--stock", o.stock, "stock returns CSV (date,return)"));
    flag("market", cmd->add_option("--market", o.market, "market returns CSV (date,return)"));
    flag("rf-input", cmd->add_option("--rf-input", o.rf_input, "risk-free returns CSV (date,return)"));
    flag("seed", cmd->add_option("--seed", o.seed, "simulation seed (default: $DDM_SEED, else 1)"));
    cmd->add_option("--paths", o.paths, "Monte Carlo paths")->check(CLI::PositiveNumber);
    cmd->add_option("--horizon", o.horizon, "dividends per path (0 = automatic)");
    cmd->add_option("--threads", o.threads, "simulation threads (0 = all cores)");
    flag("states", cmd->add_option("--states", o.states, "growth states to fit per stock")
                       ->check(CLI::PositiveNumber));
    flag("smoothing", cmd->add_option("--smoothing", o.smoothing, "additive smoothing for transition counts")
                          ->check(CLI::NonNegativeNumber));
    flag("ke", cmd->add_option("--ke", o.ke, "required return(s), one per stock for mtd"));
    flag("rates", cmd->add_option("--rates", o.rates, "growth rate of each Markov state (0.02 = 2%)"));
    flag("matrix", cmd->add_option("--matrix", o.matrix, "Markov transition matrix, row-major"));
    flag("decline", cmd->add_option("--decline", o.decline, "three-stage decline-phase dividends"));
    flag("state", cmd->add_option("--state", o.state, "current growth state index (one per stock for mtd)"));
    for (const auto& s : kScalars) {
        o.scalars[s.name] = 0.0;
        flag(s.name, cmd->add_option(std::string("--") + s.name, o.scalars[s.name], s.help));
    }
}

bool given(const Options& o, const std::string& name) { return o.flags.at(name)->count() > 0; }

Json gather_inputs(const Options& o) {
    Json in = Json::object();
    for (const auto& s : kScalars) {
        if (given(o, s.name)) in[underscore(s.name)] = o.scalars.at(s.name);
    }
    if (given(o, "ke")) in["ke"] = (o.ke.size() == 1 && o.model != "mtd") ? Json(o.ke.front()) : Json(o.ke);
    if (given(o, "input")) in["input"] = o.input;
    if (given(o, "inputs")) in["inputs"] = o.inputs;
    if (given(o, "stock")) in["stock"] = o.stock;
    if (given(o, "market")) in["market"] = o.market;
    if (given(o, "rf-input")) in["rf_input"] = o.rf_input;
    if (given(o, "states")) in["states"] = o.states;
    if (given(o, "smoothing")) in["smoothing"] = o.smoothing;
    if (given(o, "rates")) in["rates"] = o.rates;
    if (given(o, "matrix")) in["matrix"] = o.matrix;
    if (given(o, "decline")) in["decline_dividends"] = o.decline;
    if (given(o, "state")) {
        in["state"] = (o.state.size() == 1 && o.model != "mtd") ? Json(o.state.front()) : Json(o.state);
    }
    return in;
}

// ---------------------------------------------------------------------------
// Input access

const Json& need(const Json& in, const char* key) {
    const auto it = in.find(key);
    if (it == in.end()) {
        std::string flag = key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        fail(ErrorKind::InvalidArgument, "missing parameter --" + flag);
    }
    return *it;
}

double num(const Json& in, const char* key) { return need(in, key).get<double>(); }

int integer(const Json& in, const char* key) {
    const double v = num(in, key);
    if (v != std::floor(v) || std::abs(v) > 1e9) {
        fail(ErrorKind::InvalidArgument, std::string(key) + " must be an integer");
    }
    return static_cast<int>(v);
}

double num_or(const Json& in, const char* key, double fallback) {
    return in.contains(key) ? in.at(key).get<double>() : fallback;
}

std::vector<Vector> rows_of(const Matrix& m) {
    std::vector<Vector> rows;
    for (std::size_t i = 0; i < m.rows(); ++i) rows.emplace_back(m.row(i).begin(), m.row(i).end());
    return rows;
}

Json matrix_json(const Matrix& m) { return rows_of(m); }

Matrix matrix_from(const Json& j, std::size_t m) {
    if (j.is_array() && !j.empty() && j.front().is_array()) {
        return Matrix::from_rows(j.get<std::vector<Vector>>());
    }
    const auto flat = j.get<Vector>();
    if (flat.size() != m * m) {
        fail(ErrorKind::DimensionMismatch, "matrix needs " + std::to_string(m * m) + " entries, got " +
                                               std::to_string(flat.size()));
    }
    Matrix p(m, m);
    std::copy(flat.begin(), flat.end(), p.row(0).begin());
    return p;
}

Json conditions_json(const markov::TransversalityReport& r) {
    return Json{{"A1", r.a1_holds}, {"A2", r.a2_holds}};
}

[[noreturn]] void unsupported(const std::string& command, const std::string& model) {
    fail(ErrorKind::InvalidArgument, "'" + command + "' is not available for model " + model);
}

struct Context {
    std::string command;
    std::string model;
    sim::SimConfig sim;
    std::ostream& err;
    Json inputs;
    Json report;

    void warn(const std::string& msg) const { err << "warning: " << msg << '\n'; }
};

void put_summary(Json& out, const sim::SimSummary& s) {
    out["price"] = s.mean;
    out["std_error"] = s.std_error;
    out["second_moment"] = s.second_moment;
    out["second_moment_se"] = s.second_moment_se;
    out["variance"] = s.variance;
    out["tail_bound"] = s.tail_bound;
    out["horizon"] = s.horizon;
    out["paths"] = s.paths;
}

// ---------------------------------------------------------------------------
// Closed-form models

void run_deterministic(Context& c) {
    if (c.command != "value") unsupported(c.command, c.model);
    namespace d = deterministic;
    const Json& in = c.inputs;
    double price = 0.0;
    if (c.model == "gordon") {
        price = d::gordon_price({num(in, "d0"), num(in, "g"), num(in, "ke")});
    } else if (c.model == "two-stage") {
        price = d::two_stage_price({num(in, "d0"), num(in, "g_h"), num(in, "ke_h"), integer(in, "n"),
                                    num(in, "g_st"), num(in, "ke_st")});
    } else if (c.model == "h-model") {
        price = d::h_model_price({num(in, "d0"), num(in, "g_a"), num(in, "g_n"), num(in, "h"), num(in, "ke")});
    } else {
        d::ThreeStageParams p{num(in, "eps0"), num(in, "pi_a"),  num(in, "pi_n"), num(in, "g_a"),
                              num(in, "g_n"),  integer(in, "n1"), integer(in, "n2"), num(in, "ke_h"),
                              num(in, "ke_d"), num(in, "ke_st"), {}};
        if (in.contains("decline_dividends")) {
            p.decline_dividends = in.at("decline_dividends").get<Vector>();
        } else {
            p.decline_dividends = d::interpolate_decline_dividends(p);
            c.inputs["decline_dividends"] = p.decline_dividends;
        }
        price = d::three_stage_price(p);
    }
    c.report["price"] = price;
}

void run_binomial(Context& c) {
    namespace b = binomial;
    const Json& in = c.inputs;
    const bool additive = c.model.ends_with("additive");
    const bool hurley = c.model.starts_with("hurley");
    double price = 0.0;
    std::optional<double> lower;
    sim::IidDividendProcess process;
    const double d0 = num(in, "d0");
    if (hurley && additive) {
        const b::BinomialAdditiveParams p{d0, num(in, "delta"), num(in, "q"), num_or(in, "qb", 0.0),
                                          num(in, "ke")};
        const auto v = b::hurley_additive(p);
        price = v.value;
        lower = v.lower_bound;
        process = sim::IidDividendProcess::hurley_additive(p);
    } else if (hurley) {
        const b::BinomialGeometricParams p{d0, num(in, "g"), num(in, "q"), num_or(in, "qb", 0.0), num(in, "ke")};
        const auto v = b::hurley_geometric(p);
        price = v.value;
        lower = v.lower_bound;
        process = sim::IidDividendProcess::hurley_geometric(p);
    } else {
        const b::TrinomialParams p{d0, num(in, "step"), num(in, "qu"), num(in, "qd"), num(in, "ke")};
        price = additive ? b::yao_additive(p) : b::yao_geometric(p);
        process = sim::IidDividendProcess::yao(additive ? sim::StepKind::Additive : sim::StepKind::Geometric, p);
    }

    if (c.command == "value") {
        c.report["price"] = price;
        if (lower) c.report["lower_bound"] = *lower;
    } else if (c.command == "simulate") {
        Json mc = Json::object();
        const auto s = sim::simulate_dividend_paths(process, d0, c.sim);
        put_summary(mc, s);
        if (additive) mc["floor_hits"] = s.floor_hits;
        c.report["monte_carlo"] = mc;
        c.report["analytic"] = Json{{"price", price}};
        if (lower) c.report["analytic"]["lower_bound"] = *lower;
    } else {
        unsupported(c.command, c.model);
    }
}

// ---------------------------------------------------------------------------
// Univariate Markov

std::size_t cap_states(const Context& c, std::size_t requested, std::size_t distinct, const std::string& what) {
    if (distinct < requested) {
        c.warn(what + " has " + std::to_string(distinct) + " distinct growth values; using " +
               std::to_string(distinct) + " states instead of " + std::to_string(requested));
        return distinct;
    }
    return requested;
}

io::Ingested load(const Context& c, const std::string& path) {
    auto ing = io::ingest_dividends(path);
    for (const auto& w : ing.warnings) c.warn(w);
    return ing;
}

Json fit_markov(Context& c) {
    const Json& in = c.inputs;
    const auto path = need(in, "input").get<std::string>();
    const auto requested = in.contains("states") ? in.at("states").get<std::size_t>() : std::size_t{2};
    const double smoothing = num_or(in, "smoothing", 0.0);
    const auto ing = load(c, path);
    const Vector growth = estimation::growth_series(ing.series);
    const std::size_t m = cap_states(c, requested, estimation::distinct_values(growth), path);
    const auto fit = estimation::discretize_states(growth, m);
    const auto p = estimation::estimate_transition_matrix(fit.indices, m, smoothing);
    const std::size_t state = fit.states.nearest(1.0 + growth.back());

    c.report["source"] = Json{{"input", path},
                              {"observations", ing.series.size()},
                              {"states_requested", requested},
                              {"smoothing", smoothing}};
    Json resolved = Json::object();
    resolved["factors"] = fit.states.factors();
    resolved["matrix"] = matrix_json(p.matrix());
    resolved["ke"] = need(in, "ke");
    resolved["d0"] = ing.series.last_dividend();
    resolved["state"] = state;
    return resolved;
}

MarkovGrowthModel markov_model(Context& c) {
    if (c.inputs.contains("input")) {
        c.inputs = fit_markov(c);
    } else if (c.inputs.contains("rates")) {
        Vector factors;
        for (double r : c.inputs.at("rates").get<Vector>()) factors.push_back(1.0 + r);
        c.inputs.erase("rates");
        c.inputs["factors"] = factors;
    }
    Json& in = c.inputs;
    const auto factors = need(in, "factors").get<Vector>();
    const Matrix p = matrix_from(need(in, "matrix"), factors.size());
    in["matrix"] = matrix_json(p);
    if (!in.contains("state")) in["state"] = 0;
    return MarkovGrowthModel(GrowthStateSpace(factors), TransitionMatrix(p), DiscountRate(num(in, "ke")));
}

void run_markov(Context& c) {
    const auto model = markov_model(c);
    const Json& in = c.inputs;
    const double d0 = num(in, "d0");
    const auto state = need(in, "state").get<std::size_t>();
    if (state >= model.size()) fail(ErrorKind::StateOutOfRange, "state " + std::to_string(state));

    if (c.command == "estimate") {
        if (!c.report.contains("source")) fail(ErrorKind::InvalidArgument, "estimate needs --input");
        Vector rates;
        for (double f : model.states().factors()) rates.push_back(f - 1.0);
        c.report["states"] = model.states().factors();
        c.report["growth_rates"] = rates;
        c.report["matrix"] = matrix_json(model.transition().matrix());
        c.report["current_state"] = state;
        c.report["d0"] = d0;
        return;
    }

    const auto cond = markov::check_conditions(model);
    c.report["g_bar"] = cond.g_bar;
    c.report["g_bar2"] = cond.g_bar2;
    c.report["conditions"] = conditions_json(cond);

    if (c.command == "value") {
        const auto s = markov::solve_psi1(model);
        Vector prices;
        for (double x : s.psi1()) prices.push_back(d0 * x);
        c.report["price"] = prices[state];
        c.report["prices"] = prices;
        c.report["psi1"] = s.psi1();
        c.report["residuals"] = Json{{"psi1", markov::psi1_residual(model, s.psi1())}};
    } else if (c.command == "risk") {
        const auto s = markov::solve(model);
        Vector variances;
        for (std::size_t i = 0; i < model.size(); ++i) {
            variances.push_back(markov::price_and_risk(model, s, i, d0).variance);
        }
        const auto pr = markov::price_and_risk(model, s, state, d0);
        c.report["price"] = pr.price;
        c.report["second_moment"] = pr.second_moment;
        c.report["variance"] = pr.variance;
        c.report["variances"] = variances;
        c.report["psi1"] = s.psi1();
        c.report["psi2"] = *s.psi2();
        c.report["residuals"] = Json{{"psi1", markov::psi1_residual(model, s.psi1())}};
    } else {
        const auto s = markov::solve(model);
        const auto pr = markov::price_and_risk(model, s, state, d0);
        Json mc = Json::object();
        put_summary(mc, sim::simulate_dividend_paths(model, state, d0, c.sim));
        c.report["monte_carlo"] = mc;
        c.report["analytic"] = Json{{"price", pr.price}, {"second_moment", pr.second_moment}, {"variance", pr.variance}};
    }
}

// ---------------------------------------------------------------------------
// Multivariate (MTD)

Json fit_mtd(Context& c) {
    const Json& in = c.inputs;
    const auto paths = need(in, "inputs").get<std::vector<std::string>>();
    if (paths.empty()) fail(ErrorKind::InvalidArgument, "--inputs needs at least one file");
    const auto requested = in.contains("states") ? in.at("states").get<std::size_t>() : std::size_t{2};
    const double smoothing = num_or(in, "smoothing", 0.0);

    std::vector<DividendSeries> series;
    std::vector<Vector> growth;
    std::size_t len = SIZE_MAX;
    for (const auto& p : paths) {
        series.push_back(load(c, p).series);
        growth.push_back(estimation::growth_series(series.back()));
        len = std::min(len, growth.back().size());
    }
    // Align on the most recent `len` growth observations of every stock.
    for (auto& g : growth) g.erase(g.begin(), g.end() - static_cast<std::ptrdiff_t>(len));
    for (std::size_t b = 1; b < series.size(); ++b) {
        const auto& o0 = series[0].observations();
        const auto& ob = series[b].observations();
        if (!std::equal(o0.end() - static_cast<std::ptrdiff_t>(len + 1), o0.end(),
                        ob.end() - static_cast<std::ptrdiff_t>(len + 1),
                        [](const auto& x, const auto& y) { return x.date == y.date; })) {
            c.warn(paths[b] + ": dates differ from " + paths[0] + "; aligning on the last " +
                   std::to_string(len + 1) + " observations");
        }
    }
    std::size_t distinct = SIZE_MAX;
    for (const auto& g : growth) distinct = std::min(distinct, estimation::distinct_values(g));
    const std::size_t m = cap_states(c, requested, distinct, "aligned input");

    std::vector<estimation::Discretization> fits;
    std::vector<std::vector<std::size_t>> idx;
    for (const auto& g : growth) {
        fits.push_back(estimation::discretize_states(g, m));
        idx.push_back(fits.back().indices);
    }
    const std::size_t gamma = paths.size();
    std::vector<std::vector<TransitionMatrix>> cross(gamma);
    for (std::size_t b = 0; b < gamma; ++b) {
        for (std::size_t a = 0; a < gamma; ++a) {
            cross[b].push_back(estimation::estimate_cross_transition(idx[b], idx[a], m, smoothing));
        }
    }
    const auto lam = estimation::estimate_lambda(idx, cross);

    Json factors = Json::array(), cross_json = Json::array(), d0 = Json::array(), state = Json::array();
    for (std::size_t b = 0; b < gamma; ++b) {
        factors.push_back(fits[b].states.factors());
        Json row = Json::array();
        for (std::size_t a = 0; a < gamma; ++a) row.push_back(matrix_json(cross[b][a].matrix()));
        cross_json.push_back(row);
        d0.push_back(series[b].last_dividend());
        state.push_back(fits[b].states.nearest(1.0 + growth[b].back()));
    }
    c.report["source"] = Json{{"inputs", paths},
                              {"aligned_growth_observations", len},
                              {"states_requested", requested},
                              {"smoothing", smoothing},
                              {"lambda_iterations", lam.iterations}};
    Json resolved = Json::object();
    resolved["factors"] = factors;
    resolved["lambda"] = matrix_json(lam.lambda);
    resolved["cross"] = cross_json;
    resolved["ke"] = need(in, "ke");
    resolved["d0"] = d0;
    resolved["state"] = state;
    return resolved;
}

mtd::MtdModel mtd_model(Context& c) {
    if (c.inputs.contains("inputs")) c.inputs = fit_mtd(c);
    Json& in = c.inputs;
    std::vector<GrowthStateSpace> states;
    for (const auto& f : need(in, "factors")) states.emplace_back(f.get<Vector>());
    const std::size_t gamma = states.size();
    const Matrix lambda = Matrix::from_rows(need(in, "lambda").get<std::vector<Vector>>());
    std::vector<std::vector<TransitionMatrix>> cross(gamma);
    const Json& cj = need(in, "cross");
    if (cj.size() != gamma) fail(ErrorKind::DimensionMismatch, "cross kernels must be gamma x gamma");
    for (std::size_t b = 0; b < gamma; ++b) {
        for (const auto& p : cj.at(b)) cross[b].emplace_back(Matrix::from_rows(p.get<std::vector<Vector>>()));
    }
    Vector ke = need(in, "ke").is_array() ? in.at("ke").get<Vector>() : Vector{num(in, "ke")};
    if (ke.size() == 1 && gamma > 1) {
        ke.assign(gamma, ke.front());
        in["ke"] = ke;
    }
    if (ke.size() != gamma) fail(ErrorKind::DimensionMismatch, "need one --ke per stock");
    std::vector<DiscountRate> discounts;
    for (double k : ke) discounts.emplace_back(k);
    return mtd::MtdModel(std::move(states), lambda, std::move(cross), std::move(discounts));
}

double joint_psi1_residual(const mtd::MtdModel& m, const Matrix& q, std::size_t alpha, const Vector& psi) {
    const double r = m.discount(alpha).gross();
    double worst = 0.0;
    for (std::size_t a = 0; a < q.rows(); ++a) {
        double rhs = 0.0;
        for (std::size_t j = 0; j < q.cols(); ++j) {
            const double g = m.states(alpha)[m.decode(j)[alpha]];
            rhs += q(a, j) * g * (psi[j] + 1.0);
        }
        worst = std::max(worst, std::abs(psi[a] - rhs / r));
    }
    return worst;
}

void run_mtd(Context& c) {
    const auto model = mtd_model(c);
    const Json& in = c.inputs;
    const std::size_t gamma = model.stocks();
    const auto d0 = need(in, "d0").get<Vector>();
    const mtd::JointState state(need(in, "state").get<std::vector<std::size_t>>());
    if (d0.size() != gamma || state.stocks() != gamma) {
        fail(ErrorKind::DimensionMismatch, "need one d0 and one state per stock");
    }
    const std::size_t at = model.encode(state);

    if (c.command == "estimate") {
        if (!c.report.contains("source")) fail(ErrorKind::InvalidArgument, "estimate needs --inputs");
        c.report["states"] = in.at("factors");
        c.report["lambda"] = in.at("lambda");
        c.report["cross"] = in.at("cross");
        c.report["current_state"] = in.at("state");
        c.report["d0"] = d0;
        return;
    }

    const auto conds = mtd::check_multi_conditions(model);
    Json g_bar = Json::array(), g_bar2 = Json::array(), conditions = Json::array();
    for (const auto& r : conds) {
        g_bar.push_back(r.g_bar);
        g_bar2.push_back(r.g_bar2);
        conditions.push_back(conditions_json(r));
    }
    c.report["g_bar"] = g_bar;
    c.report["g_bar2"] = g_bar2;
    c.report["conditions"] = conditions;

    const auto s = c.command == "value" ? mtd::solve_joint_psi1(model) : mtd::solve_all(model);
    Vector price;
    for (std::size_t a = 0; a < gamma; ++a) price.push_back(d0[a] * s.psi1[a][at]);

    if (c.command == "value") {
        const Matrix q = model.joint_transition();
        Json psi1 = Json::array(), res = Json::array();
        for (std::size_t a = 0; a < gamma; ++a) {
            psi1.push_back(s.psi1[a]);
            res.push_back(joint_psi1_residual(model, q, a, s.psi1[a]));
        }
        c.report["price"] = price;
        c.report["psi1"] = psi1;
        c.report["residuals"] = Json{{"psi1", res}};
        return;
    }

    const Matrix cov = mtd::covariance_matrix(model, s, state, d0);
    if (c.command == "risk") {
        Json psi1 = Json::array(), psi2 = Json::array();
        Vector variance;
        for (std::size_t a = 0; a < gamma; ++a) {
            psi1.push_back(s.psi1[a][at]);
            psi2.push_back((*s.psi2[a])[at]);
            variance.push_back(cov(a, a));
        }
        c.report["price"] = price;
        c.report["psi1"] = psi1;
        c.report["psi2"] = psi2;
        c.report["variance"] = variance;
        c.report["covariance"] = matrix_json(cov);
        return;
    }

    const auto js = sim::simulate_dividend_paths(model, state, d0, c.sim);
    Json mc = Json::object();
    Vector mc_price, mc_se;
    for (const auto& p : js.per_stock) {
        mc_price.push_back(p.mean);
        mc_se.push_back(p.std_error);
    }
    mc["price"] = mc_price;
    mc["std_error"] = mc_se;
    mc["covariance"] = matrix_json(js.covariance);
    mc["covariance_se"] = matrix_json(js.covariance_se);
    mc["horizon"] = js.horizon;
    mc["paths"] = c.sim.paths;
    c.report["monte_carlo"] = mc;
    c.report["analytic"] = Json{{"price", price}, {"covariance", matrix_json(cov)}};
}

// ---------------------------------------------------------------------------
// CAPM

void run_capm(Context& c) {
    if (c.command != "estimate") unsupported(c.command, c.model);
    const Json& in = c.inputs;
    const auto stock = io::ingest_returns(need(in, "stock").get<std::string>());
    const auto market = io::ingest_returns(need(in, "market").get<std::string>());
    std::map<std::chrono::sys_days, double> rf_by_date;
    const bool rf_series = in.contains("rf_input");
    if (rf_series) {
        for (const auto& r : io::ingest_returns(in.at("rf_input").get<std::string>())) {
            rf_by_date[std::chrono::sys_days(r.date)] = r.value;
        }
    } else if (!in.contains("rf")) {
        fail(ErrorKind::InvalidArgument, "missing parameter --rf or --rf-input");
    }
    std::map<std::chrono::sys_days, double> market_by_date;
    for (const auto& r : market) market_by_date[std::chrono::sys_days(r.date)] = r.value;

    estimation::CapmInputs ci;
    std::size_t dropped = 0;
    for (const auto& r : stock) {
        const auto day = std::chrono::sys_days(r.date);
        const auto mk = market_by_date.find(day);
        const auto rf = rf_by_date.find(day);
        if (mk == market_by_date.end() || (rf_series && rf == rf_by_date.end())) {
            ++dropped;
            continue;
        }
        ci.stock_returns.push_back(r.value);
        ci.market_returns.push_back(mk->second);
        if (rf_series) ci.risk_free.push_back(rf->second);
    }
    if (!rf_series) ci.risk_free = {num(in, "rf")};
    if (dropped > 0 || ci.stock_returns.size() != market.size()) {
        c.warn("using " + std::to_string(ci.stock_returns.size()) + " dates common to all return files");
    }
    const auto est = estimation::capm_cost_of_equity(ci);
    c.report["beta"] = est.beta;
    c.report["alpha"] = est.alpha;
    c.report["k_e"] = est.k_e;
    c.report["observations"] = ci.stock_returns.size();
}

// ---------------------------------------------------------------------------
// Output

std::string fmt(const Json& v) {
    if (v.is_number_float()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
        return buf;
    }
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

bool scalar(const Json& v) { return !v.is_array() && !v.is_object(); }

bool flat(const Json& v) {
    return v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& x) { return scalar(x); });
}

void render(std::ostream& out, const std::string& key, const Json& v, int indent) {
    const std::string pad(static_cast<std::size_t>(indent), ' ');
    if (scalar(v) || flat(v)) {
        std::string label = pad + key;
        if (label.size() < 22) label.resize(22, ' ');
        out << label << ' ';
        if (scalar(v)) {
            out << fmt(v);
        } else {
            for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "  " : "") << fmt(v[i]);
        }
        out << '\n';
        return;
    }
    out << pad << key << '\n';
    if (v.is_object()) {
        for (const auto& [k, x] : v.items()) render(out, k, x, indent + 2);
    } else {
        for (std::size_t i = 0; i < v.size(); ++i) render(out, "[" + std::to_string(i) + "]", v[i], indent + 2);
    }
}

void print_table(std::ostream& out, const Json& report) {
    for (const auto& [k, v] : report.items()) render(out, k, v, 0);
}

std::uint64_t parse_seed(const std::string& text) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        fail(ErrorKind::InvalidArgument, "DDM_SEED must be an unsigned integer, got '" + text + "'");
    }
    return v;
}

Json read_params(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorKind::IoError, "cannot open " + path);
    try {
        return Json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ParseError, path + ": " + e.what());
    }
}

int execute(const std::string& command, const Options& o, std::ostream& out, std::ostream& err) {
    Context c{command, {}, {}, err, Json::object(), Json::object()};
    std::optional<std::uint64_t> seed;
    if (given(o, "params")) {
        const Json p = read_params(o.params);
        c.model = need(p, "model").get<std::string>();
        c.inputs = need(p, "inputs");
        if (p.contains("seed")) seed = p.at("seed").get<std::uint64_t>();
    } else {
        c.model = o.model;
        c.inputs = gather_inputs(o);
    }
    if (c.model.empty()) fail(ErrorKind::InvalidArgument, "missing parameter --model");
    if (std::find(kModels.begin(), kModels.end(), c.model) == kModels.end()) {
        fail(ErrorKind::InvalidArgument, "unknown model " + c.model);
    }
    if (given(o, "seed")) {
        seed = o.seed;
    } else if (!seed) {
        const char* env = std::getenv("DDM_SEED");
        seed = env ? parse_seed(env) : kDefaultSeed;
    }
    c.sim.paths = o.paths;
    c.sim.horizon = o.horizon;
    c.sim.threads = o.threads;
    c.sim.seed = *seed;

    c.report["command"] = command;
    c.report["model"] = c.model;
    c.report["seed"] = *seed;

    if (c.model == "gordon" || c.model == "two-stage" || c.model == "h-model" || c.model == "three-stage") {
        run_deterministic(c);
    } else if (c.model == "markov") {
        run_markov(c);
    } else if (c.model == "mtd") {
        run_mtd(c);
    } else if (c.model == "capm") {
        run_capm(c);
    } else {
        run_binomial(c);
    }

    // Inputs go last in the table but right after the header in JSON.
    Json report = Json::object();
    for (const char* k : {"command", "model", "seed"}) report[k] = c.report[k];
    report["inputs"] = c.inputs;
    for (const auto& [k, v] : c.report.items()) {
        if (!report.contains(k)) report[k] = v;
    }
    if (o.format == "json") {
        out << report.dump(2) << '\n';
    } else {
        Json table = report;
        table.erase("inputs");
        print_table(out, table);
        render(out, "inputs", report["inputs"], 0);
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dividend discount model valuation, risk, estimation and simulation."};
    app.name("ddm");
    app.footer(
        "Growth inputs are net rates (0.02 means 2% per period); Markov models convert\n"
        "them to gross factors (1.02) internally and report fitted states as gross factors.\n"
        "Exit status: 0 success, 1 domain error, 2 I/O error.");
    app.require_subcommand(1);

    const std::array<std::pair<const char*, const char*>, 4> commands{{
        {"value", "price per model (and per growth state for Markov models)"},
        {"estimate", "fit growth states, transition matrices, mixture weights or CAPM k_e"},
        {"risk", "price variance and covariance for Markov models"},
        {"simulate", "Monte Carlo estimates with standard errors"},
    }};
    std::array<Options, 4> opts;
    std::array<CLI::App*, 4> subs{};
    for (std::size_t i = 0; i < commands.size(); ++i) {
        subs[i] = app.add_subcommand(commands[i].first, commands[i].second);
        add_options(subs[i], opts[i]);
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "InvalidArgument: " << e.what() << '\n';
        return 1;
    }

    try {
        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (subs[i]->parsed()) return execute(commands[i].first, opts[i], out, err);
        }
        return 1;
    } catch (const Error& e) {
        err << e.what() << '\n';
        return e.kind() == ErrorKind::IoError ? 2 : 1;
    } catch (const nlohmann::json::exception& e) {
        err << "InvalidArgument: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace ddm::cli
