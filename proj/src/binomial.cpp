#include "ddm/binomial.hpp"

#include <cmath>
#include <sstream>

#include "ddm/error.hpp"

namespace ddm::binomial {

namespace {

void require_basics(double d0, double k_e) {
    if (!(d0 > 0.0)) fail(ErrorKind::InvalidArgument, "d0 must be positive");
    if (!(k_e > 0.0)) fail(ErrorKind::InvalidArgument, "k_e must be positive");
}

void require_probabilities(double q, double q_other, const char* what) {
    if (!(q >= 0.0) || !(q_other >= 0.0) || q + q_other > 1.0 + 1e-12) {
        fail(ErrorKind::InvalidArgument, std::string(what) + " must be non-negative and sum to at most 1");
    }
}

// Perpetuity of d0 plus the present value of an expected additive drift per period.
double additive_value(double d0, double k, double drift) {
    return d0 / k + (1.0 / k + 1.0 / (k * k)) * drift;
}

double geometric_value(double d0, double k, double growth) {
    if (!(growth < k)) {
        std::ostringstream msg;
        msg << "expected growth " << growth << " >= discount rate " << k;
        fail(ErrorKind::NonConvergent, msg.str());
    }
    return d0 * (1.0 + growth) / (k - growth);
}

}  // namespace

GeneralizedOutcomes::GeneralizedOutcomes(std::vector<Outcome> outcomes)
    : outcomes_(std::move(outcomes)) {
    double total = 0.0;
    for (const auto& o : outcomes_) {
        if (!(o.probability >= 0.0)) fail(ErrorKind::InvalidArgument, "negative outcome probability");
        total += o.probability;
    }
    if (total > 1.0 + 1e-12) fail(ErrorKind::InvalidArgument, "outcome probabilities exceed 1");
    q0_ = total >= 1.0 ? 0.0 : 1.0 - total;
}

double GeneralizedOutcomes::drift() const noexcept {
    double acc = 0.0;
    for (const auto& o : outcomes_) acc += o.probability * o.value;
    return acc;
}

BoundedValue hurley_additive(const BinomialAdditiveParams& p) {
    require_basics(p.d0, p.k_e);
    require_probabilities(p.q, p.q_b, "q and q_b");
    const double kb = p.k_e + p.q_b;
    return {additive_value(p.d0, p.k_e, p.q * p.delta),
            p.d0 * (1.0 - p.q_b) / kb + (1.0 / kb + 1.0 / (kb * kb)) * p.q * p.delta};
}

BoundedValue hurley_geometric(const BinomialGeometricParams& p) {
    require_basics(p.d0, p.k_e);
    require_probabilities(p.q, p.q_b, "q and q_b");
    const double drift = p.q * p.g;
    return {geometric_value(p.d0, p.k_e, drift), geometric_value(p.d0, p.k_e, drift - p.q_b)};
}

double hurley_general_additive(double d0, double k_e, const GeneralizedOutcomes& outcomes) {
    require_basics(d0, k_e);
    return additive_value(d0, k_e, outcomes.drift());
}

double hurley_general_geometric(double d0, double k_e, const GeneralizedOutcomes& outcomes) {
    require_basics(d0, k_e);
    return geometric_value(d0, k_e, outcomes.drift());
}

double yao_additive(const TrinomialParams& p) {
    require_basics(p.d0, p.k_e);
    require_probabilities(p.q_u, p.q_d, "q_u and q_d");
    return additive_value(p.d0, p.k_e, (p.q_u - p.q_d) * p.step);
}

double yao_geometric(const TrinomialParams& p) {
    require_basics(p.d0, p.k_e);
    require_probabilities(p.q_u, p.q_d, "q_u and q_d");
    return geometric_value(p.d0, p.k_e, (p.q_u - p.q_d) * p.step);
}

}  // namespace ddm::binomial
