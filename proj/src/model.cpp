#include "pollinglab/model.hpp"

#include <cmath>
#include <sstream>

namespace pollinglab {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) {
    throw PollingError(code, msg);
}

}  // namespace

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Exhaustive: return "exhaustive";
        case Strategy::I: return "I";
        case Strategy::II: return "II";
        case Strategy::III: return "III";
        case Strategy::IV: return "IV";
    }
    return "?";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "exhaustive") return Strategy::Exhaustive;
    if (name == "I") return Strategy::I;
    if (name == "II") return Strategy::II;
    if (name == "III") return Strategy::III;
    if (name == "IV") return Strategy::IV;
    fail(ErrorCode::ParseError, "unknown strategy '" + name + "'");
}

ServiceSpec ServiceSpec::exponential(double mu) {
    if (!(mu > 0)) throw PollingError(ErrorCode::InvalidParameter, "service rate must be > 0");
    ServiceSpec s;
    s.kind = DistKind::Exponential;
    s.rate = mu;
    return s;
}

ServiceSpec ServiceSpec::deterministic(double d) {
    if (!(d >= 0)) throw PollingError(ErrorCode::InvalidParameter, "service time must be >= 0");
    ServiceSpec s;
    s.kind = DistKind::Deterministic;
    s.value = d;
    return s;
}

ServiceSpec ServiceSpec::gamma(double shape, double rate) {
    if (!(shape > 0) || !(rate > 0))
        throw PollingError(ErrorCode::InvalidParameter, "gamma shape and rate must be > 0");
    ServiceSpec s;
    s.kind = DistKind::Gamma;
    s.shape = shape;
    s.rate = rate;
    return s;
}

double ServiceSpec::mean() const {
    switch (kind) {
        case DistKind::Deterministic: return value;
        case DistKind::Exponential: return 1.0 / rate;
        case DistKind::Gamma: return shape / rate;
        case DistKind::FinitePointMixture: break;
    }
    throw PollingError(ErrorCode::InvalidParameter, "unsupported service kind");
}

double ServiceSpec::second_moment() const {
    switch (kind) {
        case DistKind::Deterministic: return value * value;
        case DistKind::Exponential: return 2.0 / (rate * rate);
        case DistKind::Gamma: return shape * (shape + 1.0) / (rate * rate);
        case DistKind::FinitePointMixture: break;
    }
    throw PollingError(ErrorCode::InvalidParameter, "unsupported service kind");
}

SwitchoverSpec SwitchoverSpec::deterministic(double d) {
    if (!(d >= 0)) throw PollingError(ErrorCode::InvalidParameter, "switchover time must be >= 0");
    SwitchoverSpec s;
    s.kind = DistKind::Deterministic;
    s.value = d;
    return s;
}

SwitchoverSpec SwitchoverSpec::exponential(double theta) {
    if (!(theta > 0)) throw PollingError(ErrorCode::InvalidParameter, "switchover rate must be > 0");
    SwitchoverSpec s;
    s.kind = DistKind::Exponential;
    s.rate = theta;
    return s;
}

SwitchoverSpec SwitchoverSpec::gamma(double shape, double rate) {
    if (!(shape > 0) || !(rate > 0))
        throw PollingError(ErrorCode::InvalidParameter, "gamma shape and rate must be > 0");
    SwitchoverSpec s;
    s.kind = DistKind::Gamma;
    s.shape = shape;
    s.rate = rate;
    return s;
}

SwitchoverSpec SwitchoverSpec::mixture(std::vector<std::pair<double, double>> pts) {
    if (pts.empty())
        throw PollingError(ErrorCode::InvalidParameter, "mixture needs at least one point");
    double wsum = 0;
    for (const auto& [v, w] : pts) {
        if (!(v >= 0)) throw PollingError(ErrorCode::InvalidParameter, "mixture value must be >= 0");
        if (!(w >= 0)) throw PollingError(ErrorCode::InvalidParameter, "mixture weight must be >= 0");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-12)
        throw PollingError(ErrorCode::InvalidParameter, "mixture weights must sum to 1");
    SwitchoverSpec s;
    s.kind = DistKind::FinitePointMixture;
    s.points = std::move(pts);
    return s;
}

double SwitchoverSpec::mean() const {
    switch (kind) {
        case DistKind::Deterministic: return value;
        case DistKind::Exponential: return 1.0 / rate;
        case DistKind::Gamma: return shape / rate;
        case DistKind::FinitePointMixture: {
            double m = 0;
            for (const auto& [v, w] : points) m += v * w;
            return m;
        }
    }
    return 0;
}

double SwitchoverSpec::second_moment() const {
    switch (kind) {
        case DistKind::Deterministic: return value * value;
        case DistKind::Exponential: return 2.0 / (rate * rate);
        case DistKind::Gamma: return shape * (shape + 1.0) / (rate * rate);
        case DistKind::FinitePointMixture: {
            double m = 0;
            for (const auto& [v, w] : points) m += v * v * w;
            return m;
        }
    }
    return 0;
}

bool SwitchoverSpec::is_deterministic() const {
    if (kind == DistKind::Deterministic) return true;
    if (kind == DistKind::FinitePointMixture) {
        // a one-point mixture is a point mass
        std::size_t massive = 0;
        for (const auto& [v, w] : points)
            if (w > 0) ++massive;
        return massive <= 1;
    }
    return false;
}

bool ValidatedModel::all_switchovers_deterministic() const {
    for (const auto& st : model_.stations)
        if (!st.switchover_out.is_deterministic()) return false;
    return true;
}

bool ValidatedModel::all_service_exponential() const {
    for (const auto& st : model_.stations)
        if (!st.service.is_exponential()) return false;
    return true;
}

ValidatedModel validate(const PollingModel& model) {
    const std::size_t n = model.stations.size();
    if (n < 1) fail(ErrorCode::InvalidParameter, "model needs at least one station");

    ValidatedModel out;
    out.model_ = model;
    out.b_.resize(n);
    out.b2_.resize(n);
    out.r_.resize(n);
    out.r2_.resize(n);
    out.rho_.resize(n);

    double rho0 = 0, r0 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& st = model.stations[i];
        if (!(st.lambda > 0)) fail(ErrorCode::InvalidParameter, "lambda must be > 0");
        if (!(st.timer >= 0)) fail(ErrorCode::InvalidParameter, "timer must be >= 0");
        out.b_[i] = st.service.mean();
        out.b2_[i] = st.service.second_moment();
        out.r_[i] = st.switchover_out.mean();
        out.r2_[i] = st.switchover_out.second_moment();
        out.rho_[i] = st.lambda * out.b_[i];
        if (!(out.rho_[i] < 1)) {
            std::ostringstream os;
            os << "station " << (i + 1) << " load rho_i = " << out.rho_[i] << " >= 1";
            fail(ErrorCode::Unstable, os.str());
        }
        rho0 += out.rho_[i];
        r0 += out.r_[i];
    }
    if (!(rho0 < 1)) {
        std::ostringstream os;
        os << "total load rho_0 = " << rho0 << " >= 1";
        fail(ErrorCode::Unstable, os.str());
    }

    // r0^(2) = sum r_i^(2) + sum_{i != j} r_i r_j
    double r02 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        r02 += out.r2_[i];
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) r02 += out.r_[i] * out.r_[j];
    }
    out.rho0_ = rho0;
    out.r0_ = r0;
    out.r02_ = r02;

    const Strategy s = model.strategy;
    const bool wait_and_see = (s != Strategy::Exhaustive);
    if ((s == Strategy::II || s == Strategy::III) && !out.all_service_exponential())
        fail(ErrorCode::UnsupportedAnalytic,
             "strategy " + std::string(strategy_name(s)) + " requires exponential service");
    if ((s == Strategy::II || s == Strategy::IV) && n != 2)
        fail(ErrorCode::UnsupportedAnalytic,
             "strategy " + std::string(strategy_name(s)) + " requires N = 2 stations");

    if (wait_and_see && r0 == 0.0) {
        for (const auto& st : model.stations)
            if (st.timer > 0)
                fail(ErrorCode::ZeroSwitchover,
                     "r0 = 0 with a nonzero timer: wait-and-see analysis assumes a switching regime");
    }
    return out;
}

std::pair<double, double> total_switchover_moments(const ValidatedModel& m) {
    return {m.r0(), m.r02()};
}

}  // namespace pollinglab
