#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pollinglab/errors.hpp"

namespace pollinglab {

enum class Strategy { Exhaustive, I, II, III, IV };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

enum class DistKind { Deterministic, Exponential, Gamma, FinitePointMixture };

/// Service time distribution of one station. Mean b and second moment b2
/// are derived on construction.
struct ServiceSpec {
    DistKind kind = DistKind::Exponential;
    double rate = 1.0;   // Exponential / Gamma rate
    double value = 0.0;  // Deterministic value
    double shape = 1.0;  // Gamma shape

    static ServiceSpec exponential(double mu);
    static ServiceSpec deterministic(double d);
    static ServiceSpec gamma(double shape, double rate);

    double mean() const;
    double second_moment() const;
    bool is_exponential() const { return kind == DistKind::Exponential; }

    bool operator==(const ServiceSpec&) const = default;
};

/// Switchover time distribution out of one station. Restricted to a closed
/// family so the Poisson-transform integrals have exact evaluations.
struct SwitchoverSpec {
    DistKind kind = DistKind::Deterministic;
    double rate = 1.0;
    double value = 0.0;
    double shape = 1.0;
    std::vector<std::pair<double, double>> points;  // (value, weight) for mixtures

    static SwitchoverSpec deterministic(double d);
    static SwitchoverSpec exponential(double theta);
    static SwitchoverSpec gamma(double shape, double rate);
    static SwitchoverSpec mixture(std::vector<std::pair<double, double>> pts);

    double mean() const;
    double second_moment() const;
    bool is_deterministic() const;

    bool operator==(const SwitchoverSpec&) const = default;
};

struct StationSpec {
    double lambda = 0.0;            // Poisson arrival rate
    ServiceSpec service;
    SwitchoverSpec switchover_out;  // switchover out of this station
    double timer = 0.0;             // wait-and-see parameter T_i

    double load() const { return lambda * service.mean(); }

    bool operator==(const StationSpec&) const = default;
};

struct PollingModel {
    std::vector<StationSpec> stations;
    Strategy strategy = Strategy::Exhaustive;

    std::size_t station_count() const { return stations.size(); }

    bool operator==(const PollingModel&) const = default;
};

/// A PollingModel that passed validate(), with the derived scalars cached.
/// Immutable; safe to share across threads.
class ValidatedModel {
public:
    const PollingModel& model() const { return model_; }
    const std::vector<StationSpec>& stations() const { return model_.stations; }
    Strategy strategy() const { return model_.strategy; }
    std::size_t station_count() const { return model_.stations.size(); }

    double lambda(std::size_t i) const { return model_.stations[i].lambda; }
    double timer(std::size_t i) const { return model_.stations[i].timer; }
    double b(std::size_t i) const { return b_[i]; }
    double b2(std::size_t i) const { return b2_[i]; }
    double r(std::size_t i) const { return r_[i]; }
    double r2(std::size_t i) const { return r2_[i]; }
    double rho(std::size_t i) const { return rho_[i]; }

    double rho0() const { return rho0_; }
    double r0() const { return r0_; }
    double r02() const { return r02_; }

    /// Index of the station the server visits after station i.
    std::size_t next(std::size_t i) const { return (i + 1) % station_count(); }

    bool all_switchovers_deterministic() const;
    bool all_service_exponential() const;

    friend ValidatedModel validate(const PollingModel& model);

private:
    PollingModel model_;
    std::vector<double> b_, b2_, r_, r2_, rho_;
    double rho0_ = 0, r0_ = 0, r02_ = 0;
};

/// Validates invariants (stability, supported analytic combinations) and
/// populates the derived scalars. Throws PollingError on rejection.
ValidatedModel validate(const PollingModel& model);

/// (r0, r0^(2)): mean and second moment of the sum of all switchover times.
std::pair<double, double> total_switchover_moments(const ValidatedModel& m);

}  // namespace pollinglab
