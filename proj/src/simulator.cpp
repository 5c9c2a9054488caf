#include "pollinglab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <sstream>

#include "pollinglab/errors.hpp"

namespace pollinglab {

namespace {

// ---------------------------------------------------------------------------
// Counter-based RNG: one independent stream per (station, purpose), all
// derived from the master seed. Same seed => bit-identical runs.
// ---------------------------------------------------------------------------

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class CounterRng {
public:
    CounterRng() = default;
    CounterRng(std::uint64_t master, std::uint32_t station, std::uint32_t purpose) {
        key_ = mix64(master + 0x9e3779b97f4a7c15ULL * (station + 1));
        key_ = mix64(key_ ^ (0xd1342543de82ef95ULL * (purpose + 1)));
    }

    double uniform() {  // in (0, 1)
        const std::uint64_t bits = mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    double expo(double rate) { return -std::log(uniform()) / rate; }

    double normal() {
        const double u1 = uniform(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double gamma(double shape, double rate) {
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        while (true) {
            const double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0) continue;
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
        }
    }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

double sample_service(CounterRng& rng, const ServiceSpec& s) {
    switch (s.kind) {
        case DistKind::Deterministic: return s.value;
        case DistKind::Exponential: return rng.expo(s.rate);
        case DistKind::Gamma: return rng.gamma(s.shape, s.rate);
        case DistKind::FinitePointMixture: break;
    }
    throw PollingError(ErrorCode::InvalidParameter, "unsupported service kind");
}

double sample_switchover(CounterRng& rng, const SwitchoverSpec& s) {
    switch (s.kind) {
        case DistKind::Deterministic: return s.value;
        case DistKind::Exponential: return rng.expo(s.rate);
        case DistKind::Gamma: return rng.gamma(s.shape, s.rate);
        case DistKind::FinitePointMixture: {
            const double u = rng.uniform();
            double acc = 0;
            for (const auto& [v, w] : s.points) {
                acc += w;
                if (u <= acc) return v;
            }
            return s.points.back().first;
        }
    }
    throw PollingError(ErrorCode::InvalidParameter, "unsupported switchover kind");
}

// ---------------------------------------------------------------------------
// Student-t machinery for the batch-means confidence intervals
// ---------------------------------------------------------------------------

double betacf(double a, double b, double x) {
    const double eps = 3e-16, fpmin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

double betai(double a, double b, double x) {
    if (x <= 0) return 0;
    if (x >= 1) return 1;
    const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                               a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double nu) {
    const double x = nu / (nu + t * t);
    const double p = 0.5 * betai(0.5 * nu, 0.5, x);
    return t > 0 ? 1.0 - p : p;
}

}  // namespace

double student_t_quantile(double p, double dof) {
    double lo = 0.0, hi = 1000.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (student_t_cdf(mid, dof) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

// ---------------------------------------------------------------------------
// Event-driven engine
// ---------------------------------------------------------------------------

enum class Phase { Serving, Waiting, Switching };

// tie-break order for simultaneous events: service < timer < arrival < switchover
enum EvType : int { EvServiceDone = 0, EvTimer = 1, EvArrival = 2, EvSwitchDone = 3 };

struct Ev {
    double t;
    int type;
    int station;
    std::uint64_t token;  // wait token for timers
    std::uint64_t seq;
};

struct EvLater {
    bool operator()(const Ev& a, const Ev& b) const {
        if (a.t != b.t) return a.t > b.t;
        if (a.type != b.type) return a.type > b.type;
        return a.seq > b.seq;
    }
};

struct Msg {
    double arrival;
    double service_len;
};

struct SubBatch {
    std::vector<double> delay_sum;
    std::vector<std::uint64_t> count;
};

class PollingSim {
public:
    PollingSim(const SimConfig& cfg, const ValidatedModel& vm,
               std::function<void(const std::string&)> logger = {})
        : cfg_(cfg), vm_(vm), n_(vm.station_count()), logger_(std::move(logger)) {
        if (!(cfg.warmup_fraction >= 0 && cfg.warmup_fraction <= 0.5))
            throw PollingError(ErrorCode::InvalidParameter, "warmup fraction must be in [0, 0.5]");
        if (cfg.batches < 10)
            throw PollingError(ErrorCode::InvalidParameter, "need at least 10 batches");
        if (cfg.max_events == 0 && cfg.max_time <= 0)
            throw PollingError(ErrorCode::InvalidParameter, "horizon must be positive");

        arrival_rng_.resize(n_);
        service_rng_.resize(n_);
        switch_rng_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            arrival_rng_[i] = CounterRng(cfg.seed, static_cast<std::uint32_t>(i), 0);
            service_rng_[i] = CounterRng(cfg.seed, static_cast<std::uint32_t>(i), 1);
            switch_rng_[i] = CounterRng(cfg.seed, static_cast<std::uint32_t>(i), 2);
        }
        queues_.resize(n_);
        st_.assign(n_, StationAcc{});
        if (cfg.record_distributions) {
            arrival_hist_.assign(n_, std::vector<std::uint64_t>(kHistMax, 0));
            departure_hist_.assign(n_, std::vector<std::uint64_t>(kHistMax, 0));
        }
    }

    SimEstimate run();

private:
    struct StationAcc {
        double wait_total = 0;
        double wait_elapsed_integral = 0;  // integral of (t - station arrival) over waiting
        double rtilde_weighted = 0;        // switchover INTO next station, weighted by waiting
        double rtilde_weight = 0;
        double queue_integral = 0;         // time-integral of number in system
        std::uint64_t served = 0;
    };

    static constexpr std::size_t kHistMax = 512;

    const SimConfig& cfg_;
    const ValidatedModel& vm_;
    std::size_t n_;
    std::function<void(const std::string&)> logger_;

    std::priority_queue<Ev, std::vector<Ev>, EvLater> events_;
    std::uint64_t seq_ = 0;
    double now_ = 0;
    double last_t_ = 0;

    std::vector<CounterRng> arrival_rng_, service_rng_, switch_rng_;
    std::vector<std::deque<Msg>> queues_;

    // server state
    std::size_t at_ = 0;
    Phase phase_ = Phase::Switching;
    double station_arrival_ = 0;
    double deadline_ = 0;
    bool first_idle_set_ = false;
    double credit_ = 0;
    double wait_start_ = 0;
    double visit_wait_ = 0;
    std::uint64_t wait_token_ = 0;
    double pending_switch_len_ = 0;
    double prev_switch_len_ = 0;
    double current_remaining_ = 0;  // remaining service of the message in service
    double queued_work_ = 0;        // total service length of queued messages

    // statistics
    bool measuring_ = false;
    double gate_time_ = 0;
    double workload_integral_ = 0;
    std::vector<StationAcc> st_;
    std::vector<SubBatch> subs_;
    SubBatch cur_sub_;
    std::uint64_t cur_sub_count_ = 0;
    static constexpr std::uint64_t kSubBatchSize = 512;
    std::uint64_t cycles_seen_ = 0;
    double first_cycle_t_ = 0, last_cycle_t_ = 0;
    std::uint64_t events_done_ = 0;
    std::vector<std::vector<std::uint64_t>> arrival_hist_, departure_hist_;

    void log(const std::string& s) {
        if (logger_) logger_(s);
    }
    std::string stamp(const char* what) const {
        std::ostringstream os;
        os.precision(17);
        os << "t=" << now_ << " " << what << " st=" << (at_ + 1)
           << " q=" << queues_[at_].size();
        return os.str();
    }

    double timer(std::size_t i) const { return vm_.timer(i); }

    void push_event(double t, int type, int station, std::uint64_t token = 0) {
        events_.push(Ev{t, type, station, token, ++seq_});
    }

    void advance_clock(double t) {
        const double lo = std::max(last_t_, gate_time_);
        if (measuring_ && t > lo) {
            const double dt = t - lo;
            double v = queued_work_ + current_remaining_;
            if (phase_ == Phase::Serving) {
                // the server worked during [lo, t); account for work already
                // done between last_t_ and lo
                const double pre = lo - last_t_;
                v -= pre;
                workload_integral_ += v * dt - 0.5 * dt * dt;
            } else {
                workload_integral_ += v * dt;
            }
            for (std::size_t i = 0; i < n_; ++i) {
                double nsys = static_cast<double>(queues_[i].size());
                if (phase_ == Phase::Serving && at_ == i) nsys += 1.0;
                st_[i].queue_integral += nsys * dt;
            }
        }
        if (phase_ == Phase::Serving) current_remaining_ -= (t - last_t_);
        last_t_ = t;
        now_ = t;
    }

    void record_delay(std::size_t i, double delay) {
        if (!measuring_) return;
        cur_sub_.delay_sum[i] += delay;
        cur_sub_.count[i] += 1;
        st_[i].served += 1;
        if (++cur_sub_count_ >= kSubBatchSize) {
            subs_.push_back(cur_sub_);
            cur_sub_ = SubBatch{std::vector<double>(n_, 0.0), std::vector<std::uint64_t>(n_, 0)};
            cur_sub_count_ = 0;
        }
    }

    void start_service() {
        Msg& m = queues_[at_].front();
        if (m.arrival >= gate_time_) record_delay(at_, now_ - m.arrival);
        current_remaining_ = m.service_len;
        queued_work_ -= m.service_len;
        queues_[at_].pop_front();
        phase_ = Phase::Serving;
        push_event(now_ + current_remaining_, EvServiceDone, static_cast<int>(at_));
        log(stamp("service_start"));
    }

    void start_wait(double until) {
        phase_ = Phase::Waiting;
        wait_start_ = now_;
        ++wait_token_;
        push_event(until, EvTimer, static_cast<int>(at_), wait_token_);
        if (logger_) {
            std::ostringstream os;
            os << stamp("wait_start") << " until=" << until;
            log(os.str());
        }
    }

    void end_wait() {
        const double d = now_ - wait_start_;
        if (measuring_ && wait_start_ >= gate_time_) {
            st_[at_].wait_total += d;
            st_[at_].wait_elapsed_integral += d * (0.5 * (wait_start_ + now_) - station_arrival_);
        }
        visit_wait_ += d;
        if (vm_.strategy() == Strategy::I) credit_ -= d;
    }

    void depart() {
        // attribute this visit's waiting to the switchover that preceded it
        if (measuring_ && visit_wait_ > 0) {
            const std::size_t prev = (at_ + n_ - 1) % n_;
            st_[prev].rtilde_weighted += prev_switch_len_ * visit_wait_;
            st_[prev].rtilde_weight += visit_wait_;
        }
        if (measuring_ && cfg_.record_distributions) {
            const std::size_t other = vm_.next(at_);
            const std::size_t q = std::min(queues_[other].size(), kHistMax - 1);
            departure_hist_[at_][q] += 1;
        }
        pending_switch_len_ = sample_switchover(switch_rng_[at_], vm_.stations()[at_].switchover_out);
        phase_ = Phase::Switching;
        push_event(now_ + pending_switch_len_, EvSwitchDone, static_cast<int>(vm_.next(at_)));
        log(stamp("depart"));
    }

    // the queue at the current station just became (or was found) empty
    void on_idle_point() {
        const double T = timer(at_);
        switch (vm_.strategy()) {
            case Strategy::Exhaustive:
                depart();
                return;
            case Strategy::I:
                if (credit_ > 0) start_wait(now_ + credit_);
                else depart();
                return;
            case Strategy::II:
                if (now_ >= deadline_) depart();
                else start_wait(deadline_);
                return;
            case Strategy::III:
                if (!first_idle_set_) {
                    first_idle_set_ = true;
                    deadline_ = now_ + T;
                }
                if (now_ >= deadline_) depart();
                else start_wait(deadline_);
                return;
            case Strategy::IV:
                if (first_idle_set_) {  // a busy period already happened, or arrived nonempty
                    depart();
                } else if (T > 0) {
                    first_idle_set_ = true;
                    deadline_ = now_ + T;
                    start_wait(deadline_);
                } else {
                    depart();
                }
                return;
        }
    }

    void handle_arrival(const Ev& ev) {
        const std::size_t i = static_cast<std::size_t>(ev.station);
        const auto& spec = vm_.stations()[i];
        // schedule the next arrival of this station's Poisson process
        push_event(now_ + arrival_rng_[i].expo(spec.lambda), EvArrival, ev.station);
        Msg m{now_, sample_service(service_rng_[i], spec.service)};
        queues_[i].push_back(m);
        queued_work_ += m.service_len;
        if (logger_) {
            std::ostringstream os;
            os.precision(17);
            os << "t=" << now_ << " arrival st=" << (i + 1) << " q=" << queues_[i].size();
            log(os.str());
        }
        if (at_ == i && phase_ == Phase::Waiting) {
            end_wait();
            start_service();
        }
    }

    void handle_service_done(const Ev&) {
        current_remaining_ = 0;
        if (logger_) log(stamp("service_done"));
        if (vm_.strategy() == Strategy::IV) first_idle_set_ = true;  // busy period completed
        if (!queues_[at_].empty()) start_service();
        else on_idle_point();
    }

    void handle_timer(const Ev& ev) {
        if (static_cast<std::size_t>(ev.station) != at_ || phase_ != Phase::Waiting ||
            ev.token != wait_token_)
            return;  // stale
        end_wait();
        if (logger_) log(stamp("timer_expiry"));
        if (vm_.strategy() == Strategy::I) credit_ = 0;
        depart();
    }

    void handle_switch_done(const Ev& ev) {
        at_ = static_cast<std::size_t>(ev.station);
        prev_switch_len_ = pending_switch_len_;
        station_arrival_ = now_;
        visit_wait_ = 0;
        first_idle_set_ = false;
        credit_ = timer(at_);
        deadline_ = now_ + timer(at_);  // Strategy II semantics; III overwrites at first idle
        if (at_ == 0 && measuring_) {
            if (cycles_seen_ == 0) first_cycle_t_ = now_;
            last_cycle_t_ = now_;
            ++cycles_seen_;
        }
        if (measuring_ && cfg_.record_distributions) {
            const std::size_t q = std::min(queues_[at_].size(), kHistMax - 1);
            arrival_hist_[at_][q] += 1;
        }
        if (logger_) log(stamp("server_arrival"));
        if (!queues_[at_].empty()) start_service();
        else on_idle_point();
    }

    SimEstimate finalize();
};

SimEstimate PollingSim::run() {
    cur_sub_ = SubBatch{std::vector<double>(n_, 0.0), std::vector<std::uint64_t>(n_, 0)};

    // initial arrivals and the server's arrival at station 1 at time zero
    for (std::size_t i = 0; i < n_; ++i)
        push_event(arrival_rng_[i].expo(vm_.lambda(i)), EvArrival, static_cast<int>(i));
    pending_switch_len_ = 0;
    push_event(0.0, EvSwitchDone, 0);

    const std::uint64_t warmup_events =
        static_cast<std::uint64_t>(cfg_.warmup_fraction * static_cast<double>(cfg_.max_events));
    measuring_ = (warmup_events == 0);
    gate_time_ = 0;

    while (!events_.empty()) {
        if (cfg_.max_events > 0 && events_done_ >= cfg_.max_events) break;
        Ev ev = events_.top();
        events_.pop();
        if (cfg_.max_time > 0 && ev.t > cfg_.max_time) break;
        advance_clock(ev.t);
        switch (ev.type) {
            case EvArrival: handle_arrival(ev); break;
            case EvServiceDone: handle_service_done(ev); break;
            case EvTimer: handle_timer(ev); break;
            case EvSwitchDone: handle_switch_done(ev); break;
        }
        ++events_done_;
        if (!measuring_ && events_done_ >= warmup_events) {
            measuring_ = true;
            gate_time_ = now_;
        }
    }
    return finalize();
}

SimEstimate PollingSim::finalize() {
    SimEstimate out;
    out.seed = cfg_.seed;
    out.events = events_done_;
    out.sim_time = now_;
    out.stations.resize(n_);

    if (cur_sub_count_ > 0) subs_.push_back(cur_sub_);
    std::uint64_t total_served = 0;
    for (const auto& s : st_) total_served += s.served;
    out.total_served = total_served;
    if (total_served < static_cast<std::uint64_t>(cfg_.batches) * 1000)
        throw PollingError(ErrorCode::HorizonTooSmall,
                           "fewer than batches*1000 messages served after warmup");

    // merge sub-batches into `batches` contiguous macro batches
    const int B = cfg_.batches;
    const std::size_t per = subs_.size() / static_cast<std::size_t>(B);
    std::vector<std::vector<double>> batch_delay(B, std::vector<double>(n_, 0.0));
    std::vector<std::vector<double>> batch_count(B, std::vector<double>(n_, 0.0));
    for (int b = 0; b < B; ++b) {
        for (std::size_t s = b * per; s < (b + 1) * per; ++s) {
            for (std::size_t i = 0; i < n_; ++i) {
                batch_delay[b][i] += subs_[s].delay_sum[i];
                batch_count[b][i] += static_cast<double>(subs_[s].count[i]);
            }
        }
    }

    const double tq = student_t_quantile(0.995, B - 1);
    std::vector<double> w(n_);
    for (std::size_t i = 0; i < n_; ++i) w[i] = vm_.rho(i) / vm_.rho0();

    auto batch_ci = [&](const std::function<double(int)>& value_of_batch) {
        double mean = 0;
        std::vector<double> vals(B);
        for (int b = 0; b < B; ++b) {
            vals[b] = value_of_batch(b);
            mean += vals[b];
        }
        mean /= B;
        double var = 0;
        for (int b = 0; b < B; ++b) var += (vals[b] - mean) * (vals[b] - mean);
        var /= (B - 1);
        const double half = tq * std::sqrt(var / B);
        return Estimate{mean, mean - half, mean + half};
    };

    out.d_bar = batch_ci([&](int b) {
        double v = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double c = batch_count[b][i];
            v += w[i] * (c > 0 ? batch_delay[b][i] / c : 0.0);
        }
        return v;
    });
    // point estimate from the full post-warmup stream (more precise than the
    // batch-of-batches mean when counts are uneven)
    {
        double v = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            double ds = 0, c = 0;
            for (const auto& s : subs_) {
                ds += s.delay_sum[i];
                c += static_cast<double>(s.count[i]);
            }
            v += w[i] * (c > 0 ? ds / c : 0.0);
        }
        const double half = 0.5 * (out.d_bar.ci_hi - out.d_bar.ci_lo);
        out.d_bar.value = v;
        out.d_bar.ci_lo = v - half;
        out.d_bar.ci_hi = v + half;
    }

    out.cycles = cycles_seen_ > 0 ? cycles_seen_ - 1 : 0;
    out.mean_cycle_hat = out.cycles > 0 ? (last_cycle_t_ - first_cycle_t_) / static_cast<double>(out.cycles) : 0.0;
    const double span = now_ - gate_time_;
    out.mean_workload_hat = span > 0 ? workload_integral_ / span : 0.0;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < n_; ++i) {
        StationEstimate& se = out.stations[i];
        se.delay = batch_ci([&](int b) {
            const double c = batch_count[b][i];
            return c > 0 ? batch_delay[b][i] / c : 0.0;
        });
        {
            double ds = 0, c = 0;
            for (const auto& s : subs_) {
                ds += s.delay_sum[i];
                c += static_cast<double>(s.count[i]);
            }
            const double half = 0.5 * (se.delay.ci_hi - se.delay.ci_lo);
            se.delay.value = c > 0 ? ds / c : 0.0;
            se.delay.ci_lo = se.delay.value - half;
            se.delay.ci_hi = se.delay.value + half;
        }
        se.served = st_[i].served;
        se.f_hat = out.cycles > 0 ? st_[i].wait_total / static_cast<double>(out.cycles) : 0.0;
        se.waiting_observed = st_[i].wait_total > 0;
        se.w_hat = se.waiting_observed ? st_[i].wait_elapsed_integral / st_[i].wait_total : nan;
        se.r_tilde_hat =
            st_[i].rtilde_weight > 0 ? st_[i].rtilde_weighted / st_[i].rtilde_weight : nan;
        se.mean_queue = span > 0 ? st_[i].queue_integral / span : 0.0;
    }

    if (cfg_.record_distributions) {
        out.arrival_dist.resize(n_);
        out.departure_dist.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            auto normalize = [](const std::vector<std::uint64_t>& h) {
                double tot = 0;
                for (auto c : h) tot += static_cast<double>(c);
                std::vector<double> p(h.size(), 0.0);
                if (tot > 0)
                    for (std::size_t k = 0; k < h.size(); ++k)
                        p[k] = static_cast<double>(h[k]) / tot;
                return p;
            };
            out.arrival_dist[i] = normalize(arrival_hist_[i]);
            out.departure_dist[i] = normalize(departure_hist_[i]);
        }
    }
    return out;
}

}  // namespace

SimEstimate simulate(const SimConfig& config) {
    const ValidatedModel vm = validate(config.model);
    PollingSim sim(config, vm);
    return sim.run();
}

std::vector<StationEstimate> measure_quantities(const SimConfig& config) {
    return simulate(config).stations;
}

std::vector<std::string> trace(const SimConfig& config, std::uint64_t max_events) {
    const ValidatedModel vm = validate(config.model);
    SimConfig cfg = config;
    cfg.max_events = max_events;
    cfg.warmup_fraction = 0;
    std::vector<std::string> lines;
    PollingSim sim(cfg, vm, [&lines](const std::string& s) { lines.push_back(s); });
    try {
        sim.run();
    } catch (const PollingError& e) {
        if (e.code() != ErrorCode::HorizonTooSmall) throw;  // short traces serve few messages
    }
    return lines;
}

}  // namespace pollinglab
