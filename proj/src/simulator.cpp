#include "mfexp/simulator.hpp"

#include <cmath>
#include <numeric>

#include "mfexp/equilibrium.hpp"
#include "mfexp/errors.hpp"

namespace mfexp {

double draw_context(const MarketConfig& model, const SeedSpec& seeds) {
    auto rng = derive_stream(seeds, StreamRole::Context);
    return model.context.sample_scaled_demand(rng);
}

DayOutcome run_day(const MarketConfig& model, double p, double zeta, const SeedSpec& seeds,
                   const DayOptions& options) {
    return run_day_at_context(model, p, zeta, draw_context(model, seeds), seeds, options);
}

DayOutcome run_day_at_context(const MarketConfig& model, double p, double zeta, double d,
                              const SeedSpec& seeds, const DayOptions& options) {
    if (model.n < 1) throw DomainError("run_day: n must be >= 1");
    if (!(zeta >= 0.0) || !(p > zeta)) throw DomainError("run_day: requires p > zeta >= 0");

    DayOutcome out;
    out.n = model.n;
    out.p = p;
    out.zeta = zeta;
    out.d = d;
    {
        auto rng = derive_stream(seeds, StreamRole::Demand);
        out.D = model.context.sample_demand(model.n, d, rng);
    }

    const auto n = static_cast<std::size_t>(model.n);
    out.epsilon.resize(n);
    out.B.resize(n);
    out.Z.resize(n);
    {
        auto rng = derive_stream(seeds, StreamRole::Perturbations);
        std::bernoulli_distribution coin(0.5);
        for (auto& e : out.epsilon) e = coin(rng) ? 1 : -1;
    }
    {
        auto rng = derive_stream(seeds, StreamRole::Features);
        const auto& outside = model.choice.outside_option();
        for (auto& b : out.B) b = outside.sample(rng);
    }

    // Beliefs: every supplier anticipates the same allocation rate.
    const auto& alloc = model.allocation;
    const auto& earn = model.earning;
    double theta_up = 0.0;
    double theta_down = 0.0;
    if (options.belief == BeliefMode::MeanField) {
        const EquilibriumPoint eq = solve_mu(p, zeta, d, model);
        out.mu_belief = eq.mu;
        const double x = d / eq.mu;
        out.q_belief = alloc.omega(x);
        theta_up = earn.earning_at_ratio(p + zeta, x, alloc);
        theta_down = earn.earning_at_ratio(p - zeta, x, alloc);
    } else {
        const double demand = static_cast<double>(model.n) * d;
        const EquilibriumPoint eq = solve_mu_finite_n(p, zeta, demand, model.n, model);
        out.mu_belief = eq.mu;
        out.q_belief = eq.q;
        theta_up = earn.earning(p + zeta, eq.q, alloc);
        theta_down = earn.earning(p - zeta, eq.q, alloc);
    }

    {
        // Common random numbers: one uniform per supplier, compared with the
        // activation probability, so higher payments never deactivate anyone.
        auto rng = derive_stream(seeds, StreamRole::Activations);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::int64_t active = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double theta = out.epsilon[i] > 0 ? theta_up : theta_down;
            const double prob = model.choice.prob(out.B[i], theta);
            const bool on = unif(rng) < prob;
            out.Z[i] = on ? 1 : 0;
            active += on ? 1 : 0;
        }
        out.T = active;
    }

    out.Dbar = static_cast<double>(out.D) / static_cast<double>(model.n);
    out.Zbar = static_cast<double>(out.T) / static_cast<double>(model.n);
    if (out.T == 0) {
        out.empty_supply = true;
        out.U = 0.0;
        out.Un = 0.0;
        return out;
    }

    const double supply = static_cast<double>(out.T);
    const double demand = static_cast<double>(out.D);
    const double served_rate = alloc.prelimit(demand, supply);
    out.settlement_multiplier = earn.settlement_multiplier(demand / supply, alloc);
    double payments = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (out.Z[i]) payments += p + zeta * out.epsilon[i];
    }
    out.U = model.revenue.prelimit(demand, supply, alloc) -
            out.settlement_multiplier * served_rate * payments;
    out.Un = out.U / static_cast<double>(model.n);
    return out;
}

QueueSimResult simulate_queue_allocation(double arrival_rate, int servers, int L,
                                         std::int64_t horizon, std::uint64_t seed,
                                         double warmup_fraction) {
    if (!(arrival_rate > 0.0)) throw DomainError("queue simulation: arrival rate must be > 0");
    if (servers < 1) throw DomainError("queue simulation: need at least one server");
    if (L < 2) throw DomainError("queue simulation: capacity L must be >= 2");
    if (horizon < 1) throw DomainError("queue simulation: horizon must be positive");

    const int max_in_system = L - 1;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> pick_server(0, servers - 1);

    std::vector<int> occupancy(static_cast<std::size_t>(servers), 0);
    // Busy servers kept in a swap-remove list for O(1) uniform selection.
    std::vector<int> busy;
    std::vector<int> slot(static_cast<std::size_t>(servers), -1);
    busy.reserve(static_cast<std::size_t>(servers));

    const auto warmup = static_cast<std::int64_t>(warmup_fraction * static_cast<double>(horizon));
    double clock = 0.0;
    double busy_area = 0.0;
    std::int64_t arrivals = 0;
    std::int64_t blocked = 0;
    std::int64_t completions = 0;

    for (std::int64_t ev = 0; ev < horizon + warmup; ++ev) {
        const double service_rate = static_cast<double>(busy.size());
        const double total = arrival_rate + service_rate;
        const double dt = -std::log1p(-unif(rng)) / total;
        const bool measuring = ev >= warmup;
        if (measuring) {
            clock += dt;
            busy_area += dt * service_rate;
        }
        if (unif(rng) * total < arrival_rate) {
            const int s = pick_server(rng);
            if (measuring) ++arrivals;
            if (occupancy[s] >= max_in_system) {
                if (measuring) ++blocked;
                continue;
            }
            if (occupancy[s]++ == 0) {
                slot[s] = static_cast<int>(busy.size());
                busy.push_back(s);
            }
        } else {
            std::uniform_int_distribution<std::size_t> pick_busy(0, busy.size() - 1);
            const std::size_t k = pick_busy(rng);
            const int s = busy[k];
            if (measuring) ++completions;
            if (--occupancy[s] == 0) {
                const int last = busy.back();
                busy[k] = last;
                slot[last] = static_cast<int>(k);
                busy.pop_back();
                slot[s] = -1;
            }
        }
    }

    QueueSimResult res;
    res.events = horizon;
    res.elapsed_time = clock;
    res.service_rate = busy_area / (clock * servers);
    res.throughput = static_cast<double>(completions) / (clock * servers);
    res.blocking = arrivals > 0 ? static_cast<double>(blocked) / static_cast<double>(arrivals) : 0.0;
    return res;
}

}  // namespace mfexp
