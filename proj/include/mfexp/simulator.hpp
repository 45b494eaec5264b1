#pragma once

#include <cstdint>
#include <vector>

#include "mfexp/market_config.hpp"
#include "mfexp/random.hpp"

namespace mfexp {

/// How suppliers form the anticipated allocation rate q.
enum class BeliefMode {
    MeanField,  // q = omega(d / mu) at the mean-field fixed point
    FiniteN,    // exact binomial fixed point for the realised n (n <= 1e4)
};

/// One simulated market day.
struct DayOutcome {
    double d = 0.0;        // scaled mean demand of the day's context
    std::int64_t D = 0;    // realised demand
    std::int64_t n = 0;
    double p = 0.0;
    double zeta = 0.0;
    std::vector<std::int8_t> epsilon;  // +1 / -1 perturbation signs
    std::vector<double> B;             // private outside options
    std::vector<std::uint8_t> Z;       // activation indicators
    std::int64_t T = 0;                // active suppliers
    double Dbar = 0.0;
    double Zbar = 0.0;
    double U = 0.0;   // realised platform utility
    double Un = 0.0;  // U / n
    double mu_belief = 0.0;
    double q_belief = 0.0;
    double settlement_multiplier = 1.0;
    bool empty_supply = false;
};

struct DayOptions {
    BeliefMode belief = BeliefMode::MeanField;
};

/// Draws the context from the model and simulates the day.
DayOutcome run_day(const MarketConfig& model, double p, double zeta, const SeedSpec& seeds,
                   const DayOptions& options = {});

/// Simulates a day for a given scaled mean demand d (context already drawn).
DayOutcome run_day_at_context(const MarketConfig& model, double p, double zeta, double d,
                              const SeedSpec& seeds, const DayOptions& options = {});

/// Draws the day's scaled mean demand from the context stream of `seeds`.
double draw_context(const MarketConfig& model, const SeedSpec& seeds);

struct QueueSimResult {
    double service_rate = 0.0;   // time-averaged fraction of busy servers
    double throughput = 0.0;     // completed services per server per unit time
    double blocking = 0.0;       // fraction of arrivals lost to full queues
    double elapsed_time = 0.0;
    std::int64_t events = 0;
};

/// Event-driven simulation of `servers` parallel single-server queues, each
/// holding at most L - 1 requests (the convention under which the busy
/// probability equals omega with capacity L). Requests arrive as a Poisson
/// process of rate `arrival_rate`, are routed uniformly at random and served at
/// unit rate. The first `warmup_fraction` of events is discarded.
QueueSimResult simulate_queue_allocation(double arrival_rate, int servers, int L,
                                         std::int64_t horizon, std::uint64_t seed,
                                         double warmup_fraction = 0.02);

}  // namespace mfexp
