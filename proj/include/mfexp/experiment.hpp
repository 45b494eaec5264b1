#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfexp/config.hpp"
#include "mfexp/policy.hpp"

namespace mfexp {

/// Mean, standard error and quartiles of per-replication values.
struct Distribution {
    double mean = 0.0;
    double se = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::vector<double> values;
};

Distribution summarize(std::vector<double> values);
nlohmann::json to_json(const Distribution& d, bool include_values = false);

/// Runs fn(i) for i in [0, count) on `threads` workers (0: hardware
/// concurrency). The first exception thrown by any task is rethrown.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

/// Interval the oracle searches: the model interval when bounded, else [5, 60].
PaymentInterval oracle_interval(const MarketConfig& model);

/// Persistent store of oracle results keyed by mean_field_model_hash.
class OracleCache {
public:
    explicit OracleCache(std::string path);  // empty path: in-memory only
    std::optional<OracleResult> find(std::uint64_t key) const;
    void store(std::uint64_t key, const OracleResult& result);

private:
    std::string path_;
    nlohmann::json entries_ = nlohmann::json::object();
};

/// Oracle for the model, reused from `cache` when the model hash matches.
OracleResult cached_oracle(const MarketConfig& model, OracleCache& cache, bool* hit = nullptr);

/// One row of the per-day run log.
struct DayLogRow {
    std::string method;
    int explore_T = 0;  // 0 for the local learner
    int rep = 0;
    int t = 0;
    double d = 0.0;
    double p = 0.0;
    double zeta = 0.0;
    bool simulated = false;  // false: day scored from the context only
    std::int64_t D = 0;
    std::int64_t T = 0;
    double U = 0.0;
    double Dbar = 0.0;
    double Zbar = 0.0;
    double DeltaHat = 0.0;
    double UpsilonHat = 0.0;
    double GammaHat = 0.0;
    bool valid = false;
    double u = 0.0;       // mean-field utility u_d(p_t) used for regret
    double regret = 0.0;  // u_d(p*) - u
};

struct ReplicationResult {
    std::string method;
    int explore_T = 0;
    int rep = 0;
    double in_sample_regret = 0.0;
    double future_regret = 0.0;
    double learned_payment = 0.0;  // p-bar (local) or p-hat (global)
    int invalid_days = 0;
    std::string warning;
    std::vector<DayLogRow> days;
};

struct RegretReport {
    std::string method;
    int explore_T = 0;
    Distribution in_sample;
    Distribution future;
    Distribution learned_payment;
    int invalid_days = 0;
};

struct ExperimentResult {
    OracleResult oracle;
    bool oracle_cache_hit = false;
    std::vector<RegretReport> reports;
    std::vector<ReplicationResult> replications;
};

/// Local learner: mirror descent on the plug-in (or exact mean-field) gradient.
ReplicationResult run_local_replication(const ExperimentConfig& config, const OracleResult& oracle,
                                        const QuadratureRule& contexts, int rep);

/// Explore-then-commit for every exploration budget in `explore_Ts`, sharing
/// the exploration draws (common random numbers) across budgets.
std::vector<ReplicationResult> run_global_replication(const ExperimentConfig& config,
                                                      const OracleResult& oracle,
                                                      const QuadratureRule& contexts, int rep,
                                                      const std::vector<int>& explore_Ts,
                                                      bool simulate_exploit_days);

/// Runs config.method over all replications; writes logs into config.out_dir
/// when config.write_logs is set.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Local learner plus the global baseline over config.explore_sweep.
ExperimentResult run_compare(const ExperimentConfig& config);

/// Mean-field curve table with columns
/// p,d,mu,q,u,Delta,muPrime,uPrime,R,sigmaDelta,sigmaOmega,served.
void emit_curves(const MarketConfig& model, const std::vector<double>& p_grid,
                 const std::vector<double>& d_values, std::ostream& out);

void write_run_log(const std::vector<ReplicationResult>& reps, const std::string& path);
void write_trajectory(const std::vector<ReplicationResult>& reps, const std::string& path);
nlohmann::json summary_json(const ExperimentConfig& config, const ExperimentResult& result);

}  // namespace mfexp
