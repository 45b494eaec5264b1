#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfexp/market_config.hpp"
#include "mfexp/simulator.hpp"

namespace mfexp {

inline constexpr int kConfigSchemaVersion = 1;

enum class Method { Local, Global, Oracle };

/// Where per-day feedback comes from.
enum class EvaluationMode {
    Simulate,   // finite-n market days and the plug-in estimators
    MeanField,  // exact mean-field gradient / utility at the day's context
};

/// Utility used when scoring each day's regret.
enum class RegretUtility {
    MeanField,  // u_d(p_t)
    Perturbed,  // u_d(p_t, zeta): includes the cost of randomisation
};

struct InitialPayment {
    enum class Kind { Fixed, Uniform };
    Kind kind = Kind::Fixed;
    double value = 30.0;
    double lo = 10.0;
    double hi = 30.0;
    bool operator==(const InitialPayment&) const = default;
};

struct ExperimentConfig {
    std::string preset = "fig3";
    MarketConfig model = MarketConfig::defaults();
    Method method = Method::Local;
    int horizon = 200;
    int replications = 200;
    int explore_T = 80;
    std::vector<int> explore_sweep{40, 60, 80, 100, 120, 140, 160, 180, 200};
    double eta = 20.0;
    InitialPayment p1{};
    double explore_lo = 10.0;
    double explore_hi = 30.0;
    EvaluationMode evaluation = EvaluationMode::Simulate;
    BeliefMode belief = BeliefMode::MeanField;
    RegretUtility regret_utility = RegretUtility::MeanField;
    std::uint64_t seed = 20240101;
    int threads = 0;  // 0: hardware concurrency
    bool write_logs = true;
    std::string out_dir = "out";
    std::string oracle_cache = "oracle_cache.json";  // relative paths resolve under out_dir
};

/// Names accepted by --preset.
const std::vector<std::string>& preset_names();

/// Paper-default configuration for a named preset; throws ConfigError if unknown.
ExperimentConfig preset_config(const std::string& name);

nlohmann::json model_to_json(const MarketConfig& model);
/// Fields absent from `j` keep their value in `base`.
MarketConfig model_from_json(const nlohmann::json& j, const MarketConfig& base = MarketConfig::defaults());

nlohmann::json config_to_json(const ExperimentConfig& config);

/// Parses a config document. Missing fields take the defaults of the preset
/// named in the document ("fig3" if absent); unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& config, const std::string& path);

/// Field-by-field equality of everything that serialises.
bool same_model(const MarketConfig& a, const MarketConfig& b);
bool same_config(const ExperimentConfig& a, const ExperimentConfig& b);

/// Stable 64-bit FNV-1a hash of the fields that determine mean-field
/// utilities (n, demand sampler and zeta schedule excluded).
std::uint64_t mean_field_model_hash(const MarketConfig& model, const PaymentInterval& interval);

std::string method_name(Method m);
Method method_from_name(const std::string& s);

}  // namespace mfexp
