#include "mfexp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "mfexp/equilibrium.hpp"
#include "mfexp/errors.hpp"
#include "mfexp/inference.hpp"
#include "mfexp/simulator.hpp"

namespace mfexp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double quantile_sorted(const std::vector<double>& v, double prob) {
    // Linear interpolation between order statistics (type 7).
    if (v.size() == 1) return v.front();
    const double h = prob * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string fmt(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

double draw_initial_payment(const ExperimentConfig& config, int rep) {
    if (config.p1.kind == InitialPayment::Kind::Fixed) return config.p1.value;
    auto rng = derive_stream(SeedSpec{config.seed, static_cast<std::uint64_t>(rep), 0}, StreamRole::Policy);
    return std::uniform_real_distribution<double>(config.p1.lo, config.p1.hi)(rng);
}

double draw_explore_payment(const ExperimentConfig& config, int rep, int t) {
    auto rng = derive_stream(SeedSpec{config.seed, static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(t)},
                             StreamRole::Policy);
    return std::uniform_real_distribution<double>(config.explore_lo, config.explore_hi)(rng);
}

RegretReport aggregate(const std::vector<ReplicationResult>& reps, const std::string& method, int explore_T) {
    std::vector<double> ins;
    std::vector<double> fut;
    std::vector<double> pay;
    RegretReport r;
    r.method = method;
    r.explore_T = explore_T;
    for (const auto& rep : reps) {
        if (rep.method != method || rep.explore_T != explore_T) continue;
        ins.push_back(rep.in_sample_regret);
        fut.push_back(rep.future_regret);
        pay.push_back(rep.learned_payment);
        r.invalid_days += rep.invalid_days;
    }
    r.in_sample = summarize(std::move(ins));
    r.future = summarize(std::move(fut));
    r.learned_payment = summarize(std::move(pay));
    return r;
}

std::string resolve_under(const std::string& dir, const std::string& path) {
    if (path.empty()) return path;
    const fs::path p(path);
    return p.is_absolute() ? path : (fs::path(dir) / p).string();
}

void write_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + config.out_dir + "': " + ec.message());
    write_run_log(result.replications, (fs::path(config.out_dir) / "run_log.csv").string());
    write_trajectory(result.replications, (fs::path(config.out_dir) / "trajectory.csv").string());
    save_config(config, (fs::path(config.out_dir) / "config.json").string());
    std::ofstream out(fs::path(config.out_dir) / "summary.json");
    if (!out) throw std::runtime_error("cannot write summary.json in '" + config.out_dir + "'");
    out << summary_json(config, result).dump(2) << '\n';
}

}  // namespace

Distribution summarize(std::vector<double> values) {
    Distribution d;
    if (values.empty()) return d;
    d.values = values;
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    d.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - d.mean) * (v - d.mean);
    d.se = values.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    d.median = quantile_sorted(values, 0.5);
    d.q1 = quantile_sorted(values, 0.25);
    d.q3 = quantile_sorted(values, 0.75);
    d.min = values.front();
    d.max = values.back();
    return d;
}

json to_json(const Distribution& d, bool include_values) {
    json j{{"mean", d.mean}, {"se", d.se},   {"median", d.median}, {"q1", d.q1},
           {"q3", d.q3},     {"min", d.min}, {"max", d.max},       {"count", d.values.size()}};
    if (include_values) j["values"] = d.values;
    return j;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    if (count <= 0) return;
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, count);
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

PaymentInterval oracle_interval(const MarketConfig& model) {
    return model.interval.bounded() ? model.interval : PaymentInterval{5.0, 60.0};
}

OracleCache::OracleCache(std::string path) : path_(std::move(path)) {
    if (path_.empty() || !fs::exists(path_)) return;
    std::ifstream in(path_);
    try {
        json j;
        in >> j;
        if (j.is_object() && j.value("schema_version", 0) == 1 && j.contains("entries") &&
            j["entries"].is_object()) {
            entries_ = j["entries"];
        }
    } catch (const json::exception&) {
        entries_ = json::object();  // unreadable cache: recompute
    }
}

std::optional<OracleResult> OracleCache::find(std::uint64_t key) const {
    const auto it = entries_.find(std::to_string(key));
    if (it == entries_.end()) return std::nullopt;
    OracleResult r;
    try {
        r.pStar = it->at("pStar").get<double>();
        r.uStar = it->at("uStar").get<double>();
        r.method = it->at("method").get<std::string>();
        r.warning = it->value("warning", "");
        r.diagnostic_passed = it->at("diagnostic_passed").get<bool>();
        r.diagnostic.passed = r.diagnostic_passed;
        r.diagnostic.premises_hold = it->value("premises_hold", false);
        r.diagnostic.sigma = it->value("sigma", 0.0);
        r.diagnostic.gradient_bound = it->value("gradient_bound", 0.0);
        r.diagnostic.worst_second_difference = it->value("worst_second_difference", 0.0);
        r.diagnostic.message = it->value("diagnostic", "");
    } catch (const json::exception&) {
        return std::nullopt;
    }
    return r;
}

void OracleCache::store(std::uint64_t key, const OracleResult& r) {
    entries_[std::to_string(key)] = {{"pStar", r.pStar},
                                     {"uStar", r.uStar},
                                     {"method", r.method},
                                     {"warning", r.warning},
                                     {"diagnostic_passed", r.diagnostic_passed},
                                     {"premises_hold", r.diagnostic.premises_hold},
                                     {"sigma", r.diagnostic.sigma},
                                     {"gradient_bound", r.diagnostic.gradient_bound},
                                     {"worst_second_difference", r.diagnostic.worst_second_difference},
                                     {"diagnostic", r.diagnostic.message}};
    if (path_.empty()) return;
    const fs::path p(path_);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path_);
    if (!out) throw std::runtime_error("cannot write oracle cache '" + path_ + "'");
    out << json{{"schema_version", 1}, {"entries", entries_}}.dump(2) << '\n';
}

OracleResult cached_oracle(const MarketConfig& model, OracleCache& cache, bool* hit) {
    const PaymentInterval interval = oracle_interval(model);
    const std::uint64_t key = mean_field_model_hash(model, interval);
    if (auto found = cache.find(key)) {
        if (hit) *hit = true;
        return *found;
    }
    if (hit) *hit = false;
    OracleResult r = oracle_optimal_payment(model, interval);
    cache.store(key, r);
    return r;
}

ReplicationResult run_local_replication(const ExperimentConfig& config, const OracleResult& oracle,
                                        const QuadratureRule& contexts, int rep) {
    const MarketConfig& model = config.model;
    const double zeta = model.effective_zeta();
    ReplicationResult res;
    res.method = "local";
    res.rep = rep;
    OptimizerState state = OptimizerState::start(draw_initial_payment(config, rep), config.eta, model.interval);
    double regret_sum = 0.0;
    const DayOptions options{config.belief};
    for (int t = 1; t <= config.horizon; ++t) {
        const SeedSpec seeds{config.seed, static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(t)};
        const double p = state.pCurrent;
        if (!(p > zeta)) {
            throw NumericalError("local learner: payment " + fmt(p) + " fell below the perturbation size");
        }
        DayLogRow row;
        row.method = "local";
        row.rep = rep;
        row.t = t;
        row.p = p;
        row.zeta = zeta;
        row.d = draw_context(model, seeds);
        std::optional<double> gamma;
        if (config.evaluation == EvaluationMode::MeanField) {
            const MeanFieldReport mf = mean_field_report(p, row.d, model);
            row.DeltaHat = mf.Delta;
            row.UpsilonHat = mf.muPrime;
            row.GammaHat = mf.uPrime;
            row.Dbar = row.d;
            row.Zbar = mf.mu;
            row.valid = true;
            gamma = mf.uPrime;
        } else {
            const DayOutcome day = run_day_at_context(model, p, zeta, row.d, seeds, options);
            const GradientEstimate g = estimate_gradient(day, p, model);
            row.simulated = true;
            row.D = day.D;
            row.T = day.T;
            row.U = day.U;
            row.Dbar = day.Dbar;
            row.Zbar = day.Zbar;
            row.valid = g.valid;
            if (g.valid) {
                row.DeltaHat = g.DeltaHat;
                row.UpsilonHat = g.UpsilonHat;
                row.GammaHat = g.GammaHat;
                gamma = g.GammaHat;
            } else {
                ++res.invalid_days;
            }
        }
        row.u = config.regret_utility == RegretUtility::Perturbed ? perturbed_utility(p, zeta, row.d, model)
                                                                   : mean_field_utility(p, row.d, model);
        row.regret = mean_field_utility(oracle.pStar, row.d, model) - row.u;
        regret_sum += row.regret;
        res.days.push_back(row);
        state = mirror_descent_step(std::move(state), gamma);
    }
    res.learned_payment = averaged_payment(state);
    res.in_sample_regret = regret_sum / config.horizon;
    res.future_regret = oracle.uStar - population_utility(res.learned_payment, model, contexts);
    return res;
}

std::vector<ReplicationResult> run_global_replication(const ExperimentConfig& config,
                                                      const OracleResult& oracle,
                                                      const QuadratureRule& contexts, int rep,
                                                      const std::vector<int>& explore_Ts,
                                                      bool simulate_exploit_days) {
    const MarketConfig& model = config.model;
    if (explore_Ts.empty()) return {};
    const int max_T = *std::max_element(explore_Ts.begin(), explore_Ts.end());
    if (max_T > config.horizon) throw DomainError("global: exploration budget exceeds the horizon");

    const int H = config.horizon;
    std::vector<double> d(H + 1);
    std::vector<double> u_star(H + 1);
    for (int t = 1; t <= H; ++t) {
        d[t] = draw_context(model, SeedSpec{config.seed, static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(t)});
        u_star[t] = mean_field_utility(oracle.pStar, d[t], model);
    }

    // Exploration prefix shared by every budget.
    std::vector<DayLogRow> explore_rows;
    std::vector<double> pay;
    std::vector<double> obs;
    for (int t = 1; t <= max_T; ++t) {
        const SeedSpec seeds{config.seed, static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(t)};
        DayLogRow row;
        row.method = "global";
        row.rep = rep;
        row.t = t;
        row.d = d[t];
        row.p = draw_explore_payment(config, rep, t);
        row.u = mean_field_utility(row.p, d[t], model);
        row.regret = u_star[t] - row.u;
        double y = row.u;
        if (config.evaluation == EvaluationMode::Simulate) {
            const DayOutcome day = run_day_at_context(model, row.p, 0.0, d[t], seeds, DayOptions{config.belief});
            row.simulated = true;
            row.D = day.D;
            row.T = day.T;
            row.U = day.U;
            row.Dbar = day.Dbar;
            row.Zbar = day.Zbar;
            y = day.Un;
        }
        row.valid = true;
        pay.push_back(row.p);
        obs.push_back(y);
        explore_rows.push_back(row);
    }

    std::vector<ReplicationResult> out;
    for (int T : explore_Ts) {
        ReplicationResult res;
        res.method = "global";
        res.explore_T = T;
        res.rep = rep;
        GlobalPolicy policy = fit_global_policy(std::vector<double>(pay.begin(), pay.begin() + T),
                                                std::vector<double>(obs.begin(), obs.begin() + T),
                                                config.explore_lo, config.explore_hi);
        res.warning = policy.warning;
        res.learned_payment = policy.pHat;
        double regret_sum = 0.0;
        for (int t = 1; t <= H; ++t) {
            DayLogRow row;
            if (t <= T) {
                row = explore_rows[t - 1];
            } else {
                row.method = "global";
                row.rep = rep;
                row.t = t;
                row.d = d[t];
                row.p = policy.pHat;
                row.u = mean_field_utility(row.p, d[t], model);
                row.regret = u_star[t] - row.u;
                row.valid = true;
                if (simulate_exploit_days && config.evaluation == EvaluationMode::Simulate) {
                    const SeedSpec seeds{config.seed, static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(t)};
                    const DayOutcome day = run_day_at_context(model, row.p, 0.0, d[t], seeds, DayOptions{config.belief});
                    row.simulated = true;
                    row.D = day.D;
                    row.T = day.T;
                    row.U = day.U;
                    row.Dbar = day.Dbar;
                    row.Zbar = day.Zbar;
                }
            }
            row.explore_T = T;
            regret_sum += row.regret;
            res.days.push_back(row);
        }
        res.in_sample_regret = regret_sum / H;
        res.future_regret = oracle.uStar - population_utility(policy.pHat, model, contexts);
        out.push_back(std::move(res));
    }
    return out;
}

namespace {

struct Prepared {
    OracleResult oracle;
    bool hit = false;
    QuadratureRule contexts;
};

Prepared prepare(const ExperimentConfig& config) {
    Prepared p;
    OracleCache cache(config.write_logs ? resolve_under(config.out_dir, config.oracle_cache) : std::string{});
    p.oracle = cached_oracle(config.model, cache, &p.hit);
    p.contexts = config.model.context.expectation_rule(kOracleContextNodes);
    return p;
}

std::vector<ReplicationResult> run_locals(const ExperimentConfig& config, const Prepared& prep) {
    std::vector<ReplicationResult> reps(static_cast<std::size_t>(config.replications));
    parallel_for(config.replications, config.threads, [&](int r) {
        reps[static_cast<std::size_t>(r)] = run_local_replication(config, prep.oracle, prep.contexts, r);
    });
    return reps;
}

std::vector<ReplicationResult> run_globals(const ExperimentConfig& config, const Prepared& prep,
                                           const std::vector<int>& Ts, bool simulate_exploit) {
    std::vector<std::vector<ReplicationResult>> per_rep(static_cast<std::size_t>(config.replications));
    parallel_for(config.replications, config.threads, [&](int r) {
        per_rep[static_cast<std::size_t>(r)] =
            run_global_replication(config, prep.oracle, prep.contexts, r, Ts, simulate_exploit);
    });
    // Order: by budget, then replication.
    std::vector<ReplicationResult> flat;
    for (std::size_t k = 0; k < Ts.size(); ++k) {
        for (auto& rep : per_rep) flat.push_back(std::move(rep[k]));
    }
    return flat;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    ExperimentResult result;
    Prepared prep = prepare(config);
    result.oracle = prep.oracle;
    result.oracle_cache_hit = prep.hit;
    switch (config.method) {
        case Method::Oracle: break;
        case Method::Local:
            result.replications = run_locals(config, prep);
            result.reports.push_back(aggregate(result.replications, "local", 0));
            break;
        case Method::Global:
            result.replications = run_globals(config, prep, {config.explore_T}, true);
            result.reports.push_back(aggregate(result.replications, "global", config.explore_T));
            break;
    }
    if (config.write_logs) write_outputs(config, result);
    return result;
}

ExperimentResult run_compare(const ExperimentConfig& config) {
    ExperimentResult result;
    Prepared prep = prepare(config);
    result.oracle = prep.oracle;
    result.oracle_cache_hit = prep.hit;
    result.replications = run_locals(config, prep);
    result.reports.push_back(aggregate(result.replications, "local", 0));
    auto globals = run_globals(config, prep, config.explore_sweep, false);
    for (int T : config.explore_sweep) result.reports.push_back(aggregate(globals, "global", T));
    for (auto& g : globals) result.replications.push_back(std::move(g));
    if (config.write_logs) write_outputs(config, result);
    return result;
}

void emit_curves(const MarketConfig& model, const std::vector<double>& p_grid, const std::vector<double>& d_values,
                 std::ostream& out) {
    out << "p,d,mu,q,u,Delta,muPrime,uPrime,R,sigmaDelta,sigmaOmega,served\n";
    for (double d : d_values) {
        for (double p : p_grid) {
            const MeanFieldReport r = mean_field_report(p, d, model);
            out << fmt(p) << ',' << fmt(d) << ',' << fmt(r.mu) << ',' << fmt(r.q) << ',' << fmt(r.u) << ','
                << fmt(r.Delta) << ',' << fmt(r.muPrime) << ',' << fmt(r.uPrime) << ',' << fmt(r.R) << ','
                << fmt(r.sigmaDelta) << ',' << fmt(r.sigmaOmega) << ',' << fmt(r.mu * r.q) << '\n';
        }
    }
}

void write_run_log(const std::vector<ReplicationResult>& reps, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "method,exploreT,rep,t,d,D,p,zeta,T,U,Dbar,Zbar,DeltaHat,UpsilonHat,GammaHat,valid,simulated\n";
    for (const auto& rep : reps) {
        for (const auto& r : rep.days) {
            out << r.method << ',' << r.explore_T << ',' << r.rep << ',' << r.t << ',' << fmt(r.d) << ',';
            if (r.simulated) {
                out << r.D << ',';
            } else {
                out << ',';
            }
            out << fmt(r.p) << ',' << fmt(r.zeta) << ',';
            if (r.simulated) {
                out << r.T << ',' << fmt(r.U) << ',' << fmt(r.Dbar) << ',' << fmt(r.Zbar) << ',';
            } else {
                out << ",,,,";
            }
            if (r.method == "local" && r.valid) {
                out << fmt(r.DeltaHat) << ',' << fmt(r.UpsilonHat) << ',' << fmt(r.GammaHat) << ',';
            } else {
                out << ",,,";
            }
            out << (r.valid ? 1 : 0) << ',' << (r.simulated ? 1 : 0) << '\n';
        }
    }
}

void write_trajectory(const std::vector<ReplicationResult>& reps, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "method,exploreT,rep,t,p_t,GammaHat,d_t,u_t,regret_t\n";
    for (const auto& rep : reps) {
        for (const auto& r : rep.days) {
            out << r.method << ',' << r.explore_T << ',' << r.rep << ',' << r.t << ',' << fmt(r.p) << ',';
            if (r.method == "local" && r.valid) out << fmt(r.GammaHat);
            out << ',' << fmt(r.d) << ',' << fmt(r.u) << ',' << fmt(r.regret) << '\n';
        }
    }
}

json summary_json(const ExperimentConfig& config, const ExperimentResult& result) {
    json j;
    j["schema_version"] = 1;
    j["preset"] = config.preset;
    j["method"] = method_name(config.method);
    j["evaluation"] = config.evaluation == EvaluationMode::Simulate ? "simulate" : "mean-field";
    j["replications"] = config.replications;
    j["horizon"] = config.horizon;
    j["seed"] = config.seed;
    const auto& o = result.oracle;
    j["oracle"] = {{"pStar", o.pStar},
                   {"uStar", o.uStar},
                   {"method", o.method},
                   {"diagnostic_passed", o.diagnostic_passed},
                   {"premises_hold", o.diagnostic.premises_hold},
                   {"sigma", o.diagnostic.sigma},
                   {"gradient_bound", o.diagnostic.gradient_bound},
                   {"warning", o.warning}};
    json reports = json::array();
    for (const auto& r : result.reports) {
        json e{{"method", r.method},
               {"inSampleRegret", to_json(r.in_sample, false)},
               {"futureRegret", to_json(r.future, false)},
               {"invalidDays", r.invalid_days}};
        if (r.method == "local") {
            e["pBar"] = to_json(r.learned_payment, false);
        } else {
            e["exploreT"] = r.explore_T;
            e["pHat"] = to_json(r.learned_payment, false);
        }
        reports.push_back(e);
    }
    j["reports"] = reports;
    return j;
}

}  // namespace mfexp
