// Command-line front end: mean-field curves, single market days, the local and
// global learners, the oracle, the local-vs-global comparison and the queue
// validation. README.md documents the files each subcommand writes.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "mfexp/config.hpp"
#include "mfexp/equilibrium.hpp"
#include "mfexp/errors.hpp"
#include "mfexp/experiment.hpp"
#include "mfexp/inference.hpp"
#include "mfexp/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mfexp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonOptions {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<int> replications;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
    std::optional<int> explore_T;
    bool surge = false;
    std::string risk_beta;
    bool mean_field = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--preset", o.preset, "fig2 | fig3 | sec6 | sec6-surge");
    cmd->add_option("--seed", o.seed, "master random seed");
    cmd->add_option("--replications", o.replications, "number of replications");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    cmd->add_option("--explore-T", o.explore_T, "exploration periods for optimize-global");
    cmd->add_flag("--surge", o.surge, "use the surge earning function with s(x) = x / omega(x)");
    cmd->add_option("--risk-beta", o.risk_beta, "risk-averse earning function: linear | sqrt | log");
    cmd->add_flag("--mean-field", o.mean_field, "evaluate with exact mean-field feedback");
}

ExperimentConfig resolve_config(const CommonOptions& o) {
    ExperimentConfig c;
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw ConfigError("cannot open config file '" + o.config_path + "'");
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
        }
        if (!o.preset.empty()) {
            if (j.contains("preset") && j["preset"] != o.preset) {
                throw ConfigError("--preset conflicts with the preset named in the config file");
            }
            j["preset"] = o.preset;
        }
        c = config_from_json(j);
    } else {
        c = preset_config(o.preset.empty() ? "fig3" : o.preset);
    }
    if (o.seed) c.seed = *o.seed;
    if (o.replications) {
        if (*o.replications < 1) throw ConfigError("--replications must be >= 1");
        c.replications = *o.replications;
    }
    if (o.out_dir) c.out_dir = *o.out_dir;
    if (o.threads) c.threads = *o.threads;
    if (o.explore_T) {
        if (*o.explore_T < kMinExplorePoints || *o.explore_T > c.horizon) {
            throw ConfigError("--explore-T must lie in [10, horizon]");
        }
        c.explore_T = *o.explore_T;
    }
    if (o.surge && !o.risk_beta.empty()) throw ConfigError("--surge and --risk-beta are mutually exclusive");
    if (o.surge) c.model.earning = EarningFunction::surge();
    if (!o.risk_beta.empty()) {
        try {
            c.model.earning = EarningFunction::risk(RiskBeta::from_name(o.risk_beta));
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
    }
    if (o.mean_field) c.evaluation = EvaluationMode::MeanField;
    return c;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

void print_reports(const ExperimentResult& r) {
    std::cout << "oracle: p* = " << r.oracle.pStar << "  u* = " << r.oracle.uStar << "  (" << r.oracle.method
              << (r.oracle_cache_hit ? ", cached" : "") << ")\n";
    if (!r.oracle.warning.empty()) std::cerr << "warning: " << r.oracle.warning << '\n';
    for (const auto& rep : r.reports) {
        std::cout << rep.method;
        if (rep.method == "global") std::cout << " (T=" << rep.explore_T << ")";
        std::cout << ": in-sample regret " << rep.in_sample.mean << " (median " << rep.in_sample.median
                  << "), future regret " << rep.future.mean << " (median " << rep.future.median
                  << "), learned payment " << rep.learned_payment.mean << '\n';
    }
}

int cmd_curves(const ExperimentConfig& c) {
    ensure_dir(c.out_dir);
    std::vector<double> p_grid;
    for (int k = 0; k <= 156; ++k) p_grid.push_back(1.0 + 0.25 * k);
    std::vector<double> d_values;
    if (c.model.context.is_point_mass()) {
        d_values.push_back(c.model.context.mean());
    } else {
        for (double q : {0.1, 0.5, 0.9}) d_values.push_back(c.model.context.quantile(q));
    }
    const fs::path path = fs::path(c.out_dir) / "curves.csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    emit_curves(c.model, p_grid, d_values, out);
    write_json(fs::path(c.out_dir) / "summary.json",
               {{"schema_version", 1}, {"command", "curves"}, {"preset", c.preset}, {"file", "curves.csv"},
                {"d_values", d_values}, {"p_min", p_grid.front()}, {"p_max", p_grid.back()},
                {"rows", p_grid.size() * d_values.size()}});
    std::cout << "wrote " << path.string() << '\n';
    return kExitOk;
}

int cmd_simulate_day(const ExperimentConfig& c, double payment, int day) {
    ensure_dir(c.out_dir);
    const double zeta = c.model.effective_zeta();
    const SeedSpec seeds{c.seed, 0, static_cast<std::uint64_t>(day)};
    const DayOutcome o = run_day(c.model, payment, zeta, seeds, DayOptions{c.belief});
    const GradientEstimate g = estimate_gradient(o, payment, c.model);
    const MeanFieldReport mf = mean_field_report(payment, o.d, c.model);
    json j{{"schema_version", 1},
           {"command", "simulate-day"},
           {"preset", c.preset},
           {"seed", c.seed},
           {"day", day},
           {"outcome",
            {{"d", o.d}, {"D", o.D}, {"n", o.n}, {"p", o.p}, {"zeta", o.zeta}, {"T", o.T}, {"U", o.U},
             {"Un", o.Un}, {"Dbar", o.Dbar}, {"Zbar", o.Zbar}, {"mu_belief", o.mu_belief},
             {"q_belief", o.q_belief}, {"settlement_multiplier", o.settlement_multiplier},
             {"empty_supply", o.empty_supply}}},
           {"estimate",
            {{"valid", g.valid}, {"reason", g.reason}, {"DeltaHat", g.DeltaHat}, {"UpsilonHat", g.UpsilonHat},
             {"GammaHat", g.GammaHat}}},
           {"mean_field",
            {{"mu", mf.mu}, {"q", mf.q}, {"u", mf.u}, {"Delta", mf.Delta}, {"muPrime", mf.muPrime},
             {"uPrime", mf.uPrime}, {"R", mf.R}}}};
    write_json(fs::path(c.out_dir) / "day.json", j);
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_oracle(const ExperimentConfig& c) {
    ensure_dir(c.out_dir);
    OracleCache cache((fs::path(c.out_dir) / c.oracle_cache).string());
    bool hit = false;
    const OracleResult r = cached_oracle(c.model, cache, &hit);
    const PaymentInterval iv = oracle_interval(c.model);
    json j{{"schema_version", 1},
           {"command", "oracle"},
           {"preset", c.preset},
           {"earning", c.model.earning.name()},
           {"interval", {iv.lo, iv.hi}},
           {"pStar", r.pStar},
           {"uStar", r.uStar},
           {"method", r.method},
           {"cached", hit},
           {"diagnostic_passed", r.diagnostic_passed},
           {"premises_hold", r.diagnostic.premises_hold},
           {"sigma", r.diagnostic.sigma},
           {"gradient_bound", r.diagnostic.gradient_bound},
           {"worst_second_difference", r.diagnostic.worst_second_difference},
           {"warning", r.warning}};
    write_json(fs::path(c.out_dir) / "oracle.json", j);
    std::cout << "p* = " << r.pStar << "  u* = " << r.uStar << "  (" << r.method << (hit ? ", cached" : "")
              << ")\n";
    if (!r.warning.empty()) std::cerr << "warning: " << r.warning << '\n';
    return kExitOk;
}

int cmd_compare(ExperimentConfig c) {
    const ExperimentResult r = run_compare(c);
    ensure_dir(c.out_dir);
    const fs::path path = fs::path(c.out_dir) / "regret_vs_exploreT.csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "method,exploreT,inSampleMean,inSampleSE,inSampleMedian,futureMean,futureSE,futureMedian\n";
    for (const auto& rep : r.reports) {
        out << rep.method << ',' << rep.explore_T << ',' << rep.in_sample.mean << ',' << rep.in_sample.se << ','
            << rep.in_sample.median << ',' << rep.future.mean << ',' << rep.future.se << ',' << rep.future.median
            << '\n';
    }
    print_reports(r);
    return kExitOk;
}

int cmd_validate_queue(const ExperimentConfig& c, std::int64_t events) {
    ensure_dir(c.out_dir);
    const AllocationCurve& alloc = c.model.allocation;
    const fs::path path = fs::path(c.out_dir) / "queue_validation.csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "ratio,servers,L,events,simulated,throughput,omega,relative_error\n";
    json rows = json::array();
    const int servers = 10;
    int k = 0;
    for (double ratio : {0.5, 0.8, 1.0, 2.0}) {
        const auto sim = simulate_queue_allocation(ratio * servers, servers, alloc.capacity(), events,
                                                   c.seed + static_cast<std::uint64_t>(k++));
        const double w = alloc.omega(ratio);
        const double rel = std::abs(sim.service_rate - w) / w;
        out << ratio << ',' << servers << ',' << alloc.capacity() << ',' << events << ',' << sim.service_rate << ','
            << sim.throughput << ',' << w << ',' << rel << '\n';
        rows.push_back({{"ratio", ratio}, {"simulated", sim.service_rate}, {"omega", w}, {"relative_error", rel}});
        std::cout << "D/T = " << ratio << ": simulated " << sim.service_rate << ", omega " << w
                  << ", relative error " << rel << '\n';
    }
    write_json(fs::path(c.out_dir) / "summary.json",
               {{"schema_version", 1}, {"command", "validate-queue"}, {"events", events}, {"rows", rows}});
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Experimenting in equilibrium: mean-field marketplace simulation and payment learning"};
    app.require_subcommand(1);
    CommonOptions opts;
    double payment = 20.0;
    int day = 1;
    std::int64_t queue_events = 1000000;

    auto* curves = app.add_subcommand("curves", "mean-field curves mu, q, u, Delta, ... over a payment grid");
    auto* sim = app.add_subcommand("simulate-day", "simulate one market day and its gradient estimate");
    auto* local = app.add_subcommand("optimize-local", "mirror descent with local experimentation");
    auto* global = app.add_subcommand("optimize-global", "explore-then-commit global experimentation");
    auto* oracle = app.add_subcommand("oracle", "population-optimal payment p*");
    auto* compare = app.add_subcommand("compare", "local learner vs the global sweep over exploration budgets");
    auto* queue = app.add_subcommand("validate-queue", "discrete-event check of the queue allocation curve");
    for (auto* cmd : {curves, sim, local, global, oracle, compare, queue}) add_common(cmd, opts);
    sim->add_option("--payment", payment, "base payment p");
    sim->add_option("--day", day, "day index used to derive the random streams");
    queue->add_option("--events", queue_events, "events per simulation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        ExperimentConfig c = resolve_config(opts);
        const auto start = std::chrono::steady_clock::now();
        int rc = kExitOk;
        if (curves->parsed()) rc = cmd_curves(c);
        if (sim->parsed()) rc = cmd_simulate_day(c, payment, day);
        if (oracle->parsed()) rc = cmd_oracle(c);
        if (queue->parsed()) rc = cmd_validate_queue(c, queue_events);
        if (compare->parsed()) rc = cmd_compare(c);
        if (local->parsed() || global->parsed()) {
            c.method = local->parsed() ? Method::Local : Method::Global;
            print_reports(run_experiment(c));
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cerr << "done in " << secs << " s\n";
        return rc;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const DomainError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const DegenerateDesign& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
}
