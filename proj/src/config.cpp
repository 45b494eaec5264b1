#include "mfexp/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "mfexp/errors.hpp"

namespace mfexp {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

json bound_to_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double bound_from_json(const json& j, double infinite, const std::string& where) {
    if (j.is_null()) return infinite;
    if (!j.is_number()) throw ConfigError(where + ": expected a number or null");
    return j.get<double>();
}

std::string sampler_name(DemandSampler s) {
    return s == DemandSampler::Poisson ? "poisson" : "deterministic";
}

DemandSampler sampler_from_name(const std::string& s) {
    if (s == "poisson") return DemandSampler::Poisson;
    if (s == "deterministic") return DemandSampler::Deterministic;
    throw ConfigError("unknown demand sampler '" + s + "'");
}

std::string evaluation_name(EvaluationMode m) {
    return m == EvaluationMode::Simulate ? "simulate" : "mean-field";
}

EvaluationMode evaluation_from_name(const std::string& s) {
    if (s == "simulate") return EvaluationMode::Simulate;
    if (s == "mean-field") return EvaluationMode::MeanField;
    throw ConfigError("unknown evaluation mode '" + s + "'");
}

std::string belief_name(BeliefMode m) { return m == BeliefMode::MeanField ? "mean-field" : "finite-n"; }

BeliefMode belief_from_name(const std::string& s) {
    if (s == "mean-field") return BeliefMode::MeanField;
    if (s == "finite-n") return BeliefMode::FiniteN;
    throw ConfigError("unknown belief mode '" + s + "'");
}

std::string regret_name(RegretUtility m) {
    return m == RegretUtility::MeanField ? "mean-field" : "perturbed";
}

RegretUtility regret_from_name(const std::string& s) {
    if (s == "mean-field") return RegretUtility::MeanField;
    if (s == "perturbed") return RegretUtility::Perturbed;
    throw ConfigError("unknown regret utility '" + s + "'");
}

json earning_to_json(const EarningFunction& e) {
    json j;
    j["variant"] = e.name();
    if (e.variant() == EarningFunction::Variant::Risk) {
        j["beta"] = e.beta().name();
        j["beta_scale"] = e.beta().scale;
    }
    if (e.variant() == EarningFunction::Variant::Surge) {
        if (e.surge_multiplier().kind == SurgeMultiplier::Kind::Custom) {
            throw ConfigError("custom surge multipliers cannot be serialised");
        }
        j["surge_multiplier"] = e.surge_multiplier().name();
    }
    return j;
}

EarningFunction earning_from_json(const json& j) {
    const std::string where = "model.earning";
    reject_unknown(j, {"variant", "beta", "beta_scale", "surge_multiplier"}, where);
    const auto variant = get_or<std::string>(j, "variant", "identity", where);
    try {
        if (variant == "identity") return EarningFunction::identity();
        if (variant == "risk") {
            RiskBeta beta = RiskBeta::from_name(get_or<std::string>(j, "beta", "linear", where));
            beta.scale = get_or<double>(j, "beta_scale", beta.scale, where);
            if (!(beta.scale > 0.0)) throw ConfigError(where + ".beta_scale must be > 0");
            return EarningFunction::risk(beta);
        }
        if (variant == "surge") {
            return EarningFunction::surge(
                SurgeMultiplier::from_name(get_or<std::string>(j, "surge_multiplier", "ratio", where)));
        }
    } catch (const DomainError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    throw ConfigError(where + ": unknown variant '" + variant + "'");
}

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::Local: return "local";
        case Method::Global: return "global";
        case Method::Oracle: return "oracle";
    }
    return "local";
}

Method method_from_name(const std::string& s) {
    if (s == "local") return Method::Local;
    if (s == "global") return Method::Global;
    if (s == "oracle") return Method::Oracle;
    throw ConfigError("unknown method '" + s + "'");
}

json model_to_json(const MarketConfig& m) {
    json j;
    j["n"] = m.n;
    j["allocation"] = {{"family", "finite-capacity-queue"}, {"L", m.allocation.capacity()}};
    j["choice"] = {{"family", "logistic"},
                   {"alpha", m.choice.alpha()},
                   {"outside_option",
                    {{"family", "lognormal"},
                     {"median", m.choice.outside_option().median},
                     {"sigma", m.choice.outside_option().sigma}}}};
    j["earning"] = earning_to_json(m.earning);
    j["revenue"] = {{"gamma", m.revenue.gamma}};
    json ctx;
    if (const auto* beta = std::get_if<BetaContext>(&m.context.distribution())) {
        ctx = {{"distribution", "beta"}, {"a", beta->a}, {"b", beta->b}};
    } else {
        ctx = {{"distribution", "point"}, {"d", std::get<PointContext>(m.context.distribution()).d}};
    }
    ctx["demand_sampler"] = sampler_name(m.context.sampler());
    j["context"] = ctx;
    j["zeta"] = m.zeta;
    j["zeta_schedule"] = {
        {"kind", m.zeta_schedule.kind == ZetaSchedule::Kind::Fixed ? "fixed" : "power-law"},
        {"exponent", m.zeta_schedule.exponent}};
    j["interval"] = {{"lo", bound_to_json(m.interval.lo)}, {"hi", bound_to_json(m.interval.hi)}};
    return j;
}

MarketConfig model_from_json(const json& j, const MarketConfig& base) {
    const std::string where = "model";
    reject_unknown(j, {"n", "allocation", "choice", "earning", "revenue", "context", "zeta",
                       "zeta_schedule", "interval"},
                   where);
    MarketConfig m = base;
    try {
        m.n = get_or<std::int64_t>(j, "n", m.n, where);
        if (m.n < 1) throw ConfigError("model.n must be >= 1");
        if (j.contains("allocation")) {
            const auto& a = j.at("allocation");
            reject_unknown(a, {"family", "L"}, "model.allocation");
            if (get_or<std::string>(a, "family", "finite-capacity-queue", "model.allocation") !=
                "finite-capacity-queue") {
                throw ConfigError("model.allocation.family must be finite-capacity-queue");
            }
            m.allocation = AllocationCurve(get_or<int>(a, "L", m.allocation.capacity(), "model.allocation"));
        }
        if (j.contains("choice")) {
            const auto& c = j.at("choice");
            reject_unknown(c, {"family", "alpha", "outside_option"}, "model.choice");
            if (get_or<std::string>(c, "family", "logistic", "model.choice") != "logistic") {
                throw ConfigError("model.choice.family must be logistic");
            }
            LogNormalOutsideOption outside = m.choice.outside_option();
            if (c.contains("outside_option")) {
                const auto& o = c.at("outside_option");
                reject_unknown(o, {"family", "median", "sigma"}, "model.choice.outside_option");
                if (get_or<std::string>(o, "family", "lognormal", "model.choice.outside_option") !=
                    "lognormal") {
                    throw ConfigError("model.choice.outside_option.family must be lognormal");
                }
                outside.median = get_or<double>(o, "median", outside.median, "model.choice.outside_option");
                outside.sigma = get_or<double>(o, "sigma", outside.sigma, "model.choice.outside_option");
            }
            m.choice = ChoiceFamily(get_or<double>(c, "alpha", m.choice.alpha(), "model.choice"), outside);
        }
        if (j.contains("earning")) m.earning = earning_from_json(j.at("earning"));
        if (j.contains("revenue")) {
            const auto& r = j.at("revenue");
            reject_unknown(r, {"gamma"}, "model.revenue");
            m.revenue.gamma = get_or<double>(r, "gamma", m.revenue.gamma, "model.revenue");
            if (!(m.revenue.gamma > 0.0)) throw ConfigError("model.revenue.gamma must be > 0");
        }
        if (j.contains("context")) {
            const auto& c = j.at("context");
            const std::string cw = "model.context";
            reject_unknown(c, {"distribution", "a", "b", "d", "demand_sampler"}, cw);
            const auto sampler =
                sampler_from_name(get_or<std::string>(c, "demand_sampler", sampler_name(m.context.sampler()), cw));
            const std::string current = m.context.is_point_mass() ? "point" : "beta";
            const auto dist = get_or<std::string>(c, "distribution", current, cw);
            if (dist == "beta") {
                BetaContext b = m.context.is_point_mass() ? BetaContext{}
                                                          : std::get<BetaContext>(m.context.distribution());
                b.a = get_or<double>(c, "a", b.a, cw);
                b.b = get_or<double>(c, "b", b.b, cw);
                m.context = ContextModel(b, sampler);
            } else if (dist == "point") {
                PointContext pc = m.context.is_point_mass() ? std::get<PointContext>(m.context.distribution())
                                                            : PointContext{};
                pc.d = get_or<double>(c, "d", pc.d, cw);
                m.context = ContextModel(pc, sampler);
            } else {
                throw ConfigError(cw + ".distribution must be beta or point");
            }
        }
        m.zeta = get_or<double>(j, "zeta", m.zeta, where);
        if (!(m.zeta >= 0.0)) throw ConfigError("model.zeta must be >= 0");
        if (j.contains("zeta_schedule")) {
            const auto& z = j.at("zeta_schedule");
            reject_unknown(z, {"kind", "exponent"}, "model.zeta_schedule");
            const auto kind = get_or<std::string>(z, "kind", "fixed", "model.zeta_schedule");
            if (kind == "fixed") {
                m.zeta_schedule.kind = ZetaSchedule::Kind::Fixed;
            } else if (kind == "power-law") {
                m.zeta_schedule.kind = ZetaSchedule::Kind::PowerLaw;
            } else {
                throw ConfigError("model.zeta_schedule.kind must be fixed or power-law");
            }
            m.zeta_schedule.exponent = get_or<double>(z, "exponent", m.zeta_schedule.exponent, "model.zeta_schedule");
            if (!(m.zeta_schedule.exponent > 0.0 && m.zeta_schedule.exponent < 0.5)) {
                throw ConfigError("model.zeta_schedule.exponent must lie in (0, 0.5)");
            }
        }
        if (j.contains("interval")) {
            const auto& iv = j.at("interval");
            reject_unknown(iv, {"lo", "hi"}, "model.interval");
            const double inf = std::numeric_limits<double>::infinity();
            if (iv.contains("lo")) m.interval.lo = bound_from_json(iv.at("lo"), -inf, "model.interval.lo");
            if (iv.contains("hi")) m.interval.hi = bound_from_json(iv.at("hi"), inf, "model.interval.hi");
            if (!(m.interval.lo < m.interval.hi)) throw ConfigError("model.interval: lo must be < hi");
        }
    } catch (const DomainError& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    return m;
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"fig2", "fig3", "sec6", "sec6-surge"};
    return names;
}

ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig c;
    c.preset = name;
    if (name == "fig2") {
        // Single context d = 0.4, mean-field curves and gradient checks.
        c.model = MarketConfig::at_fixed_demand(0.4);
        c.p1 = {InitialPayment::Kind::Fixed, 30.0};
    } else if (name == "fig3") {
        c.p1 = {InitialPayment::Kind::Fixed, 30.0};
    } else if (name == "sec6" || name == "sec6-surge") {
        c.p1 = {InitialPayment::Kind::Uniform, 30.0, 10.0, 30.0};
        if (name == "sec6-surge") c.model.earning = EarningFunction::surge();
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected fig2, fig3, sec6 or sec6-surge)");
    }
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json p1;
    if (c.p1.kind == InitialPayment::Kind::Fixed) {
        p1 = {{"kind", "fixed"}, {"value", c.p1.value}};
    } else {
        p1 = {{"kind", "uniform"}, {"lo", c.p1.lo}, {"hi", c.p1.hi}};
    }
    return json{{"schema_version", kConfigSchemaVersion},
                {"preset", c.preset},
                {"model", model_to_json(c.model)},
                {"experiment",
                 {{"method", method_name(c.method)},
                  {"horizon", c.horizon},
                  {"replications", c.replications},
                  {"explore_T", c.explore_T},
                  {"explore_sweep", c.explore_sweep},
                  {"eta", c.eta},
                  {"p1", p1},
                  {"explore_range", {c.explore_lo, c.explore_hi}},
                  {"evaluation", evaluation_name(c.evaluation)},
                  {"belief", belief_name(c.belief)},
                  {"regret_utility", regret_name(c.regret_utility)},
                  {"seed", c.seed},
                  {"threads", c.threads},
                  {"write_logs", c.write_logs},
                  {"out_dir", c.out_dir},
                  {"oracle_cache", c.oracle_cache}}}};
}

ExperimentConfig config_from_json(const json& j) {
    reject_unknown(j, {"schema_version", "preset", "model", "experiment"}, "config");
    const int version = get_or<int>(j, "schema_version", kConfigSchemaVersion, "config");
    if (version != kConfigSchemaVersion) {
        throw ConfigError("config: unsupported schema_version " + std::to_string(version));
    }
    ExperimentConfig c = preset_config(get_or<std::string>(j, "preset", "fig3", "config"));
    if (j.contains("model")) c.model = model_from_json(j.at("model"), c.model);
    if (!j.contains("experiment")) return c;

    const auto& e = j.at("experiment");
    const std::string w = "experiment";
    reject_unknown(e, {"method", "horizon", "replications", "explore_T", "explore_sweep", "eta", "p1",
                       "explore_range", "evaluation", "belief", "regret_utility", "seed", "threads",
                       "write_logs", "out_dir", "oracle_cache"},
                   w);
    c.method = method_from_name(get_or<std::string>(e, "method", method_name(c.method), w));
    c.horizon = get_or<int>(e, "horizon", c.horizon, w);
    c.replications = get_or<int>(e, "replications", c.replications, w);
    c.explore_T = get_or<int>(e, "explore_T", c.explore_T, w);
    c.explore_sweep = get_or<std::vector<int>>(e, "explore_sweep", c.explore_sweep, w);
    c.eta = get_or<double>(e, "eta", c.eta, w);
    if (e.contains("p1")) {
        const auto& p = e.at("p1");
        reject_unknown(p, {"kind", "value", "lo", "hi"}, "experiment.p1");
        const auto kind = get_or<std::string>(p, "kind", "fixed", "experiment.p1");
        if (kind == "fixed") {
            c.p1.kind = InitialPayment::Kind::Fixed;
        } else if (kind == "uniform") {
            c.p1.kind = InitialPayment::Kind::Uniform;
        } else {
            throw ConfigError("experiment.p1.kind must be fixed or uniform");
        }
        c.p1.value = get_or<double>(p, "value", c.p1.value, "experiment.p1");
        c.p1.lo = get_or<double>(p, "lo", c.p1.lo, "experiment.p1");
        c.p1.hi = get_or<double>(p, "hi", c.p1.hi, "experiment.p1");
    }
    if (e.contains("explore_range")) {
        const auto r = get_or<std::vector<double>>(e, "explore_range", {}, w);
        if (r.size() != 2) throw ConfigError("experiment.explore_range must be [lo, hi]");
        c.explore_lo = r[0];
        c.explore_hi = r[1];
    }
    c.evaluation = evaluation_from_name(get_or<std::string>(e, "evaluation", evaluation_name(c.evaluation), w));
    c.belief = belief_from_name(get_or<std::string>(e, "belief", belief_name(c.belief), w));
    c.regret_utility =
        regret_from_name(get_or<std::string>(e, "regret_utility", regret_name(c.regret_utility), w));
    c.seed = get_or<std::uint64_t>(e, "seed", c.seed, w);
    c.threads = get_or<int>(e, "threads", c.threads, w);
    c.write_logs = get_or<bool>(e, "write_logs", c.write_logs, w);
    c.out_dir = get_or<std::string>(e, "out_dir", c.out_dir, w);
    c.oracle_cache = get_or<std::string>(e, "oracle_cache", c.oracle_cache, w);

    if (c.horizon < 1) throw ConfigError("experiment.horizon must be >= 1");
    if (c.replications < 1) throw ConfigError("experiment.replications must be >= 1");
    if (!(c.eta > 0.0)) throw ConfigError("experiment.eta must be > 0");
    if (!(c.explore_lo < c.explore_hi)) throw ConfigError("experiment.explore_range: lo must be < hi");
    if (c.p1.kind == InitialPayment::Kind::Uniform && !(c.p1.lo < c.p1.hi)) {
        throw ConfigError("experiment.p1: lo must be < hi");
    }
    for (int t : c.explore_sweep) {
        if (t < 10 || t > c.horizon) {
            throw ConfigError("experiment.explore_sweep entries must lie in [10, horizon]");
        }
    }
    if (c.explore_T < 10 || c.explore_T > c.horizon) {
        throw ConfigError("experiment.explore_T must lie in [10, horizon]");
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

void save_config(const ExperimentConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config file '" + path + "'");
    out << config_to_json(config).dump(2) << '\n';
}

bool same_model(const MarketConfig& a, const MarketConfig& b) {
    const bool same_earning =
        a.earning.variant() == b.earning.variant() && a.earning.beta() == b.earning.beta() &&
        a.earning.surge_multiplier().kind == b.earning.surge_multiplier().kind;
    return a.n == b.n && a.allocation == b.allocation && a.choice == b.choice && same_earning &&
           a.revenue == b.revenue && a.context == b.context && a.zeta == b.zeta &&
           a.zeta_schedule == b.zeta_schedule && a.interval == b.interval;
}

bool same_config(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.preset == b.preset && same_model(a.model, b.model) && a.method == b.method &&
           a.horizon == b.horizon && a.replications == b.replications && a.explore_T == b.explore_T &&
           a.explore_sweep == b.explore_sweep && a.eta == b.eta && a.p1 == b.p1 &&
           a.explore_lo == b.explore_lo && a.explore_hi == b.explore_hi && a.evaluation == b.evaluation &&
           a.belief == b.belief && a.regret_utility == b.regret_utility && a.seed == b.seed &&
           a.threads == b.threads && a.write_logs == b.write_logs && a.out_dir == b.out_dir &&
           a.oracle_cache == b.oracle_cache;
}

std::uint64_t mean_field_model_hash(const MarketConfig& model, const PaymentInterval& interval) {
    json j = model_to_json(model);
    j.erase("n");
    j.erase("zeta");
    j.erase("zeta_schedule");
    j["context"].erase("demand_sampler");
    j["interval"] = {{"lo", bound_to_json(interval.lo)}, {"hi", bound_to_json(interval.hi)}};
    j["oracle_version"] = 1;
    const std::string canonical = j.dump();  // object keys are sorted
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace mfexp
