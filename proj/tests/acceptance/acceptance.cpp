// Acceptance run: one PASS/FAIL line per criterion, each with the measured
// quantities and the wall-clock time against its budget.
//
//   acceptance [criterion ...] [--out DIR]
//
// With no criterion numbers every criterion runs. Exit status is 0 only if all
// selected criteria pass. The lines are also written to DIR/acceptance_report.txt.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mfexp/config.hpp"
#include "mfexp/equilibrium.hpp"
#include "mfexp/experiment.hpp"
#include "mfexp/inference.hpp"
#include "mfexp/policy.hpp"
#include "mfexp/simulator.hpp"

using namespace mfexp;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string title;
    double budget_s;
    std::function<Outcome()> run;
};

std::string out_root = "acceptance_out";

std::string num(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

// ---------------------------------------------------------------------------

Outcome gradient_consistency() {
    const double p = 20.0;
    const double d = 0.4;
    const int reps = 200;
    MarketConfig model = preset_config("fig2").model;
    model.zeta = 0.5;
    const double truth = mean_field_report(p, d, model).uPrime;

    auto rmse = [&](std::int64_t n, int& invalid) {
        model.n = n;
        std::vector<double> err(reps, 0.0);
        std::vector<int> bad(reps, 0);
        parallel_for(reps, 0, [&](int r) {
            const SeedSpec seeds{20240101, static_cast<std::uint64_t>(r), 0};
            const DayOutcome day = run_day_at_context(model, p, model.zeta, d, seeds);
            const GradientEstimate g = estimate_utility_gradient(day, p, model);
            if (g.valid) {
                err[static_cast<std::size_t>(r)] = (g.GammaHat - truth) * (g.GammaHat - truth);
            } else {
                bad[static_cast<std::size_t>(r)] = 1;
            }
        });
        invalid = 0;
        double sum = 0.0;
        for (int r = 0; r < reps; ++r) {
            invalid += bad[static_cast<std::size_t>(r)];
            sum += err[static_cast<std::size_t>(r)];
        }
        return std::sqrt(sum / std::max(1, reps - invalid));
    };
    int inv3 = 0;
    int inv5 = 0;
    const double r3 = rmse(1000, inv3);
    const double r5 = rmse(100000, inv5);
    const double ratio = r3 / r5;
    return {ratio >= 3.0 && inv5 == 0,
            "RMSE(n=1e3)=" + num(r3) + " RMSE(n=1e5)=" + num(r5) + " ratio=" + num(ratio) +
                " (need >= 3); invalid days " + std::to_string(inv3) + "/" + std::to_string(inv5) +
                "; u'(20)=" + num(truth)};
}

Outcome derivative_identities() {
    // Relative error pointwise, except that near a zero crossing of u' the
    // error is measured against the largest |u'| on the grid.
    double worst_mu = 0.0;
    double worst_u = 0.0;
    for (const MarketConfig& model : {preset_config("fig2").model, preset_config("sec6-surge").model}) {
        const double d = 0.4;
        std::vector<double> up, fd;
        for (int i = 0; i < 50; ++i) {
            const double p = 10.0 + 20.0 * i / 49.0;
            const double h = 1e-3;
            const MeanFieldReport r = mean_field_report(p, d, model);
            const double fd_mu = (solve_mu(p + h, 0.0, d, model).mu - solve_mu(p - h, 0.0, d, model).mu) / (2 * h);
            const double fd_u =
                (mean_field_utility(p + h, d, model) - mean_field_utility(p - h, d, model)) / (2 * h);
            worst_mu = std::max(worst_mu, std::abs(r.muPrime - fd_mu) / std::abs(fd_mu));
            up.push_back(r.uPrime);
            fd.push_back(fd_u);
        }
        double scale = 0.0;
        for (double v : fd) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 0; i < fd.size(); ++i) {
            worst_u = std::max(worst_u, std::abs(up[i] - fd[i]) / std::max(std::abs(fd[i]), 1e-3 * scale));
        }
    }
    return {worst_mu < 1e-4 && worst_u < 1e-4,
            "max rel err mu'=" + num(worst_mu, 3) + " u'=" + num(worst_u, 3) +
                " (need < 1e-4; 50 payments in [10,30], identity and surge, d=0.4)"};
}

Outcome stein_oracle() {
    MarketConfig model = MarketConfig::defaults();
    auto fd_err = [&](double mu, double demand, std::int64_t n) {
        const double h = 1e-6;
        const double fd = (finite_n_q(mu + h, demand, n, model) - finite_n_q(mu - h, demand, n, model)) / (2 * h);
        return std::abs(stein_dq(mu, demand, n, model) - fd);
    };
    const double ref = fd_err(0.5, 16.0, 40);
    double worst = ref;
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> nn(2, 60), ll(2, 12);
    std::uniform_real_distribution<double> mm(0.05, 0.95), dd(0.05, 2.0);
    for (int k = 0; k < 20; ++k) {
        const std::int64_t n = nn(rng);
        model.allocation = AllocationCurve(ll(rng));
        const double mu = mm(rng);
        worst = std::max(worst, fd_err(mu, dd(rng) * static_cast<double>(n), n));
    }
    return {worst < 1e-7, "error at (n=40, mu=0.5, d=16, L=8)=" + num(ref, 3) +
                              "; max over 20 random instances=" + num(worst, 3) + " (need < 1e-7)"};
}

Outcome queue_limit() {
    const AllocationCurve w(8);
    const int servers = 10;
    double worst = 0.0;
    std::string detail;
    int k = 0;
    for (double ratio : {0.5, 0.8, 1.0, 2.0}) {
        const QueueSimResult r = simulate_queue_allocation(ratio * servers, servers, 8, 1'000'000, 1000 + k++);
        const double rel = std::abs(r.service_rate / w.omega(ratio) - 1.0);
        worst = std::max(worst, rel);
        detail += "x=" + num(ratio, 2) + ": " + num(r.service_rate, 5) + " vs " + num(w.omega(ratio), 5) + "; ";
    }
    return {worst < 0.01, detail + "max rel dev " + num(worst, 3) + " (need < 1%)"};
}

Outcome section6_comparison() {
    ExperimentConfig config = preset_config("sec6");
    config.model.n = 10000;
    config.replications = 200;
    config.out_dir = out_root + "/criterion5";
    config.write_logs = true;
    const ExperimentResult res = run_compare(config);

    const RegretReport& local = res.reports.front();
    double best_in = 1e300;
    double best_future = 1e300;
    std::size_t argmin = 0;
    std::string sweep;
    for (std::size_t k = 1; k < res.reports.size(); ++k) {
        const RegretReport& g = res.reports[k];
        if (g.in_sample.mean < best_in) {
            best_in = g.in_sample.mean;
            argmin = k;
        }
        best_future = std::min(best_future, g.future.mean);
        sweep += std::to_string(g.explore_T) + ":" + num(g.in_sample.mean, 3) + "/" + num(g.future.mean, 3) + " ";
    }
    const bool interior = argmin > 1 && argmin + 1 < res.reports.size();
    const double li = local.in_sample.mean;
    const double lf = local.future.mean;
    const bool pass = li <= 0.1 && lf <= 0.02 && best_in >= 5 * li && best_future >= 5 * lf && interior;
    return {pass, "local in-sample=" + num(li, 3) + " (<= 0.1) future=" + num(lf, 3) +
                      " (<= 0.02); global best in-sample=" + num(best_in, 3) + " (" + num(best_in / li, 3) +
                      "x) best future=" + num(best_future, 3) + " (" + num(best_future / lf, 3) +
                      "x); min at exploreT=" + std::to_string(res.reports[argmin].explore_T) +
                      (interior ? " (interior)" : " (boundary)") + "; sweep T:in/future " + sweep};
}

Outcome surge_shift() {
    const MarketConfig base = preset_config("sec6").model;
    const MarketConfig surge = preset_config("sec6-surge").model;
    const OracleResult b = oracle_optimal_payment(base, oracle_interval(base));
    const OracleResult s = oracle_optimal_payment(surge, oracle_interval(surge));
    const double gain = s.uStar - b.uStar;
    const bool pass = std::abs(b.pStar - 17.6) <= 0.5 && std::abs(s.pStar - 15.7) <= 0.5 && std::abs(gain - 0.06) <= 0.03;
    return {pass, "p* base=" + num(b.pStar, 5) + " (17.6 +- 0.5) surge=" + num(s.pStar, 5) +
                      " (15.7 +- 0.5); utility gain=" + num(gain, 3) + " (0.06 +- 0.03)"};
}

Outcome randomization_cost() {
    const MarketConfig model = preset_config("sec6").model;
    const QuadratureRule contexts = model.context.expectation_rule(kOracleContextNodes);
    const double p = 17.6;
    const double u0 = population_utility(p, model, contexts, 0.0);
    std::vector<double> lx, ly;
    for (double z : {0.025, 0.05, 0.1, 0.2}) {
        lx.push_back(std::log(z));
        ly.push_back(std::log(u0 - population_utility(p, model, contexts, z)));
    }
    const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4;
    const double my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4;
    double sxy = 0.0;
    double sxx = 0.0;
    for (int i = 0; i < 4; ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    const double slope = sxy / sxx;
    return {std::abs(slope - 2.0) <= 0.1, "log-log slope=" + num(slope, 5) + " (2.0 +- 0.1); cost at zeta=0.2: " +
                                               num(std::exp(ly[3]), 3)};
}

Outcome regret_bound() {
    ExperimentConfig config = preset_config("sec6");
    config.evaluation = EvaluationMode::MeanField;
    config.model.interval = PaymentInterval{5.0, 60.0};
    config.replications = 50;
    config.write_logs = false;
    config.out_dir = out_root + "/criterion8";
    const ExperimentResult res = run_experiment(config);
    const double M = res.oracle.diagnostic.gradient_bound;
    const double bound = config.eta * M * M / 2.0;
    double worst = -1e300;
    for (const auto& rep : res.replications) {
        double weighted = 0.0;
        for (const auto& day : rep.days) {
            weighted += day.t * day.regret;
            worst = std::max(worst, weighted / day.t);
        }
    }
    return {worst <= bound, "max over T<=200 and 50 reps of (1/T) sum t*regret_t=" + num(worst, 4) +
                                " <= eta*M^2/2=" + num(bound, 4) + " (M=" + num(M, 4) + ", eta=" +
                                num(config.eta, 3) + ")"};
}

Outcome omd_equivalence() {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 2.0);
    std::uniform_real_distribution<double> start(5.0, 60.0), eta_draw(0.1, 50.0);
    double worst = 0.0;
    for (int seq = 0; seq < 1000; ++seq) {
        const double eta = eta_draw(rng);
        OptimizerState state = OptimizerState::start(start(rng), eta, PaymentInterval::unbounded());
        double p = state.pCurrent;
        for (int t = 1; t <= 200; ++t) {
            const double grad = g(rng);
            state = mirror_descent_step(std::move(state), grad);
            p += 2.0 * eta * grad / (t + 1.0);
            worst = std::max(worst, std::abs(state.pCurrent - p) / std::max(1.0, std::abs(p)));
        }
    }
    return {worst <= 1e-9, "max relative gap closed form vs recursion=" + num(worst, 3) +
                               " over 1000 sequences x 200 steps (need <= 1e-9)"};
}

Outcome equilibrium_and_concavity() {
    const MarketConfig model = preset_config("sec6").model;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> pay(10.0, 30.0), dem(0.1, 0.6), u01(0.0, 1.0);
    double worst_residual = 0.0;
    double worst_spread = 0.0;
    for (int k = 0; k < 200; ++k) {
        const double p = pay(rng);
        const double d = dem(rng);
        const EquilibriumPoint ref = solve_mu(p, 0.0, d, model);
        worst_residual = std::max(worst_residual, ref.residual);
        for (int r = 0; r < 10; ++r) {
            const double lo = kMuLowerBound + u01(rng) * (ref.mu - kMuLowerBound);
            const double hi = ref.mu + u01(rng) * (1.0 - ref.mu);
            const EquilibriumPoint eq = solve_mu_in(p, 0.0, d, model, lo, hi);
            worst_residual = std::max(worst_residual, eq.residual);
            worst_spread = std::max(worst_spread, std::abs(eq.mu - ref.mu));
        }
    }
    const ConcavityReport c = concavity_diagnostic(model, PaymentInterval{10.0, 30.0}, 41);
    const bool pass = worst_residual < 1e-12 && worst_spread <= 1e-12 && c.utility_concave;
    return {pass, "max residual=" + num(worst_residual, 3) + " (< 1e-12); max root spread over restarts=" +
                      num(worst_spread, 3) + "; worst second difference of u on [10,30]=" +
                      num(c.worst_second_difference, 3) + " (< 0)"};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--out" && i + 1 < argc) {
            out_root = argv[++i];
        } else {
            selected.insert(std::stoi(a));
        }
    }
    std::filesystem::create_directories(out_root);

    const std::vector<Criterion> criteria{
        {1, "gradient consistency", 120.0, gradient_consistency},
        {2, "derivative identities", 10.0, derivative_identities},
        {3, "Stein oracle", 5.0, stein_oracle},
        {4, "queue limit", 60.0, queue_limit},
        {5, "local vs global comparison", 1800.0, section6_comparison},
        {6, "surge payment shift", 300.0, surge_shift},
        {7, "cost of randomization", 10.0, randomization_cost},
        {8, "regret bound", 120.0, regret_bound},
        {9, "mirror descent closed form", 1.0, omd_equivalence},
        {10, "equilibrium uniqueness and concavity", 10.0, equilibrium_and_concavity},
    };

    std::ofstream report(std::filesystem::path(out_root) / "acceptance_report.txt");
    int failures = 0;
    for (const Criterion& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.budget_s;
        const bool pass = o.pass && in_time;
        failures += pass ? 0 : 1;
        char line[4096];
        std::snprintf(line, sizeof line, "criterion %2d %s  %s: %s; runtime %.2f s (budget %.0f s%s)\n", c.id,
                      pass ? "PASS" : "FAIL", c.title.c_str(), o.detail.c_str(), secs, c.budget_s,
                      in_time ? "" : ", EXCEEDED");
        std::fputs(line, stdout);
        std::fflush(stdout);
        report << line << std::flush;
    }
    return failures == 0 ? 0 : 1;
}
