// Acceptance suite: one pass/fail line per criterion. `acceptance` runs all
// twelve, `acceptance 5 7` runs a selection. Exit status is nonzero when any
// selected criterion fails.

#include "lanarray/cli.hpp"
#include "lanarray/estimation.hpp"
#include "lanarray/likelihood.hpp"
#include "lanarray/simulation.hpp"
#include "lanarray/spectral_models.hpp"
#include "lanarray/stats.hpp"
#include "lanarray/toeplitz.hpp"
#include "lanarray/verification.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace lanarray;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

ParameterVector vec(std::initializer_list<double> v) {
    ParameterVector p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) p[i++] = x;
    return p;
}

double fgn_gamma(double H, int k) {
    auto p = [H](double x) { return std::pow(std::fabs(x), 2.0 * H); };
    return 0.5 * (p(k + 1.0) - 2.0 * p(k) + p(k - 1.0));
}

Symbol density_symbol(const ModelPtr& m, const ParameterVector& th, int n) {
    const ModelStage st = m->stage(n);
    return Symbol{[m, th, st](double l) {
                      double v = 0.0;
                      m->evaluate(th, st, l, 0, &v);
                      return v;
                  },
                  m->alpha_hint(th, n), "f"};
}

// 1 ------------------------------------------------------------------------
Outcome spectral_identity() {
    double worst = 0.0;
    for (int i = 0; i < 64; ++i) {
        const double l = std::numbers::pi * (i + 0.5) / 64.0;
        worst = std::max(worst, std::fabs(fbm_increment_density(0.5, l) - 1.0 / (2.0 * std::numbers::pi)));
    }
    return {worst <= 1e-10, "max |f_1/2 - 1/(2 pi)| = " + num(worst)};
}

// 2 ------------------------------------------------------------------------
Outcome autocovariance_oracle() {
    double fgn_err = 0.0;
    for (double H : {0.2, 0.7}) {
        const Symbol f{[H](double l) { return fbm_increment_density(H, l); }, 2.0 * H - 1.0, "fGN"};
        const Eigen::VectorXd g = fourier_coefficients(f, 65).gamma;
        for (int k = 0; k <= 64; ++k) fgn_err = std::max(fgn_err, std::fabs(g[k] - fgn_gamma(H, k)));
    }
    const auto ar = MildAr1Model::constant_rule(0.5);
    const ParameterVector th = vec({1.0, 1.0});
    const double phi = 0.5, s2 = 1.0;
    const Eigen::VectorXd g = fourier_coefficients(density_symbol(ar, th, 65), 65).gamma;
    double ar_err = 0.0;
    for (int k = 0; k <= 64; ++k) ar_err = std::max(ar_err, std::fabs(g[k] - std::pow(phi, k) * s2 / (1.0 - phi * phi)));
    return {fgn_err <= 1e-8 && ar_err <= 1e-10, "fGN max err " + num(fgn_err) + " (<= 1e-8), AR(1) max err " + num(ar_err) + " (<= 1e-10)"};
}

// 3 ------------------------------------------------------------------------
struct ModelCase {
    std::string name;
    ModelPtr model;
    ParameterVector theta;
};

std::vector<ModelCase> four_models() {
    return {{"white_noise", white_noise_model(), vec({1.3})},
            {"ar1_mild", MildAr1Model::power_rule(0.15), vec({1.0, 1.0})},
            {"fou", fou_model(1.0, 0.5), vec({1.0, 0.3, 1.0})},
            {"mixed_fbm", mixed_fbm_model(1.0), vec({0.1, 1.0, 0.2, 1.0})}};
}

Outcome derivative_consistency() {
    const int n = 64;
    std::string detail;
    bool ok = true;
    for (const auto& c : four_models()) {
        const Eigen::VectorXd x = sample_path(c.model, c.theta, n, 7, SamplerKind::cholesky);
        LikelihoodWorkspace ws(c.model, x);
        const int M = c.model->dimension();
        const Eigen::VectorXd s = score(ws, c.theta);
        const Eigen::MatrixXd H = hessian(ws, c.theta);
        Eigen::VectorXd s_fd(M);
        Eigen::MatrixXd H_fd(M, M);
        for (int j = 0; j < M; ++j) {
            const double h = 1e-5 * (1.0 + std::fabs(c.theta[j]));
            ParameterVector p = c.theta, m = c.theta;
            p[j] += h;
            m[j] -= h;
            s_fd[j] = (log_likelihood(ws, p) - log_likelihood(ws, m)) / (2.0 * h);
            H_fd.col(j) = (score(ws, p) - score(ws, m)) / (2.0 * h);
        }
        const double es = (s - s_fd).cwiseAbs().maxCoeff() / s.cwiseAbs().maxCoeff();
        const double eh = (H - H_fd).cwiseAbs().maxCoeff() / H.cwiseAbs().maxCoeff();
        ok = ok && es <= 1e-5 && eh <= 1e-4;
        detail += c.name + " score " + num(es, 2) + " hess " + num(eh, 2) + "; ";
    }
    return {ok, detail};
}

// 4 ------------------------------------------------------------------------
/// Autocovariances by an independent route: closed forms where they exist,
/// tanh-sinh quadrature of the model density otherwise.
Eigen::VectorXd oracle_autocovariance(const ModelCase& c, const ParameterVector& th, int n) {
    Eigen::VectorXd g(n);
    if (c.name == "white_noise") {
        g.setZero();
        g[0] = th[0];
    } else if (c.name == "ar1_mild") {
        const double phi = 1.0 - th[0] * std::dynamic_pointer_cast<const MildAr1Model>(c.model)->drift_scale(n);
        for (int k = 0; k < n; ++k) g[k] = std::pow(phi, k) * th[1] / (1.0 - phi * phi);
    } else if (c.name == "mixed_fbm") {
        const double d = 1.0 / n;
        for (int k = 0; k < n; ++k)
            g[k] = th[1] * std::pow(d, 2.0 * th[0]) * fgn_gamma(th[0], k) + th[3] * std::pow(d, 2.0 * th[2]) * fgn_gamma(th[2], k);
    } else {
        boost::math::quadrature::tanh_sinh<double> ts;
        for (int k = 0; k < n; ++k)
            g[k] = 2.0 * ts.integrate([&](double l) { return std::cos(k * l) * c.model->density(th, n, l); }, 0.0,
                                      std::numbers::pi);
    }
    return g;
}

double mvn_logdensity(const Eigen::MatrixXd& S, const Eigen::VectorXd& x) {
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
    const double logdet = std::log(std::fabs(lu.determinant()));
    return -0.5 * x.size() * std::log(2.0 * std::numbers::pi) - 0.5 * logdet - 0.5 * x.dot(lu.solve(x));
}

Outcome likelihood_equivalence() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::normal_distribution<double> Z;
    double worst = 0.0;
    std::string detail;
    for (const auto& c : four_models()) {
        double model_worst = 0.0;
        for (int draw = 0; draw < 20; ++draw) {
            const int n = 2 + draw % 7;
            ParameterVector th = c.theta;
            if (c.name == "white_noise") th = vec({0.5 + 1.5 * U(rng)});
            if (c.name == "ar1_mild") th = vec({0.3 + 0.7 * U(rng), 0.5 + 1.5 * U(rng)});
            if (c.name == "fou") th = vec({0.5 + 1.5 * U(rng), 0.1 + 0.8 * U(rng), 0.5 + 1.5 * U(rng)});
            if (c.name == "mixed_fbm") {
                const double H1 = 0.1 + 0.5 * U(rng);
                th = vec({H1, 0.5 + 1.5 * U(rng), H1 + 0.02 + 0.2 * U(rng), 0.5 + 1.5 * U(rng)});
            }
            Eigen::VectorXd x(n);
            for (int i = 0; i < n; ++i) x[i] = Z(rng);
            LikelihoodWorkspace ws(c.model, x);
            const double mine = log_likelihood(ws, th);
            const double ref = mvn_logdensity(toeplitz_dense(oracle_autocovariance(c, th, n)), x);
            model_worst = std::max(model_worst, std::fabs(mine - ref));
        }
        worst = std::max(worst, model_worst);
        detail += c.name + " " + num(model_worst, 2) + "; ";
    }
    return {worst <= 1e-8, "max |l - l_mvn| by model: " + detail};
}

// 5 ------------------------------------------------------------------------
Outcome trace_rate() {
    TraceSettings s;
    s.n_grid = {64, 128, 256, 512, 1024};
    s.p = 1;
    s.max_error_slope = -0.8;
    TraceFamily fam{MildAr1Model::constant_rule(0.5), vec({1.0, 1.0}), "gradient:0"};
    const AuditReport r = audit_trace_theorem(fam, s);
    std::string d = "verdict " + std::string(to_string(r.verdict));
    if (r.measured.contains("error_slope") && r.measured["error_slope"].is_number())
        d += ", slope(e_n) " + num(r.measured["error_slope"].get<double>()) + " vs bound slope " +
             num(r.measured["bound_slope"].get<double>());
    return {r.verdict == Verdict::pass, d};
}

// 6 ------------------------------------------------------------------------
Outcome dahlhaus() {
    const AuditReport r = audit_dahlhaus_counterexample({});
    return {r.verdict == Verdict::pass,
            "explicit exponent " + num(r.measured["explicit_exponent"].get<double>()) + ", sup exponent " +
                num(r.measured["sup_exponent"].get<double>()) + ", corrected-lemma exponent " +
                num(r.measured["corrected_lemma_exponent"].get<double>())};
}

// 7 ------------------------------------------------------------------------
Outcome fisher_limit() {
    const int n = 1 << 12;
    const auto ar = MildAr1Model::power_rule(0.15);
    const ParameterVector tha = vec({1.0, 1.0});
    const Eigen::MatrixXd Ra = ar->rate_matrix(tha, n);
    const Eigen::MatrixXd target = Eigen::Vector2d(0.5, 0.5).asDiagonal();
    const Eigen::MatrixXd Sa = Ra.transpose() * fisher_whittle(ar, tha, n) * Ra;
    const double ar_err = stats::relative_frobenius(Sa, target);

    const auto fou = fou_model(1.0, 0.5);
    const ParameterVector thf = vec({1.0, 0.3, 1.0});
    const Eigen::MatrixXd Rf = fou->rate_matrix(thf, n);
    const Eigen::MatrixXd Sf = Rf.transpose() * fisher_whittle(fou, thf, n) * Rf;
    const double fou_err = std::fabs(Sf(0, 0) - 0.5) / 0.5;
    return {ar_err <= 0.05 && fou_err <= 0.05,
            "AR(1) relative Frobenius " + num(ar_err) + " (<= 0.05; (1,1) entry " + num(Sa(0, 0)) + "), fOU (1,1) " +
                num(Sf(0, 0)) + " relative error " + num(fou_err) + " (<= 0.05)"};
}

// 8 ------------------------------------------------------------------------
Outcome clt() {
    CltSettings s;
    s.n = 1024;
    s.replications = 400;
    s.form = "score";
    const AuditReport r = audit_clt(MildAr1Model::power_rule(0.15), vec({1.0, 1.0}), s);
    std::string d = "verdict " + std::string(to_string(r.verdict));
    if (r.measured.contains("mean"))
        d += ", mean " + num(r.measured["mean"].get<double>()) + " var " + num(r.measured["variance"].get<double>()) +
             " quantile distance " + num(r.measured["quantile_distance"].get<double>());
    return {r.verdict == Verdict::pass, d};
}

// 9 ------------------------------------------------------------------------
Outcome lan() {
    LanSettings s;
    s.n_grid = {1 << 9, 1 << 10, 1 << 11, 1 << 12};
    s.replications = 400;
    const AuditReport r = audit_lan(MildAr1Model::power_rule(0.15), vec({1.0, 1.0}), s);
    std::string d = "verdict " + std::string(to_string(r.verdict));
    if (r.measured.contains("per_n")) {
        d += "; cov err / residual median by n:";
        for (const auto& row : r.measured["per_n"])
            d += " " + std::to_string(row["n"].get<int>()) + ":" + num(row["cov_relative_frobenius"].get<double>(), 3) +
                 "/" + num(row["residual_median"].get<double>(), 3);
    }
    return {r.verdict == Verdict::pass, d};
}

// 10 -----------------------------------------------------------------------
struct MleSummary {
    double cov_err = 0.0;
    double converged_share = 0.0;
};

MleSummary mle_study(const ModelPtr& model, const ParameterVector& theta0, int n, int reps, std::uint64_t seed) {
    SimulationPlan plan{model, theta0, {n}, reps, seed, SamplerKind::circulant, 1};
    MleStudy study;
    const auto recs = mle_monte_carlo(plan, study);
    std::vector<Eigen::VectorXd> z;
    int conv = 0;
    for (const auto& r : recs) {
        if (r.failed || !r.value.converged) continue;
        ++conv;
        z.push_back(*r.value.standardized_error);
    }
    MleSummary out;
    out.converged_share = static_cast<double>(conv) / reps;
    if (z.size() >= 2) {
        Eigen::MatrixXd Z(static_cast<Eigen::Index>(z.size()), theta0.size());
        for (std::size_t i = 0; i < z.size(); ++i) Z.row(static_cast<Eigen::Index>(i)) = z[i].transpose();
        out.cov_err = stats::relative_frobenius(stats::covariance(Z), model->limiting_fisher(theta0).inverse());
    } else {
        out.cov_err = std::numeric_limits<double>::infinity();
    }
    return out;
}

Outcome mle_asymptotics() {
    const MleSummary ar = mle_study(MildAr1Model::power_rule(0.15), vec({1.0, 1.0}), 2048, 400, 1001);
    const MleSummary wn = mle_study(white_noise_model(), vec({1.0}), 1024, 400, 1002);
    // Mixed fBm at n=512 costs seconds per fit; 100 replications keep the suite inside its budget.
    const MleSummary mf = mle_study(mixed_fbm_model(1.0), vec({0.1, 1.0, 0.2, 1.0}), 512, 100, 1003);
    const bool ok = ar.cov_err <= 0.2 && wn.cov_err <= 0.2 && mf.converged_share >= 0.9;
    return {ok, "AR(1) n=2048 cov err " + num(ar.cov_err) + ", white noise n=1024 cov err " + num(wn.cov_err) +
                    " (<= 0.2); mixed fBm n=512 converged share " + num(mf.converged_share) + " (>= 0.9)"};
}

// 11 -----------------------------------------------------------------------
Outcome efficiency() {
    const AuditReport r = audit_efficiency_ar1({});
    std::string d = "verdict " + std::string(to_string(r.verdict));
    if (r.measured.contains("ols_variance"))
        d += ", OLS var " + num(r.measured["ols_variance"].get<double>()) + " MLE var " +
             num(r.measured["mle_variance"].get<double>()) + " (target 2c = 2 +- 20%), median scaled diff " +
             num(r.measured["median_scaled_difference"].get<double>());
    return {r.verdict == Verdict::pass, d};
}

// 12 -----------------------------------------------------------------------
std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
        std::ifstream is(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << is.rdbuf();
        files[fs::relative(e.path(), dir).string()] = ss.str();
    }
    return files;
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "lanarray_acceptance_12";
    fs::remove_all(root);
    fs::create_directories(root);
    struct Suite {
        std::string name;
        std::string command;
        nlohmann::json config;
    };
    const std::vector<Suite> suites{
        {"simulate", "simulate",
         {{"model", {{"id", "ar1_mild"}, {"alpha", 0.15}}}, {"theta0", {1.0, 1.0}}, {"n", {256, 512}}, {"replications", 8}, {"seed", 11}}},
        {"estimate", "estimate",
         {{"model", {{"id", "ar1_mild"}, {"alpha", 0.15}}}, {"theta0", {1.0, 1.0}}, {"n", {512}}, {"replications", 8}, {"seed", 12}}},
        {"fisher", "fisher", {{"model", {{"id", "mixed_fbm"}}}, {"theta0", {0.1, 1.0, 0.2, 1.0}}, {"n", {64, 128}}}},
        {"audit_clt", "clt",
         {{"model", {{"id", "ar1_mild"}, {"alpha", 0.15}}}, {"theta0", {1.0, 1.0}}, {"seed", 13}, {"audit", {{"n", 256}, {"replications", 40}}}}},
        {"audit_lan", "lan",
         {{"model", {{"id", "white_noise"}}}, {"theta0", {1.0}}, {"seed", 14}, {"audit", {{"n_grid", {128, 256}}, {"replications", 20}}}}},
        {"audit_dahlhaus", "dahlhaus", {{"audit", {{"n_grid", {16, 32, 64, 128, 256}}}}}},
    };
    std::ostringstream sink;
    bool ok = true;
    int compared = 0;
    std::string detail;
    for (const auto& s : suites) {
        const fs::path cfg = root / (s.name + ".json");
        std::ofstream(cfg) << s.config.dump(2);
        std::map<std::string, std::string> first;
        for (int run = 0; run < 3; ++run) {
            cli::Options o;
            o.config = cfg;
            o.out = root / (s.name + "_run" + std::to_string(run));
            o.workers = run == 2 ? 3 : 1;
            const int code = cli::guarded(
                [&] {
                    if (s.command == "simulate") return cli::cmd_simulate(o, sink);
                    if (s.command == "estimate") return cli::cmd_estimate(o, sink);
                    if (s.command == "fisher") return cli::cmd_fisher(o, sink);
                    return cli::cmd_audit(s.command, o, sink);
                },
                sink);
            if (code == cli::exit_config || code == cli::exit_model) {
                ok = false;
                detail += s.name + " exited " + std::to_string(code) + "; ";
            }
            const auto snap = snapshot(o.out);
            if (run == 0) first = snap;
            else if (snap != first) {
                ok = false;
                detail += s.name + " run " + std::to_string(run) + " differs; ";
            }
            if (run > 0) compared += static_cast<int>(snap.size());
        }
    }
    fs::remove_all(root);
    return {ok, std::to_string(suites.size()) + " suites rerun (workers 1, 1, 3), " + std::to_string(compared) +
                    " files compared byte-for-byte" + (detail.empty() ? "" : "; " + detail)};
}

struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "spectral identity f_1/2 = 1/(2 pi)", 1.0, spectral_identity},
        {2, "autocovariance oracles", 30.0, autocovariance_oracle},
        {3, "score and Hessian vs finite differences", 120.0, derivative_consistency},
        {4, "likelihood vs dense normal density, n <= 8", 60.0, likelihood_equivalence},
        {5, "trace approximation rate", 600.0, trace_rate},
        {6, "bounded-density counterexample", 120.0, dahlhaus},
        {7, "Fisher limits", 300.0, fisher_limit},
        {8, "quadratic-form CLT", 600.0, clt},
        {9, "LAN expansion", 1200.0, lan},
        {10, "MLE asymptotics", 1800.0, mle_asymptotics},
        {11, "MLE vs OLS efficiency", 900.0, efficiency},
        {12, "determinism of artifacts", 600.0, determinism},
    };
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.push_back(std::stoi(argv[i]));
    int failures = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
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
        if (!pass) ++failures;
        std::cout << "criterion " << c.id << " [" << c.name << "]: " << (pass ? "PASS" : "FAIL") << " -- " << o.detail
                  << " -- " << num(secs, 3) << " s (budget " << c.budget_s << " s" << (in_time ? "" : ", exceeded")
                  << ")" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
