#pragma once

// Batch front end: JSON experiment configs in, CSV / JSON-lines / binary
// artifacts and a manifest out. One experiment per config file.

#include "lanarray/errors.hpp"
#include "lanarray/estimation.hpp"
#include "lanarray/io.hpp"
#include "lanarray/likelihood.hpp"
#include "lanarray/simulation.hpp"
#include "lanarray/spectral_models.hpp"
#include "lanarray/stats.hpp"
#include "lanarray/verification.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lanarray::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { exit_ok = 0, exit_partial = 1, exit_config = 2, exit_model = 3, exit_inconclusive = 4 };

struct Options {
    fs::path config;
    fs::path out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    int max_n = 4096;
};

// --- config access ---------------------------------------------------------

template <class T>
T value_or(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

template <class T>
void assign(const json& j, const char* key, T& field) {
    field = value_or<T>(j, key, field);
}

inline const json& section(const json& j, const char* key) {
    static const json empty = json::object();
    if (!j.contains(key)) return empty;
    if (!j[key].is_object()) throw ConfigError(std::string("config section '") + key + "' must be an object");
    return j[key];
}

inline Eigen::VectorXd vector_from(const json& j, const char* what) {
    if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(std::string(what) + " must be an array of numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

inline std::vector<int> n_list_from(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("config needs '") + key + "'");
    const json& v = j[key];
    std::vector<int> out;
    try {
        if (v.is_number_integer()) out.push_back(v.get<int>());
        else if (v.is_array())
            for (const auto& e : v) out.push_back(e.get<int>());
        else throw ConfigError(std::string("'") + key + "' must be an integer or an array of integers");
    } catch (const json::exception&) {
        throw ConfigError(std::string("'") + key + "' must be an integer or an array of integers");
    }
    if (out.empty()) throw ConfigError(std::string("'") + key + "' is empty");
    for (int n : out)
        if (n < 1) throw ConfigError(std::string("'") + key + "' entries must be positive");
    return out;
}

inline SamplerKind sampler_from(const std::string& s) {
    if (s == "circulant") return SamplerKind::circulant;
    if (s == "cholesky") return SamplerKind::cholesky;
    throw ConfigError("sampler must be 'circulant' or 'cholesky', got '" + s + "'");
}

inline Curvature curvature_from(const std::string& s) {
    if (s == "observed") return Curvature::observed;
    if (s == "observed_whittle") return Curvature::observed_whittle;
    if (s == "fisher_exact") return Curvature::fisher_exact;
    if (s == "fisher_whittle") return Curvature::fisher_whittle;
    throw ConfigError("unknown curvature '" + s + "'");
}

/// Model from {"id": ..., stage-rule parameters}.
inline ModelPtr make_model(const json& cfg) {
    if (!cfg.contains("model")) throw ConfigError("config needs a 'model' section");
    const json& m = cfg["model"];
    const std::string id = m.is_string() ? m.get<std::string>() : value_or<std::string>(m, "id", "");
    const json spec = m.is_object() ? m : json::object();
    try {
        if (id == "white_noise") return white_noise_model();
        if (id == "mixed_fbm") return mixed_fbm_model(value_or(spec, "horizon", 1.0));
        if (id == "fou") return fou_model(value_or(spec, "C", 1.0), value_or(spec, "beta", 0.5));
        if (id == "ar1_mild") {
            const std::string rule = value_or<std::string>(spec, "a_rule", "power");
            if (rule == "power") return MildAr1Model::power_rule(value_or(spec, "alpha", 0.15));
            if (rule == "constant") return MildAr1Model::constant_rule(value_or(spec, "a", 0.5));
            throw ModelError("ar1_mild a_rule must be 'power' or 'constant', got '" + rule + "'");
        }
    } catch (const ContractError& e) {
        throw ModelError(std::string("model '") + id + "': " + e.what());
    }
    throw ModelError("unknown model id '" + id + "' (expected mixed_fbm, fou, ar1_mild or white_noise)");
}

inline ParameterVector theta_from(const json& cfg, const ModelPtr& model, const char* key = "theta0") {
    if (!cfg.contains(key)) throw ConfigError(std::string("config needs '") + key + "'");
    const ParameterVector th = vector_from(cfg[key], key);
    if (th.size() != model->dimension())
        throw ModelError(std::string(key) + " has " + std::to_string(th.size()) + " entries but model '" + model->id() +
                         "' has " + std::to_string(model->dimension()) + " parameters");
    try {
        model->require(th);
    } catch (const Error& e) {
        throw ModelError(e.what());
    }
    return th;
}

/// The effective config: file contents plus command-line overrides. Worker
/// count is dropped from the hashed copy because it never changes results.
struct EffectiveConfig {
    json cfg;
    std::string hash;
};

inline EffectiveConfig load_config(const Options& opt) {
    std::ifstream is(opt.config);
    if (!is) throw ConfigError("cannot read config " + opt.config.string());
    json cfg;
    try {
        cfg = json::parse(is, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
    if (opt.seed) cfg["seed"] = *opt.seed;
    if (opt.workers) cfg["workers"] = *opt.workers;
    json hashed = cfg;
    hashed.erase("workers");
    return {cfg, io::hex64(io::fnv1a(hashed.dump()))};
}

inline void check_cap(const std::vector<int>& ns, int max_n) {
    for (int n : ns)
        if (n > max_n)
            throw ConfigError("n=" + std::to_string(n) + " exceeds --max-n " + std::to_string(max_n));
}

inline SimulationPlan plan_from(const json& cfg, const ModelPtr& model, const ParameterVector& theta0, int max_n) {
    SimulationPlan p;
    p.model = model;
    p.theta0 = theta0;
    p.n_list = n_list_from(cfg, "n");
    check_cap(p.n_list, max_n);
    p.replications = value_or(cfg, "replications", 1);
    p.seed = value_or<std::uint64_t>(cfg, "seed", 0);
    p.sampler = sampler_from(value_or<std::string>(cfg, "sampler", "circulant"));
    p.workers = value_or(cfg, "workers", 1);
    if (p.replications < 1) throw ConfigError("replications must be >= 1");
    if (p.workers < 1) throw ConfigError("workers must be >= 1");
    return p;
}

class Manifest {
public:
    Manifest(std::string command, const EffectiveConfig& ec, fs::path out) : out_(std::move(out)) {
        m_.command = std::move(command);
        m_.config_hash = ec.hash;
        m_.started = io::utc_timestamp();
    }
    fs::path output(const std::string& rel) {
        m_.outputs.push_back(rel);
        const fs::path p = out_ / rel;
        fs::create_directories(p.parent_path());
        return p;
    }
    void seed(std::uint64_t s) { m_.seeds.push_back(s); }
    void finish() {
        m_.finished = io::utc_timestamp();
        m_.outputs.push_back("manifest.json");
        io::write_json(out_ / "manifest.json", m_.to_json());
    }

private:
    fs::path out_;
    io::RunManifest m_;
};

// --- commands --------------------------------------------------------------

inline int cmd_simulate(const Options& opt, std::ostream& log = std::cerr) {
    const EffectiveConfig ec = load_config(opt);
    const ModelPtr model = make_model(ec.cfg);
    const ParameterVector theta0 = theta_from(ec.cfg, model);
    const SimulationPlan plan = plan_from(ec.cfg, model, theta0, opt.max_n);
    fs::create_directories(opt.out);
    Manifest man("simulate", ec, opt.out);

    struct Sample {
        Eigen::VectorXd x;
        bool fallback = false;
    };
    const auto recs = run_monte_carlo<Sample>(plan, [](const Eigen::VectorXd& x, const PathContext& ctx) {
        return Sample{x, ctx.sampler->fallback_used()};
    });
    io::JsonLinesWriter jl(man.output("records.jsonl"));
    int failed = 0;
    for (const auto& r : recs) {
        man.seed(r.seed);
        json line = {{"n", r.n}, {"replication", r.replication}, {"seed", r.seed}, {"failed", r.failed}};
        if (r.failed) {
            ++failed;
            line["error"] = r.error;
        } else {
            const std::string rel = "paths/n" + std::to_string(r.n) + "_r" + std::to_string(r.replication) + ".bin";
            io::write_path_dump(man.output(rel), r.value.x,
                                {{"model", model->id()},
                                 {"theta0", to_json_vector(theta0)},
                                 {"n", r.n},
                                 {"replication", r.replication},
                                 {"seed", r.seed},
                                 {"sampler", to_string(plan.sampler)},
                                 {"cholesky_fallback", r.value.fallback}});
            man.output(rel + ".json");
            line["file"] = rel;
        }
        jl.write(line);
    }
    man.finish();
    log << "simulate: " << recs.size() - failed << " paths written to " << opt.out.string();
    if (failed) log << ", " << failed << " failed";
    log << "\n";
    return failed ? exit_partial : exit_ok;
}

inline MleOptions mle_options_from(const json& cfg) {
    const json& e = section(cfg, "estimation");
    MleOptions o;
    assign(e, "tolerance", o.tolerance);
    assign(e, "max_iterations", o.max_iterations);
    assign(e, "max_halvings", o.max_halvings);
    if (e.contains("curvature")) o.curvature = curvature_from(e["curvature"].get<std::string>());
    return o;
}

inline int cmd_estimate(const Options& opt, std::ostream& log = std::cerr) {
    const EffectiveConfig ec = load_config(opt);
    const ModelPtr model = make_model(ec.cfg);
    const MleOptions mopt = mle_options_from(ec.cfg);
    const json& est = section(ec.cfg, "estimation");
    const int M = model->dimension();

    struct Row {
        int n = 0;
        int replication = 0;
        std::string source;
        bool failed = false;
        std::string error;
        EstimationResult result;
    };
    std::vector<Row> rows;
    std::optional<ParameterVector> theta0;
    if (ec.cfg.contains("theta0")) theta0 = theta_from(ec.cfg, model);

    if (ec.cfg.contains("data")) {
        const json& files = ec.cfg["data"];
        if (!files.is_array() || files.empty()) throw ConfigError("'data' must be a non-empty array of file paths");
        const ParameterVector init =
            ec.cfg.contains("theta_init") ? theta_from(ec.cfg, model, "theta_init")
                                          : (theta0 ? *theta0 : throw ConfigError("estimate needs 'theta_init' or 'theta0'"));
        int idx = 0;
        for (const auto& f : files) {
            if (!f.is_string()) throw ConfigError("'data' entries must be file paths");
            fs::path p = f.get<std::string>();
            if (p.is_relative()) p = opt.config.parent_path() / p;
            const Eigen::VectorXd x = io::read_path_dump(p);  // ConfigError if missing
            check_cap({static_cast<int>(x.size())}, opt.max_n);
            Row r;
            r.n = static_cast<int>(x.size());
            r.replication = idx++;
            r.source = f.get<std::string>();
            try {
                LikelihoodWorkspace ws(model, x);
                r.result = solve_mle(ws, init, mopt, theta0);
            } catch (const std::exception& e) {
                r.failed = true;
                r.error = e.what();
            }
            rows.push_back(std::move(r));
        }
    } else {
        if (!theta0) throw ConfigError("an inline simulation plan needs 'theta0'");
        const SimulationPlan plan = plan_from(ec.cfg, model, *theta0, opt.max_n);
        MleStudy study;
        study.options = mopt;
        assign(est, "init_scale", study.init_scale);
        for (const auto& r : mle_monte_carlo(plan, study)) {
            Row row;
            row.n = r.n;
            row.replication = r.replication;
            row.source = "seed " + std::to_string(r.seed);
            row.failed = r.failed;
            row.error = r.error;
            row.result = r.value;
            row.result.seed = r.seed;
            rows.push_back(std::move(row));
        }
    }

    fs::create_directories(opt.out);
    Manifest man("estimate", ec, opt.out);
    io::JsonLinesWriter jl(man.output("records.jsonl"));
    int failed = 0;
    for (const auto& r : rows) {
        json line = {{"n", r.n}, {"replication", r.replication}, {"source", r.source}, {"failed", r.failed}};
        if (r.failed) {
            ++failed;
            line["error"] = r.error;
        } else {
            line.update(to_json(r.result));
            if (r.result.seed) man.seed(*r.result.seed);
        }
        jl.write(line);
    }

    // Summary per n of the standardized errors of converged fits.
    const auto names = model->parameter_names();
    std::vector<std::string> header{"n", "fits", "converged", "failed"};
    for (int j = 0; j < M; ++j) header.push_back("mean_" + names[j]);
    for (int j = 0; j < M; ++j)
        for (int k = 0; k < M; ++k) header.push_back("cov_" + names[j] + "_" + names[k]);
    for (int j = 0; j < M; ++j)
        for (int k = 0; k < M; ++k) header.push_back("limit_inv_" + names[j] + "_" + names[k]);
    header.push_back("cov_relative_frobenius");
    io::CsvWriter csv(man.output("summary.csv"), header);
    std::set<int> ns;
    for (const auto& r : rows) ns.insert(r.n);
    for (int n : ns) {
        std::vector<Eigen::VectorXd> z;
        int fits = 0, conv = 0, fail = 0;
        for (const auto& r : rows) {
            if (r.n != n) continue;
            ++fits;
            if (r.failed) {
                ++fail;
                continue;
            }
            if (!r.result.converged) continue;
            ++conv;
            if (r.result.standardized_error) z.push_back(*r.result.standardized_error);
        }
        std::vector<std::string> f{std::to_string(n), std::to_string(fits), std::to_string(conv), std::to_string(fail)};
        Eigen::MatrixXd C = Eigen::MatrixXd::Constant(M, M, std::numeric_limits<double>::quiet_NaN());
        Eigen::VectorXd mu = Eigen::VectorXd::Constant(M, std::numeric_limits<double>::quiet_NaN());
        if (z.size() >= 2) {
            Eigen::MatrixXd Z(static_cast<Eigen::Index>(z.size()), M);
            for (std::size_t i = 0; i < z.size(); ++i) Z.row(static_cast<Eigen::Index>(i)) = z[i].transpose();
            mu = Z.colwise().mean().transpose();
            C = stats::covariance(Z);
        }
        Eigen::MatrixXd Iinv = Eigen::MatrixXd::Constant(M, M, std::numeric_limits<double>::quiet_NaN());
        if (theta0) {
            try {
                Iinv = model->limiting_fisher(*theta0).inverse();
            } catch (const Error&) {
            }
        }
        auto cell = [](double v) { return std::isfinite(v) ? io::format_double(v) : std::string(); };
        for (int j = 0; j < M; ++j) f.push_back(cell(mu[j]));
        for (int j = 0; j < M; ++j)
            for (int k = 0; k < M; ++k) f.push_back(cell(C(j, k)));
        for (int j = 0; j < M; ++j)
            for (int k = 0; k < M; ++k) f.push_back(cell(Iinv(j, k)));
        f.push_back(C.allFinite() && Iinv.allFinite() ? cell(stats::relative_frobenius(C, Iinv)) : std::string());
        csv.row(f);
    }
    man.finish();
    log << "estimate: " << rows.size() << " fits";
    if (failed) log << ", " << failed << " failed";
    log << "\n";
    return failed ? exit_partial : exit_ok;
}

inline const std::vector<std::string>& audit_ids() {
    static const std::vector<std::string> ids{"cond11", "cond12", "envelopes", "trace",
                                              "clt",    "lan",    "dahlhaus",  "efficiency"};
    return ids;
}

inline AuditReport capped(const std::string& id, int n, int max_n) {
    AuditReport r;
    r.audit_id = id;
    r.mark_inconclusive("n=" + std::to_string(n) + " exceeds the size cap --max-n " + std::to_string(max_n));
    r.settle();
    return r;
}

inline int max_of(const std::vector<int>& v) { return *std::max_element(v.begin(), v.end()); }

/// Runs one audit from the config's "audit" section; `--max-n` makes oversized
/// audits inconclusive instead of running them.
inline AuditReport run_audit(const std::string& id, const json& cfg, const Options& opt) {
    const json& a = section(cfg, "audit");
    const std::uint64_t seed = value_or<std::uint64_t>(cfg, "seed", 20240601);
    const int workers = value_or(cfg, "workers", 1);
    auto grid = [&](const char* key, std::vector<int> fallback) { return a.contains(key) ? n_list_from(a, key) : fallback; };

    if (id == "dahlhaus") {
        DahlhausSettings s;
        s.n_grid = grid("n_grid", s.n_grid);
        assign(a, "grid_points", s.grid_points);
        assign(a, "alpha_bar", s.alpha_bar);
        assign(a, "beta_bar", s.beta_bar);
        assign(a, "target", s.target);
        assign(a, "tolerance", s.tolerance);
        assign(a, "margin", s.margin);
        return audit_dahlhaus_counterexample(s);
    }
    if (id == "efficiency") {
        EfficiencySettings s;
        s.seed = seed;
        s.workers = workers;
        assign(a, "n", s.n);
        assign(a, "replications", s.replications);
        assign(a, "alpha", s.alpha);
        if (cfg.contains("model") && cfg["model"].is_object()) assign(cfg["model"], "alpha", s.alpha);
        if (cfg.contains("theta0")) s.theta0 = vector_from(cfg["theta0"], "theta0");
        if (s.theta0.size() != 2) throw ModelError("efficiency needs theta0 = (c, sigma^2)");
        s.sampler = sampler_from(value_or<std::string>(cfg, "sampler", "circulant"));
        assign(a, "variance_tolerance", s.variance_tolerance);
        assign(a, "median_tolerance", s.median_tolerance);
        assign(a, "max_nonconvergence", s.max_nonconvergence);
        assign(a, "init_scale", s.study.init_scale);
        s.study.options = mle_options_from(cfg);
        if (s.n > opt.max_n) return capped(id, s.n, opt.max_n);
        return audit_efficiency_ar1(s);
    }

    const ModelPtr model = make_model(cfg);
    const ParameterVector theta0 = theta_from(cfg, model);
    if (id == "cond11") {
        Cond11Settings s;
        s.n_grid = grid("n_grid", s.n_grid);
        assign(a, "delta", s.delta);
        assign(a, "ball_points", s.ball_points);
        assign(a, "tolerance", s.tolerance);
        return audit_cond_1_1(model, theta0, s);
    }
    if (id == "cond12") {
        Cond12Settings s;
        s.n_grid = grid("n_grid", s.n_grid);
        assign(a, "eta", s.eta);
        assign(a, "slack", s.slack);
        assign(a, "fd_step", s.fd_step);
        return audit_cond_1_2(model, theta0, s);
    }
    if (id == "envelopes") {
        EnvelopeSettings s;
        s.n_grid = grid("n_grid", s.n_grid);
        s.coefficient_n_grid = grid("coefficient_n_grid", s.coefficient_n_grid);
        if (a.contains("eps_grid")) {
            const Eigen::VectorXd e = vector_from(a["eps_grid"], "eps_grid");
            s.eps_grid.assign(e.data(), e.data() + e.size());
        }
        assign(a, "lambda_points", s.lambda_points);
        assign(a, "lambda_min", s.lambda_min);
        assign(a, "table_eta", s.table_eta);
        assign(a, "eta", s.eta);
        assign(a, "slack", s.slack);
        return audit_envelopes(model, theta0, s);
    }
    if (id == "trace") {
        TraceSettings s;
        s.n_grid = grid("n_grid", s.n_grid);
        assign(a, "p", s.p);
        assign(a, "epsilon", s.epsilon);
        assign(a, "eta", s.eta);
        assign(a, "table_eta", s.table_eta);
        assign(a, "slack", s.slack);
        if (a.contains("max_error_slope")) s.max_error_slope = value_or(a, "max_error_slope", 0.0);
        s.dense_cap = opt.max_n;
        TraceFamily fam{model, theta0, value_or<std::string>(a, "g", "density")};
        return audit_trace_theorem(fam, s);
    }
    if (id == "clt") {
        CltSettings s;
        s.seed = seed;
        s.workers = workers;
        s.sampler = sampler_from(value_or<std::string>(cfg, "sampler", "circulant"));
        assign(a, "n", s.n);
        assign(a, "replications", s.replications);
        assign(a, "form", s.form);
        assign(a, "epsilon", s.epsilon);
        assign(a, "eta", s.eta);
        assign(a, "ratio_limit", s.ratio_limit);
        assign(a, "enforce_precondition", s.enforce_precondition);
        if (a.contains("direction")) s.direction = vector_from(a["direction"], "direction");
        if (s.n > opt.max_n) return capped(id, s.n, opt.max_n);
        return audit_clt(model, theta0, s);
    }
    if (id == "lan") {
        LanSettings s;
        s.seed = seed;
        s.workers = workers;
        s.sampler = sampler_from(value_or<std::string>(cfg, "sampler", "circulant"));
        s.n_grid = grid("n_grid", s.n_grid);
        assign(a, "replications", s.replications);
        assign(a, "cov_tolerance", s.cov_tolerance);
        assign(a, "residual_tolerance", s.residual_tolerance);
        if (a.contains("a_grid")) {
            if (!a["a_grid"].is_array()) throw ConfigError("a_grid must be an array of vectors");
            for (const auto& v : a["a_grid"]) s.a_grid.push_back(vector_from(v, "a_grid entry"));
        }
        if (max_of(s.n_grid) > opt.max_n) return capped(id, max_of(s.n_grid), opt.max_n);
        return audit_lan(model, theta0, s);
    }
    throw ConfigError("unknown audit id '" + id + "'");
}

inline int cmd_audit(const std::string& id, const Options& opt, std::ostream& out = std::cout) {
    if (std::find(audit_ids().begin(), audit_ids().end(), id) == audit_ids().end())
        throw ConfigError("unknown audit id '" + id + "'");
    const EffectiveConfig ec = load_config(opt);
    AuditReport rep = run_audit(id, ec.cfg, opt);
    fs::create_directories(opt.out);
    Manifest man("audit " + id, ec, opt.out);
    json j = rep.to_json();
    j["config_hash"] = ec.hash;
    j["seed"] = ec.cfg.contains("seed") ? ec.cfg["seed"] : json();
    if (ec.cfg.contains("seed")) man.seed(value_or<std::uint64_t>(ec.cfg, "seed", 0));
    io::write_json(man.output("report.json"), j);
    {
        std::ofstream os(man.output("summary.txt"), std::ios::binary);
        os << rep.summary();
    }
    man.finish();
    out << rep.summary();
    switch (rep.verdict) {
    case Verdict::pass: return exit_ok;
    case Verdict::fail: return exit_partial;
    case Verdict::inconclusive: return exit_inconclusive;
    }
    return exit_partial;
}

inline int cmd_fisher(const Options& opt, std::ostream& log = std::cerr) {
    const EffectiveConfig ec = load_config(opt);
    const ModelPtr model = make_model(ec.cfg);
    const ParameterVector theta = theta_from(ec.cfg, model);
    const std::vector<int> ns = n_list_from(ec.cfg, "n");
    check_cap(ns, opt.max_n);
    const json& f = section(ec.cfg, "fisher");
    const int exact_max_n = value_or(f, "exact_max_n", 1024);
    const double tol = value_or(f, "quad_tol", 1e-10);
    const int M = model->dimension();
    const auto names = model->parameter_names();

    fs::create_directories(opt.out);
    Manifest man("fisher", ec, opt.out);
    io::CsvWriter csv(man.output("fisher.csv"), {"n", "kind", "row", "col", "value"});
    const Eigen::MatrixXd limit = model->limiting_fisher(theta);
    for (int n : ns) {
        auto emit = [&](const std::string& kind, const Eigen::MatrixXd& A) {
            for (int j = 0; j < M; ++j)
                for (int k = 0; k < M; ++k)
                    csv.row({std::to_string(n), kind, names[j], names[k], io::format_double(A(j, k))});
        };
        if (n <= exact_max_n) emit("fisher_exact", fisher_exact(model, theta, n));
        const Eigen::MatrixXd W = fisher_whittle(model, theta, n, tol);
        emit("fisher_whittle", W);
        const Eigen::MatrixXd R = model->rate_matrix(theta, n);
        emit("scaled_whittle", R.transpose() * W * R);
        emit("limit", limit);
    }
    man.finish();
    log << "fisher: " << ns.size() << " sizes written\n";
    return exit_ok;
}

/// Maps library errors to exit codes; used by the executable around each command.
template <class F>
int guarded(F&& body, std::ostream& err = std::cerr) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const ModelError& e) {
        err << "model error: " << e.what() << "\n";
        return exit_model;
    } catch (const Error& e) {
        err << "model error: " << e.what() << "\n";
        return exit_model;
    } catch (const fs::filesystem_error& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_partial;
    }
}

} // namespace lanarray::cli
