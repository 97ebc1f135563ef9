#pragma once

/// \file cli.hpp
/// Command-line front end: forward, invert, batch and verify subcommands.
/// Exit codes: 0 success, 1 numerical failure, 2 configuration error.

#include "fkpp/config.hpp"
#include "fkpp/error.hpp"
#include "fkpp/experiments.hpp"
#include "fkpp/inverse.hpp"
#include "fkpp/io.hpp"
#include "fkpp/param_space.hpp"
#include "fkpp/pde_core.hpp"
#include "fkpp/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fkpp::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kSuccess = 0, kNumericalFailure = 1, kConfigError = 2 };

using json = nlohmann::json;

/// Flag values shared by the subcommands; unset flags leave the config alone.
struct Overrides {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<int> workers;
    std::optional<int> samples;
    std::optional<std::string> criterion;
    std::optional<std::uint64_t> seed;
    std::optional<int> cells;
    std::optional<double> dt;
};

// --- config -> domain objects --------------------------------------------

inline Config load_config(const Overrides& o) {
    Config cfg = o.config_path.empty() ? Config::parse_string("", "<defaults>") : Config::load(o.config_path);
    if (o.cells) cfg.set("n_cells", std::to_string(*o.cells));
    if (o.dt) cfg.set("dt", io::format_double(*o.dt));
    if (o.samples) cfg.set("batch.samples", std::to_string(*o.samples));
    if (o.criterion) cfg.set("obs.criterion", *o.criterion);
    if (o.seed) cfg.set("batch.seed", std::to_string(*o.seed));
    if (o.workers) cfg.set("batch.workers", std::to_string(*o.workers));
    return cfg;
}

inline GrowthField mu_from_config(const Config& cfg, const Domain& domain) {
    const std::string kind = cfg.get_string("mu.kind").value_or("bump");
    const int n = static_cast<int>(cfg.get_int("mu.n", 10));
    try {
        if (kind == "bump") {
            auto h = cfg.get_list("mu.h");
            if (!h) throw ConfigError(cfg.source() + ": missing required field 'mu.h'");
            if (h->size() != static_cast<std::size_t>(n) + 1)
                throw cfg.error_at("mu.h", "expected " + std::to_string(n + 1) + " coefficients, found " +
                                               std::to_string(h->size()));
            return GrowthField::bump(std::move(*h), n);
        }
        if (kind == "constant") return GrowthField::constant(cfg.require_double("mu.value"), domain.a, domain.b);
        if (kind == "random")
            return sample_random_mu(BumpBasis(n), static_cast<std::uint64_t>(cfg.get_int("mu.seed", 1)));
        if (kind == "grid") {
            auto v = cfg.get_list("mu.values");
            if (!v) throw ConfigError(cfg.source() + ": missing required field 'mu.values'");
            return GrowthField(GridSamples{cfg.get_double("mu.a", domain.a), cfg.get_double("mu.b", domain.b), *v});
        }
    } catch (const std::invalid_argument& e) {
        throw cfg.error_at("mu.kind", e.what());
    }
    throw cfg.error_at("mu.kind", "unknown mu kind '" + kind + "' (bump, constant, random, grid)");
}

inline BoundaryCoefficients bc_from_config(const Config& cfg) {
    BoundaryCoefficients bc;
    bc.alpha1 = cfg.get_double("bc.alpha1", 0.0);
    bc.beta1 = cfg.get_double("bc.beta1", 1.0);
    bc.alpha2 = cfg.get_double("bc.alpha2", 0.0);
    bc.beta2 = cfg.get_double("bc.beta2", 1.0);
    try {
        bc.validate();
    } catch (const std::invalid_argument& e) {
        throw cfg.error_at(cfg.has("bc.alpha1") ? "bc.alpha1" : "bc.beta1", e.what());
    }
    return bc;
}

inline InversionSetup setup_from_config(const Config& cfg) {
    InversionSetup s;
    s.D = cfg.get_double("D", s.D);
    s.gamma = cfg.get_double("gamma", s.gamma);
    s.bc = bc_from_config(cfg);
    s.u_level = cfg.get_double("u_init", s.u_level);
    s.eps = cfg.get_double("obs.eps", s.eps);
    s.x0 = cfg.get_double("obs.x0", s.x0);
    s.basis_n = static_cast<int>(cfg.get_int("mu.n", s.basis_n));
    s.n_cells = static_cast<int>(cfg.get_int("n_cells", s.n_cells));
    s.dt = cfg.get_double("dt", s.eps / 600.0);
    s.cap = static_cast<std::size_t>(cfg.get_int("batch.cap", static_cast<std::int64_t>(s.cap)));
    s.fd_step = cfg.get_double("batch.fd_step", s.fd_step);
    if (!(s.D > 0)) throw cfg.error_at("D", "D must be positive");
    if (!(s.gamma > 0)) throw cfg.error_at("gamma", "gamma must be positive");
    if (!(s.u_level > 0)) throw cfg.error_at("u_init", "u_init must be positive");
    if (!(s.eps > 0)) throw cfg.error_at("obs.eps", "eps must be positive");
    if (!(s.dt > 0) || s.dt > s.eps) throw cfg.error_at("dt", "dt must lie in (0, eps]");
    if (s.n_cells < 4) throw cfg.error_at("n_cells", "n_cells must be >= 4");
    if (!s.domain().node_index(s.x0)) throw cfg.error_at("obs.x0", "observation point off-grid");
    return s;
}

inline json to_json(const InversionSetup& s) {
    return json{{"D", s.D},
                {"gamma", s.gamma},
                {"bc", {{"alpha1", s.bc.alpha1}, {"beta1", s.bc.beta1}, {"alpha2", s.bc.alpha2}, {"beta2", s.bc.beta2}}},
                {"u_init", s.u_level},
                {"obs", {{"x0", s.x0}, {"eps", s.eps}}},
                {"basis_n", s.basis_n},
                {"n_cells", s.n_cells},
                {"dt", s.dt},
                {"cap", s.cap},
                {"fd_step", s.fd_step}};
}

// --- output helpers -------------------------------------------------------

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class OutputDir {
public:
    explicit OutputDir(const std::string& dir) : dir_(dir) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw ConfigError(dir + ": cannot create output directory");
    }

    template <class Writer>
    void write(const std::string& name, Writer&& writer) {
        const auto path = dir_ / name;
        std::ofstream os(path, std::ios::binary);
        if (!os) throw ConfigError(path.string() + ": cannot open for writing");
        writer(os);
        written_.push_back(path.string());
    }

    void write_json(const std::string& name, const json& j) {
        write(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }

    void write_manifest(const std::string& command, const json& config, const std::vector<std::string>& inputs) {
        json m;
        m["command"] = command;
        m["tool_version"] = kVersion;
        m["timestamp"] = utc_timestamp();
        m["config"] = config;
        m["inputs"] = inputs;
        m["outputs"] = written_;
        write_json("manifest.json", m);
    }

private:
    std::filesystem::path dir_;
    std::vector<std::string> written_;
};

// --- commands -------------------------------------------------------------

inline int cmd_forward(const Overrides& o, std::ostream& out) {
    const Config cfg = load_config(o);
    ProblemSpec spec;
    spec.D = cfg.require_double("D");
    spec.gamma = cfg.require_double("gamma");
    if (!cfg.has("mu.kind")) throw ConfigError(cfg.source() + ": missing required field 'mu.kind'");
    if (!(spec.D > 0)) throw cfg.error_at("D", "D must be positive");
    if (!(spec.gamma > 0)) throw cfg.error_at("gamma", "gamma must be positive");
    spec.domain = Domain{cfg.get_double("a", 0.0), cfg.get_double("b", 1.0), static_cast<int>(cfg.get_int("n_cells", 960))};
    try {
        spec.domain.validate();
    } catch (const std::invalid_argument& e) {
        throw cfg.error_at("n_cells", e.what());
    }
    spec.bc = bc_from_config(cfg);
    spec.mu = mu_from_config(cfg, spec.domain);
    spec.u_init = InitialCondition::constant(spec.domain, cfg.get_double("u_init", 0.2));
    const auto report = validate_initial_condition(spec.u_init, spec.bc, spec.domain);
    if (!report.ok()) throw cfg.error_at("u_init", "initial condition violates: " + report.violations.front());

    const double t_end = cfg.get_double("t_end", 0.3);
    const double dt = cfg.get_double("dt", t_end / 600.0);
    const double eps = cfg.get_double("obs.eps", std::min(0.3, t_end));
    const double x0 = cfg.get_double("obs.x0", 2.0 / 3.0);
    if (!(t_end > 0)) throw cfg.error_at("t_end", "t_end must be positive");
    if (!(dt > 0) || dt > t_end) throw cfg.error_at("dt", "dt must lie in (0, t_end]");
    if (!(eps > 0) || eps > t_end) throw cfg.error_at("obs.eps", "eps must lie in (0, t_end]");
    if (!spec.domain.node_index(x0)) throw cfg.error_at("obs.x0", "observation point off-grid");

    const auto field = solve_kpp(spec, t_end, dt);
    const auto trace = extract_trace(field, spec.domain, x0, eps, true);

    OutputDir dir(o.out_dir);
    dir.write("solution.csv", [&](std::ostream& os) { io::write_field_csv(os, field); });
    dir.write("trace.csv", [&](std::ostream& os) { io::write_trace_csv(os, trace); });
    json resolved{{"D", spec.D},
                  {"gamma", spec.gamma},
                  {"a", spec.domain.a},
                  {"b", spec.domain.b},
                  {"n_cells", spec.domain.n_cells},
                  {"bc", {{"alpha1", spec.bc.alpha1}, {"beta1", spec.bc.beta1}, {"alpha2", spec.bc.alpha2}, {"beta2", spec.bc.beta2}}},
                  {"u_init", cfg.get_double("u_init", 0.2)},
                  {"mu", io::to_json(spec.mu)},
                  {"t_end", t_end},
                  {"dt", dt},
                  {"obs", {{"x0", x0}, {"eps", eps}}}};
    dir.write_manifest("forward", resolved, o.config_path.empty() ? std::vector<std::string>{} : std::vector{o.config_path});
    out << "forward: " << field.steps() << " time samples, trace of " << trace.size() << " samples\n";
    return kSuccess;
}

inline int cmd_invert(const Overrides& o, std::ostream& out) {
    const Config cfg = load_config(o);
    const InversionSetup setup = setup_from_config(cfg);
    const auto criteria = parse_criteria(cfg.get_string("obs.criterion").value_or("G"));
    const Domain domain = setup.domain();

    std::optional<GrowthField> mu_true;
    if (cfg.has("mu.kind")) mu_true = mu_from_config(cfg, domain);
    const auto trace_path = cfg.get_string("invert.trace");
    if (!mu_true && !trace_path)
        throw ConfigError(cfg.source() + ": need either a [mu] ground truth or invert.trace");

    const ProblemSpec fixed = setup.problem(GrowthField::constant(0.0));
    PointTrace reference;
    std::vector<std::string> inputs;
    if (!o.config_path.empty()) inputs.push_back(o.config_path);
    if (trace_path) {
        std::ifstream is(*trace_path);
        if (!is) throw ConfigError(*trace_path + ": cannot open trace file");
        reference = io::read_trace_csv(is, setup.x0);
        inputs.push_back(*trace_path);
        // The reference must sit on exactly the time samples this setup produces.
        const auto grid = time_grid(setup.eps, setup.dt);
        std::vector<double> expected(grid.begin() + 1, grid.end());
        bool compatible = expected.size() == reference.times.size();
        for (std::size_t k = 0; compatible && k < expected.size(); ++k)
            compatible = std::abs(expected[k] - reference.times[k]) <= 1e-12 * std::max(1.0, expected[k]);
        if (!compatible) throw ConfigError(*trace_path + ": incompatible discretization");
        reference.times = expected;
    } else {
        reference = solve_trace(setup.problem(*mu_true), setup.eps, setup.dt, setup.x0, false);
    }

    OutputDir dir(o.out_dir);
    if (mu_true) dir.write("mu_true.csv", [&](std::ostream& os) { io::write_mu_csv(os, *mu_true); });
    const bool single = criteria.size() == 1;
    for (Criterion c : criteria) {
        auto result = invert(fixed, reference, setup.observation(c), setup.dt, setup.basis(), setup.cap,
                             setup.minimize_options());
        const auto rec = GrowthField::bump(result.h_star, setup.basis_n);
        if (mu_true) result.rel_l2_error = relative_l2_error(*mu_true, rec);
        const std::string suffix = single ? "" : std::string("_") + to_string(c);
        json record = io::to_json(result);
        record["criterion"] = to_string(c);
        dir.write_json("result" + suffix + ".json", record);
        dir.write("mu_rec" + suffix + ".csv", [&](std::ostream& os) { io::write_mu_csv(os, rec); });
        out << "invert " << to_string(c) << ": cost " << io::format_double(result.final_cost) << ", evaluations "
            << result.evaluations << ", rel_l2_error " << io::format_double(result.rel_l2_error) << " ("
            << result.stop_reason << ")\n";
    }
    json resolved = to_json(setup);
    resolved["criteria"] = cfg.get_string("obs.criterion").value_or("G");
    resolved["h0"] = std::vector<double>(setup.basis().size(), 0.0);
    if (mu_true) resolved["mu"] = io::to_json(*mu_true);
    if (trace_path) resolved["trace"] = *trace_path;
    dir.write_manifest("invert", resolved, inputs);
    return kSuccess;
}

inline BatchConfig batch_from_config(const Config& cfg) {
    BatchConfig b;
    b.setup = setup_from_config(cfg);
    b.n_samples = static_cast<int>(cfg.get_int("batch.samples", b.n_samples));
    b.base_seed = static_cast<std::uint64_t>(cfg.get_int("batch.seed", 0));
    b.workers = static_cast<int>(cfg.get_int("batch.workers", 1));
    try {
        b.criteria = parse_criteria(cfg.get_string("obs.criterion").value_or("both"));
    } catch (const std::invalid_argument& e) {
        throw cfg.error_at("obs.criterion", e.what());
    }
    if (b.n_samples < 1) throw cfg.error_at("batch.samples", "samples must be >= 1");
    if (b.workers < 1) throw cfg.error_at("batch.workers", "workers must be >= 1");
    return b;
}

inline int cmd_batch(const Overrides& o, std::ostream& out) {
    const Config cfg = load_config(o);
    const BatchConfig config = batch_from_config(cfg);
    const auto summary = run_batch(config, [&](int k, const std::vector<SampleRecord>& recs) {
        for (const auto& r : recs)
            std::cerr << "sample " << k << " " << to_string(r.criterion) << ": "
                      << (r.ok ? "cost " + io::format_double(r.final_cost) + ", rel_error " + io::format_double(r.rel_error)
                               : "failed (" + r.error + ")")
                      << '\n';
    });

    OutputDir dir(o.out_dir);
    dir.write("batch_results.csv", [&](std::ostream& os) { io::write_batch_csv(os, summary.records); });
    dir.write_json("summary.json", io::to_json(summary));
    const bool single = config.criteria.size() == 1;
    for (const auto& r : summary.records) {
        const auto k = std::to_string(r.k);
        if (r.criterion == config.criteria.front())
            dir.write("mu_true_" + k + ".csv",
                      [&](std::ostream& os) { io::write_mu_csv(os, GrowthField::bump(r.h_true, config.setup.basis_n)); });
        if (!r.ok) continue;
        const std::string name = single ? "mu_rec_" + k + ".csv" : "mu_rec_" + std::string(to_string(r.criterion)) + "_" + k + ".csv";
        dir.write(name, [&](std::ostream& os) { io::write_mu_csv(os, GrowthField::bump(r.h_star, config.setup.basis_n)); });
    }
    json resolved = to_json(config.setup);
    resolved["samples"] = config.n_samples;
    resolved["base_seed"] = config.base_seed;
    resolved["workers"] = config.workers;
    resolved["h0"] = std::vector<double>(config.setup.basis().size(), 0.0);
    json crit = json::array();
    for (Criterion c : config.criteria) crit.push_back(to_string(c));
    resolved["criteria"] = crit;
    dir.write_manifest("batch", resolved, o.config_path.empty() ? std::vector<std::string>{} : std::vector{o.config_path});

    bool all_ok = true;
    for (const auto& r : summary.records) all_ok = all_ok && r.ok;
    out << io::to_json(summary).dump(2) << '\n';
    return all_ok ? kSuccess : kNumericalFailure;
}

inline json to_json(const Verdict& v) {
    json metrics = json::object();
    for (const auto& [k, x] : v.metrics) metrics[k] = io::number_or_null(x);
    json j{{"check", v.check}, {"passed", v.passed}, {"metrics", metrics}};
    if (!v.note.empty()) j["note"] = v.note;
    return j;
}

inline int cmd_verify(const std::string& suite, const Overrides& o, bool write_files, std::ostream& out) {
    VerifySettings s;
    if (o.cells) s.n_cells = *o.cells;
    if (o.dt) s.window.dt = *o.dt;
    if (o.samples) s.samples = *o.samples;
    if (o.seed) s.seed = *o.seed;
    const auto verdicts = run_verify(suite, s);
    json all = json::array();
    bool passed = true;
    for (const auto& v : verdicts) {
        out << to_json(v).dump() << '\n';
        all.push_back(to_json(v));
        passed = passed && v.passed;
    }
    if (write_files) {
        OutputDir dir(o.out_dir);
        dir.write_json("verify.json", all);
        dir.write_manifest("verify",
                           json{{"suite", suite}, {"n_cells", s.n_cells}, {"eps", s.window.eps}, {"dt", s.window.dt},
                                {"samples", s.samples}, {"seed", s.seed}},
                           {});
    }
    return passed ? kSuccess : kNumericalFailure;
}

/// Entry point; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Fisher-KPP forward solver and growth-rate reconstruction"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Overrides o;
    std::string suite = "all";
    bool verify_write = false;

    auto add_common = [&](CLI::App* sub, bool with_config) {
        if (with_config) sub->add_option("--config", o.config_path, "Configuration file");
        sub->add_option("--out", o.out_dir, "Output directory");
        sub->add_option("--cells", o.cells, "Number of grid cells")->check(CLI::PositiveNumber);
        sub->add_option("--dt", o.dt, "Time step")->check(CLI::PositiveNumber);
        sub->add_option("--seed", o.seed, "Base random seed");
    };

    auto* forward = app.add_subcommand("forward", "Solve the forward problem; write solution.csv and trace.csv");
    add_common(forward, true);
    forward->get_option("--config")->required();

    auto* inv = app.add_subcommand("invert", "Reconstruct mu from a trace or a ground-truth field");
    add_common(inv, true);
    inv->add_option("--criterion", o.criterion, "Misfit: G (u and u_x), H (u only) or both")
        ->check(CLI::IsMember({"G", "H", "both"}));

    auto* batch = app.add_subcommand("batch", "Seeded batch of synthetic inversions");
    add_common(batch, true);
    batch->add_option("--samples", o.samples, "Number of samples")->check(CLI::PositiveNumber);
    batch->add_option("--workers", o.workers, "Concurrent samples")->check(CLI::PositiveNumber);
    batch->add_option("--criterion", o.criterion, "G, H or both")->check(CLI::IsMember({"G", "H", "both"}));

    auto* ver = app.add_subcommand("verify", "Run the property checks and print verdict records");
    add_common(ver, false);
    ver->add_option("suite", suite, "all or one of: counterexample, distinguishability, gamma, stationary, "
                                    "nonuniqueness, positivity");
    ver->add_option("--samples", o.samples, "Random fields for the reflection check")->check(CLI::PositiveNumber);
    ver->add_flag("--write", verify_write, "Also write verify.json and manifest.json to --out");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kConfigError;
    }

    try {
        if (*forward) return cmd_forward(o, out);
        if (*inv) return cmd_invert(o, out);
        if (*batch) return cmd_batch(o, out);
        if (*ver) {
            const auto& names = verify_suite_names();
            if (suite != "all" && std::find(names.begin(), names.end(), suite) == names.end()) {
                err << "unknown verify suite '" << suite << "'\n" << ver->help();
                return kConfigError;
            }
            return cmd_verify(suite, o, verify_write, out);
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    }
    return kConfigError;
}

} // namespace fkpp::cli
