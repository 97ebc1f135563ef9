#pragma once

/// \file experiments.hpp
/// Seeded batches of synthetic inversions: draw mu_k from the bump space,
/// synthesize its trace, reconstruct it with the G and/or H misfit, and
/// aggregate cost and relative-error statistics.

#include "fkpp/inverse.hpp"
#include "fkpp/param_space.hpp"
#include "fkpp/pde_core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fkpp {

enum class Criterion { G, H };

inline const char* to_string(Criterion c) noexcept { return c == Criterion::G ? "G" : "H"; }

inline Criterion parse_criterion(const std::string& s) {
    if (s == "G") return Criterion::G;
    if (s == "H") return Criterion::H;
    throw std::invalid_argument("unknown criterion '" + s + "' (expected G or H)");
}

/// Criteria selected by "G", "H" or "both".
inline std::vector<Criterion> parse_criteria(const std::string& s) {
    if (s == "both") return {Criterion::G, Criterion::H};
    return {parse_criterion(s)};
}

/// Everything needed to reproduce one inversion setting. Defaults are the
/// reference configuration: D = 0.1, gamma = 1, Neumann ends, u_i = 0.2,
/// eps = 0.3, x0 = 2/3, n = 10, 960 cells, dt = eps/600, 2000 evaluations.
struct InversionSetup {
    double D = 0.1;
    double gamma = 1.0;
    BoundaryCoefficients bc = BoundaryCoefficients::neumann();
    double u_level = 0.2;
    double eps = 0.3;
    double x0 = 2.0 / 3.0;
    int basis_n = 10;
    int n_cells = 960;
    double dt = 0.3 / 600.0;
    std::size_t cap = 2000;
    /// Relative finite-difference step of the gradient probes.
    double fd_step = 1.4901161193847656e-08;

    Domain domain() const { return Domain{0.0, 1.0, n_cells}; }
    BumpBasis basis() const { return BumpBasis(basis_n); }

    ProblemSpec problem(const GrowthField& mu) const {
        ProblemSpec spec;
        spec.domain = domain();
        spec.D = D;
        spec.gamma = gamma;
        spec.bc = bc;
        spec.mu = mu;
        spec.u_init = InitialCondition::constant(spec.domain, u_level);
        return spec;
    }

    ObservationConfig observation(Criterion c) const { return ObservationConfig{x0, eps, c == Criterion::G}; }

    MinimizeOptions minimize_options() const {
        MinimizeOptions o;
        o.fd_step = fd_step;
        return o;
    }
};

/// Reconstructs bump coefficients from `reference`, starting at h0 (zeros
/// when empty). Forward-solve failures inside the search count as +inf.
inline InversionResult invert(const ProblemSpec& fixed, const PointTrace& reference, const ObservationConfig& obs,
                              double dt, const BumpBasis& basis, std::size_t cap, const MinimizeOptions& options,
                              std::vector<double> h0 = {}) {
    if (h0.empty()) h0.assign(basis.size(), 0.0);
    const TraceMisfit misfit(fixed, reference, obs, dt, basis);
    const Objective objective = [&](std::span<const double> h) {
        try {
            return misfit(h).total;
        } catch (const NumericalError&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    return minimize(objective, h0, cap, options);
}

struct BatchConfig {
    int n_samples = 20;
    std::uint64_t base_seed = 0;
    std::vector<Criterion> criteria{Criterion::G, Criterion::H};
    int workers = 1;
    InversionSetup setup{};

    void validate() const {
        if (n_samples < 1) throw std::invalid_argument("BatchConfig: n_samples must be >= 1");
        if (criteria.empty()) throw std::invalid_argument("BatchConfig: no criterion selected");
        if (workers < 1) throw std::invalid_argument("BatchConfig: workers must be >= 1");
        if (setup.cap < setup.basis().size() + 1) throw std::invalid_argument("BatchConfig: cap too small");
        setup.domain().validate();
        if (!setup.domain().node_index(setup.x0)) throw std::invalid_argument("BatchConfig: x0 is not a grid node");
    }
};

struct SampleRecord {
    int k = 0;
    std::uint64_t seed = 0;
    Criterion criterion = Criterion::G;
    bool ok = false;
    std::string error;
    double final_cost = std::numeric_limits<double>::quiet_NaN();
    std::size_t evaluations = 0;
    double rel_error = std::numeric_limits<double>::quiet_NaN();
    std::string stop_reason;
    std::vector<double> h_true;
    std::vector<double> h_star;
};

struct Stats {
    std::size_t count = 0;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std = 0.0;  // population
};

struct CriterionSummary {
    Criterion criterion = Criterion::G;
    std::size_t failures = 0;
    Stats cost;
    Stats rel_error;
};

struct BatchSummary {
    std::vector<SampleRecord> records;  // sorted by (k, criterion)
    std::vector<CriterionSummary> per_criterion;

    const CriterionSummary* find(Criterion c) const {
        for (const auto& s : per_criterion)
            if (s.criterion == c) return &s;
        return nullptr;
    }
};

inline Stats summarize(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("no successful inversions");
    Stats s;
    s.count = values.size();
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(values.size()));
    return s;
}

/// Statistics over the successful records of one criterion.
inline CriterionSummary summarize(std::span<const SampleRecord> records, Criterion c) {
    CriterionSummary out;
    out.criterion = c;
    std::vector<double> costs, errors;
    for (const auto& r : records) {
        if (r.criterion != c) continue;
        if (!r.ok) {
            ++out.failures;
            continue;
        }
        costs.push_back(r.final_cost);
        errors.push_back(r.rel_error);
    }
    out.cost = summarize(costs);
    out.rel_error = summarize(errors);
    return out;
}

/// Runs sample k (seed base_seed + k) for every configured criterion.
inline std::vector<SampleRecord> run_sample(const BatchConfig& config, int k) {
    const auto& setup = config.setup;
    const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(k);
    const GrowthField mu = sample_random_mu(setup.basis(), seed);
    std::vector<SampleRecord> out;

    PointTrace reference;
    std::string reference_error;
    try {
        reference = solve_trace(setup.problem(mu), setup.eps, setup.dt, setup.x0, false);
    } catch (const std::exception& e) {
        reference_error = e.what();
    }

    for (Criterion c : config.criteria) {
        SampleRecord rec;
        rec.k = k;
        rec.seed = seed;
        rec.criterion = c;
        rec.h_true = mu.bump_coefficients().h;
        if (!reference_error.empty()) {
            rec.error = reference_error;
            out.push_back(std::move(rec));
            continue;
        }
        try {
            auto result = invert(setup.problem(mu), reference, setup.observation(c), setup.dt, setup.basis(),
                                 setup.cap, setup.minimize_options());
            rec.final_cost = result.final_cost;
            rec.evaluations = result.evaluations;
            rec.stop_reason = result.stop_reason;
            rec.rel_error = relative_l2_error(mu, GrowthField::bump(result.h_star, setup.basis_n));
            rec.h_star = std::move(result.h_star);
            rec.ok = std::isfinite(rec.final_cost);
            if (!rec.ok) rec.error = "no finite cost reached";
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
        out.push_back(std::move(rec));
    }
    return out;
}

/// Called after each finished sample with (k, records of that sample).
using BatchProgress = std::function<void(int, const std::vector<SampleRecord>&)>;

/// Samples k = 1..n_samples, up to `workers` at a time. Output does not
/// depend on the worker count.
inline BatchSummary run_batch(const BatchConfig& config, const BatchProgress& progress = {}) {
    config.validate();
    const int n = config.n_samples;
    std::vector<std::vector<SampleRecord>> per_sample(static_cast<std::size_t>(n));
    std::atomic<int> next{1};
    std::mutex progress_mutex;

    auto worker = [&] {
        for (int k = next++; k <= n; k = next++) {
            auto records = run_sample(config, k);
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(k, records);
            }
            per_sample[static_cast<std::size_t>(k - 1)] = std::move(records);
        }
    };
    const int threads = std::min(config.workers, n);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    }

    BatchSummary summary;
    for (auto& recs : per_sample)
        for (auto& r : recs) summary.records.push_back(std::move(r));
    for (Criterion c : config.criteria) {
        try {
            summary.per_criterion.push_back(summarize(summary.records, c));
        } catch (const std::invalid_argument&) {
            CriterionSummary empty;
            empty.criterion = c;
            empty.failures = static_cast<std::size_t>(n);
            summary.per_criterion.push_back(empty);
        }
    }
    return summary;
}

} // namespace fkpp
