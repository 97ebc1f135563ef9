#pragma once

/// \file io.hpp
/// CSV and JSON encodings of fields, traces, inversion results and batch
/// output. Numbers are written in shortest round-trip form, '.' decimal
/// separator, '\n' line endings.

#include "fkpp/error.hpp"
#include "fkpp/experiments.hpp"
#include "fkpp/inverse.hpp"
#include "fkpp/param_space.hpp"
#include "fkpp/pde_core.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace fkpp::io {

using json = nlohmann::json;

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    if (s == "nan") return std::nan("");
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

// --- space-time field -----------------------------------------------------

inline void write_field_csv(std::ostream& os, const SpaceTimeField& field) {
    os << 't';
    for (std::size_t j = 0; j < field.nodes(); ++j) os << ",x_" << j;
    os << '\n';
    for (std::size_t k = 0; k < field.steps(); ++k) {
        os << format_double(field.times()[k]);
        for (double v : field.row(k)) os << ',' << format_double(v);
        os << '\n';
    }
}

// --- point trace ----------------------------------------------------------

inline void write_trace_csv(std::ostream& os, const PointTrace& trace) {
    os << "t,u,ux,uxx\n";
    for (std::size_t k = 0; k < trace.size(); ++k) {
        os << format_double(trace.times[k]) << ',' << format_double(trace.u[k]) << ','
           << format_double(trace.ux[k]) << ',';
        if (!trace.uxx.empty()) os << format_double(trace.uxx[k]);
        os << '\n';
    }
}

/// Parses the t,u,ux,uxx layout; uxx may be empty on every row. Errors
/// name the offending row (1-based, header is row 1).
inline PointTrace read_trace_csv(std::istream& is, double x0) {
    PointTrace trace;
    trace.x0 = x0;
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("trace file: empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,u,ux,uxx") throw ConfigError("trace file row 1: expected header 't,u,ux,uxx'");
    std::size_t row = 1;
    std::optional<bool> has_uxx;
    while (std::getline(is, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cols = split(line);
        if (cols.size() != 4)
            throw ConfigError("trace file row " + std::to_string(row) + ": expected 4 columns, found " +
                              std::to_string(cols.size()));
        double vals[3];
        for (int c = 0; c < 3; ++c) {
            const auto v = parse_double(cols[static_cast<std::size_t>(c)]);
            if (!v) throw ConfigError("trace file row " + std::to_string(row) + ": malformed number");
            vals[c] = *v;
        }
        const auto uxx = parse_double(cols[3]);
        const bool row_has_uxx = uxx.has_value();
        if (has_uxx && *has_uxx != row_has_uxx)
            throw ConfigError("trace file row " + std::to_string(row) + ": uxx column inconsistently filled");
        has_uxx = row_has_uxx;
        if (!trace.times.empty() && !(vals[0] > trace.times.back()))
            throw ConfigError("trace file row " + std::to_string(row) + ": times must increase");
        trace.times.push_back(vals[0]);
        trace.u.push_back(vals[1]);
        trace.ux.push_back(vals[2]);
        if (row_has_uxx) trace.uxx.push_back(*uxx);
    }
    if (trace.times.empty()) throw ConfigError("trace file: no data rows");
    return trace;
}

// --- growth field ---------------------------------------------------------

inline json to_json(const GrowthField& mu) {
    if (mu.is_bump()) {
        const auto& c = mu.bump_coefficients();
        return json{{"kind", "bump"}, {"n", c.basis.n()}, {"h", c.h}};
    }
    const auto& g = mu.grid_samples();
    return json{{"kind", "grid"}, {"a", g.a}, {"b", g.b}, {"values", g.values}};
}

inline GrowthField growth_field_from_json(const json& j) {
    try {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "bump") return GrowthField::bump(j.at("h").get<std::vector<double>>(), j.at("n").get<int>());
        if (kind == "grid") {
            GridSamples g;
            g.a = j.value("a", 0.0);
            g.b = j.value("b", 1.0);
            g.values = j.at("values").get<std::vector<double>>();
            return GrowthField(std::move(g));
        }
        throw ConfigError("growth field: unknown kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("growth field: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("growth field: ") + e.what());
    }
}

/// x,value on a uniform grid of `points` samples over the field's interval.
inline void write_mu_csv(std::ostream& os, const GrowthField& mu, int points = 2001) {
    const auto [a, b] = mu.support_interval();
    os << "x,value\n";
    for (int k = 0; k < points; ++k) {
        const double x = a + (b - a) * (static_cast<double>(k) / static_cast<double>(points - 1));
        os << format_double(x) << ',' << format_double(eval_mu(mu, x)) << '\n';
    }
}

// --- inversion results ----------------------------------------------------

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const InversionResult& r, std::optional<std::uint64_t> seed = std::nullopt) {
    json j;
    j["seed"] = seed ? json(*seed) : json(nullptr);
    j["h0"] = r.h0;
    j["h_star"] = r.h_star;
    j["final_cost"] = number_or_null(r.final_cost);
    j["evaluations"] = r.evaluations;
    j["rel_l2_error"] = number_or_null(r.rel_l2_error);
    j["stop_reason"] = r.stop_reason;
    json iterates = json::array();
    for (const auto& [evals, c] : r.trace_of_iterates) iterates.push_back(json::array({evals, number_or_null(c)}));
    j["trace_of_iterates"] = std::move(iterates);
    return j;
}

// --- batch output ---------------------------------------------------------

inline void write_batch_csv(std::ostream& os, const std::vector<SampleRecord>& records) {
    os << "k,seed,criterion,final_cost,evaluations,rel_error\n";
    for (const auto& r : records) {
        os << r.k << ',' << r.seed << ',' << to_string(r.criterion) << ','
           << format_double(r.ok ? r.final_cost : std::nan("")) << ',' << r.evaluations << ','
           << format_double(r.ok ? r.rel_error : std::nan("")) << '\n';
    }
}

inline json to_json(const Stats& s) {
    return json{{"count", s.count}, {"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"std", s.std}};
}

inline json to_json(const BatchSummary& summary) {
    json j;
    json crit = json::object();
    for (const auto& c : summary.per_criterion) {
        crit[to_string(c.criterion)] = json{{"failures", c.failures},
                                            {"successes", c.cost.count},
                                            {"cost", to_json(c.cost)},
                                            {"rel_error", to_json(c.rel_error)}};
    }
    j["criteria"] = std::move(crit);
    const auto* g = summary.find(Criterion::G);
    const auto* h = summary.find(Criterion::H);
    if (g && h && g->rel_error.count > 0 && h->rel_error.count > 0 && g->rel_error.mean > 0)
        j["separation_ratio"] = h->rel_error.mean / g->rel_error.mean;
    json failed = json::array();
    for (const auto& r : summary.records)
        if (!r.ok) failed.push_back(json{{"k", r.k}, {"criterion", to_string(r.criterion)}, {"error", r.error}});
    j["failed"] = std::move(failed);
    return j;
}

} // namespace fkpp::io
