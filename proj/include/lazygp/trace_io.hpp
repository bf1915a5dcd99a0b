#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "lazygp/benchmarks.hpp"
#include "lazygp/errors.hpp"
#include "lazygp/optimizer.hpp"

namespace lazygp {

enum class TraceFormat { kJsonl, kCsv };

inline TraceFormat parse_trace_format(const std::string& name) {
    if (name == "jsonl") return TraceFormat::kJsonl;
    if (name == "csv") return TraceFormat::kCsv;
    throw InvalidParams("unknown trace format \"" + name + "\"");
}

namespace detail {

// Shortest round-trip decimal form; identical traces serialize to identical
// bytes.
inline std::string format_double(double value) {
    char buf[32];
    const std::to_chars_result res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

inline nlohmann::ordered_json config_echo(const RunTrace& trace) {
    const BoConfig& config = trace.config;
    nlohmann::ordered_json bounds = nlohmann::ordered_json::array();
    for (const auto& [low, high] : config.bounds) bounds.push_back({low, high});
    nlohmann::ordered_json kernel{{"signal_variance", config.kernel.signal_variance},
                                  {"length_scale", config.kernel.length_scale},
                                  {"noise_variance", config.kernel.noise_variance}};
    return nlohmann::ordered_json{{"objective", trace.objective_label},
                                  {"dim", config.dimension()},
                                  {"bounds", std::move(bounds)},
                                  {"seeds", config.n_seeds},
                                  {"iterations", config.iterations},
                                  {"lag", config.lag.to_string()},
                                  {"batch", config.batch_size},
                                  {"xi", config.xi},
                                  {"restarts", config.effective_restarts()},
                                  {"rng_seed", config.rng_seed},
                                  {"kernel", std::move(kernel)}};
}

} // namespace detail

/// Streams the trace as JSON Lines: one object per evaluation, then a summary
/// object. `include_timings=false` zeroes the wall-clock fields, which makes
/// traces of identical runs byte-identical.
inline void write_trace_jsonl(std::ostream& out, const RunTrace& trace,
                              bool include_timings = true) {
    for (const TraceRecord& r : trace.records) {
        nlohmann::ordered_json line{{"iteration", r.iteration},
                                    {"round", r.round},
                                    {"x", r.x},
                                    {"y", r.y},
                                    {"best", r.best},
                                    {"t_factor_s", include_timings ? r.t_factor_s : 0.0},
                                    {"t_acq_s", include_timings ? r.t_acq_s : 0.0},
                                    {"refit", r.refit}};
        out << line.dump() << '\n';
    }
    nlohmann::ordered_json summary{{"best_x", trace.best_x},
                                   {"best_y", trace.best_y},
                                   {"total_s", include_timings ? trace.total_s : 0.0},
                                   {"failures", trace.failures},
                                   {"config", detail::config_echo(trace)}};
    out << summary.dump() << '\n';
}

/// CSV with one row per evaluation; x is flattened to x0..x{D-1}, so the
/// column count is 7 + D. No summary row.
inline void write_trace_csv(std::ostream& out, const RunTrace& trace,
                            bool include_timings = true) {
    const std::size_t dim = trace.config.dimension();
    out << "iteration,round";
    for (std::size_t k = 0; k < dim; ++k) out << ",x" << k;
    out << ",y,best,t_factor_s,t_acq_s,refit\n";
    for (const TraceRecord& r : trace.records) {
        out << r.iteration << ',' << r.round;
        for (double v : r.x) out << ',' << detail::format_double(v);
        out << ',' << detail::format_double(r.y) << ',' << detail::format_double(r.best) << ','
            << detail::format_double(include_timings ? r.t_factor_s : 0.0) << ','
            << detail::format_double(include_timings ? r.t_acq_s : 0.0) << ','
            << (r.refit ? 1 : 0) << '\n';
    }
}

/// Writes the trace to `path` (UTF-8, LF line endings). I/O trouble surfaces
/// as IoError naming the path.
inline void emit_trace(const RunTrace& trace, TraceFormat format, const std::string& path,
                       bool include_timings = true) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("emit_trace: cannot open \"" + path + "\" for writing");
    if (format == TraceFormat::kJsonl)
        write_trace_jsonl(out, trace, include_timings);
    else
        write_trace_csv(out, trace, include_timings);
    out.flush();
    if (!out) throw IoError("emit_trace: write to \"" + path + "\" failed");
}

inline void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& table) {
    out << "n,mode,seconds\n";
    for (const TimingRow& row : table)
        out << row.n << ',' << to_string(row.mode) << ',' << detail::format_double(row.seconds)
            << '\n';
}

inline void emit_timing_csv(const std::vector<TimingRow>& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("emit_timing_csv: cannot open \"" + path + "\" for writing");
    write_timing_csv(out, table);
    out.flush();
    if (!out) throw IoError("emit_timing_csv: write to \"" + path + "\" failed");
}

} // namespace lazygp
