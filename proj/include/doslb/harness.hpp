#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <future>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "doslb/environment.hpp"
#include "doslb/errors.hpp"
#include "doslb/estimation.hpp"
#include "doslb/gaps.hpp"
#include "doslb/instance.hpp"
#include "doslb/metrics.hpp"
#include "doslb/policies.hpp"
#include "doslb/textio.hpp"

// Experiment orchestration: config parsing, seed-parallel simulation runs,
// round-level CSV emission, aggregate summaries, and SVG line plots. Every
// plot is mirrored by a CSV holding exactly the plotted series; the CSVs are
// the authoritative record.

namespace doslb {

// ---------------------------------------------------------------------------
// Instance sources. A source is a builtin name, a parameterized builtin of
// the form lower_bound:EPS:SIGNS[:LEVEL] with SIGNS a +/- string whose length
// sets the dimension, or a path to an instance file.

inline ProblemInstance make_instance(const std::string& source) {
    if (source == "example1") return running_example();
    if (source == "example1-hard" || source == "example1_hard") return running_example_hard();
    if (source == "simplex-mab" || source == "simplex_mab")
        return simplex_mab_instance({0.5, std::sqrt(3.0) / 4.0, 0.75}, {0.0, 0.0, 1.0}, 0.5);
    const std::string prefix_a = "lower_bound:";
    const std::string prefix_b = "lower-bound:";
    if (source.rfind(prefix_a, 0) == 0 || source.rfind(prefix_b, 0) == 0) {
        std::vector<std::string> parts;
        size_t start = prefix_a.size();
        while (start <= source.size()) {
            const size_t colon = source.find(':', start);
            if (colon == std::string::npos) {
                parts.push_back(source.substr(start));
                break;
            }
            parts.push_back(source.substr(start, colon - start));
            start = colon + 1;
        }
        if (parts.size() < 2 || parts.size() > 3)
            throw ConfigError("instance source: expected lower_bound:EPS:SIGNS[:LEVEL]");
        const double eps = parse_double(parts[0], "lower_bound eps");
        std::vector<int> signs;
        for (char c : parts[1]) {
            if (c == '+')
                signs.push_back(1);
            else if (c == '-')
                signs.push_back(-1);
            else
                throw ConfigError("instance source: signs must be a +/- string");
        }
        if (signs.empty()) throw ConfigError("instance source: signs must be nonempty");
        const double level =
            parts.size() == 3 ? parse_double(parts[2], "lower_bound level") : 0.0;
        return lower_bound_instance(static_cast<int>(signs.size()), eps, signs, level);
    }
    return instance_from_text(read_text_file(source));
}

// ---------------------------------------------------------------------------
// Experiment configuration. Text format uses the instance-file dialect:
//
//   experiment {
//     instance example1
//     policy doslb            # repeatable; optional :l1/:linf geometry suffix
//     horizon 10000
//     seeds { 1 2 3 4 5 6 }
//     lambda auto             # or a number
//     delta 0.01
//     eps 0.01
//     noise gaussian          # none | gaussian | bernoulli
//     sigma2 0.1
//     geometry l1             # l1 | linf | ellipsoid-reference
//     out out
//   }

struct ExperimentConfig {
    std::string instance_source = "example1";
    std::vector<std::string> policies{"doslb"};
    long horizon = 10000;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6};
    double lambda = 1.0;
    bool lambda_auto = true;
    double delta = 0.01;
    double eps = 0.01;
    NoiseModel noise{};
    Geometry geometry = Geometry::BoxL1;
    std::string out_dir = "out";
};

inline Geometry geometry_from_string(const std::string& s) {
    if (s == "l1") return Geometry::BoxL1;
    if (s == "linf") return Geometry::BoxLinf;
    if (s == "ellipsoid-reference") return Geometry::Ellipsoid;
    throw ConfigError("geometry: expected l1 | linf | ellipsoid-reference, got '" + s + "'");
}

inline std::string geometry_to_string(Geometry g) {
    switch (g) {
        case Geometry::BoxL1: return "l1";
        case Geometry::BoxLinf: return "linf";
        case Geometry::Ellipsoid: return "ellipsoid-reference";
        case Geometry::Known: break;
    }
    throw ConfigError("geometry: no config name for this geometry");
}

struct ResolvedPolicy {
    std::string label;
    PolicyConfig config;
};

inline std::vector<ResolvedPolicy> resolve_policies(const ExperimentConfig& cfg) {
    std::vector<ResolvedPolicy> out;
    for (const std::string& spec : cfg.policies) {
        std::string name = spec;
        Geometry geometry = cfg.geometry;
        const size_t colon = spec.find(':');
        if (colon != std::string::npos) {
            name = spec.substr(0, colon);
            geometry = geometry_from_string(spec.substr(colon + 1));
        }
        ResolvedPolicy pol;
        if (name == "doslb")
            pol.config.kind = PolicyKind::Doslb;
        else if (name == "safelts")
            pol.config.kind = PolicyKind::SafeLts;
        else if (name == "oracle")
            pol.config.kind = PolicyKind::Oracle;
        else
            throw ConfigError("policy: expected doslb | safelts | oracle, got '" + name + "'");
        if (pol.config.kind != PolicyKind::Oracle && geometry == Geometry::Ellipsoid)
            throw ConfigError(
                "policy: ellipsoid-reference geometry is restricted to oracle runs");
        pol.config.geometry = geometry;
        pol.label = pol.config.kind == PolicyKind::Oracle
                        ? std::string("oracle")
                        : name + "-" + geometry_to_string(geometry);
        int copies = 0;
        for (const ResolvedPolicy& prev : out)
            if (prev.label.rfind(pol.label, 0) == 0) ++copies;
        if (copies > 0) pol.label += "-" + std::to_string(copies + 1);
        out.push_back(std::move(pol));
    }
    return out;
}

inline void validate_experiment_config(const ExperimentConfig& cfg) {
    if (cfg.horizon < 1) throw ConfigError("config: horizon must be at least 1");
    if (cfg.seeds.empty()) throw ConfigError("config: seeds must be nonempty");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
        throw ConfigError("config: delta must lie in (0,1)");
    if (!(cfg.eps >= 0.0)) throw ConfigError("config: eps must be nonnegative");
    if (!cfg.lambda_auto && !(cfg.lambda > 0.0))
        throw ConfigError("config: lambda must be positive or auto");
    if (cfg.policies.empty()) throw ConfigError("config: at least one policy required");
    if (!(cfg.noise.sigma >= 0.0)) throw ConfigError("config: sigma2 must be nonnegative");
    resolve_policies(cfg);
}

inline ExperimentConfig parse_experiment_config(const std::string& text) {
    const DocNode root = parse_doc(text);
    const DocNode& ex = doc_require(root, "experiment");
    if (ex.kind != DocNode::Kind::Block) throw ConfigError("experiment: expected block");

    ExperimentConfig cfg;
    bool policies_given = false;
    for (const auto& [key, node] : ex.entries) {
        if (key == "instance") {
            cfg.instance_source = doc_string(node, "instance");
        } else if (key == "policy") {
            if (!policies_given) {
                cfg.policies.clear();
                policies_given = true;
            }
            cfg.policies.push_back(doc_string(node, "policy"));
        } else if (key == "horizon") {
            cfg.horizon = doc_long(node, "horizon");
        } else if (key == "seeds") {
            if (node.kind != DocNode::Kind::List)
                throw ConfigError("seeds: expected list");
            cfg.seeds.clear();
            for (const std::string& s : node.list) {
                const double v = parse_double(s, "seeds");
                if (!(v >= 0.0) || std::floor(v) != v)
                    throw ConfigError("seeds: expected nonnegative integers");
                cfg.seeds.push_back(static_cast<std::uint64_t>(v));
            }
        } else if (key == "lambda") {
            const std::string s = doc_string(node, "lambda");
            if (s == "auto") {
                cfg.lambda_auto = true;
            } else {
                cfg.lambda_auto = false;
                cfg.lambda = parse_double(s, "lambda");
            }
        } else if (key == "delta") {
            cfg.delta = doc_double(node, "delta");
        } else if (key == "eps") {
            cfg.eps = doc_double(node, "eps");
        } else if (key == "noise") {
            const std::string s = doc_string(node, "noise");
            if (s == "none")
                cfg.noise.kind = NoiseModel::Kind::None;
            else if (s == "gaussian")
                cfg.noise.kind = NoiseModel::Kind::Gaussian;
            else if (s == "bernoulli")
                cfg.noise.kind = NoiseModel::Kind::Bernoulli;
            else
                throw ConfigError("noise: expected none | gaussian | bernoulli");
        } else if (key == "sigma2") {
            const double v = doc_double(node, "sigma2");
            if (!(v >= 0.0)) throw ConfigError("sigma2: must be nonnegative");
            cfg.noise.sigma = std::sqrt(v);
        } else if (key == "geometry") {
            cfg.geometry = geometry_from_string(doc_string(node, "geometry"));
        } else if (key == "out") {
            cfg.out_dir = doc_string(node, "out");
        } else {
            throw ConfigError("experiment: unknown key '" + key + "'");
        }
    }
    validate_experiment_config(cfg);
    return cfg;
}

inline DocNode experiment_config_to_doc(const ExperimentConfig& cfg) {
    DocNode ex = doc_block();
    ex.entries.emplace_back("instance", doc_scalar(cfg.instance_source));
    for (const std::string& p : cfg.policies) ex.entries.emplace_back("policy", doc_scalar(p));
    ex.entries.emplace_back("horizon", doc_integer(cfg.horizon));
    DocNode seeds;
    seeds.kind = DocNode::Kind::List;
    for (std::uint64_t s : cfg.seeds) seeds.list.push_back(std::to_string(s));
    ex.entries.emplace_back("seeds", std::move(seeds));
    ex.entries.emplace_back("lambda", cfg.lambda_auto ? doc_scalar("auto")
                                                      : doc_number(cfg.lambda));
    ex.entries.emplace_back("delta", doc_number(cfg.delta));
    ex.entries.emplace_back("eps", doc_number(cfg.eps));
    const char* noise_name = cfg.noise.kind == NoiseModel::Kind::None ? "none"
                             : cfg.noise.kind == NoiseModel::Kind::Gaussian ? "gaussian"
                                                                            : "bernoulli";
    ex.entries.emplace_back("noise", doc_scalar(noise_name));
    ex.entries.emplace_back("sigma2", doc_number(cfg.noise.sigma * cfg.noise.sigma));
    ex.entries.emplace_back("geometry", doc_scalar(geometry_to_string(cfg.geometry)));
    ex.entries.emplace_back("out", doc_scalar(cfg.out_dir));
    DocNode root = doc_block();
    root.entries.emplace_back("experiment", std::move(ex));
    return root;
}

// ---------------------------------------------------------------------------
// Per-seed simulation. The policy sees only the gram state accumulated from
// strictly earlier rounds; recording happens against that same state before
// the feedback of the current round is folded in.

struct RunResult {
    std::string policy_label;
    std::uint64_t seed = 0;
    std::vector<RoundRecord> records;
    Vec rewards;
    RunSummary summary;
};

inline RunResult simulate_run(const ProblemInstance& p, const PublicView& view,
                              const ResolvedPolicy& pol, std::uint64_t seed, long horizon,
                              double lambda, const NoiseModel& noise, const MetricsParams& mp,
                              double eps) {
    RunResult rr;
    rr.policy_label = pol.label;
    rr.seed = seed;
    rr.records.reserve(static_cast<size_t>(horizon));
    rr.rewards.reserve(static_cast<size_t>(horizon));
    GramState g = gram_init(p.d, lambda, known_count(p), unknown_count(p));
    RngState rng{seed, 0};
    for (long t = 0; t < horizon; ++t) {
        Decision dec;
        switch (pol.config.kind) {
            case PolicyKind::Doslb: dec = doslb_select(view, g, pol.config); break;
            case PolicyKind::SafeLts: dec = safelts_select(view, g, pol.config, rng); break;
            case PolicyKind::Oracle: dec = oracle_select(p); break;
        }
        rr.records.push_back(record_round(p, dec, g, mp));
        const Feedback fb = step(p, dec.x, noise, rng);
        rr.rewards.push_back(fb.reward);
        gram_update(g, dec.x, fb);
    }
    rr.summary = summarize(rr.records, eps);
    return rr;
}

// Independent per-seed workers; results merged in seed order.
inline std::vector<RunResult> run_policy_seeds(const ProblemInstance& p, const PublicView& view,
                                               const ResolvedPolicy& pol,
                                               const std::vector<std::uint64_t>& seeds,
                                               long horizon, double lambda,
                                               const NoiseModel& noise, const MetricsParams& mp,
                                               double eps) {
    std::vector<RunResult> out(seeds.size());
    const size_t workers = std::max<size_t>(1, std::thread::hardware_concurrency());
    size_t base = 0;
    while (base < seeds.size()) {
        const size_t chunk = std::min(workers, seeds.size() - base);
        std::vector<std::future<RunResult>> futs;
        futs.reserve(chunk);
        for (size_t k = 0; k < chunk; ++k)
            futs.push_back(std::async(std::launch::async, [&, k] {
                return simulate_run(p, view, pol, seeds[base + k], horizon, lambda, noise, mp,
                                    eps);
            }));
        for (size_t k = 0; k < chunk; ++k) out[base + k] = futs[k].get();
        base += chunk;
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV emission. Fixed schema, one row per round, 12 significant digits.

inline std::string csv_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string rounds_csv_header(int d) {
    std::string h = "run_id,seed,t";
    for (int j = 1; j <= d; ++j) h += ",x" + std::to_string(j);
    h += ",reward,instantaneous_regret,relaxed_regret_increment,efficacy_gap,"
         "max_violation,rho_t,optimally_associated,permissible_empty_flag";
    return h;
}

inline std::string rounds_csv(const RunResult& rr, int d, double eps) {
    std::string out = rounds_csv_header(d) + "\n";
    for (size_t i = 0; i < rr.records.size(); ++i) {
        const RoundRecord& rec = rr.records[i];
        out += rr.policy_label;
        out += ',' + std::to_string(rr.seed);
        out += ',' + std::to_string(rec.t);
        for (double x : rec.x) out += ',' + csv_double(x);
        out += ',' + csv_double(rr.rewards[i]);
        out += ',' + csv_double(instantaneous_regret(rec));
        out += ',' + csv_double(relaxed_regret_increment(rec, eps));
        out += ',' + csv_double(rec.efficacy_gap);
        out += ',' + csv_double(max_violation(rec));
        out += ',' + csv_double(rec.rho_t);
        out += rec.optimally_associated ? ",1" : ",0";
        out += rec.permissible_empty ? ",1" : ",0";
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// SVG line plots over round index 1..n, with a CSV mirror of the series.

struct PlotSeries {
    std::string name;
    Vec ys;
    std::string color = "#1f77b4";
    double width = 1.5;
    bool dashed = false;
    bool in_legend = true;
};

inline const char* plot_color(size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#bcbd22"};
    return palette[i % (sizeof palette / sizeof palette[0])];
}

inline std::string plot_csv(const std::vector<PlotSeries>& series) {
    if (series.empty()) throw ConfigError("plot_csv: no series");
    const size_t n = series.front().ys.size();
    std::string out = "t";
    for (const PlotSeries& s : series) {
        if (s.ys.size() != n) throw DimensionMismatch("plot_csv: series lengths differ");
        out += ',' + s.name;
    }
    out += '\n';
    for (size_t i = 0; i < n; ++i) {
        out += std::to_string(i + 1);
        for (const PlotSeries& s : series) out += ',' + csv_double(s.ys[i]);
        out += '\n';
    }
    return out;
}

namespace svgdetail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out += c;
    }
    return out;
}

inline std::string tick_label(double v, bool log_scale) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", log_scale ? std::pow(10.0, v) : v);
    return buf;
}

} // namespace svgdetail

inline std::string svg_line_plot(const std::string& title, const std::string& y_label,
                                 const std::vector<PlotSeries>& series, bool log_y) {
    if (series.empty()) throw ConfigError("svg_line_plot: no series");
    const size_t n = series.front().ys.size();
    if (n == 0) throw ConfigError("svg_line_plot: empty series");
    for (const PlotSeries& s : series)
        if (s.ys.size() != n) throw DimensionMismatch("svg_line_plot: series lengths differ");

    // Log scale floors nonpositive values at the smallest positive datum;
    // an all-nonpositive plot falls back to a linear scale.
    double floor_pos = std::numeric_limits<double>::infinity();
    for (const PlotSeries& s : series)
        for (double y : s.ys)
            if (y > 0.0) floor_pos = std::min(floor_pos, y);
    const bool use_log = log_y && std::isfinite(floor_pos);
    const auto transform = [&](double y) {
        return use_log ? std::log10(std::max(y, floor_pos)) : y;
    };

    double ymin = std::numeric_limits<double>::infinity();
    double ymax = -std::numeric_limits<double>::infinity();
    for (const PlotSeries& s : series)
        for (double y : s.ys) {
            const double v = transform(y);
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    if (!(ymax > ymin)) {
        ymin -= 1.0;
        ymax += 1.0;
    }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    const double x0 = 70.0, x1 = 640.0, yb = 470.0, yt = 40.0;
    const auto px = [&](size_t i) {
        return n == 1 ? 0.5 * (x0 + x1)
                      : x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    const auto py = [&](double v) { return yb - (yb - yt) * (v - ymin) / (ymax - ymin); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 880 520\" "
           "font-family=\"monospace\" font-size=\"12\">\n";
    svg += "<rect width=\"880\" height=\"520\" fill=\"white\"/>\n";
    svg += "<text x=\"355\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
           svgdetail::escape(title) + "</text>\n";
    svg += "<text x=\"8\" y=\"30\">" + svgdetail::escape(y_label) +
           (use_log ? std::string(" (log)") : std::string()) + "</text>\n";
    svg += "<text x=\"355\" y=\"505\" text-anchor=\"middle\">round</text>\n";

    for (int k = 0; k <= 4; ++k) {
        const double v = ymin + (ymax - ymin) * k / 4.0;
        const double y = py(v);
        svg += "<line x1=\"" + svgdetail::num(x0) + "\" y1=\"" + svgdetail::num(y) +
               "\" x2=\"" + svgdetail::num(x1) + "\" y2=\"" + svgdetail::num(y) +
               "\" stroke=\"#dddddd\"/>\n";
        svg += "<text x=\"" + svgdetail::num(x0 - 6) + "\" y=\"" + svgdetail::num(y + 4) +
               "\" text-anchor=\"end\">" + svgdetail::tick_label(v, use_log) + "</text>\n";
    }
    for (int k = 0; k <= 4; ++k) {
        const size_t i = n == 1 ? 0 : (n - 1) * static_cast<size_t>(k) / 4;
        const double x = px(i);
        svg += "<line x1=\"" + svgdetail::num(x) + "\" y1=\"" + svgdetail::num(yb) +
               "\" x2=\"" + svgdetail::num(x) + "\" y2=\"" + svgdetail::num(yb + 5) +
               "\" stroke=\"#333333\"/>\n";
        svg += "<text x=\"" + svgdetail::num(x) + "\" y=\"" + svgdetail::num(yb + 20) +
               "\" text-anchor=\"middle\">" + std::to_string(i + 1) + "</text>\n";
    }
    svg += "<line x1=\"" + svgdetail::num(x0) + "\" y1=\"" + svgdetail::num(yb) + "\" x2=\"" +
           svgdetail::num(x1) + "\" y2=\"" + svgdetail::num(yb) + "\" stroke=\"#333333\"/>\n";
    svg += "<line x1=\"" + svgdetail::num(x0) + "\" y1=\"" + svgdetail::num(yt) + "\" x2=\"" +
           svgdetail::num(x0) + "\" y2=\"" + svgdetail::num(yb) + "\" stroke=\"#333333\"/>\n";

    for (const PlotSeries& s : series) {
        svg += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"" +
               svgdetail::num(s.width) + "\"";
        if (s.dashed) svg += " stroke-dasharray=\"6 4\"";
        svg += " points=\"";
        for (size_t i = 0; i < n; ++i) {
            if (i > 0) svg += ' ';
            svg += svgdetail::num(px(i)) + "," + svgdetail::num(py(transform(s.ys[i])));
        }
        svg += "\"/>\n";
    }

    double ly = 50.0;
    for (const PlotSeries& s : series) {
        if (!s.in_legend) continue;
        svg += "<line x1=\"652\" y1=\"" + svgdetail::num(ly) + "\" x2=\"676\" y2=\"" +
               svgdetail::num(ly) + "\" stroke=\"" + s.color + "\" stroke-width=\"2\"";
        if (s.dashed) svg += " stroke-dasharray=\"6 4\"";
        svg += "/>\n";
        svg += "<text x=\"682\" y=\"" + svgdetail::num(ly + 4) + "\">" +
               svgdetail::escape(s.name) + "</text>\n";
        ly += 18.0;
    }
    svg += "</svg>\n";
    return svg;
}

inline void emit_figure(const std::string& dir, const std::string& stem,
                        const std::string& title, const std::string& y_label,
                        const std::vector<PlotSeries>& series, bool log_y) {
    namespace fs = std::filesystem;
    write_text_file((fs::path(dir) / (stem + ".csv")).string(), plot_csv(series));
    write_text_file((fs::path(dir) / (stem + ".svg")).string(),
                    svg_line_plot(title, y_label, series, log_y));
}

// ---------------------------------------------------------------------------
// Aggregation across seeds.

inline double mean_of(const Vec& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_std(const Vec& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

template <class F>
Vec curve_stat(const std::vector<RunResult>& runs, F per_run_curve, bool want_std) {
    if (runs.empty()) return {};
    const size_t n = per_run_curve(runs.front()).size();
    Vec out(n, 0.0);
    Vec column(runs.size(), 0.0);
    for (size_t i = 0; i < n; ++i) {
        for (size_t r = 0; r < runs.size(); ++r) column[r] = per_run_curve(runs[r])[i];
        out[i] = want_std ? sample_std(column) : mean_of(column);
    }
    return out;
}

inline Vec count_curve_as_vec(const std::vector<long>& counts) {
    Vec out;
    out.reserve(counts.size());
    for (long c : counts) out.push_back(static_cast<double>(c));
    return out;
}

inline long count_permissible_empty(const RunResult& rr) {
    long n = 0;
    for (const RoundRecord& rec : rr.records)
        if (rec.permissible_empty) ++n;
    return n;
}

inline DocNode run_summary_to_doc(const RunResult& rr) {
    DocNode b = doc_block();
    b.entries.emplace_back("policy", doc_scalar(rr.policy_label));
    b.entries.emplace_back("seed", doc_integer(static_cast<long>(rr.seed)));
    b.entries.emplace_back("rounds", doc_integer(static_cast<long>(rr.records.size())));
    b.entries.emplace_back("eps", doc_number(rr.summary.eps));
    b.entries.emplace_back("final_regret", doc_number(rr.summary.regret.back()));
    b.entries.emplace_back("final_relaxed_regret",
                           doc_number(rr.summary.relaxed_regret.back()));
    b.entries.emplace_back("final_efficacy_regret",
                           doc_number(rr.summary.efficacy_regret.back()));
    b.entries.emplace_back("final_safety_regret", doc_number(rr.summary.safety_regret.back()));
    b.entries.emplace_back("nonopt_bis_rounds",
                           doc_integer(rr.summary.nonopt_bis_count.back()));
    b.entries.emplace_back("eps_violation_rounds",
                           doc_integer(rr.summary.eps_violation_count.back()));
    b.entries.emplace_back("permissible_empty_rounds",
                           doc_integer(count_permissible_empty(rr)));
    DocNode root = doc_block();
    root.entries.emplace_back("run", std::move(b));
    return root;
}

inline DocNode aggregate_to_doc(const std::vector<RunResult>& runs) {
    Vec regret, relaxed, efficacy, safety, nonopt, exceed;
    double worst_violation = -std::numeric_limits<double>::infinity();
    for (const RunResult& rr : runs) {
        regret.push_back(rr.summary.regret.back());
        relaxed.push_back(rr.summary.relaxed_regret.back());
        efficacy.push_back(rr.summary.efficacy_regret.back());
        safety.push_back(rr.summary.safety_regret.back());
        nonopt.push_back(static_cast<double>(rr.summary.nonopt_bis_count.back()));
        exceed.push_back(static_cast<double>(rr.summary.eps_violation_count.back()));
        for (const RoundRecord& rec : rr.records)
            worst_violation = std::max(worst_violation, max_violation(rec));
    }
    DocNode b = doc_block();
    b.entries.emplace_back("policy", doc_scalar(runs.front().policy_label));
    b.entries.emplace_back("runs", doc_integer(static_cast<long>(runs.size())));
    b.entries.emplace_back("rounds", doc_integer(static_cast<long>(runs.front().records.size())));
    b.entries.emplace_back("mean_final_regret", doc_number(mean_of(regret)));
    b.entries.emplace_back("std_final_regret", doc_number(sample_std(regret)));
    b.entries.emplace_back("mean_final_relaxed_regret", doc_number(mean_of(relaxed)));
    b.entries.emplace_back("std_final_relaxed_regret", doc_number(sample_std(relaxed)));
    b.entries.emplace_back("mean_final_efficacy_regret", doc_number(mean_of(efficacy)));
    b.entries.emplace_back("std_final_efficacy_regret", doc_number(sample_std(efficacy)));
    b.entries.emplace_back("mean_final_safety_regret", doc_number(mean_of(safety)));
    b.entries.emplace_back("std_final_safety_regret", doc_number(sample_std(safety)));
    b.entries.emplace_back("mean_nonopt_bis_rounds", doc_number(mean_of(nonopt)));
    b.entries.emplace_back("mean_eps_violation_rounds", doc_number(mean_of(exceed)));
    b.entries.emplace_back("max_round_violation", doc_number(worst_violation));
    DocNode root = doc_block();
    root.entries.emplace_back("aggregate", std::move(b));
    return root;
}

// ---------------------------------------------------------------------------
// Shared experiment preparation.

struct PreparedExperiment {
    ProblemInstance instance;
    PublicView view;
    AssumptionReport report;
    double lambda = 1.0;
    RadiusParams radius;
    double xi_value = 0.0;
    MetricsParams metrics;
    std::vector<ResolvedPolicy> policies;
};

inline double noise_sub_gaussian_scale(const NoiseModel& noise) {
    switch (noise.kind) {
        case NoiseModel::Kind::None: return 0.0;
        case NoiseModel::Kind::Gaussian: return noise.sigma;
        case NoiseModel::Kind::Bernoulli: return 0.5;
    }
    return 0.0;
}

inline double instance_xi_or_zero(const ProblemInstance& p, long subset_budget = 65536) {
    try {
        return xi(p, subset_budget).xi;
    } catch (const ExponentialBudgetExceeded&) {
        return 0.0;
    }
}

inline PreparedExperiment prepare_experiment(const ExperimentConfig& cfg) {
    validate_experiment_config(cfg);
    PreparedExperiment pe;
    pe.instance = make_instance(cfg.instance_source);
    pe.report = validate(pe.instance);
    pe.view = public_view(pe.instance);
    pe.lambda = cfg.lambda_auto ? pe.report.suggested_lambda : cfg.lambda;
    pe.radius.delta = cfg.delta;
    pe.radius.U = unknown_count(pe.instance);
    pe.radius.S = pe.report.S;
    pe.radius.R = noise_sub_gaussian_scale(cfg.noise);
    pe.xi_value = instance_xi_or_zero(pe.instance);
    pe.metrics.radius_params = pe.radius;
    pe.metrics.geometry = cfg.geometry;
    pe.metrics.optimum = NoiselessSolution{pe.report.x_star, pe.report.opt_value};
    pe.policies = resolve_policies(cfg);
    for (ResolvedPolicy& pol : pe.policies) pol.config.radius_params = pe.radius;
    return pe;
}

inline void write_experiment_echo(const ExperimentConfig& cfg, const PreparedExperiment& pe) {
    namespace fs = std::filesystem;
    DocNode root = experiment_config_to_doc(cfg);
    DocNode res = doc_block();
    res.entries.emplace_back("instance_label", doc_scalar(pe.instance.label));
    res.entries.emplace_back("lambda", doc_number(pe.lambda));
    res.entries.emplace_back("radius_delta", doc_number(pe.radius.delta));
    res.entries.emplace_back("radius_unknowns", doc_integer(pe.radius.U));
    res.entries.emplace_back("radius_param_norm_bound", doc_number(pe.radius.S));
    res.entries.emplace_back("radius_noise_scale", doc_number(pe.radius.R));
    res.entries.emplace_back("xi", doc_number(pe.xi_value));
    res.entries.emplace_back("opt_value", doc_number(pe.report.opt_value));
    root.entries.emplace_back("resolved", std::move(res));
    write_text_file((fs::path(cfg.out_dir) / "config_echo.txt").string(), serialize_doc(root));
    write_text_file((fs::path(cfg.out_dir) / "instance.txt").string(),
                    instance_to_text(pe.instance));
}

inline std::vector<RunResult> run_policy(const PreparedExperiment& pe, const ResolvedPolicy& pol,
                                         const ExperimentConfig& cfg) {
    MetricsParams mp = pe.metrics;
    // rho and the association regions follow the geometry the policy runs
    // under, so the recorded rho_t is the one its analysis refers to.
    mp.geometry = pol.config.geometry;
    return run_policy_seeds(pe.instance, pe.view, pol, cfg.seeds, cfg.horizon, pe.lambda,
                            cfg.noise, mp, cfg.eps);
}

inline void write_run_artifacts(const ExperimentConfig& cfg, const std::vector<RunResult>& runs) {
    namespace fs = std::filesystem;
    for (const RunResult& rr : runs) {
        const std::string stem = rr.policy_label + "_seed" + std::to_string(rr.seed);
        write_text_file((fs::path(cfg.out_dir) / ("rounds_" + stem + ".csv")).string(),
                        rounds_csv(rr, static_cast<int>(rr.records.front().x.size()), cfg.eps));
        write_text_file((fs::path(cfg.out_dir) / ("summary_" + stem + ".txt")).string(),
                        serialize_doc(run_summary_to_doc(rr)));
    }
    write_text_file(
        (fs::path(cfg.out_dir) / ("aggregate_" + runs.front().policy_label + ".txt")).string(),
        serialize_doc(aggregate_to_doc(runs)));
}

inline Vec bound_curve_general(long horizon, int d, double lambda, double delta, int U) {
    Vec out;
    out.reserve(static_cast<size_t>(horizon));
    for (long t = 1; t <= horizon; ++t) out.push_back(bound_general(t, d, lambda, delta, U));
    return out;
}

// ---------------------------------------------------------------------------
// Commands. These throw on failure; the CLI maps exception classes to exit
// codes.

inline int cmd_validate(const std::string& source, std::ostream& os) {
    const ProblemInstance p = make_instance(source);
    const AssumptionReport rep = validate(p);
    DocNode b = doc_block();
    b.entries.emplace_back("label", doc_scalar(p.label));
    b.entries.emplace_back("d", doc_integer(p.d));
    b.entries.emplace_back("action_norm_bound", doc_number(rep.L));
    b.entries.emplace_back("parameter_norm_bound", doc_number(rep.S));
    b.entries.emplace_back("satisfies_a1", doc_boolean(rep.satisfies_a1));
    b.entries.emplace_back("satisfies_a2", doc_boolean(rep.satisfies_a2));
    b.entries.emplace_back("suggested_lambda", doc_number(rep.suggested_lambda));
    b.entries.emplace_back("x_star", doc_numlist(rep.x_star));
    b.entries.emplace_back("opt_value", doc_number(rep.opt_value));
    b.entries.emplace_back("degenerate", doc_boolean(rep.degenerate));
    DocNode root = doc_block();
    root.entries.emplace_back("assumptions", std::move(b));
    os << serialize_doc(root);
    return 0;
}

inline int cmd_gaps(const std::string& source, std::ostream& os, long subset_budget = 65536) {
    const ProblemInstance p = make_instance(source);
    const GapReport rep = xi(p, subset_budget);
    os << gap_report_to_text(rep);
    if (p.label.rfind("simplex", 0) == 0) {
        // Vertex arms of the simplex induce a finite bandit; print its gaps.
        const ConstraintDef& unknown = p.constraints.back();
        const ArmGapTable table = arm_gaps(p.theta_star, unknown.vec, unknown.level);
        DocNode b = doc_block();
        for (const ArmGap& a : table.arms) {
            DocNode arm = doc_block();
            arm.entries.emplace_back("mu", doc_number(a.mu));
            arm.entries.emplace_back("nu", doc_number(a.nu));
            arm.entries.emplace_back("safe", doc_boolean(a.safe));
            arm.entries.emplace_back("delta", doc_number(a.delta));
            arm.entries.emplace_back("gamma", doc_number(a.gamma));
            b.entries.emplace_back("arm", std::move(arm));
        }
        b.entries.emplace_back("best_safe", doc_integer(table.best_safe));
        DocNode root = doc_block();
        root.entries.emplace_back("arms", std::move(b));
        os << serialize_doc(root);
    }
    return 0;
}

inline int cmd_run(const ExperimentConfig& cfg, std::ostream& os) {
    const PreparedExperiment pe = prepare_experiment(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    write_experiment_echo(cfg, pe);

    const Vec general =
        bound_curve_general(cfg.horizon, pe.instance.d, pe.lambda, cfg.delta, pe.radius.U);
    std::vector<PlotSeries> regret_series;
    std::vector<PlotSeries> bis_series;
    const bool single = pe.policies.size() == 1;

    for (size_t pi = 0; pi < pe.policies.size(); ++pi) {
        const ResolvedPolicy& pol = pe.policies[pi];
        const std::vector<RunResult> runs = run_policy(pe, pol, cfg);
        write_run_artifacts(cfg, runs);

        if (single)
            for (const RunResult& rr : runs)
                regret_series.push_back({"seed" + std::to_string(rr.seed), rr.summary.regret,
                                         "#c8c8c8", 0.8, false, false});
        regret_series.push_back({pol.label + "-mean-regret",
                                 curve_stat(runs, [](const RunResult& r) -> const Vec& {
                                     return r.summary.regret;
                                 }, false),
                                 plot_color(pi), 2.0, false, true});
        regret_series.push_back({pol.label + "-mean-relaxed",
                                 curve_stat(runs, [](const RunResult& r) -> const Vec& {
                                     return r.summary.relaxed_regret;
                                 }, false),
                                 plot_color(pi + 4), 1.2, false, true});

        std::vector<Vec> nonopt_curves;
        nonopt_curves.reserve(runs.size());
        for (const RunResult& rr : runs)
            nonopt_curves.push_back(count_curve_as_vec(rr.summary.nonopt_bis_count));
        if (single)
            for (size_t r = 0; r < runs.size(); ++r)
                bis_series.push_back({"seed" + std::to_string(runs[r].seed), nonopt_curves[r],
                                      "#c8c8c8", 0.8, false, false});
        Vec nonopt_mean(nonopt_curves.front().size(), 0.0);
        for (size_t i = 0; i < nonopt_mean.size(); ++i) {
            double s = 0.0;
            for (const Vec& c : nonopt_curves) s += c[i];
            nonopt_mean[i] = s / static_cast<double>(nonopt_curves.size());
        }
        bis_series.push_back(
            {pol.label + "-mean-nonopt", std::move(nonopt_mean), plot_color(pi), 2.0, false,
             true});

        const DocNode agg = aggregate_to_doc(runs);
        const DocNode& b = doc_require(agg, "aggregate");
        os << "run " << pol.label << ": seeds=" << runs.size()
           << " rounds=" << cfg.horizon << " mean_final_regret="
           << doc_string(doc_require(b, "mean_final_regret"), "mean_final_regret")
           << " mean_final_safety_regret="
           << doc_string(doc_require(b, "mean_final_safety_regret"),
                         "mean_final_safety_regret")
           << "\n";
    }

    regret_series.push_back({"bound-general", general, "#000000", 1.5, true, true});
    if (pe.xi_value > 0.0) {
        Vec poly, bis;
        poly.reserve(static_cast<size_t>(cfg.horizon));
        bis.reserve(static_cast<size_t>(cfg.horizon));
        for (long t = 1; t <= cfg.horizon; ++t) {
            if (cfg.eps > 0.0)
                poly.push_back(bound_polytope(t, pe.instance.d, pe.lambda, pe.xi_value, cfg.eps));
            bis.push_back(bound_bis_count(t, pe.instance.d, pe.lambda, pe.xi_value));
        }
        if (cfg.eps > 0.0)
            regret_series.push_back({"bound-polytope", std::move(poly), "#555555", 1.5, true,
                                     true});
        bis_series.push_back({"bound-bis", std::move(bis), "#000000", 1.5, true, true});
    }

    emit_figure(cfg.out_dir, "fig_regret", "cumulative regret", "regret", regret_series, false);
    emit_figure(cfg.out_dir, "fig_bis_count", "rounds without an optimally associated set",
                "count", bis_series, true);
    return 0;
}

inline int cmd_compare(const ExperimentConfig& cfg, std::ostream& os) {
    if (cfg.policies.size() < 2)
        throw ConfigError("compare: need at least two policies to overlay");
    const PreparedExperiment pe = prepare_experiment(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    write_experiment_echo(cfg, pe);

    std::vector<PlotSeries> efficacy_series, safety_series, bis_series;
    DocNode report = doc_block();

    for (size_t pi = 0; pi < pe.policies.size(); ++pi) {
        const ResolvedPolicy& pol = pe.policies[pi];
        const std::vector<RunResult> runs = run_policy(pe, pol, cfg);
        write_run_artifacts(cfg, runs);

        const auto efficacy = [](const RunResult& r) -> const Vec& {
            return r.summary.efficacy_regret;
        };
        const auto safety = [](const RunResult& r) -> const Vec& {
            return r.summary.safety_regret;
        };
        const Vec eff_mean = curve_stat(runs, efficacy, false);
        const Vec eff_std = curve_stat(runs, efficacy, true);
        const Vec saf_mean = curve_stat(runs, safety, false);
        const Vec saf_std = curve_stat(runs, safety, true);
        const auto band = [](const Vec& m, const Vec& s, double sign) {
            Vec out(m.size());
            for (size_t i = 0; i < m.size(); ++i) out[i] = m[i] + sign * s[i];
            return out;
        };
        const std::string color = plot_color(pi);
        efficacy_series.push_back({pol.label + "-mean", eff_mean, color, 2.0, false, true});
        efficacy_series.push_back({pol.label + "-lo", band(eff_mean, eff_std, -1.0), color, 0.8,
                                   true, false});
        efficacy_series.push_back({pol.label + "-hi", band(eff_mean, eff_std, 1.0), color, 0.8,
                                   true, false});
        safety_series.push_back({pol.label + "-mean", saf_mean, color, 2.0, false, true});
        safety_series.push_back({pol.label + "-lo", band(saf_mean, saf_std, -1.0), color, 0.8,
                                 true, false});
        safety_series.push_back({pol.label + "-hi", band(saf_mean, saf_std, 1.0), color, 0.8,
                                 true, false});

        std::vector<Vec> nonopt;
        nonopt.reserve(runs.size());
        for (const RunResult& rr : runs)
            nonopt.push_back(count_curve_as_vec(rr.summary.nonopt_bis_count));
        Vec nonopt_mean(nonopt.front().size(), 0.0);
        for (size_t i = 0; i < nonopt_mean.size(); ++i) {
            double s = 0.0;
            for (const Vec& c : nonopt) s += c[i];
            nonopt_mean[i] = s / static_cast<double>(nonopt.size());
        }
        bis_series.push_back({pol.label + "-mean-nonopt", std::move(nonopt_mean), color, 2.0,
                              false, true});

        DocNode pb = doc_block();
        pb.entries.emplace_back("policy", doc_scalar(pol.label));
        pb.entries.emplace_back("mean_final_efficacy_regret", doc_number(eff_mean.back()));
        pb.entries.emplace_back("std_final_efficacy_regret", doc_number(eff_std.back()));
        pb.entries.emplace_back("mean_final_safety_regret", doc_number(saf_mean.back()));
        pb.entries.emplace_back("std_final_safety_regret", doc_number(saf_std.back()));
        report.entries.emplace_back("policy_curves", std::move(pb));

        os << "compare " << pol.label << ": mean_final_efficacy_regret="
           << format_double(eff_mean.back())
           << " mean_final_safety_regret=" << format_double(saf_mean.back()) << "\n";
    }

    if (pe.xi_value > 0.0) {
        Vec bis;
        bis.reserve(static_cast<size_t>(cfg.horizon));
        for (long t = 1; t <= cfg.horizon; ++t)
            bis.push_back(bound_bis_count(t, pe.instance.d, pe.lambda, pe.xi_value));
        bis_series.push_back({"bound-bis", std::move(bis), "#000000", 1.5, true, true});
    }
    report.entries.emplace_back("xi", doc_number(pe.xi_value));
    DocNode root = doc_block();
    root.entries.emplace_back("comparison", std::move(report));
    write_text_file((std::filesystem::path(cfg.out_dir) / "comparison.txt").string(),
                    serialize_doc(root));

    emit_figure(cfg.out_dir, "fig_compare_efficacy", "efficacy regret, mean and one std band",
                "efficacy regret", efficacy_series, false);
    emit_figure(cfg.out_dir, "fig_compare_safety", "safety regret, mean and one std band",
                "safety regret", safety_series, false);
    emit_figure(cfg.out_dir, "fig_bis_count", "rounds without an optimally associated set",
                "count", bis_series, true);
    return 0;
}

} // namespace doslb
