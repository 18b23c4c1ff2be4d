#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "doslb/errors.hpp"
#include "doslb/estimation.hpp"
#include "doslb/gaps.hpp"
#include "doslb/instance.hpp"
#include "doslb/linalg.hpp"
#include "doslb/policies.hpp"

// Clairvoyant per-round accounting: regret decompositions, association
// counters, and the closed-form bound curves drawn as plot overlays. These
// helpers read the latent instance; the policy layer never does.

namespace doslb {

struct MetricsParams {
    RadiusParams radius_params{};
    Geometry geometry = Geometry::BoxL1;
    double association_tol = 1e-6;
    // Cache of the latent optimum; avoids one LP solve per recorded round.
    std::optional<NoiselessSolution> optimum{};
};

struct RoundRecord {
    long t = 0;
    Vec x;
    double efficacy_gap = 0.0;
    // Signed margin per constraint, known block first; domain rows excluded.
    Vec violations;
    double rho_t = 0.0;
    int associated_bis_count = 0;
    bool optimally_associated = false;
    bool permissible_empty = false;
};

// max(efficacy gap, largest clamped violation); nonnegative by construction.
inline double instantaneous_regret(const RoundRecord& rec) {
    double worst = 0.0;
    for (double v : rec.violations) worst = std::max(worst, v);
    return std::max(rec.efficacy_gap, worst);
}

// Violations are forgiven up to slack eps before clamping.
inline double relaxed_regret_increment(const RoundRecord& rec, double eps) {
    if (!(eps >= 0.0)) throw OutOfRange("relaxed_regret_increment: eps must be nonnegative");
    double worst = 0.0;
    for (double v : rec.violations) worst = std::max(worst, v - eps);
    return std::max(rec.efficacy_gap, worst);
}

// Raw signed maximum; 0 for an empty violation vector.
inline double max_violation(const RoundRecord& rec) {
    double worst = rec.violations.empty() ? 0.0 : rec.violations.front();
    for (double v : rec.violations) worst = std::max(worst, v);
    return worst;
}

inline RoundRecord record_round(const ProblemInstance& p, const Decision& decision,
                                const GramState& g_before, const MetricsParams& params) {
    if (static_cast<int>(decision.x.size()) != p.d)
        throw DimensionMismatch("record_round: decision dimension");
    if (g_before.d != p.d || g_before.n_known != known_count(p) ||
        g_before.n_unknown != unknown_count(p))
        throw DimensionMismatch("record_round: gram state does not match instance");
    if (!(params.association_tol >= 0.0))
        throw OutOfRange("record_round: association tolerance must be nonnegative");

    const NoiselessSolution opt =
        params.optimum ? *params.optimum : solve_noiseless(p);

    RoundRecord rec;
    rec.t = g_before.t + 1;
    rec.x = decision.x;
    rec.efficacy_gap = opt.value - dot(p.theta_star, decision.x);
    rec.violations.reserve(p.constraints.size());
    for (const ConstraintDef& c : p.constraints)
        rec.violations.push_back(dot(c.vec, decision.x) - c.level);
    rec.rho_t = rho(g_before, decision.x, params.radius_params, params.geometry);
    rec.permissible_empty = decision.permissible_empty_fallback;

    std::vector<ConfidenceRegion> regions;
    regions.reserve(p.constraints.size());
    int u = 0;
    for (const ConstraintDef& c : p.constraints) {
        if (c.visibility == Visibility::Known)
            regions.push_back(known_region(c.vec));
        else
            regions.push_back(unknown_region(g_before, u++, params.geometry,
                                             params.radius_params));
    }
    const std::vector<Bis> associated =
        noisy_association(public_view(p), regions, decision.x, params.association_tol);
    rec.associated_bis_count = static_cast<int>(associated.size());
    for (const Bis& b : associated) {
        bool active_at_optimum = true;
        for (int i : b.indices) {
            const ConstraintDef& c = p.constraints[static_cast<size_t>(i)];
            const double residual = dot(c.vec, opt.x_star) - c.level;
            if (std::abs(residual) > 1e-8 * std::max(1.0, std::abs(c.level))) {
                active_at_optimum = false;
                break;
            }
        }
        if (active_at_optimum) {
            rec.optimally_associated = true;
            break;
        }
    }
    return rec;
}

namespace metricsdetail {

inline double check_bound_inputs(long T, int d, double lambda) {
    if (T < 1) throw OutOfRange("bound: horizon must be at least 1");
    if (d < 1) throw OutOfRange("bound: dimension must be at least 1");
    if (!(lambda >= 1.0)) throw OutOfRange("bound: lambda must be at least 1");
    return std::log1p(static_cast<double>(T) / (lambda * static_cast<double>(d)));
}

} // namespace metricsdetail

inline double bound_general(long T, int d, double lambda, double delta, int U) {
    const double lg = metricsdetail::check_bound_inputs(T, d, lambda);
    if (!(delta > 0.0 && delta < 1.0)) throw OutOfRange("bound_general: delta must lie in (0,1)");
    if (U < 0) throw OutOfRange("bound_general: unknown count must be nonnegative");
    const double tail = 0.5 * std::log((static_cast<double>(U) + 1.0) / delta) +
                        0.25 * static_cast<double>(d) * lg;
    return 4.0 * std::sqrt(static_cast<double>(T) * static_cast<double>(d) * lg) *
           (std::sqrt(lambda) + std::sqrt(tail));
}

inline double bound_bis_count(long T, int d, double lambda, double xi_value) {
    const double lg = metricsdetail::check_bound_inputs(T, d, lambda);
    if (!(xi_value > 0.0)) throw NonpositiveGap("bound_bis_count: Xi must be positive");
    const double dd = static_cast<double>(d);
    return (8.0 / (xi_value * xi_value)) *
           (dd * dd * lg * lg + 2.0 * dd * std::sqrt(lambda) * lg);
}

inline double bound_polytope(long T, int d, double lambda, double xi_value, double eps) {
    const double lg = metricsdetail::check_bound_inputs(T, d, lambda);
    if (!(xi_value > 0.0)) throw NonpositiveGap("bound_polytope: Xi must be positive");
    if (!(eps > 0.0)) throw NonpositiveGap("bound_polytope: eps must be positive");
    const double dd = static_cast<double>(d);
    return (1.0 / xi_value + 1.0 / eps) *
           (8.0 * dd * dd * lg * lg + 16.0 * dd * std::sqrt(lambda) * lg);
}

struct RunSummary {
    double eps = 0.0;
    Vec regret;
    Vec relaxed_regret;
    // Raw cumulative efficacy gap; decreases when an unsafe play out-earns
    // the optimum.
    Vec efficacy_regret;
    Vec safety_regret;
    std::vector<long> nonopt_bis_count;
    // Rounds whose largest violation strictly exceeds eps; ties count as safe.
    std::vector<long> eps_violation_count;
    Vec bound_general_curve;
    Vec bound_polytope_curve;
    Vec bound_bis_curve;
};

inline RunSummary summarize(const std::vector<RoundRecord>& records, double eps) {
    if (!(eps >= 0.0)) throw OutOfRange("summarize: eps must be nonnegative");
    for (size_t i = 1; i < records.size(); ++i)
        if (records[i].t < records[i - 1].t)
            throw OutOfRange("summarize: records must be ordered by round");

    RunSummary s;
    s.eps = eps;
    s.regret.reserve(records.size());
    s.relaxed_regret.reserve(records.size());
    s.efficacy_regret.reserve(records.size());
    s.safety_regret.reserve(records.size());
    s.nonopt_bis_count.reserve(records.size());
    s.eps_violation_count.reserve(records.size());
    double regret = 0.0, relaxed = 0.0, efficacy = 0.0, safety = 0.0;
    long nonopt = 0, exceed = 0;
    for (const RoundRecord& rec : records) {
        regret += instantaneous_regret(rec);
        relaxed += relaxed_regret_increment(rec, eps);
        efficacy += rec.efficacy_gap;
        safety += std::max(0.0, max_violation(rec));
        if (!rec.optimally_associated) ++nonopt;
        if (max_violation(rec) > eps) ++exceed;
        s.regret.push_back(regret);
        s.relaxed_regret.push_back(relaxed);
        s.efficacy_regret.push_back(efficacy);
        s.safety_regret.push_back(safety);
        s.nonopt_bis_count.push_back(nonopt);
        s.eps_violation_count.push_back(exceed);
    }
    return s;
}

// Fills the overlay curves, indexed by rounds elapsed. Curves whose inputs
// are missing (nonpositive Xi or eps) stay empty.
inline void attach_bounds(RunSummary& s, int d, double lambda, double delta, int U,
                          double xi_value, double eps) {
    const long n = static_cast<long>(s.regret.size());
    s.bound_general_curve.clear();
    s.bound_polytope_curve.clear();
    s.bound_bis_curve.clear();
    for (long t = 1; t <= n; ++t)
        s.bound_general_curve.push_back(bound_general(t, d, lambda, delta, U));
    if (xi_value > 0.0) {
        for (long t = 1; t <= n; ++t)
            s.bound_bis_curve.push_back(bound_bis_count(t, d, lambda, xi_value));
        if (eps > 0.0)
            for (long t = 1; t <= n; ++t)
                s.bound_polytope_curve.push_back(bound_polytope(t, d, lambda, xi_value, eps));
    }
}

} // namespace doslb
