#pragma once
// Action selection. Three strategies over the same confidence machinery:
//  - doslb_select: optimistic play; enumerates one vertex per box region
//    (reward and each unknown constraint) and solves one small LP per
//    combination, returning the feasible maximizer.
//  - safelts_select: Thompson-sampled objective over the pessimistic set
//    (every vertex of every unknown-constraint region must respect its
//    level), one LP per round.
//  - oracle_select: clairvoyant optimum of the latent instance.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "doslb/environment.hpp"
#include "doslb/errors.hpp"
#include "doslb/estimation.hpp"
#include "doslb/instance.hpp"
#include "doslb/linalg.hpp"
#include "doslb/lp.hpp"

namespace doslb {

enum class PolicyKind { Doslb, SafeLts, Oracle };
enum class FallbackMode { KnownOnly, Error };

struct PolicyConfig {
    PolicyKind kind = PolicyKind::Doslb;
    Geometry geometry = Geometry::BoxL1;
    RadiusParams radius_params{};
    double lts_inflation = 1.0;
    // Exponent on beta in the sampling rule; 0.5 gives the usual sqrt(beta)
    // scaling, 1.0 the unsquare-rooted variant.
    double lts_beta_exponent = 0.5;
    std::optional<Vec> lts_safe_fallback{};
    FallbackMode fallback_mode = FallbackMode::KnownOnly;
    long enumeration_budget = 1000000;
};

struct Decision {
    Vec x;
    double optimistic_value = 0.0;
    // Index 0: reward-region vertex; index 1+i: vertex of unknown region i.
    std::vector<int> vertex_choice;
    long lp_optimal = 0;
    long lp_infeasible = 0;
    long lp_unbounded = 0;
    bool permissible_empty_fallback = false;
};

namespace policydetail {

// Nonzero u with rows*u = 0, or nullopt when the rows span R^d.
inline std::optional<Vec> null_direction(std::vector<Vec> rows, int d) {
    const int k = static_cast<int>(rows.size());
    double scale = 0.0;
    for (const Vec& r : rows)
        for (double v : r) scale = std::max(scale, std::abs(v));
    const double tol = 1e-10 * std::max(1.0, scale);
    std::vector<int> pivot_col;
    int r = 0;
    for (int c = 0; c < d && r < k; ++c) {
        int best = -1;
        double best_abs = tol;
        for (int i = r; i < k; ++i) {
            const double a = std::abs(rows[static_cast<size_t>(i)][static_cast<size_t>(c)]);
            if (a > best_abs) {
                best_abs = a;
                best = i;
            }
        }
        if (best < 0) continue;
        std::swap(rows[static_cast<size_t>(r)], rows[static_cast<size_t>(best)]);
        const double piv = rows[static_cast<size_t>(r)][static_cast<size_t>(c)];
        for (double& v : rows[static_cast<size_t>(r)]) v /= piv;
        for (int i = 0; i < k; ++i) {
            if (i == r) continue;
            const double f = rows[static_cast<size_t>(i)][static_cast<size_t>(c)];
            if (f == 0.0) continue;
            for (int j = 0; j < d; ++j)
                rows[static_cast<size_t>(i)][static_cast<size_t>(j)] -=
                    f * rows[static_cast<size_t>(r)][static_cast<size_t>(j)];
        }
        pivot_col.push_back(c);
        ++r;
    }
    if (static_cast<int>(pivot_col.size()) == d) return std::nullopt;
    int free_col = -1;
    for (int c = 0; c < d; ++c) {
        bool is_pivot = false;
        for (int pc : pivot_col) is_pivot = is_pivot || pc == c;
        if (!is_pivot) {
            free_col = c;
            break;
        }
    }
    Vec u(static_cast<size_t>(d), 0.0);
    u[static_cast<size_t>(free_col)] = 1.0;
    for (size_t i = 0; i < pivot_col.size(); ++i)
        u[static_cast<size_t>(pivot_col[i])] =
            -rows[i][static_cast<size_t>(free_col)];
    double mx = 0.0;
    for (double v : u) mx = std::max(mx, std::abs(v));
    for (double& v : u) v /= mx;
    return u;
}

inline double row_tol(const Vec& normal, double offset, const Vec& x) {
    double s = std::abs(offset);
    for (size_t j = 0; j < normal.size(); ++j)
        s = std::max(s, std::abs(normal[j] * x[j]));
    return 1e-7 * std::max(1.0, s);
}

// Walks x along the optimal face (directions orthogonal to the objective)
// until the tight rows have full rank, so the point is a vertex of the
// feasible polytope rather than an interior point of a tied face.
inline void repair_to_vertex(Vec& x, const std::vector<Vec>& normals,
                             const Vec& offsets, const Vec& objective) {
    const int d = static_cast<int>(x.size());
    const int m = static_cast<int>(normals.size());
    for (int iter = 0; iter < m + d + 2; ++iter) {
        std::vector<Vec> tight;
        for (int i = 0; i < m; ++i) {
            const size_t si = static_cast<size_t>(i);
            const double resid = offsets[si] - dot(normals[si], x);
            if (std::abs(resid) <= row_tol(normals[si], offsets[si], x))
                tight.push_back(normals[si]);
        }
        {
            std::vector<Vec> probe = tight;
            if (!null_direction(std::move(probe), d)) return;
        }
        tight.push_back(objective);
        const std::optional<Vec> dir = null_direction(std::move(tight), d);
        if (!dir) return;
        const Vec& u = *dir;
        bool moved = false;
        for (const double sgn : {1.0, -1.0}) {
            double smax = -1.0;
            for (int i = 0; i < m; ++i) {
                const size_t si = static_cast<size_t>(i);
                const double au = sgn * dot(normals[si], u);
                if (au <= 1e-12) continue;
                const double s = (offsets[si] - dot(normals[si], x)) / au;
                if (smax < 0.0 || s < smax) smax = s;
            }
            if (smax < 0.0) continue; // unblocked ray, try the other sign
            smax = std::max(smax, 0.0);
            for (int j = 0; j < d; ++j)
                x[static_cast<size_t>(j)] += sgn * smax * u[static_cast<size_t>(j)];
            moved = true;
            break;
        }
        if (!moved) return; // face unbounded in both directions
    }
}

struct ComboLp {
    LpStatus status = LpStatus::Infeasible;
    Vec x;
    double value = 0.0;
};

inline ComboLp solve_combo(const std::vector<Vec>& normals, const Vec& offsets,
                           const Vec& objective) {
    LpProblem lp;
    lp.n = static_cast<int>(objective.size());
    lp.c = objective;
    for (size_t i = 0; i < normals.size(); ++i) lp.add_ineq(normals[i], offsets[i]);
    const LpSolution sol = solve_lp(lp);
    ComboLp out;
    out.status = sol.status;
    if (sol.status == LpStatus::Optimal) {
        out.x = sol.x;
        out.value = sol.value;
    }
    return out;
}

inline void check_view_state(const PublicView& view, const GramState& g) {
    if (view.d != g.d)
        throw DimensionMismatch("policy: view and state dimension differ");
    if (static_cast<int>(view.unknown_levels.size()) != g.n_unknown)
        throw DimensionMismatch("policy: view and state unknown counts differ");
}

inline void append_rows(std::vector<Vec>& normals, Vec& offsets,
                        const std::vector<Halfspace>& hs) {
    for (const Halfspace& h : hs) {
        normals.push_back(h.normal);
        offsets.push_back(h.offset);
    }
}

inline void append_rows(std::vector<Vec>& normals, Vec& offsets,
                        const std::vector<ConstraintDef>& cs) {
    for (const ConstraintDef& c : cs) {
        normals.push_back(c.vec);
        offsets.push_back(c.level);
    }
}

} // namespace policydetail

// Optimistic play over known rows only; used when every vertex combination
// is infeasible (the optimistic permissible set is empty).
namespace policydetail {

inline Decision known_only_fallback(const std::vector<Vec>& reward_vertices,
                                    const std::vector<Vec>& known_normals,
                                    const Vec& known_offsets) {
    Decision best;
    bool have = false;
    for (size_t rv = 0; rv < reward_vertices.size(); ++rv) {
        const ComboLp sol = solve_combo(known_normals, known_offsets, reward_vertices[rv]);
        if (sol.status != LpStatus::Optimal) continue;
        if (!have || sol.value > best.optimistic_value) {
            have = true;
            best.x = sol.x;
            best.optimistic_value = sol.value;
            best.vertex_choice = {static_cast<int>(rv)};
        }
    }
    if (!have)
        throw ProgramInfeasible("doslb_select: known constraint set infeasible");
    repair_to_vertex(best.x, known_normals, known_offsets,
                     reward_vertices[static_cast<size_t>(best.vertex_choice[0])]);
    best.permissible_empty_fallback = true;
    return best;
}

} // namespace policydetail

inline Decision doslb_select(const PublicView& view, const GramState& g,
                             const PolicyConfig& cfg) {
    policydetail::check_view_state(view, g);
    const int u_count = g.n_unknown;

    std::vector<std::vector<Vec>> region_vertices;
    region_vertices.push_back(vertices(reward_region(g, cfg.geometry, cfg.radius_params)));
    for (int i = 0; i < u_count; ++i)
        region_vertices.push_back(
            vertices(unknown_region(g, i, cfg.geometry, cfg.radius_params)));

    double combos = 1.0;
    for (const auto& vs : region_vertices) combos *= static_cast<double>(vs.size());
    if (combos > static_cast<double>(cfg.enumeration_budget))
        throw EnumerationBudgetExceeded("doslb_select: vertex combinations exceed budget");

    std::vector<Vec> known_normals;
    Vec known_offsets;
    policydetail::append_rows(known_normals, known_offsets, view.known);
    policydetail::append_rows(known_normals, known_offsets, view.domain);

    Decision best;
    bool have = false;
    long n_optimal = 0, n_infeasible = 0, n_unbounded = 0;
    std::vector<int> choice(region_vertices.size(), 0);
    bool done = false;
    while (!done) {
        std::vector<Vec> normals = known_normals;
        Vec offsets = known_offsets;
        for (int i = 0; i < u_count; ++i) {
            normals.push_back(
                region_vertices[static_cast<size_t>(i + 1)]
                               [static_cast<size_t>(choice[static_cast<size_t>(i + 1)])]);
            offsets.push_back(view.unknown_levels[static_cast<size_t>(i)]);
        }
        const Vec& theta =
            region_vertices[0][static_cast<size_t>(choice[0])];
        const policydetail::ComboLp sol =
            policydetail::solve_combo(normals, offsets, theta);
        switch (sol.status) {
            case LpStatus::Optimal: ++n_optimal; break;
            case LpStatus::Infeasible: ++n_infeasible; break;
            case LpStatus::Unbounded: ++n_unbounded; break;
        }
        if (sol.status == LpStatus::Optimal &&
            (!have || sol.value > best.optimistic_value)) {
            have = true;
            best.x = sol.x;
            best.optimistic_value = sol.value;
            best.vertex_choice = choice;
        }
        // Odometer (last index fastest): ties keep the earlier combination.
        done = true;
        for (size_t k = choice.size(); k-- > 0;) {
            if (++choice[k] < static_cast<int>(region_vertices[k].size())) {
                done = false;
                break;
            }
            choice[k] = 0;
        }
    }

    if (!have) {
        if (n_unbounded > 0)
            throw ProgramUnbounded("doslb_select: optimistic program unbounded");
        if (cfg.fallback_mode == FallbackMode::Error)
            throw PermissibleEmpty("doslb_select: optimistic permissible set empty");
        Decision fb = policydetail::known_only_fallback(
            region_vertices[0], known_normals, known_offsets);
        fb.lp_optimal = n_optimal;
        fb.lp_infeasible = n_infeasible;
        fb.lp_unbounded = n_unbounded;
        return fb;
    }

    std::vector<Vec> win_normals = known_normals;
    Vec win_offsets = known_offsets;
    for (int i = 0; i < u_count; ++i) {
        win_normals.push_back(
            region_vertices[static_cast<size_t>(i + 1)]
                           [static_cast<size_t>(best.vertex_choice[static_cast<size_t>(i + 1)])]);
        win_offsets.push_back(view.unknown_levels[static_cast<size_t>(i)]);
    }
    policydetail::repair_to_vertex(
        best.x, win_normals, win_offsets,
        region_vertices[0][static_cast<size_t>(best.vertex_choice[0])]);
    best.lp_optimal = n_optimal;
    best.lp_infeasible = n_infeasible;
    best.lp_unbounded = n_unbounded;
    return best;
}

// Re-runs the winning program of a previous selection; deterministic, so the
// result reproduces the original decision bit for bit.
inline Decision doslb_resolve(const PublicView& view, const GramState& g,
                              const PolicyConfig& cfg,
                              const std::vector<int>& vertex_choice) {
    policydetail::check_view_state(view, g);
    const int u_count = g.n_unknown;
    if (static_cast<int>(vertex_choice.size()) != u_count + 1)
        throw DimensionMismatch("doslb_resolve: vertex choice length");

    std::vector<Vec> normals;
    Vec offsets;
    policydetail::append_rows(normals, offsets, view.known);
    policydetail::append_rows(normals, offsets, view.domain);

    const std::vector<Vec> reward_verts =
        vertices(reward_region(g, cfg.geometry, cfg.radius_params));
    const Vec theta = reward_verts.at(static_cast<size_t>(vertex_choice[0]));
    for (int i = 0; i < u_count; ++i) {
        const std::vector<Vec> vs =
            vertices(unknown_region(g, i, cfg.geometry, cfg.radius_params));
        normals.push_back(vs.at(static_cast<size_t>(vertex_choice[static_cast<size_t>(i + 1)])));
        offsets.push_back(view.unknown_levels[static_cast<size_t>(i)]);
    }
    const policydetail::ComboLp sol = policydetail::solve_combo(normals, offsets, theta);
    if (sol.status != LpStatus::Optimal)
        throw ProgramInfeasible("doslb_resolve: winning program no longer optimal");
    Decision out;
    out.x = sol.x;
    out.optimistic_value = sol.value;
    out.vertex_choice = vertex_choice;
    out.lp_optimal = 1;
    policydetail::repair_to_vertex(out.x, normals, offsets, theta);
    return out;
}

inline Decision safelts_select(const PublicView& view, const GramState& g,
                               const PolicyConfig& cfg, RngState& rng) {
    policydetail::check_view_state(view, g);
    if (cfg.lts_inflation <= 0.0)
        throw OutOfRange("safelts_select: inflation must be positive");

    const Vec theta_hat = reward_estimate(g);
    const double b = beta(g, cfg.radius_params);
    const double scale = cfg.lts_inflation * std::pow(b, cfg.lts_beta_exponent);
    Vec eta(static_cast<size_t>(g.d));
    for (double& e : eta) e = rng_normal(rng);
    const Vec pert = matvec(g.fac.inv_sqrt, eta);
    Vec theta = theta_hat;
    for (size_t j = 0; j < theta.size(); ++j) theta[j] += scale * pert[j];

    std::vector<Vec> normals;
    Vec offsets;
    policydetail::append_rows(normals, offsets, view.known);
    policydetail::append_rows(normals, offsets, view.domain);
    for (int i = 0; i < g.n_unknown; ++i) {
        const ConfidenceRegion region =
            unknown_region(g, i, cfg.geometry, cfg.radius_params);
        for (const Vec& v : vertices(region)) {
            normals.push_back(v);
            offsets.push_back(view.unknown_levels[static_cast<size_t>(i)]);
        }
    }

    const policydetail::ComboLp sol = policydetail::solve_combo(normals, offsets, theta);
    Decision out;
    if (sol.status == LpStatus::Optimal) {
        out.x = sol.x;
        out.optimistic_value = sol.value;
        out.lp_optimal = 1;
        policydetail::repair_to_vertex(out.x, normals, offsets, theta);
        return out;
    }
    if (sol.status == LpStatus::Unbounded)
        throw ProgramUnbounded("safelts_select: sampled program unbounded");
    out.lp_infeasible = 1;
    if (!cfg.lts_safe_fallback)
        throw NoSafeFallback("safelts_select: pessimistic set empty, no fallback");
    out.x = *cfg.lts_safe_fallback;
    if (static_cast<int>(out.x.size()) != g.d)
        throw DimensionMismatch("safelts_select: fallback dimension");
    out.optimistic_value = dot(theta, out.x);
    out.permissible_empty_fallback = true;
    return out;
}

inline Decision oracle_select(const ProblemInstance& p) {
    const NoiselessSolution sol = solve_noiseless(p);
    Decision out;
    out.x = sol.x_star;
    out.optimistic_value = sol.value;
    out.lp_optimal = 1;
    return out;
}

} // namespace doslb
