#pragma once

// Problem-instance data model: a linear objective over a polytope cut out by
// known and unknown linear constraints plus explicit domain halfspaces.
// Includes the canonical demo instance, the one-dimensional hard family and
// its tensorized form, the simplex bandit reduction, assumption validation,
// and a bit-exact text serialization.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "doslb/errors.hpp"
#include "doslb/linalg.hpp"
#include "doslb/lp.hpp"
#include "doslb/textio.hpp"

namespace doslb {

enum class Visibility { Known, Unknown };

struct ConstraintDef {
    Vec vec;
    double level = 0.0;
    Visibility visibility = Visibility::Known;
    bool operator==(const ConstraintDef&) const = default;
};

struct Halfspace {
    Vec normal;
    double offset = 0.0;
    bool operator==(const Halfspace&) const = default;
};

// constraints holds the known block first, then the unknown block; indices
// into it are the constraint indices used by the gap analysis.
struct ProblemInstance {
    std::string label;
    int d = 0;
    Vec theta_star;
    std::vector<ConstraintDef> constraints;
    std::vector<Halfspace> domain;
    std::vector<std::pair<std::string, std::string>> metadata;
    bool operator==(const ProblemInstance&) const = default;
};

inline int constraint_count(const ProblemInstance& p) {
    return static_cast<int>(p.constraints.size());
}

inline int known_count(const ProblemInstance& p) {
    int k = 0;
    for (const ConstraintDef& c : p.constraints)
        if (c.visibility == Visibility::Known) ++k;
    return k;
}

inline int unknown_count(const ProblemInstance& p) {
    return constraint_count(p) - known_count(p);
}

inline void check_instance(const ProblemInstance& p) {
    if (p.d < 1) throw InvalidInstance("instance: d must be >= 1");
    if (static_cast<int>(p.theta_star.size()) != p.d)
        throw InvalidInstance("instance: theta_star dimension mismatch");
    require_finite(p.theta_star, "instance.theta_star");
    if (p.constraints.empty()) throw InvalidInstance("instance: no constraints");
    bool seen_unknown = false;
    for (const ConstraintDef& c : p.constraints) {
        if (static_cast<int>(c.vec.size()) != p.d)
            throw InvalidInstance("instance: constraint dimension mismatch");
        require_finite(c.vec, "instance.constraint");
        if (!std::isfinite(c.level)) throw NonFiniteInput("instance: constraint level");
        if (c.visibility == Visibility::Unknown) seen_unknown = true;
        else if (seen_unknown)
            throw InvalidInstance("instance: known constraint after unknown block");
    }
    for (const Halfspace& h : p.domain) {
        if (static_cast<int>(h.normal.size()) != p.d)
            throw InvalidInstance("instance: domain dimension mismatch");
        require_finite(h.normal, "instance.domain");
        if (!std::isfinite(h.offset)) throw NonFiniteInput("instance: domain offset");
    }
}

// What a policy is allowed to see: known constraints, domain halfspaces, and
// only the levels of the unknown constraints. Latent vectors stay behind the
// simulation boundary.
struct PublicView {
    int d = 0;
    std::vector<ConstraintDef> known;
    Vec unknown_levels;
    std::vector<Halfspace> domain;
};

inline PublicView public_view(const ProblemInstance& p) {
    PublicView v;
    v.d = p.d;
    for (const ConstraintDef& c : p.constraints) {
        if (c.visibility == Visibility::Known)
            v.known.push_back(c);
        else
            v.unknown_levels.push_back(c.level);
    }
    v.domain = p.domain;
    return v;
}

// Halfspace list for the known polytope: known constraints merged with the
// domain rows. Policies and gap programs treat both identically.
inline std::vector<Halfspace> known_halfspaces(const PublicView& v) {
    std::vector<Halfspace> rows;
    for (const ConstraintDef& c : v.known) rows.push_back({c.vec, c.level});
    for (const Halfspace& h : v.domain) rows.push_back(h);
    return rows;
}

inline std::vector<Halfspace> known_halfspaces(const ProblemInstance& p) {
    return known_halfspaces(public_view(p));
}

// Clairvoyant LP over the full feasible set (known + unknown + domain).
inline LpProblem instance_lp(const ProblemInstance& p) {
    LpProblem lp(p.d);
    lp.c = p.theta_star;
    for (const ConstraintDef& c : p.constraints) lp.add_ineq(c.vec, c.level);
    for (const Halfspace& h : p.domain) lp.add_ineq(h.normal, h.offset);
    return lp;
}

struct NoiselessSolution {
    Vec x_star;
    double value = 0.0;
};

inline NoiselessSolution solve_noiseless(const ProblemInstance& p) {
    check_instance(p);
    const LpSolution s = solve_lp(instance_lp(p));
    if (s.status == LpStatus::Infeasible)
        throw InvalidInstance("instance: feasible set is empty");
    if (s.status == LpStatus::Unbounded)
        throw UnboundedDomain("instance: objective unbounded over feasible set");
    return {s.x, s.value};
}

// Canonical two-dimensional demo: three known halfplanes forming a triangle
// with vertices (0,0), (2,2), (4,0), one unknown halfplane x2 <= 1.1, and a
// slack enclosing box that never binds.
inline ProblemInstance running_example() {
    const double s = std::sqrt(0.5);
    ProblemInstance p;
    p.label = "example1";
    p.d = 2;
    p.theta_star = {0.1, 1.0};
    p.constraints = {
        {{0.0, -1.0}, 0.0, Visibility::Known},
        {{-s, s}, 0.0, Visibility::Known},
        {{s, s}, 2.0 * std::sqrt(2.0), Visibility::Known},
        {{0.0, 0.5}, 0.55, Visibility::Unknown},
    };
    p.domain = {
        {{1.0, 0.0}, 8.0},
        {{-1.0, 0.0}, 8.0},
        {{0.0, 1.0}, 8.0},
        {{0.0, -1.0}, 8.0},
    };
    p.metadata = {{"domain_note", "enclosing box [-8,8]^2; slack, never binds"}};
    return p;
}

// Harder variant: the unknown level drops to 0.1, leaving far less room
// between the pessimistic and optimistic safe sets.
inline ProblemInstance running_example_hard() {
    ProblemInstance p = running_example();
    p.label = "example1-hard";
    p.constraints.back().level = 0.1;
    return p;
}

// One-dimensional hard family and its coordinate-wise tensorization. Known
// rows box each coordinate into [-1, 1]; each coordinate gets one unknown
// row with slope (1 + signs[i]*eps)/2. The default level is 1/4 in one
// dimension and 1/2 when tensorized; level_override > 0 forces a level.
inline ProblemInstance lower_bound_instance(int d, double eps, const std::vector<int>& signs,
                                            double level_override = 0.0) {
    if (!(eps > 0.0) || !(eps <= 1.0 / 9.0))
        throw InvalidEps("lower_bound_instance: eps must lie in (0, 1/9]");
    if (d < 1) throw InvalidInstance("lower_bound_instance: d must be >= 1");
    if (static_cast<int>(signs.size()) != d)
        throw InvalidInstance("lower_bound_instance: signs length mismatch");
    for (int s : signs)
        if (s != 1 && s != -1)
            throw InvalidInstance("lower_bound_instance: signs entries must be +-1");
    const double level = level_override > 0.0 ? level_override : (d == 1 ? 0.25 : 0.5);
    ProblemInstance p;
    p.d = d;
    p.theta_star.assign(static_cast<size_t>(d), 1.0);
    std::string lbl = "lower-bound-d" + std::to_string(d) + "-eps" + format_double(eps);
    for (int i = 0; i < d; ++i) lbl += signs[static_cast<size_t>(i)] > 0 ? "+" : "-";
    p.label = lbl;
    for (int i = 0; i < d; ++i) {
        Vec e(static_cast<size_t>(d), 0.0);
        e[static_cast<size_t>(i)] = 1.0;
        p.constraints.push_back({e, 1.0, Visibility::Known});
        Vec ne(static_cast<size_t>(d), 0.0);
        ne[static_cast<size_t>(i)] = -1.0;
        p.constraints.push_back({ne, 1.0, Visibility::Known});
    }
    for (int i = 0; i < d; ++i) {
        Vec a(static_cast<size_t>(d), 0.0);
        a[static_cast<size_t>(i)] = (1.0 + signs[static_cast<size_t>(i)] * eps) / 2.0;
        p.constraints.push_back({a, level, Visibility::Unknown});
    }
    p.metadata = {{"unknown_level", format_double(level)}};
    return p;
}

// Bandit reduction on the probability simplex: arms are basis vectors, the
// reward vector is mu, and one unknown row nu at level alpha encodes the
// per-arm risk. The simplex is known: coordinates >= 0 plus the two
// inequalities encoding sum(x) = 1.
inline ProblemInstance simplex_mab_instance(const Vec& mu, const Vec& nu, double alpha) {
    const int d = static_cast<int>(mu.size());
    if (d < 1) throw InvalidInstance("simplex_mab_instance: empty mu");
    if (nu.size() != mu.size())
        throw DimensionMismatch("simplex_mab_instance: mu/nu size mismatch");
    for (double m : mu)
        if (!(m >= 0.0) || !(m <= 1.0))
            throw OutOfRange("simplex_mab_instance: mu entries must lie in [0,1]");
    for (double n : nu)
        if (!(n >= 0.0) || !(n <= 1.0))
            throw OutOfRange("simplex_mab_instance: nu entries must lie in [0,1]");
    ProblemInstance p;
    p.label = "simplex-mab";
    p.d = d;
    p.theta_star = mu;
    for (int i = 0; i < d; ++i) {
        Vec ne(static_cast<size_t>(d), 0.0);
        ne[static_cast<size_t>(i)] = -1.0;
        p.constraints.push_back({ne, 0.0, Visibility::Known});
    }
    const Vec ones(static_cast<size_t>(d), 1.0);
    Vec neg_ones(static_cast<size_t>(d), -1.0);
    p.constraints.push_back({ones, 1.0, Visibility::Known});
    p.constraints.push_back({neg_ones, -1.0, Visibility::Known});
    p.constraints.push_back({nu, alpha, Visibility::Unknown});
    return p;
}

// Enumerates the vertices of a halfspace intersection by solving every
// d-subset of rows and keeping solutions feasible for all rows. Caller must
// have established boundedness; the subset count is capped.
inline std::vector<Vec> enumerate_polytope_vertices(const std::vector<Halfspace>& rows, int d,
                                                    long budget = 2000000) {
    const int m = static_cast<int>(rows.size());
    if (m < d) return {};
    double scale = 1.0;
    for (const Halfspace& h : rows) scale = std::max(scale, std::fabs(h.offset));
    std::vector<int> idx(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) idx[static_cast<size_t>(i)] = i;
    std::vector<Vec> verts;
    long visited = 0;
    while (true) {
        if (++visited > budget)
            throw EnumerationBudgetExceeded("vertex enumeration: too many row subsets");
        Mat a(d, d);
        Vec b(static_cast<size_t>(d), 0.0);
        for (int r = 0; r < d; ++r) {
            const Halfspace& h = rows[static_cast<size_t>(idx[static_cast<size_t>(r)])];
            for (int c = 0; c < d; ++c) a(r, c) = h.normal[static_cast<size_t>(c)];
            b[static_cast<size_t>(r)] = h.offset;
        }
        Vec x;
        if (detail::solve_square(a, b, x)) {
            bool ok = all_finite(x);
            for (const Halfspace& h : rows) {
                if (!ok) break;
                ok = dot(h.normal, x) <= h.offset + 1e-7 * scale;
            }
            if (ok) {
                bool dup = false;
                for (const Vec& v : verts) {
                    double dist = 0.0;
                    for (int c = 0; c < d; ++c)
                        dist = std::max(dist, std::fabs(v[static_cast<size_t>(c)] -
                                                        x[static_cast<size_t>(c)]));
                    if (dist <= 1e-7 * scale) {
                        dup = true;
                        break;
                    }
                }
                if (!dup) verts.push_back(x);
            }
        }
        int pos = d - 1;
        while (pos >= 0 && idx[static_cast<size_t>(pos)] == m - d + pos) --pos;
        if (pos < 0) break;
        ++idx[static_cast<size_t>(pos)];
        for (int r = pos + 1; r < d; ++r)
            idx[static_cast<size_t>(r)] = idx[static_cast<size_t>(r - 1)] + 1;
    }
    return verts;
}

struct AssumptionReport {
    double L = 0.0;
    double S = 0.0;
    bool satisfies_a1 = false;
    bool satisfies_a2 = false;
    double suggested_lambda = 1.0;
    Vec x_star;
    double opt_value = 0.0;
    bool degenerate = false;
};

// Checks boundedness, nonemptiness, and norm bounds; computes the optimum
// and probes its uniqueness by perturbing the objective along +-e_j.
inline AssumptionReport validate(const ProblemInstance& p) {
    check_instance(p);
    const std::vector<Halfspace> krows = known_halfspaces(p);

    LpProblem probe(p.d);
    for (const Halfspace& h : krows) probe.add_ineq(h.normal, h.offset);
    for (int j = 0; j < p.d; ++j) {
        for (double s : {1.0, -1.0}) {
            probe.c.assign(static_cast<size_t>(p.d), 0.0);
            probe.c[static_cast<size_t>(j)] = s;
            if (solve_lp(probe).status == LpStatus::Unbounded)
                throw UnboundedDomain("validate: known polytope unbounded along coordinate " +
                                      std::to_string(j));
        }
    }

    AssumptionReport rep;
    const std::vector<Vec> verts = enumerate_polytope_vertices(krows, p.d);
    if (verts.empty()) throw InvalidInstance("validate: known polytope is empty");
    for (const Vec& v : verts) rep.L = std::max(rep.L, norm2(v));
    rep.S = norm2(p.theta_star);
    for (const ConstraintDef& c : p.constraints) rep.S = std::max(rep.S, norm2(c.vec));
    rep.satisfies_a1 = rep.L <= 1.0 + 1e-12;
    rep.satisfies_a2 = rep.S <= 1.0 + 1e-12;
    rep.suggested_lambda = std::max(1.0, rep.L * rep.L);

    const NoiselessSolution sol = solve_noiseless(p);
    rep.x_star = sol.x_star;
    rep.opt_value = sol.value;

    LpProblem full = instance_lp(p);
    for (int j = 0; j < p.d; ++j) {
        for (double s : {1.0, -1.0}) {
            full.c = p.theta_star;
            full.c[static_cast<size_t>(j)] += s * 1e-7;
            const LpSolution ps = solve_lp(full);
            if (ps.status != LpStatus::Optimal ||
                norm2(sub(ps.x, rep.x_star)) > 1e-5 * std::max(1.0, norm2(rep.x_star)))
                rep.degenerate = true;
        }
    }
    return rep;
}

// Text serialization. parse(serialize(p)) == p bit-exactly for finite input.

inline DocNode instance_to_doc(const ProblemInstance& p) {
    DocNode inst = doc_block();
    inst.entries.emplace_back("label", doc_scalar(p.label));
    inst.entries.emplace_back("d", doc_integer(p.d));
    inst.entries.emplace_back("theta_star", doc_numlist(p.theta_star));
    for (const ConstraintDef& c : p.constraints) {
        DocNode cb = doc_block();
        cb.entries.emplace_back(
            "visibility", doc_scalar(c.visibility == Visibility::Known ? "known" : "unknown"));
        cb.entries.emplace_back("vec", doc_numlist(c.vec));
        cb.entries.emplace_back("level", doc_number(c.level));
        inst.entries.emplace_back("constraint", std::move(cb));
    }
    for (const Halfspace& h : p.domain) {
        DocNode hb = doc_block();
        hb.entries.emplace_back("normal", doc_numlist(h.normal));
        hb.entries.emplace_back("offset", doc_number(h.offset));
        inst.entries.emplace_back("domain", std::move(hb));
    }
    for (const auto& [k, v] : p.metadata) {
        DocNode mb = doc_block();
        mb.entries.emplace_back("key", doc_scalar(k));
        mb.entries.emplace_back("value", doc_scalar(v));
        inst.entries.emplace_back("meta", std::move(mb));
    }
    DocNode root = doc_block();
    root.entries.emplace_back("instance", std::move(inst));
    return root;
}

inline ProblemInstance instance_from_doc(const DocNode& root) {
    const DocNode& inst = doc_require(root, "instance");
    if (inst.kind != DocNode::Kind::Block) throw ParseError("instance: expected block");
    ProblemInstance p;
    if (const DocNode* lbl = doc_find(inst, "label")) p.label = doc_string(*lbl, "label");
    p.d = static_cast<int>(doc_long(doc_require(inst, "d"), "d"));
    p.theta_star = doc_vec(doc_require(inst, "theta_star"), "theta_star");
    for (const DocNode* cb : doc_find_all(inst, "constraint")) {
        ConstraintDef c;
        const std::string vis = doc_string(doc_require(*cb, "visibility"), "visibility");
        if (vis == "known")
            c.visibility = Visibility::Known;
        else if (vis == "unknown")
            c.visibility = Visibility::Unknown;
        else
            throw ParseError("constraint: visibility must be known|unknown");
        c.vec = doc_vec(doc_require(*cb, "vec"), "constraint.vec");
        c.level = doc_double(doc_require(*cb, "level"), "constraint.level");
        p.constraints.push_back(std::move(c));
    }
    for (const DocNode* hb : doc_find_all(inst, "domain")) {
        Halfspace h;
        h.normal = doc_vec(doc_require(*hb, "normal"), "domain.normal");
        h.offset = doc_double(doc_require(*hb, "offset"), "domain.offset");
        p.domain.push_back(std::move(h));
    }
    for (const DocNode* mb : doc_find_all(inst, "meta"))
        p.metadata.emplace_back(doc_string(doc_require(*mb, "key"), "meta.key"),
                                doc_string(doc_require(*mb, "value"), "meta.value"));
    check_instance(p);
    return p;
}

inline std::string instance_to_text(const ProblemInstance& p) {
    return serialize_doc(instance_to_doc(p));
}

inline ProblemInstance instance_from_text(const std::string& text) {
    return instance_from_doc(parse_doc(text));
}

} // namespace doslb
