#pragma once
// Offline analysis of polytopal instances: enumeration of basic index sets
// (d-subsets of the constraint list), their association classification, the
// spread program, and the three separation quantities whose minimum over
// index sets yields the instance hardness value Xi.
//
// Index convention: constraints are 0-based and ordered as in the instance
// (known first). Domain rows are part of the ground set K but never carry
// an index.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "doslb/errors.hpp"
#include "doslb/estimation.hpp"
#include "doslb/instance.hpp"
#include "doslb/linalg.hpp"
#include "doslb/lp.hpp"
#include "doslb/textio.hpp"

namespace doslb {

struct Bis {
    std::vector<int> indices; // sorted, distinct, size d

    bool operator==(const Bis& o) const { return indices == o.indices; }
};

enum class AssocKind { Empty, UniquePoint, AffinePiece };

struct BisClassification {
    bool consistent = false;
    AssocKind kind = AssocKind::Empty;
    Vec witness; // associated point (unique or sample)
    bool optimal = false;
};

struct SpreadResult {
    double value = 1.0;      // 1 + l1 norm of the minimizing pi
    Vec pi_witness;          // multipliers of the unknown rows of L
    double program_value = 0.0;
};

struct BisRecord {
    Bis bis;
    BisClassification cls;
    // Efficiency separation: raw value-gap, its spread, and the quotient.
    double delta = 0.0;
    double delta_raw = 0.0;
    double delta_spread = 1.0;
    Vec delta_witness; // argmax of the restricted value program
    // Feasibility separation: best violating index and its witness.
    double gamma = 0.0;
    double gamma_raw = 0.0;
    int gamma_k = -1;
    Vec gamma_witness;
    // Consistency separation: best (equalities, actives, k) combination.
    double lambda = 0.0;
    double lambda_raw = 0.0;
    double lambda_spread = 1.0;
    int lambda_k = -1;
    std::vector<int> lambda_equalities;
    std::vector<int> lambda_actives;
    double max_gap = 0.0;
};

struct GapReport {
    std::vector<BisRecord> records;
    double xi = 0.0;
    // Xi minimizes over index sets whose maximal gap is strictly positive;
    // optimally-associated sets carry all-zero gaps and are excluded.
    std::string xi_rule = "min over index sets with positive maximal gap";
    Vec x_star;
    double opt_value = 0.0;
};

namespace gapdetail {

constexpr double kGapEps = 1e-9;

struct Rows {
    std::vector<Vec> vecs; // indexed constraint rows, known first
    Vec levels;
    std::vector<Vec> domain_vecs;
    Vec domain_levels;
    int m = 0;
};

inline Rows collect_rows(const ProblemInstance& p) {
    Rows r;
    for (const ConstraintDef& c : p.constraints) {
        r.vecs.push_back(c.vec);
        r.levels.push_back(c.level);
    }
    for (const Halfspace& h : p.domain) {
        r.domain_vecs.push_back(h.normal);
        r.domain_levels.push_back(h.offset);
    }
    r.m = static_cast<int>(r.vecs.size());
    return r;
}

inline void check_bis(const Bis& I, int d, int m) {
    if (static_cast<int>(I.indices.size()) != d)
        throw OutOfRange("bis: index count must equal the dimension");
    for (size_t j = 0; j < I.indices.size(); ++j) {
        if (I.indices[j] < 0 || I.indices[j] >= m)
            throw OutOfRange("bis: index outside constraint range");
        if (j > 0 && I.indices[j] <= I.indices[j - 1])
            throw OutOfRange("bis: indices must be sorted and distinct");
    }
}

inline bool contains_index(const std::vector<int>& v, int k) {
    return std::find(v.begin(), v.end(), k) != v.end();
}

inline std::vector<int> complement(int m, const std::vector<int>& I) {
    std::vector<int> out;
    for (int k = 0; k < m; ++k)
        if (!contains_index(I, k)) out.push_back(k);
    return out;
}

// Base program of association: equalities on I, membership in the known
// polytope (known rows plus domain rows).
inline LpProblem assoc_program(const ProblemInstance& p, const Rows& r,
                               const std::vector<int>& I) {
    LpProblem lp;
    lp.n = p.d;
    lp.c = Vec(static_cast<size_t>(p.d), 0.0);
    for (int i : I)
        lp.add_eq(r.vecs[static_cast<size_t>(i)], r.levels[static_cast<size_t>(i)]);
    const int nk = known_count(p);
    for (int i = 0; i < nk; ++i)
        lp.add_ineq(r.vecs[static_cast<size_t>(i)], r.levels[static_cast<size_t>(i)]);
    for (size_t i = 0; i < r.domain_vecs.size(); ++i)
        lp.add_ineq(r.domain_vecs[i], r.domain_levels[i]);
    return lp;
}

} // namespace gapdetail

inline BisClassification classify(const ProblemInstance& p, const Bis& I) {
    check_instance(p);
    const gapdetail::Rows r = gapdetail::collect_rows(p);
    gapdetail::check_bis(I, p.d, r.m);

    BisClassification out;
    LpProblem base = gapdetail::assoc_program(p, r, I.indices);
    const std::optional<Vec> witness = lp_feasible(base);
    if (!witness) return out; // inconsistent: Empty, not optimal

    out.consistent = true;
    Vec lo(static_cast<size_t>(p.d), 0.0), hi(static_cast<size_t>(p.d), 0.0);
    bool bounded = true;
    double scale = 1.0;
    for (int j = 0; j < p.d && bounded; ++j) {
        for (const double sgn : {1.0, -1.0}) {
            base.c.assign(static_cast<size_t>(p.d), 0.0);
            base.c[static_cast<size_t>(j)] = sgn;
            const LpSolution sol = solve_lp(base);
            if (sol.status == LpStatus::Unbounded) {
                bounded = false;
                break;
            }
            if (sol.status != LpStatus::Optimal)
                throw NumericalFailure("classify: probe program failed");
            (sgn > 0 ? hi : lo)[static_cast<size_t>(j)] = sgn * sol.value;
            scale = std::max(scale, std::abs(sol.value));
        }
    }
    bool unique = bounded;
    for (int j = 0; j < p.d && unique; ++j)
        unique = hi[static_cast<size_t>(j)] - lo[static_cast<size_t>(j)] <= 1e-8 * scale;
    if (unique) {
        out.kind = AssocKind::UniquePoint;
        out.witness.resize(static_cast<size_t>(p.d));
        for (int j = 0; j < p.d; ++j)
            out.witness[static_cast<size_t>(j)] =
                0.5 * (hi[static_cast<size_t>(j)] + lo[static_cast<size_t>(j)]);
    } else {
        out.kind = AssocKind::AffinePiece;
        out.witness = *witness;
    }

    const NoiselessSolution ns = solve_noiseless(p);
    out.optimal = true;
    for (int i : I.indices) {
        const size_t si = static_cast<size_t>(i);
        const double resid = dot(r.vecs[si], ns.x_star) - r.levels[si];
        if (std::abs(resid) > 1e-8 * std::max(1.0, std::abs(r.levels[si])))
            out.optimal = false;
    }
    return out;
}

inline SpreadResult spread(const ProblemInstance& p, const Vec& v,
                           const std::vector<int>& L, const std::vector<int>& Mset) {
    check_instance(p);
    require_finite(v, "spread: objective vector");
    if (static_cast<int>(v.size()) != p.d)
        throw DimensionMismatch("spread: objective dimension");
    const gapdetail::Rows r = gapdetail::collect_rows(p);
    for (int i : L)
        if (i < 0 || i >= r.m) throw OutOfRange("spread: L index outside range");
    for (int i : Mset) {
        if (i < 0 || i >= r.m) throw OutOfRange("spread: M index outside range");
        if (gapdetail::contains_index(L, i))
            throw OutOfRange("spread: L and M must be disjoint");
    }

    const int nk = known_count(p);
    std::vector<int> lu, lk;
    for (int i : L) (i >= nk ? lu : lk).push_back(i);
    const int npi = static_cast<int>(lu.size());
    const int nrho = static_cast<int>(lk.size());
    const int nsig = static_cast<int>(Mset.size());

    // Stage 1: minimize the dual objective subject to the combination
    // identity; sigma entries are sign-constrained.
    LpProblem s1;
    s1.n = npi + nrho + nsig;
    s1.c.assign(static_cast<size_t>(s1.n), 0.0);
    const auto level_of = [&](int i) { return r.levels[static_cast<size_t>(i)]; };
    for (int q = 0; q < npi; ++q) s1.c[static_cast<size_t>(q)] = -level_of(lu[static_cast<size_t>(q)]);
    for (int q = 0; q < nrho; ++q)
        s1.c[static_cast<size_t>(npi + q)] = -level_of(lk[static_cast<size_t>(q)]);
    for (int q = 0; q < nsig; ++q)
        s1.c[static_cast<size_t>(npi + nrho + q)] = -level_of(Mset[static_cast<size_t>(q)]);
    for (int j = 0; j < p.d; ++j) {
        Vec row(static_cast<size_t>(s1.n), 0.0);
        for (int q = 0; q < npi; ++q)
            row[static_cast<size_t>(q)] = r.vecs[static_cast<size_t>(lu[static_cast<size_t>(q)])][static_cast<size_t>(j)];
        for (int q = 0; q < nrho; ++q)
            row[static_cast<size_t>(npi + q)] =
                r.vecs[static_cast<size_t>(lk[static_cast<size_t>(q)])][static_cast<size_t>(j)];
        for (int q = 0; q < nsig; ++q)
            row[static_cast<size_t>(npi + nrho + q)] =
                r.vecs[static_cast<size_t>(Mset[static_cast<size_t>(q)])][static_cast<size_t>(j)];
        s1.add_eq(row, v[static_cast<size_t>(j)]);
    }
    for (int q = 0; q < nsig; ++q) {
        Vec row(static_cast<size_t>(s1.n), 0.0);
        row[static_cast<size_t>(npi + nrho + q)] = -1.0;
        s1.add_ineq(row, 0.0);
    }
    const LpSolution o1 = solve_lp(s1);
    if (o1.status == LpStatus::Infeasible)
        throw ProgramInfeasible("spread: combination program infeasible");
    SpreadResult out;
    if (o1.status == LpStatus::Unbounded) {
        // A dual descent ray certifies an infeasible value program. With no
        // unknown rows in L the norm term is identically zero and the value
        // stays 1; otherwise no minimizer exists.
        if (npi == 0) {
            out.value = 1.0;
            out.program_value = -std::numeric_limits<double>::infinity();
            return out;
        }
        throw ProgramUnbounded("spread: combination program unbounded");
    }
    const double wstar = -o1.value;
    out.program_value = wstar;
    if (npi == 0) {
        out.value = 1.0;
        return out;
    }

    // Stage 2: split pi into nonnegative parts and minimize their sum over
    // the near-optimal face of stage 1.
    LpProblem s2;
    s2.n = 2 * npi + nrho + nsig;
    s2.c.assign(static_cast<size_t>(s2.n), 0.0);
    for (int q = 0; q < 2 * npi; ++q) s2.c[static_cast<size_t>(q)] = -1.0;
    for (int j = 0; j < p.d; ++j) {
        Vec row(static_cast<size_t>(s2.n), 0.0);
        for (int q = 0; q < npi; ++q) {
            const double a =
                r.vecs[static_cast<size_t>(lu[static_cast<size_t>(q)])][static_cast<size_t>(j)];
            row[static_cast<size_t>(q)] = a;
            row[static_cast<size_t>(npi + q)] = -a;
        }
        for (int q = 0; q < nrho; ++q)
            row[static_cast<size_t>(2 * npi + q)] =
                r.vecs[static_cast<size_t>(lk[static_cast<size_t>(q)])][static_cast<size_t>(j)];
        for (int q = 0; q < nsig; ++q)
            row[static_cast<size_t>(2 * npi + nrho + q)] =
                r.vecs[static_cast<size_t>(Mset[static_cast<size_t>(q)])][static_cast<size_t>(j)];
        s2.add_eq(row, v[static_cast<size_t>(j)]);
    }
    for (int q = 0; q < 2 * npi; ++q) {
        Vec row(static_cast<size_t>(s2.n), 0.0);
        row[static_cast<size_t>(q)] = -1.0;
        s2.add_ineq(row, 0.0);
    }
    for (int q = 0; q < nsig; ++q) {
        Vec row(static_cast<size_t>(s2.n), 0.0);
        row[static_cast<size_t>(2 * npi + nrho + q)] = -1.0;
        s2.add_ineq(row, 0.0);
    }
    {
        Vec row(static_cast<size_t>(s2.n), 0.0);
        for (int q = 0; q < npi; ++q) {
            const double a = level_of(lu[static_cast<size_t>(q)]);
            row[static_cast<size_t>(q)] = a;
            row[static_cast<size_t>(npi + q)] = -a;
        }
        for (int q = 0; q < nrho; ++q)
            row[static_cast<size_t>(2 * npi + q)] = level_of(lk[static_cast<size_t>(q)]);
        for (int q = 0; q < nsig; ++q)
            row[static_cast<size_t>(2 * npi + nrho + q)] = level_of(Mset[static_cast<size_t>(q)]);
        s2.add_ineq(row, wstar + 1e-7 * (1.0 + std::abs(wstar)));
    }
    const LpSolution o2 = solve_lp(s2);
    if (o2.status != LpStatus::Optimal)
        throw NumericalFailure("spread: norm-minimization stage failed");

    double l1 = 0.0;
    out.pi_witness.resize(static_cast<size_t>(npi));
    for (int q = 0; q < npi; ++q) {
        const double pi = o2.x[static_cast<size_t>(q)] - o2.x[static_cast<size_t>(npi + q)];
        out.pi_witness[static_cast<size_t>(q)] = pi;
        l1 += std::abs(pi);
    }
    out.value = 1.0 + l1;
    return out;
}

namespace gapdetail {

struct EffGapDetail {
    double scaled = 0.0;
    double raw = 0.0;
    double spread_value = 1.0;
    Vec witness;
};

inline EffGapDetail eff_gap(const ProblemInstance& p, const Rows& r, const Bis& I,
                            double opt_value) {
    EffGapDetail out;
    LpProblem lp = assoc_program(p, r, I.indices);
    // Restrict to points honouring every other indexed constraint.
    for (int k : complement(r.m, I.indices))
        lp.add_ineq(r.vecs[static_cast<size_t>(k)], r.levels[static_cast<size_t>(k)]);
    lp.c = p.theta_star;
    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) return out; // empty or unbounded: no gap
    out.raw = std::max(0.0, opt_value - sol.value);
    out.witness = sol.x;
    if (out.raw <= 0.0) return out;
    try {
        const SpreadResult s =
            spread(p, p.theta_star, I.indices, complement(r.m, I.indices));
        out.spread_value = s.value;
        out.scaled = out.raw / s.value;
    } catch (const ProgramInfeasible&) {
        out.spread_value = std::numeric_limits<double>::infinity();
        out.scaled = 0.0;
    } catch (const ProgramUnbounded&) {
        out.spread_value = std::numeric_limits<double>::infinity();
        out.scaled = 0.0;
    }
    return out;
}

struct FeaGapDetail {
    double scaled = 0.0;
    double raw = 0.0;
    int k = -1;
    Vec witness;
};

inline FeaGapDetail fea_gap(const ProblemInstance& p, const Rows& r, const Bis& I) {
    FeaGapDetail out;
    for (int k : complement(r.m, I.indices)) {
        const size_t sk = static_cast<size_t>(k);
        LpProblem lp = assoc_program(p, r, I.indices);
        lp.c = scaled(r.vecs[sk], -1.0);
        const LpSolution sol = solve_lp(lp);
        if (sol.status != LpStatus::Optimal) continue; // empty or unbounded below
        const double gamma_k = -sol.value - r.levels[sk];
        if (gamma_k <= 0.0) continue;
        std::vector<int> mset = complement(r.m, I.indices);
        mset.erase(std::remove(mset.begin(), mset.end(), k), mset.end());
        double scaled_k = 0.0;
        try {
            scaled_k = gamma_k / spread(p, scaled(r.vecs[sk], -1.0), I.indices, mset).value;
        } catch (const ProgramInfeasible&) {
            continue;
        } catch (const ProgramUnbounded&) {
            continue;
        }
        if (scaled_k > out.scaled) {
            out.scaled = scaled_k;
            out.raw = gamma_k;
            out.k = k;
            out.witness = sol.x;
        }
    }
    return out;
}

struct ConGapDetail {
    double scaled = 0.0;
    double raw = 0.0;
    double spread_value = 1.0;
    int k = -1;
    std::vector<int> equalities;
    std::vector<int> actives;
};

inline ConGapDetail con_gap(const ProblemInstance& p, const Rows& r, const Bis& I,
                            long subset_budget) {
    const std::vector<int> comp = complement(r.m, I.indices);
    const int ni = static_cast<int>(I.indices.size());
    const int nc = static_cast<int>(comp.size());
    if (ni + nc > 62 ||
        std::pow(2.0, ni) * std::pow(2.0, nc) > static_cast<double>(subset_budget))
        throw ExponentialBudgetExceeded("consistency gap: subset pairs exceed budget");

    ConGapDetail out;
    for (long mi = 0; mi < (1L << ni); ++mi) {
        std::vector<int> itilde;
        for (int q = 0; q < ni; ++q)
            if (mi & (1L << q)) itilde.push_back(I.indices[static_cast<size_t>(q)]);
        for (long mj = 0; mj < (1L << nc); ++mj) {
            std::vector<int> jtilde;
            for (int q = 0; q < nc; ++q)
                if (mj & (1L << q)) jtilde.push_back(comp[static_cast<size_t>(q)]);

            LpProblem base;
            base.n = p.d;
            base.c.assign(static_cast<size_t>(p.d), 0.0);
            for (int i : itilde)
                base.add_eq(r.vecs[static_cast<size_t>(i)], r.levels[static_cast<size_t>(i)]);
            for (int j : jtilde)
                base.add_ineq(r.vecs[static_cast<size_t>(j)], r.levels[static_cast<size_t>(j)]);
            if (!lp_feasible(base)) continue;

            for (int k = 0; k < r.m; ++k) {
                if (contains_index(itilde, k) || contains_index(jtilde, k)) continue;
                const size_t sk = static_cast<size_t>(k);
                const auto consider = [&](double value, double spread_value) {
                    const double scaled_v = value / spread_value;
                    if (scaled_v > out.scaled) {
                        out.scaled = scaled_v;
                        out.raw = value;
                        out.spread_value = spread_value;
                        out.k = k;
                        out.equalities = itilde;
                        out.actives = jtilde;
                    }
                };
                // Lower separation: every point of the piece violates k.
                base.c = scaled(r.vecs[sk], -1.0);
                LpSolution sol = solve_lp(base);
                if (sol.status == LpStatus::Optimal) {
                    const double lam = std::max(0.0, -sol.value - r.levels[sk]);
                    if (lam > 0.0)
                        consider(lam, spread(p, scaled(r.vecs[sk], -1.0), itilde, jtilde).value);
                }
                // Upper separation: a row of I that the piece keeps slack.
                if (contains_index(I.indices, k)) {
                    base.c = r.vecs[sk];
                    sol = solve_lp(base);
                    if (sol.status == LpStatus::Optimal) {
                        const double lam = -std::min(0.0, sol.value - r.levels[sk]);
                        if (lam > 0.0)
                            consider(lam, spread(p, r.vecs[sk], itilde, jtilde).value);
                    }
                }
            }
        }
    }
    return out;
}

} // namespace gapdetail

inline double efficiency_gap(const ProblemInstance& p, const Bis& I) {
    check_instance(p);
    const gapdetail::Rows r = gapdetail::collect_rows(p);
    gapdetail::check_bis(I, p.d, r.m);
    if (!classify(p, I).consistent) return 0.0;
    return gapdetail::eff_gap(p, r, I, solve_noiseless(p).value).scaled;
}

inline double feasibility_gap(const ProblemInstance& p, const Bis& I) {
    check_instance(p);
    const gapdetail::Rows r = gapdetail::collect_rows(p);
    gapdetail::check_bis(I, p.d, r.m);
    if (!classify(p, I).consistent) return 0.0;
    return gapdetail::fea_gap(p, r, I).scaled;
}

inline double consistency_gap(const ProblemInstance& p, const Bis& I,
                              long subset_budget = 65536) {
    check_instance(p);
    const gapdetail::Rows r = gapdetail::collect_rows(p);
    gapdetail::check_bis(I, p.d, r.m);
    if (classify(p, I).consistent) return 0.0;
    return gapdetail::con_gap(p, r, I, subset_budget).scaled;
}

inline GapReport xi(const ProblemInstance& p, long subset_budget = 65536) {
    check_instance(p);
    const gapdetail::Rows r = gapdetail::collect_rows(p);
    if (r.m < p.d) throw InvalidInstance("xi: fewer constraints than dimensions");
    const NoiselessSolution ns = solve_noiseless(p);

    GapReport report;
    report.x_star = ns.x_star;
    report.opt_value = ns.value;

    std::vector<int> combo(static_cast<size_t>(p.d));
    for (int j = 0; j < p.d; ++j) combo[static_cast<size_t>(j)] = j;
    bool more = true;
    while (more) {
        BisRecord rec;
        rec.bis.indices = combo;
        rec.cls = classify(p, rec.bis);
        if (rec.cls.consistent) {
            const gapdetail::EffGapDetail eg = gapdetail::eff_gap(p, r, rec.bis, ns.value);
            rec.delta = eg.scaled;
            rec.delta_raw = eg.raw;
            rec.delta_spread = eg.spread_value;
            rec.delta_witness = eg.witness;
            const gapdetail::FeaGapDetail fg = gapdetail::fea_gap(p, r, rec.bis);
            rec.gamma = fg.scaled;
            rec.gamma_raw = fg.raw;
            rec.gamma_k = fg.k;
            rec.gamma_witness = fg.witness;
        } else {
            const gapdetail::ConGapDetail cg =
                gapdetail::con_gap(p, r, rec.bis, subset_budget);
            rec.lambda = cg.scaled;
            rec.lambda_raw = cg.raw;
            rec.lambda_spread = cg.spread_value;
            rec.lambda_k = cg.k;
            rec.lambda_equalities = cg.equalities;
            rec.lambda_actives = cg.actives;
        }
        rec.max_gap = std::max({rec.delta, rec.gamma, rec.lambda});
        report.records.push_back(std::move(rec));

        // next d-combination of [0:m)
        more = false;
        for (int j = p.d - 1; j >= 0; --j) {
            if (combo[static_cast<size_t>(j)] < r.m - (p.d - j)) {
                ++combo[static_cast<size_t>(j)];
                for (int q = j + 1; q < p.d; ++q)
                    combo[static_cast<size_t>(q)] = combo[static_cast<size_t>(q - 1)] + 1;
                more = true;
                break;
            }
        }
    }

    bool have = false;
    for (const BisRecord& rec : report.records) {
        if (rec.max_gap <= gapdetail::kGapEps) continue;
        if (!have || rec.max_gap < report.xi) report.xi = rec.max_gap;
        have = true;
    }
    if (!have) report.xi = 0.0;
    return report;
}

inline std::vector<Bis> noisy_association(const PublicView& view,
                                          const std::vector<ConfidenceRegion>& regions,
                                          const Vec& x, double tol = 1e-6) {
    const int m = static_cast<int>(view.known.size() + view.unknown_levels.size());
    if (static_cast<int>(regions.size()) != m)
        throw DimensionMismatch("noisy_association: one region per constraint");
    if (static_cast<int>(x.size()) != view.d)
        throw DimensionMismatch("noisy_association: point dimension");

    std::vector<int> admits;
    for (int i = 0; i < m; ++i) {
        const size_t si = static_cast<size_t>(i);
        const double level = i < static_cast<int>(view.known.size())
                                 ? view.known[si].level
                                 : view.unknown_levels[si - view.known.size()];
        const double smin = support_min(regions[si], x);
        const double smax = support_max(regions[si], x);
        if (smin <= level + tol && level + tol <= smax + 2.0 * tol)
            admits.push_back(i);
    }

    std::vector<Bis> out;
    const int n = static_cast<int>(admits.size());
    if (n < view.d) return out;
    std::vector<int> combo(static_cast<size_t>(view.d));
    for (int j = 0; j < view.d; ++j) combo[static_cast<size_t>(j)] = j;
    bool more = true;
    while (more) {
        Bis b;
        for (int j : combo) b.indices.push_back(admits[static_cast<size_t>(j)]);
        out.push_back(std::move(b));
        more = false;
        for (int j = view.d - 1; j >= 0; --j) {
            if (combo[static_cast<size_t>(j)] < n - (view.d - j)) {
                ++combo[static_cast<size_t>(j)];
                for (int q = j + 1; q < view.d; ++q)
                    combo[static_cast<size_t>(q)] = combo[static_cast<size_t>(q - 1)] + 1;
                more = true;
                break;
            }
        }
    }
    return out;
}

// Induced-arm view of a simplex instance: each basis vector is an arm, an
// arm is safe when its risk mean is within the level, and gaps are measured
// against the best safe arm.
struct ArmGap {
    double mu = 0.0;
    double nu = 0.0;
    bool safe = false;
    double delta = 0.0;
    double gamma = 0.0;
};

struct ArmGapTable {
    std::vector<ArmGap> arms;
    int best_safe = -1;
};

inline ArmGapTable arm_gaps(const Vec& mu, const Vec& nu, double alpha) {
    if (mu.size() != nu.size())
        throw DimensionMismatch("arm_gaps: mean and risk lengths differ");
    require_finite(mu, "arm_gaps: mu");
    require_finite(nu, "arm_gaps: nu");
    ArmGapTable out;
    double best = 0.0;
    for (size_t k = 0; k < mu.size(); ++k) {
        ArmGap a;
        a.mu = mu[k];
        a.nu = nu[k];
        a.safe = nu[k] <= alpha;
        a.gamma = std::max(0.0, nu[k] - alpha);
        if (a.safe && (out.best_safe < 0 || mu[k] > best)) {
            out.best_safe = static_cast<int>(k);
            best = mu[k];
        }
        out.arms.push_back(a);
    }
    if (out.best_safe >= 0)
        for (ArmGap& a : out.arms) a.delta = std::max(0.0, best - a.mu);
    return out;
}

inline DocNode gap_report_to_doc(const GapReport& g) {
    DocNode root = doc_block();
    DocNode body = doc_block();
    body.entries.emplace_back("x_star", doc_numlist(g.x_star));
    body.entries.emplace_back("opt_value", doc_number(g.opt_value));
    body.entries.emplace_back("xi", doc_number(g.xi));
    body.entries.emplace_back("xi_rule", doc_scalar(g.xi_rule));
    for (const BisRecord& rec : g.records) {
        DocNode rb = doc_block();
        Vec idx;
        for (int i : rec.bis.indices) idx.push_back(static_cast<double>(i));
        rb.entries.emplace_back("indices", doc_numlist(idx));
        const char* kind = rec.cls.kind == AssocKind::Empty
                               ? "empty"
                               : (rec.cls.kind == AssocKind::UniquePoint ? "unique-point"
                                                                         : "affine-piece");
        rb.entries.emplace_back("consistent", doc_boolean(rec.cls.consistent));
        rb.entries.emplace_back("kind", doc_scalar(kind));
        rb.entries.emplace_back("optimal", doc_boolean(rec.cls.optimal));
        if (!rec.cls.witness.empty())
            rb.entries.emplace_back("witness", doc_numlist(rec.cls.witness));
        rb.entries.emplace_back("delta", doc_number(rec.delta));
        rb.entries.emplace_back("delta_raw", doc_number(rec.delta_raw));
        rb.entries.emplace_back("delta_spread", doc_number(rec.delta_spread));
        rb.entries.emplace_back("gamma", doc_number(rec.gamma));
        rb.entries.emplace_back("gamma_raw", doc_number(rec.gamma_raw));
        rb.entries.emplace_back("gamma_k", doc_integer(rec.gamma_k));
        rb.entries.emplace_back("lambda", doc_number(rec.lambda));
        rb.entries.emplace_back("lambda_raw", doc_number(rec.lambda_raw));
        rb.entries.emplace_back("lambda_spread", doc_number(rec.lambda_spread));
        rb.entries.emplace_back("lambda_k", doc_integer(rec.lambda_k));
        rb.entries.emplace_back("max_gap", doc_number(rec.max_gap));
        body.entries.emplace_back("bis", std::move(rb));
    }
    root.entries.emplace_back("gap_report", std::move(body));
    return root;
}

inline std::string gap_report_to_text(const GapReport& g) {
    return serialize_doc(gap_report_to_doc(g));
}

} // namespace doslb
