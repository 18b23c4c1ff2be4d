#pragma once

// Dense two-phase primal simplex for small linear programs, with dual
// multipliers recovered from the final tableau.
//
//   maximize   <c, x>
//   subject to eq_rows[i]   . x  = eq_rhs[i]
//              ineq_rows[i] . x <= ineq_rhs[i]
//              x free
//
// Bland's anti-cycling rule throughout, lowest-index tie breaking, no
// randomization: identical problem bytes produce identical solution bytes.
// Free variables are split into differences of nonnegatives internally.
// Every Optimal solve is self-checked against the four duality
// certificates before it is returned.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "doslb/errors.hpp"
#include "doslb/linalg.hpp"

namespace doslb {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpProblem {
    int n = 0; // variable count
    Vec c;
    std::vector<Vec> eq_rows;
    Vec eq_rhs;
    std::vector<Vec> ineq_rows;
    Vec ineq_rhs;

    void add_eq(const Vec& row, double rhs) {
        eq_rows.push_back(row);
        eq_rhs.push_back(rhs);
    }
    void add_ineq(const Vec& row, double rhs) {
        ineq_rows.push_back(row);
        ineq_rhs.push_back(rhs);
    }
};

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    Vec x;
    double value = 0.0;
    Vec dual_eq;   // one per equality row, free sign
    Vec dual_ineq; // one per inequality row, >= 0 at optimality
};

namespace lpdetail {

constexpr double kPivotTol = 1e-10;

struct Tableau {
    // Rows 0..m-1 are constraints, row m is the reduced-cost row.
    // Columns 0..ncols-2 are variables, last column is the rhs.
    int m = 0;
    int ncols = 0;
    std::vector<double> t;
    std::vector<int> basis;

    double& at(int i, int j) { return t[static_cast<size_t>(i) * ncols + j]; }
    double at(int i, int j) const { return t[static_cast<size_t>(i) * ncols + j]; }
};

inline void pivot(Tableau& tb, int pr, int pc) {
    const int ncols = tb.ncols;
    double* prow = &tb.t[static_cast<size_t>(pr) * ncols];
    const double inv = 1.0 / prow[pc];
    for (int j = 0; j < ncols; ++j) prow[j] *= inv;
    prow[pc] = 1.0;
    for (int i = 0; i <= tb.m; ++i) {
        if (i == pr) continue;
        double* row = &tb.t[static_cast<size_t>(i) * ncols];
        const double f = row[pc];
        if (f == 0.0) continue;
        for (int j = 0; j < ncols; ++j) row[j] -= f * prow[j];
        row[pc] = 0.0;
    }
    tb.basis[static_cast<size_t>(pr)] = pc;
}

// Runs simplex iterations on the current reduced-cost row. Columns with
// enter_ok[j] == 0 never enter the basis. Returns false on unboundedness.
inline bool iterate(Tableau& tb, const std::vector<char>& enter_ok, long max_iter) {
    const int rhs_col = tb.ncols - 1;
    for (long it = 0; it < max_iter; ++it) {
        // Bland entering rule: lowest-index improving column.
        int pc = -1;
        for (int j = 0; j < rhs_col; ++j) {
            if (!enter_ok[static_cast<size_t>(j)]) continue;
            if (tb.at(tb.m, j) > kPivotTol) {
                pc = j;
                break;
            }
        }
        if (pc < 0) return true; // optimal
        // Ratio test, ties broken by lowest basic variable index.
        int pr = -1;
        double best = 0.0;
        for (int i = 0; i < tb.m; ++i) {
            const double a = tb.at(i, pc);
            if (a > kPivotTol) {
                const double ratio = tb.at(i, rhs_col) / a;
                if (pr < 0 || ratio < best ||
                    (ratio == best &&
                     tb.basis[static_cast<size_t>(i)] < tb.basis[static_cast<size_t>(pr)])) {
                    pr = i;
                    best = ratio;
                }
            }
        }
        if (pr < 0) return false; // unbounded direction
        pivot(tb, pr, pc);
    }
    throw NumericalFailure("lp: iteration cap exceeded");
}

} // namespace lpdetail

// Validates the four optimality certificates on an Optimal solution:
// primal feasibility, dual feasibility (including multiplier signs),
// strong duality, and complementary slackness. Throws NumericalFailure
// with a description when any of them fails.
inline void check_certificates(const LpProblem& p, const LpSolution& s) {
    if (s.status != LpStatus::Optimal) return;
    const double vscale = 1.0 + std::fabs(s.value);
    // Primal feasibility.
    for (size_t i = 0; i < p.eq_rows.size(); ++i) {
        const double lhs = dot(p.eq_rows[i], s.x);
        const double tol = 1e-8 * (1.0 + std::fabs(p.eq_rhs[i]) + std::fabs(lhs));
        if (std::fabs(lhs - p.eq_rhs[i]) > tol)
            throw NumericalFailure("lp certificate: equality row violated");
    }
    for (size_t i = 0; i < p.ineq_rows.size(); ++i) {
        const double lhs = dot(p.ineq_rows[i], s.x);
        const double tol = 1e-8 * (1.0 + std::fabs(p.ineq_rhs[i]) + std::fabs(lhs));
        if (lhs - p.ineq_rhs[i] > tol)
            throw NumericalFailure("lp certificate: inequality row violated");
    }
    // Dual feasibility: multiplier signs and stationarity A^T y = c.
    for (double y : s.dual_ineq)
        if (y < -1e-9) throw NumericalFailure("lp certificate: negative inequality dual");
    for (int j = 0; j < p.n; ++j) {
        double aty = 0.0;
        for (size_t i = 0; i < p.eq_rows.size(); ++i)
            aty += s.dual_eq[i] * p.eq_rows[i][static_cast<size_t>(j)];
        for (size_t i = 0; i < p.ineq_rows.size(); ++i)
            aty += s.dual_ineq[i] * p.ineq_rows[i][static_cast<size_t>(j)];
        const double tol = 1e-7 * (1.0 + std::fabs(aty) + std::fabs(p.c[static_cast<size_t>(j)]));
        if (std::fabs(aty - p.c[static_cast<size_t>(j)]) > tol)
            throw NumericalFailure("lp certificate: dual stationarity violated");
    }
    // Strong duality.
    double dual_value = 0.0;
    for (size_t i = 0; i < p.eq_rows.size(); ++i) dual_value += s.dual_eq[i] * p.eq_rhs[i];
    for (size_t i = 0; i < p.ineq_rows.size(); ++i) dual_value += s.dual_ineq[i] * p.ineq_rhs[i];
    if (std::fabs(dual_value - s.value) > 1e-7 * vscale)
        throw NumericalFailure("lp certificate: duality gap");
    // Complementary slackness.
    for (size_t i = 0; i < p.ineq_rows.size(); ++i) {
        const double slack = p.ineq_rhs[i] - dot(p.ineq_rows[i], s.x);
        const double tol = 1e-7 * (1.0 + std::fabs(p.ineq_rhs[i])) * (1.0 + std::fabs(s.dual_ineq[i]));
        if (std::fabs(s.dual_ineq[i] * slack) > tol)
            throw NumericalFailure("lp certificate: complementary slackness violated");
    }
}

namespace lpdetail {

inline void validate_problem(const LpProblem& p) {
    if (p.n <= 0) throw DimensionMismatch("lp: no variables");
    if (static_cast<int>(p.c.size()) != p.n) throw DimensionMismatch("lp: objective size");
    require_finite(p.c, "lp objective");
    if (p.eq_rows.size() != p.eq_rhs.size() || p.ineq_rows.size() != p.ineq_rhs.size())
        throw DimensionMismatch("lp: row/rhs count mismatch");
    for (const Vec& r : p.eq_rows) {
        if (static_cast<int>(r.size()) != p.n) throw DimensionMismatch("lp: equality row size");
        require_finite(r, "lp equality row");
    }
    for (const Vec& r : p.ineq_rows) {
        if (static_cast<int>(r.size()) != p.n) throw DimensionMismatch("lp: inequality row size");
        require_finite(r, "lp inequality row");
    }
    require_finite(p.eq_rhs, "lp equality rhs");
    require_finite(p.ineq_rhs, "lp inequality rhs");
}

struct Standardized {
    Tableau tb;
    int n_split = 0;     // 2 * p.n
    int n_slack = 0;     // one per inequality row
    int n_art = 0;
    std::vector<int> art_col;   // per row, -1 when none
    std::vector<double> sign;   // row scaling applied to reach rhs >= 0
    int m_eq = 0;
    int m_in = 0;
};

// Builds the phase-1 tableau: rows are [eq; ineq] with rhs made
// nonnegative, columns are [u, w, slacks, artificials | rhs].
inline Standardized standardize(const LpProblem& p) {
    Standardized s;
    s.m_eq = static_cast<int>(p.eq_rows.size());
    s.m_in = static_cast<int>(p.ineq_rows.size());
    const int m = s.m_eq + s.m_in;
    s.n_split = 2 * p.n;
    s.n_slack = s.m_in;
    s.sign.assign(static_cast<size_t>(m), 1.0);
    s.art_col.assign(static_cast<size_t>(m), -1);

    // Decide which rows need artificials.
    int n_art = 0;
    std::vector<double> rhs(static_cast<size_t>(m));
    for (int i = 0; i < s.m_eq; ++i) rhs[static_cast<size_t>(i)] = p.eq_rhs[static_cast<size_t>(i)];
    for (int i = 0; i < s.m_in; ++i)
        rhs[static_cast<size_t>(s.m_eq + i)] = p.ineq_rhs[static_cast<size_t>(i)];
    for (int i = 0; i < m; ++i)
        if (rhs[static_cast<size_t>(i)] < 0.0) s.sign[static_cast<size_t>(i)] = -1.0;
    for (int i = 0; i < s.m_eq; ++i) s.art_col[static_cast<size_t>(i)] = n_art++;
    for (int i = s.m_eq; i < m; ++i)
        if (s.sign[static_cast<size_t>(i)] < 0.0) s.art_col[static_cast<size_t>(i)] = n_art++;
    s.n_art = n_art;

    const int nvars = s.n_split + s.n_slack + s.n_art;
    s.tb.m = m;
    s.tb.ncols = nvars + 1;
    s.tb.t.assign(static_cast<size_t>(m + 1) * s.tb.ncols, 0.0);
    s.tb.basis.assign(static_cast<size_t>(m), -1);

    auto fill_row = [&](int i, const Vec& row, double b) {
        const double sg = s.sign[static_cast<size_t>(i)];
        for (int j = 0; j < p.n; ++j) {
            s.tb.at(i, j) = sg * row[static_cast<size_t>(j)];
            s.tb.at(i, p.n + j) = -sg * row[static_cast<size_t>(j)];
        }
        s.tb.at(i, s.tb.ncols - 1) = sg * b;
    };
    for (int i = 0; i < s.m_eq; ++i)
        fill_row(i, p.eq_rows[static_cast<size_t>(i)], p.eq_rhs[static_cast<size_t>(i)]);
    for (int i = 0; i < s.m_in; ++i) {
        const int r = s.m_eq + i;
        fill_row(r, p.ineq_rows[static_cast<size_t>(i)], p.ineq_rhs[static_cast<size_t>(i)]);
        s.tb.at(r, s.n_split + i) = s.sign[static_cast<size_t>(r)]; // slack
    }
    for (int i = 0; i < m; ++i) {
        const int ac = s.art_col[static_cast<size_t>(i)];
        if (ac >= 0) {
            s.tb.at(i, s.n_split + s.n_slack + ac) = 1.0;
            s.tb.basis[static_cast<size_t>(i)] = s.n_split + s.n_slack + ac;
        } else {
            s.tb.basis[static_cast<size_t>(i)] = s.n_split + i - s.m_eq; // slack basic
        }
    }
    return s;
}

} // namespace lpdetail

inline LpSolution solve_lp(const LpProblem& p) {
    using namespace lpdetail;
    validate_problem(p);
    Standardized s = standardize(p);
    Tableau& tb = s.tb;
    const int m = tb.m;
    const int nvars = tb.ncols - 1;
    const int rhs_col = nvars;
    const int art_base = s.n_split + s.n_slack;
    const long max_iter = 10L * (nvars + m) + 200;

    std::vector<char> enter_ok(static_cast<size_t>(nvars), 1);

    // Phase 1: maximize minus the artificial sum. Reduced costs start as
    // the column sums over artificial-basic rows.
    if (s.n_art > 0) {
        for (int j = 0; j <= nvars; ++j) {
            double v = 0.0;
            for (int i = 0; i < m; ++i)
                if (s.art_col[static_cast<size_t>(i)] >= 0) v += tb.at(i, j);
            tb.at(m, j) = v;
        }
        for (int i = 0; i < m; ++i)
            if (s.art_col[static_cast<size_t>(i)] >= 0)
                tb.at(m, tb.basis[static_cast<size_t>(i)]) = 0.0;
        if (!iterate(tb, enter_ok, max_iter))
            throw NumericalFailure("lp: phase 1 unbounded");
        double art_sum = 0.0;
        for (int i = 0; i < m; ++i)
            if (tb.basis[static_cast<size_t>(i)] >= art_base)
                art_sum += tb.at(i, rhs_col);
        double rhs_scale = 1.0;
        for (int i = 0; i < m; ++i)
            rhs_scale = std::max(rhs_scale, std::fabs(tb.at(i, rhs_col)));
        if (art_sum > 1e-9 * rhs_scale) {
            LpSolution out;
            out.status = LpStatus::Infeasible;
            return out;
        }
        // Drive leftover zero-valued artificials out where possible.
        for (int i = 0; i < m; ++i) {
            if (tb.basis[static_cast<size_t>(i)] < art_base) continue;
            int pc = -1;
            for (int j = 0; j < art_base; ++j)
                if (std::fabs(tb.at(i, j)) > kPivotTol) {
                    pc = j;
                    break;
                }
            if (pc >= 0) pivot(tb, i, pc);
        }
    }

    // Artificials never re-enter.
    for (int j = art_base; j < nvars; ++j) enter_ok[static_cast<size_t>(j)] = 0;

    // Phase 2: price out the true objective c over [u, w].
    for (int j = 0; j <= nvars; ++j) tb.at(m, j) = 0.0;
    for (int j = 0; j < p.n; ++j) {
        tb.at(m, j) = p.c[static_cast<size_t>(j)];
        tb.at(m, p.n + j) = -p.c[static_cast<size_t>(j)];
    }
    for (int i = 0; i < m; ++i) {
        const double f = tb.at(m, tb.basis[static_cast<size_t>(i)]);
        if (f == 0.0) continue;
        for (int j = 0; j <= nvars; ++j) tb.at(m, j) -= f * tb.at(i, j);
    }
    if (!iterate(tb, enter_ok, max_iter)) {
        LpSolution out;
        out.status = LpStatus::Unbounded;
        return out;
    }

    LpSolution out;
    out.status = LpStatus::Optimal;
    out.x.assign(static_cast<size_t>(p.n), 0.0);
    for (int i = 0; i < m; ++i) {
        const int b = tb.basis[static_cast<size_t>(i)];
        const double v = tb.at(i, rhs_col);
        if (b < p.n)
            out.x[static_cast<size_t>(b)] += v;
        else if (b < s.n_split)
            out.x[static_cast<size_t>(b - p.n)] -= v;
    }
    out.value = dot(p.c, out.x);

    // Duals from final reduced costs. For inequality rows the slack column
    // carries minus the multiplier regardless of row negation; for equality
    // rows the artificial column does, up to the recorded row sign.
    out.dual_eq.assign(static_cast<size_t>(s.m_eq), 0.0);
    out.dual_ineq.assign(static_cast<size_t>(s.m_in), 0.0);
    for (int i = 0; i < s.m_eq; ++i) {
        const int ac = art_base + s.art_col[static_cast<size_t>(i)];
        out.dual_eq[static_cast<size_t>(i)] = -s.sign[static_cast<size_t>(i)] * tb.at(m, ac);
    }
    for (int i = 0; i < s.m_in; ++i) {
        const double r = tb.at(m, s.n_split + i);
        double y = -r;
        if (std::fabs(y) < 1e-12) y = 0.0;
        out.dual_ineq[static_cast<size_t>(i)] = y;
    }
    check_certificates(p, out);
    return out;
}

// Phase-1 feasibility probe. Returns a feasible point when one exists.
inline std::optional<Vec> lp_feasible(const LpProblem& p0) {
    LpProblem p = p0;
    p.c.assign(static_cast<size_t>(p.n), 0.0);
    LpSolution s = solve_lp(p);
    if (s.status != LpStatus::Optimal) return std::nullopt;
    return s.x;
}

} // namespace doslb
