#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doslb/estimation.hpp"
#include "doslb/gaps.hpp"
#include "doslb/instance.hpp"
#include "doslb/lp.hpp"

using namespace doslb;

namespace {

Bis bis(std::initializer_list<int> idx) { return Bis{std::vector<int>(idx)}; }

// K rows of an instance: known constraints plus domain halfspaces.
std::vector<Halfspace> k_rows(const ProblemInstance& p) { return known_halfspaces(p); }

// Value of the association-restricted program used by the efficiency gap.
// Returns false when the program is empty.
bool lp_restricted_value(const ProblemInstance& p, const std::vector<int>& I, double& value) {
    LpProblem lp(p.d);
    lp.c = p.theta_star;
    for (int i : I)
        lp.add_eq(p.constraints[static_cast<size_t>(i)].vec,
                  p.constraints[static_cast<size_t>(i)].level);
    for (size_t k = 0; k < p.constraints.size(); ++k)
        lp.add_ineq(p.constraints[k].vec, p.constraints[k].level);
    for (const Halfspace& h : p.domain) lp.add_ineq(h.normal, h.offset);
    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) return false;
    value = sol.value;
    return true;
}

// Signed margin of row k minimized over the associated set of I.
bool lp_row_margin(const ProblemInstance& p, const std::vector<int>& I, int k, double& margin) {
    LpProblem lp(p.d);
    lp.c = scaled(p.constraints[static_cast<size_t>(k)].vec, -1.0);
    for (int i : I)
        lp.add_eq(p.constraints[static_cast<size_t>(i)].vec,
                  p.constraints[static_cast<size_t>(i)].level);
    for (const Halfspace& h : k_rows(p)) lp.add_ineq(h.normal, h.offset);
    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) return false;
    margin = -sol.value - p.constraints[static_cast<size_t>(k)].level;
    return true;
}

struct GridScan {
    bool value_point = false;
    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<double> row_min; // per-constraint margin minimum over the band
};

// Brute-force scan of the near-equality band of I inside K on a dense grid.
GridScan grid_scan(const ProblemInstance& p, const std::vector<int>& I, double band, int n) {
    const int m = static_cast<int>(p.constraints.size());
    GridScan g;
    g.row_min.assign(static_cast<size_t>(m), std::numeric_limits<double>::infinity());

    LpProblem box(p.d);
    for (const Halfspace& h : k_rows(p)) box.add_ineq(h.normal, h.offset);
    for (int i : I) {
        const ConstraintDef& c = p.constraints[static_cast<size_t>(i)];
        box.add_ineq(c.vec, c.level + band);
        box.add_ineq(scaled(c.vec, -1.0), -(c.level - band));
    }
    double lo[2] = {0.0, 0.0}, hi[2] = {0.0, 0.0};
    for (int j = 0; j < 2; ++j) {
        for (const double sgn : {1.0, -1.0}) {
            box.c.assign(2, 0.0);
            box.c[static_cast<size_t>(j)] = sgn;
            const LpSolution sol = solve_lp(box);
            if (sol.status != LpStatus::Optimal) return g; // empty band region
            (sgn > 0 ? hi : lo)[j] = sgn * sol.value;
        }
    }

    const std::vector<Halfspace> kk = k_rows(p);
    for (int ix = 0; ix < n; ++ix) {
        const double x0 = lo[0] + (hi[0] - lo[0]) * ix / (n - 1);
        for (int iy = 0; iy < n; ++iy) {
            const double x1 = lo[1] + (hi[1] - lo[1]) * iy / (n - 1);
            const Vec pt = {x0, x1};
            bool ok = true;
            for (size_t r = 0; r < kk.size() && ok; ++r)
                ok = dot(kk[r].normal, pt) <= kk[r].offset + 1e-12;
            for (size_t q = 0; q < I.size() && ok; ++q) {
                const ConstraintDef& c = p.constraints[static_cast<size_t>(I[q])];
                ok = std::abs(dot(c.vec, pt) - c.level) <= band;
            }
            if (!ok) continue;
            bool comp_ok = true;
            for (int k = 0; k < m; ++k) {
                const double margin =
                    dot(p.constraints[static_cast<size_t>(k)].vec, pt) -
                    p.constraints[static_cast<size_t>(k)].level;
                g.row_min[static_cast<size_t>(k)] =
                    std::min(g.row_min[static_cast<size_t>(k)], margin);
                if (margin > 1e-12 &&
                    std::find(I.begin(), I.end(), k) == I.end())
                    comp_ok = false;
            }
            if (comp_ok) {
                g.value_point = true;
                g.best_value = std::max(g.best_value, dot(p.theta_star, pt));
            }
        }
    }
    return g;
}

const BisRecord& find_record(const GapReport& rep, const Bis& b) {
    for (const BisRecord& r : rep.records)
        if (r.bis == b) return r;
    throw std::runtime_error("record not found");
}

} // namespace

TEST(Classify, ExampleOneTable) {
    const ProblemInstance p = running_example();

    const BisClassification opt = classify(p, bis({2, 3}));
    EXPECT_TRUE(opt.consistent);
    EXPECT_EQ(opt.kind, AssocKind::UniquePoint);
    EXPECT_TRUE(opt.optimal);
    ASSERT_EQ(opt.witness.size(), 2u);
    EXPECT_NEAR(opt.witness[0], 2.9, 1e-7);
    EXPECT_NEAR(opt.witness[1], 1.1, 1e-7);

    const BisClassification inc = classify(p, bis({0, 3}));
    EXPECT_FALSE(inc.consistent);
    EXPECT_EQ(inc.kind, AssocKind::Empty);
    EXPECT_FALSE(inc.optimal);

    const BisClassification mid = classify(p, bis({1, 2}));
    EXPECT_TRUE(mid.consistent);
    EXPECT_EQ(mid.kind, AssocKind::UniquePoint);
    EXPECT_FALSE(mid.optimal);
    EXPECT_NEAR(mid.witness[0], 2.0, 1e-7);
    EXPECT_NEAR(mid.witness[1], 2.0, 1e-7);
}

TEST(Classify, ParallelDuplicateRowsGiveAffinePiece) {
    ProblemInstance p = running_example();
    p.constraints.insert(p.constraints.begin() + 3,
                         ConstraintDef{{0.0, -1.0}, 0.0, Visibility::Known});
    const BisClassification c = classify(p, bis({0, 3}));
    EXPECT_TRUE(c.consistent);
    EXPECT_EQ(c.kind, AssocKind::AffinePiece);
    EXPECT_FALSE(c.optimal);
    ASSERT_EQ(c.witness.size(), 2u);
    EXPECT_NEAR(c.witness[1], 0.0, 1e-8); // on the lower edge
}

TEST(Classify, RejectsMalformedIndexSets) {
    const ProblemInstance p = running_example();
    EXPECT_THROW(classify(p, bis({0})), OutOfRange);
    EXPECT_THROW(classify(p, bis({0, 4})), OutOfRange);
    EXPECT_THROW(classify(p, bis({2, 2})), OutOfRange);
    EXPECT_THROW(classify(p, Bis{{3, 1}}), OutOfRange);
}

TEST(Spread, UnitWhenNoUnknownRowsCarryTheCombination) {
    const ProblemInstance p = running_example();
    const SpreadResult s = spread(p, p.theta_star, {0, 1}, {2, 3});
    EXPECT_DOUBLE_EQ(s.value, 1.0);
    EXPECT_TRUE(s.pi_witness.empty());
    EXPECT_NEAR(s.program_value, 0.0, 1e-9);
}

TEST(Spread, HandComputedUnknownMultiplier) {
    const ProblemInstance p = running_example();
    // The value program pins (1.1, 1.1); the unknown row carries weight 2.2.
    const SpreadResult a = spread(p, p.theta_star, {1, 3}, {0});
    EXPECT_NEAR(a.value, 3.2, 1e-6);
    ASSERT_EQ(a.pi_witness.size(), 1u);
    EXPECT_NEAR(a.pi_witness[0], 2.2, 1e-6);
    EXPECT_NEAR(a.program_value, 1.21, 1e-9);

    // Adding the remaining row to the sign-constrained set changes nothing.
    const SpreadResult b = spread(p, p.theta_star, {1, 3}, {0, 2});
    EXPECT_NEAR(b.value, 3.2, 1e-6);
    EXPECT_NEAR(b.program_value, 1.21, 1e-9);
}

TEST(Spread, NegativeMultiplierCountsByMagnitude) {
    const ProblemInstance p = running_example();
    const Vec v = {0.0, -1.0}; // first constraint row
    const SpreadResult s = spread(p, v, {3}, {});
    EXPECT_NEAR(s.value, 3.0, 1e-9);
    ASSERT_EQ(s.pi_witness.size(), 1u);
    EXPECT_NEAR(s.pi_witness[0], -2.0, 1e-9);
    EXPECT_NEAR(s.program_value, -1.1, 1e-9);
}

TEST(Spread, ValidatesIndexSets) {
    const ProblemInstance p = running_example();
    EXPECT_THROW(spread(p, p.theta_star, {0, 1}, {1}), OutOfRange);
    EXPECT_THROW(spread(p, p.theta_star, {-1}, {}), OutOfRange);
    EXPECT_THROW(spread(p, p.theta_star, {0}, {4}), OutOfRange);
}

TEST(Spread, InfeasibleCombinationThrows) {
    const ProblemInstance p = running_example();
    // No combination of the first row alone reaches theta_star's x-component.
    EXPECT_THROW(spread(p, p.theta_star, {0}, {}), ProgramInfeasible);
}

TEST(EfficiencyGap, ExampleOnePins) {
    const ProblemInstance p = running_example();
    EXPECT_NEAR(efficiency_gap(p, bis({0, 1})), 1.39, 1e-9);
    EXPECT_NEAR(efficiency_gap(p, bis({0, 2})), 0.99, 1e-9);
    EXPECT_NEAR(efficiency_gap(p, bis({1, 3})), 0.05625, 1e-7);
    // The (2,2) set admits no point honouring the unknown row: no value gap.
    EXPECT_DOUBLE_EQ(efficiency_gap(p, bis({1, 2})), 0.0);
    // Optimally associated set carries no gap.
    EXPECT_DOUBLE_EQ(efficiency_gap(p, bis({2, 3})), 0.0);
    // Inconsistent set carries no efficiency gap by convention.
    EXPECT_DOUBLE_EQ(efficiency_gap(p, bis({0, 3})), 0.0);
}

TEST(FeasibilityGap, ExampleOnePins) {
    const ProblemInstance p = running_example();
    EXPECT_NEAR(feasibility_gap(p, bis({1, 2})), 0.45, 1e-9);
    EXPECT_DOUBLE_EQ(feasibility_gap(p, bis({1, 3})), 0.0);
    EXPECT_DOUBLE_EQ(feasibility_gap(p, bis({0, 1})), 0.0);
    EXPECT_DOUBLE_EQ(feasibility_gap(p, bis({0, 2})), 0.0);
    EXPECT_DOUBLE_EQ(feasibility_gap(p, bis({2, 3})), 0.0);
}

TEST(ConsistencyGap, ExampleOnePin) {
    const ProblemInstance p = running_example();
    EXPECT_NEAR(consistency_gap(p, bis({0, 3})), 0.55, 1e-9);
    EXPECT_DOUBLE_EQ(consistency_gap(p, bis({2, 3})), 0.0);
}

TEST(ConsistencyGap, SubsetBudgetIsEnforced) {
    const ProblemInstance p = running_example();
    EXPECT_THROW(consistency_gap(p, bis({0, 3}), 8), ExponentialBudgetExceeded);
    EXPECT_NEAR(consistency_gap(p, bis({0, 3}), 16), 0.55, 1e-9);
}

TEST(Xi, ExampleOneReport) {
    const ProblemInstance p = running_example();
    const GapReport rep = xi(p);
    ASSERT_EQ(rep.records.size(), 6u);
    EXPECT_NEAR(rep.opt_value, 1.39, 1e-9);
    EXPECT_NEAR(rep.x_star[0], 2.9, 1e-9);
    EXPECT_NEAR(rep.x_star[1], 1.1, 1e-9);

    const BisRecord& r01 = find_record(rep, bis({0, 1}));
    EXPECT_NEAR(r01.delta, 1.39, 1e-9);
    EXPECT_DOUBLE_EQ(r01.delta_spread, 1.0);
    EXPECT_DOUBLE_EQ(r01.gamma, 0.0);

    const BisRecord& r02 = find_record(rep, bis({0, 2}));
    EXPECT_NEAR(r02.delta, 0.99, 1e-9);

    const BisRecord& r03 = find_record(rep, bis({0, 3}));
    EXPECT_FALSE(r03.cls.consistent);
    EXPECT_NEAR(r03.lambda, 0.55, 1e-9);
    EXPECT_EQ(r03.lambda_k, 3);
    EXPECT_DOUBLE_EQ(r03.delta, 0.0);
    EXPECT_DOUBLE_EQ(r03.gamma, 0.0);

    const BisRecord& r12 = find_record(rep, bis({1, 2}));
    EXPECT_NEAR(r12.gamma, 0.45, 1e-9);
    EXPECT_EQ(r12.gamma_k, 3);
    EXPECT_DOUBLE_EQ(r12.delta, 0.0);

    const BisRecord& r13 = find_record(rep, bis({1, 3}));
    EXPECT_NEAR(r13.delta_raw, 0.18, 1e-9);
    EXPECT_NEAR(r13.delta_spread, 3.2, 1e-6);
    EXPECT_NEAR(r13.delta, 0.05625, 1e-7);
    EXPECT_DOUBLE_EQ(r13.gamma, 0.0);

    const BisRecord& r23 = find_record(rep, bis({2, 3}));
    EXPECT_TRUE(r23.cls.optimal);
    EXPECT_LE(r23.max_gap, 1e-9);

    EXPECT_NEAR(rep.xi, 0.05625, 1e-7);
}

TEST(Xi, LowerBoundOneDimensional) {
    const ProblemInstance p = lower_bound_instance(1, 0.1, {1});
    const GapReport rep = xi(p);
    ASSERT_EQ(rep.records.size(), 3u);

    const BisRecord& upper = find_record(rep, bis({0}));
    EXPECT_TRUE(upper.cls.consistent);
    EXPECT_DOUBLE_EQ(upper.delta, 0.0); // unknown row cuts off x = 1
    EXPECT_NEAR(upper.gamma, 0.3, 1e-9);

    const BisRecord& lower = find_record(rep, bis({1}));
    EXPECT_NEAR(lower.delta, 0.25 / 0.55 + 1.0, 1e-9);

    const BisRecord& unknown = find_record(rep, bis({2}));
    EXPECT_TRUE(unknown.cls.optimal);

    EXPECT_NEAR(rep.xi, 0.3, 1e-9);
}

TEST(Xi, LowerBoundFamilyStaysAboveOneEighth) {
    for (const double eps : {0.02, 0.05, 0.1}) {
        for (const int sign : {1, -1}) {
            const GapReport rep = xi(lower_bound_instance(1, eps, {sign}));
            EXPECT_GE(rep.xi, 0.125 - 1e-9)
                << "eps=" << eps << " sign=" << sign;
        }
    }
}

TEST(Xi, TensorizedLowerBoundLevels) {
    // Default level is loose enough that the hardness scales with eps.
    const double eps = 0.05;
    const GapReport loose = xi(lower_bound_instance(2, eps, {1, -1}));
    ASSERT_EQ(loose.records.size(), 15u);
    EXPECT_NEAR(loose.xi, eps / 2.0, 1e-9);

    // Forcing the one-dimensional level restores the constant floor.
    const GapReport tight = xi(lower_bound_instance(2, eps, {1, -1}, 0.25));
    EXPECT_NEAR(tight.xi, 0.25 - eps / 2.0, 1e-9);
    EXPECT_GE(tight.xi, 0.125);
}

TEST(Xi, InteriorOptimumStillSeparates) {
    // Raising the unknown level until it never binds leaves the optimum at a
    // vertex of the known region; every suboptimal set still separates.
    ProblemInstance p = running_example();
    p.constraints.back().level = 2.0;
    const GapReport rep = xi(p);
    EXPECT_GT(rep.xi, 1e-9);
    const BisRecord& opt = find_record(rep, bis({1, 2}));
    EXPECT_TRUE(opt.cls.optimal);
    EXPECT_LE(opt.max_gap, 1e-9);
}

TEST(Xi, DichotomyAcrossInstances) {
    std::vector<ProblemInstance> instances = {
        running_example(),
        running_example_hard(),
        lower_bound_instance(1, 0.1, {1}),
        lower_bound_instance(1, 0.05, {-1}),
        lower_bound_instance(2, 0.05, {1, -1}),
    };
    ProblemInstance interior = running_example();
    interior.constraints.back().level = 2.0;
    instances.push_back(interior);

    for (const ProblemInstance& p : instances) {
        const GapReport rep = xi(p);
        EXPECT_GT(rep.xi, 1e-9) << p.label;
        for (const BisRecord& rec : rep.records) {
            if (!rec.cls.consistent) {
                EXPECT_GT(rec.lambda, 1e-9) << p.label;
            } else if (!rec.cls.optimal) {
                EXPECT_GT(std::max(rec.delta, rec.gamma), 1e-9) << p.label;
            } else {
                EXPECT_LE(rec.max_gap, 1e-9) << p.label;
            }
        }
    }
}

TEST(Xi, GridScanOracleConfirmsRawGaps) {
    const ProblemInstance p = running_example();
    const GapReport rep = xi(p);
    const double opt = rep.opt_value;
    const int m = static_cast<int>(p.constraints.size());

    for (const BisRecord& rec : rep.records) {
        if (!rec.cls.consistent) continue;
        const std::vector<int>& I = rec.bis.indices;
        const GridScan g = grid_scan(p, I, 2e-4, 2000);

        double v_lp = 0.0;
        if (lp_restricted_value(p, I, v_lp)) {
            ASSERT_TRUE(g.value_point);
            const double delta_lp = std::max(0.0, opt - v_lp);
            const double delta_grid = std::max(0.0, opt - g.best_value);
            EXPECT_NEAR(delta_grid, delta_lp, 1e-3);
            EXPECT_NEAR(rec.delta_raw, delta_lp, 1e-9);
        } else {
            EXPECT_FALSE(g.value_point);
            EXPECT_DOUBLE_EQ(rec.delta_raw, 0.0);
        }

        double best_violation = 0.0;
        for (int k = 0; k < m; ++k) {
            if (std::find(I.begin(), I.end(), k) != I.end()) continue;
            double margin = 0.0;
            ASSERT_TRUE(lp_row_margin(p, I, k, margin));
            ASSERT_TRUE(std::isfinite(g.row_min[static_cast<size_t>(k)]));
            EXPECT_NEAR(g.row_min[static_cast<size_t>(k)], margin, 1e-3);
            best_violation = std::max(best_violation, margin);
        }
        if (best_violation > 0.0) {
            EXPECT_NEAR(rec.gamma_raw, best_violation, 1e-9);
        } else {
            EXPECT_EQ(rec.gamma_k, -1);
        }
    }
}

TEST(NoisyAssociation, SingletonRegionsRecoverTheTruthSet) {
    const ProblemInstance p = running_example();
    const PublicView view = public_view(p);
    std::vector<ConfidenceRegion> regions;
    for (const ConstraintDef& c : p.constraints) regions.push_back(known_region(c.vec));

    const std::vector<Bis> at_opt = noisy_association(view, regions, {2.9, 1.1});
    ASSERT_EQ(at_opt.size(), 1u);
    EXPECT_EQ(at_opt[0], bis({2, 3}));

    // Strictly interior point: fewer than d rows admit equality.
    EXPECT_TRUE(noisy_association(view, regions, {1.0, 0.5}).empty());
}

TEST(NoisyAssociation, WideRegionsAdmitEveryUnknownCombination) {
    const ProblemInstance p = running_example();
    const PublicView view = public_view(p);
    const GramState g = gram_init(2, 1.0, 3, 1);
    const RadiusParams params;
    std::vector<ConfidenceRegion> regions;
    for (int i = 0; i < 3; ++i)
        regions.push_back(known_region(p.constraints[static_cast<size_t>(i)].vec));
    regions.push_back(unknown_region(g, 0, Geometry::BoxL1, params));

    const std::vector<Bis> corner = noisy_association(view, regions, {2.0, 2.0});
    ASSERT_EQ(corner.size(), 3u);
    EXPECT_EQ(corner[0], bis({1, 2}));
    EXPECT_EQ(corner[1], bis({1, 3}));
    EXPECT_EQ(corner[2], bis({2, 3}));

    const std::vector<Bis> edge = noisy_association(view, regions, {1.0, 0.0});
    ASSERT_EQ(edge.size(), 1u);
    EXPECT_EQ(edge[0], bis({0, 3}));
}

TEST(NoisyAssociation, ValidatesShapes) {
    const ProblemInstance p = running_example();
    const PublicView view = public_view(p);
    std::vector<ConfidenceRegion> regions;
    for (const ConstraintDef& c : p.constraints) regions.push_back(known_region(c.vec));
    EXPECT_THROW(noisy_association(view, regions, {1.0}), DimensionMismatch);
    regions.pop_back();
    EXPECT_THROW(noisy_association(view, regions, {1.0, 1.0}), DimensionMismatch);
}

TEST(ArmGaps, SimplexExampleMatchesInducedBandit) {
    const Vec mu = {0.5, std::sqrt(3.0) / 4.0, 0.75};
    const Vec nu = {0.0, 0.0, 1.0};
    const ArmGapTable t = arm_gaps(mu, nu, 0.5);
    ASSERT_EQ(t.arms.size(), 3u);
    EXPECT_EQ(t.best_safe, 0);
    EXPECT_TRUE(t.arms[0].safe);
    EXPECT_TRUE(t.arms[1].safe);
    EXPECT_FALSE(t.arms[2].safe);
    EXPECT_DOUBLE_EQ(t.arms[0].delta, 0.0);
    EXPECT_NEAR(t.arms[1].delta, (2.0 - std::sqrt(3.0)) / 4.0, 1e-12);
    EXPECT_DOUBLE_EQ(t.arms[1].gamma, 0.0);
    EXPECT_NEAR(t.arms[2].gamma, 0.5, 1e-12);
    EXPECT_DOUBLE_EQ(t.arms[2].delta, 0.0); // dominates the safe arms
}

TEST(ArmGaps, NoSafeArmLeavesDeltasZero) {
    const ArmGapTable t = arm_gaps({0.5, 0.6}, {0.9, 0.8}, 0.5);
    EXPECT_EQ(t.best_safe, -1);
    for (const ArmGap& a : t.arms) {
        EXPECT_DOUBLE_EQ(a.delta, 0.0);
        EXPECT_GT(a.gamma, 0.0);
    }
}

TEST(GapReportText, SerializesAndParsesBack) {
    const GapReport rep = xi(running_example());
    const std::string text = gap_report_to_text(rep);
    const DocNode doc = parse_doc(text);
    const DocNode& body = doc_require(doc, "gap_report");
    const DocNode& xi_node = doc_require(body, "xi");
    EXPECT_NEAR(parse_double(xi_node.scalar, "xi"), rep.xi, 1e-12);
    int bis_count = 0;
    for (const auto& e : body.entries)
        if (e.first == "bis") ++bis_count;
    EXPECT_EQ(bis_count, 6);
}
