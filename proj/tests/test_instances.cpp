#include <gtest/gtest.h>

#include <cmath>

#include "doslb/instance.hpp"

using namespace doslb;

TEST(RunningExample, ShapeAndOptimum) {
    const ProblemInstance p = running_example();
    EXPECT_EQ(p.d, 2);
    EXPECT_EQ(known_count(p), 3);
    EXPECT_EQ(unknown_count(p), 1);
    const NoiselessSolution sol = solve_noiseless(p);
    EXPECT_NEAR(sol.x_star[0], 2.9, 1e-9);
    EXPECT_NEAR(sol.x_star[1], 1.1, 1e-9);
    EXPECT_NEAR(sol.value, 1.39, 1e-9);
}

TEST(RunningExample, ValidateReport) {
    const AssumptionReport rep = validate(running_example());
    EXPECT_NEAR(rep.L, 4.0, 1e-9);
    EXPECT_FALSE(rep.satisfies_a1);
    EXPECT_NEAR(rep.S, std::sqrt(1.01), 1e-12);
    EXPECT_FALSE(rep.satisfies_a2);
    EXPECT_NEAR(rep.suggested_lambda, 16.0, 1e-9);
    EXPECT_FALSE(rep.degenerate);
    EXPECT_NEAR(rep.opt_value, 1.39, 1e-9);
}

TEST(RunningExample, HardVariantDropsUnknownLevel) {
    const ProblemInstance p = running_example_hard();
    EXPECT_DOUBLE_EQ(p.constraints.back().level, 0.1);
    const NoiselessSolution sol = solve_noiseless(p);
    // x2 <= 0.2 and x1 + x2 = 4 bind: optimum (3.8, 0.2).
    EXPECT_NEAR(sol.x_star[0], 3.8, 1e-9);
    EXPECT_NEAR(sol.x_star[1], 0.2, 1e-9);
    EXPECT_NEAR(sol.value, 0.58, 1e-9);
}

TEST(RunningExample, PublicViewHidesUnknownVectors) {
    const PublicView v = public_view(running_example());
    EXPECT_EQ(v.known.size(), 3u);
    ASSERT_EQ(v.unknown_levels.size(), 1u);
    EXPECT_DOUBLE_EQ(v.unknown_levels[0], 0.55);
    EXPECT_EQ(known_halfspaces(v).size(), 7u);
}

TEST(RunningExample, TriangleVertices) {
    // Drop the box: the three known rows alone cut out the triangle.
    std::vector<Halfspace> rows;
    for (const ConstraintDef& c : running_example().constraints)
        if (c.visibility == Visibility::Known) rows.push_back({c.vec, c.level});
    const std::vector<Vec> verts = enumerate_polytope_vertices(rows, 2);
    ASSERT_EQ(verts.size(), 3u);
    double max_norm = 0.0;
    for (const Vec& v : verts) max_norm = std::max(max_norm, norm2(v));
    EXPECT_NEAR(max_norm, 4.0, 1e-9);
}

TEST(LowerBound, OneDimensionalPins) {
    const ProblemInstance p = lower_bound_instance(1, 0.1, {1});
    EXPECT_EQ(known_count(p), 2);
    EXPECT_EQ(unknown_count(p), 1);
    EXPECT_NEAR(p.constraints.back().vec[0], 0.55, 1e-15);
    EXPECT_DOUBLE_EQ(p.constraints.back().level, 0.25);
    const NoiselessSolution sol = solve_noiseless(p);
    EXPECT_NEAR(sol.x_star[0], 0.25 / 0.55, 1e-9);

    const AssumptionReport rep = validate(p);
    EXPECT_NEAR(rep.L, 1.0, 1e-12);
    EXPECT_NEAR(rep.S, 1.0, 1e-12);
    EXPECT_TRUE(rep.satisfies_a1);
    EXPECT_TRUE(rep.satisfies_a2);
    EXPECT_DOUBLE_EQ(rep.suggested_lambda, 1.0);
}

TEST(LowerBound, OriginFeasibleUnderBothSigns) {
    for (int s : {1, -1}) {
        const ProblemInstance p = lower_bound_instance(1, 0.05, {s});
        for (const ConstraintDef& c : p.constraints) EXPECT_LE(0.0, c.level);
    }
}

TEST(LowerBound, TensorizedLevelAndOverride) {
    const ProblemInstance p2 = lower_bound_instance(2, 0.05, {1, -1});
    EXPECT_DOUBLE_EQ(p2.constraints[4].level, 0.5);
    EXPECT_DOUBLE_EQ(p2.constraints[5].level, 0.5);
    EXPECT_NEAR(p2.constraints[4].vec[0], 0.525, 1e-15);
    EXPECT_NEAR(p2.constraints[5].vec[1], 0.475, 1e-15);
    const ProblemInstance p2f = lower_bound_instance(2, 0.05, {1, -1}, 0.25);
    EXPECT_DOUBLE_EQ(p2f.constraints[4].level, 0.25);
}

TEST(LowerBound, RejectsBadArguments) {
    EXPECT_THROW(lower_bound_instance(1, 0.0, {1}), InvalidEps);
    EXPECT_THROW(lower_bound_instance(1, 0.2, {1}), InvalidEps);
    EXPECT_THROW(lower_bound_instance(2, 0.05, {1}), InvalidInstance);
    EXPECT_THROW(lower_bound_instance(1, 0.05, {2}), InvalidInstance);
}

TEST(SimplexMab, SpecialCaseOptimumIsAMixture) {
    const Vec mu = {0.5, std::sqrt(3.0) / 4.0, 0.75};
    const ProblemInstance p = simplex_mab_instance(mu, {0.0, 0.0, 1.0}, 0.5);
    EXPECT_EQ(known_count(p), 5);
    EXPECT_EQ(unknown_count(p), 1);
    const NoiselessSolution sol = solve_noiseless(p);
    EXPECT_NEAR(sol.x_star[0], 0.5, 1e-9);
    EXPECT_NEAR(sol.x_star[1], 0.0, 1e-9);
    EXPECT_NEAR(sol.x_star[2], 0.5, 1e-9);
    EXPECT_NEAR(sol.value, 0.625, 1e-9);
}

TEST(SimplexMab, BasisVectorsLieInKnownDomain) {
    const ProblemInstance p = simplex_mab_instance({0.2, 0.4, 0.6}, {0.1, 0.2, 0.3}, 0.5);
    const std::vector<Halfspace> rows = known_halfspaces(p);
    for (int j = 0; j < 3; ++j) {
        Vec e(3, 0.0);
        e[static_cast<size_t>(j)] = 1.0;
        for (const Halfspace& h : rows) EXPECT_LE(dot(h.normal, e), h.offset + 1e-12);
    }
}

TEST(SimplexMab, ElevatedArmIsOptimal) {
    const ProblemInstance p =
        simplex_mab_instance({0.2, 0.2, 0.6, 0.2}, {0.0, 0.0, 0.0, 0.0}, 0.3);
    const NoiselessSolution sol = solve_noiseless(p);
    EXPECT_NEAR(sol.x_star[2], 1.0, 1e-9);
    EXPECT_NEAR(sol.value, 0.6, 1e-9);
}

TEST(SimplexMab, ZeroParametersAreDegenerate) {
    const ProblemInstance p = simplex_mab_instance({0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, 0.5);
    const AssumptionReport rep = validate(p);
    EXPECT_NEAR(rep.opt_value, 0.0, 1e-12);
    EXPECT_TRUE(rep.degenerate);
}

TEST(SimplexMab, RejectsOutOfRangeParameters) {
    EXPECT_THROW(simplex_mab_instance({1.2}, {0.0}, 0.5), OutOfRange);
    EXPECT_THROW(simplex_mab_instance({0.5}, {-0.1}, 0.5), OutOfRange);
    EXPECT_THROW(simplex_mab_instance({0.5, 0.5}, {0.0}, 0.5), DimensionMismatch);
}

TEST(Validate, UnboundedKnownPolytopeRejected) {
    ProblemInstance p;
    p.d = 2;
    p.theta_star = {1.0, 0.0};
    p.constraints = {{{1.0, 0.0}, 1.0, Visibility::Known}};
    EXPECT_THROW(validate(p), UnboundedDomain);
}

TEST(Validate, EmptyKnownPolytopeRejected) {
    ProblemInstance p;
    p.d = 1;
    p.theta_star = {1.0};
    p.constraints = {{{1.0}, -1.0, Visibility::Known}, {{-1.0}, 0.0, Visibility::Known}};
    EXPECT_THROW(validate(p), InvalidInstance);
}

TEST(Validate, StructuralChecks) {
    ProblemInstance p = running_example();
    p.theta_star.push_back(0.0);
    EXPECT_THROW(check_instance(p), InvalidInstance);

    ProblemInstance q = running_example();
    std::swap(q.constraints[2], q.constraints[3]);
    EXPECT_THROW(check_instance(q), InvalidInstance);

    ProblemInstance r = running_example();
    r.constraints[0].level = std::nan("");
    EXPECT_THROW(check_instance(r), NonFiniteInput);
}

TEST(InstanceText, RoundTripIsBitExact) {
    const ProblemInstance cases[] = {
        running_example(),
        running_example_hard(),
        lower_bound_instance(2, 0.05, {1, -1}),
        simplex_mab_instance({0.5, std::sqrt(3.0) / 4.0, 0.75}, {0.0, 0.0, 1.0}, 0.5),
    };
    for (const ProblemInstance& p : cases) {
        const std::string text = instance_to_text(p);
        const ProblemInstance back = instance_from_text(text);
        EXPECT_TRUE(back == p) << p.label;
        EXPECT_EQ(instance_to_text(back), text);
    }
}

TEST(InstanceText, MalformedDocumentsRejected) {
    EXPECT_THROW(instance_from_text("d 2\n"), ParseError);
    EXPECT_THROW(instance_from_text("instance { d 2 }\n"), ParseError);
    EXPECT_THROW(
        instance_from_text("instance { d 1 theta_star [ 1 ] constraint { visibility maybe "
                           "vec [ 1 ] level 0 } }\n"),
        ParseError);
}
