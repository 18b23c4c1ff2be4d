#pragma once

// Regularized least squares with rank-one Gram updates, the confidence
// radius, and the confidence regions (ellipsoid plus the two box
// relaxations) with exact support functions and vertex lists.

#include <cmath>
#include <cstdint>
#include <vector>

#include "doslb/environment.hpp"
#include "doslb/errors.hpp"
#include "doslb/linalg.hpp"

namespace doslb {

struct RadiusParams {
    double delta = 0.01;
    int U = 1;
    double S = 1.0; // parameter norm bound
    double R = 1.0; // sub-Gaussian scale
};

// Accumulated information: V = lambda*I + sum x x^T plus per-channel
// regressands. n_known leading safety channels are redundant and skipped.
struct GramState {
    double lambda = 1.0;
    int d = 0;
    int n_known = 0;
    int n_unknown = 0;
    Mat V;
    Vec xr;
    std::vector<Vec> xs;
    long t = 0;
    SpdFactorization fac;
};

inline GramState gram_init(int d, double lambda, int n_known, int n_unknown) {
    if (d < 1) throw DimensionMismatch("gram_init: d must be >= 1");
    if (!(lambda > 0.0)) throw OutOfRange("gram_init: lambda must be positive");
    if (n_known < 0 || n_unknown < 0) throw OutOfRange("gram_init: negative channel count");
    GramState g;
    g.lambda = lambda;
    g.d = d;
    g.n_known = n_known;
    g.n_unknown = n_unknown;
    g.V = scaled_identity(d, lambda);
    g.xr.assign(static_cast<size_t>(d), 0.0);
    g.xs.assign(static_cast<size_t>(n_unknown), Vec(static_cast<size_t>(d), 0.0));
    g.fac = spd_sqrt(g.V);
    return g;
}

inline void gram_update(GramState& g, const Vec& x, const Feedback& f) {
    if (static_cast<int>(x.size()) != g.d)
        throw DimensionMismatch("gram_update: action dimension mismatch");
    if (static_cast<int>(f.safety.size()) != g.n_known + g.n_unknown)
        throw DimensionMismatch("gram_update: safety channel count mismatch");
    require_finite(x, "gram_update.x");
    require_finite(f.safety, "gram_update.safety");
    if (!std::isfinite(f.reward)) throw NonFiniteInput("gram_update: reward");
    g.V = rank_one_update(g.V, x);
    for (int j = 0; j < g.d; ++j) g.xr[static_cast<size_t>(j)] += x[static_cast<size_t>(j)] * f.reward;
    for (int i = 0; i < g.n_unknown; ++i) {
        const double s = f.safety[static_cast<size_t>(g.n_known + i)];
        for (int j = 0; j < g.d; ++j)
            g.xs[static_cast<size_t>(i)][static_cast<size_t>(j)] += x[static_cast<size_t>(j)] * s;
    }
    ++g.t;
    g.fac = spd_sqrt(g.V);
}

inline Vec reward_estimate(const GramState& g) { return solve_spd(g.V, g.xr); }

inline Vec unknown_estimate(const GramState& g, int i) {
    if (i < 0 || i >= g.n_unknown) throw OutOfRange("unknown_estimate: index");
    return solve_spd(g.V, g.xs[static_cast<size_t>(i)]);
}

// Squared confidence radius. The returned value is beta; its square root is
// R*sqrt(log((U+1) det(V)^{1/2} det(lambda I)^{-1/2} / delta) / 2) + S*sqrt(lambda).
inline double beta(const GramState& g, const RadiusParams& p) {
    if (!(p.delta > 0.0) || !(p.delta < 1.0)) throw OutOfRange("beta: delta must lie in (0,1)");
    if (p.U < 0) throw OutOfRange("beta: U must be nonnegative");
    const double log_ratio =
        0.5 * (log_det(g.V) - static_cast<double>(g.d) * std::log(g.lambda));
    const double inner = std::log(static_cast<double>(p.U + 1)) - std::log(p.delta) + log_ratio;
    const double sqrt_beta = p.R * std::sqrt(0.5 * inner) + p.S * std::sqrt(g.lambda);
    return sqrt_beta * sqrt_beta;
}

enum class Geometry { Ellipsoid, BoxLinf, BoxL1, Known };

// radius is sqrt(beta) for Ellipsoid and BoxLinf and sqrt(d*beta) for
// BoxL1; Known regions are singletons at center with no shape.
struct ConfidenceRegion {
    Geometry geometry = Geometry::Ellipsoid;
    Vec center;
    SpdFactorization shape;
    double radius = 0.0;
};

inline ConfidenceRegion known_region(const Vec& a) {
    ConfidenceRegion c;
    c.geometry = Geometry::Known;
    c.center = a;
    return c;
}

namespace estdetail {

inline ConfidenceRegion make_region(const GramState& g, Vec center, Geometry geometry,
                                    const RadiusParams& p) {
    if (geometry == Geometry::Known)
        throw ConfigError("region: Known geometry is reserved for singleton constraints");
    ConfidenceRegion c;
    c.geometry = geometry;
    c.center = std::move(center);
    c.shape = g.fac;
    const double b = beta(g, p);
    c.radius = geometry == Geometry::BoxL1 ? std::sqrt(static_cast<double>(g.d) * b)
                                           : std::sqrt(b);
    return c;
}

} // namespace estdetail

inline ConfidenceRegion reward_region(const GramState& g, Geometry geometry,
                                      const RadiusParams& p) {
    return estdetail::make_region(g, reward_estimate(g), geometry, p);
}

inline ConfidenceRegion unknown_region(const GramState& g, int i, Geometry geometry,
                                       const RadiusParams& p) {
    return estdetail::make_region(g, unknown_estimate(g, i), geometry, p);
}

inline double support_min(const ConfidenceRegion& c, const Vec& x) {
    if (x.size() != c.center.size()) throw DimensionMismatch("support_min: dimension");
    const double base = dot(c.center, x);
    switch (c.geometry) {
        case Geometry::Known:
            return base;
        case Geometry::Ellipsoid:
            return base - c.radius * norm2(matvec(c.shape.inv_sqrt, x));
        case Geometry::BoxLinf:
            return base - c.radius * norm1(matvec(c.shape.inv_sqrt, x));
        case Geometry::BoxL1:
            return base - c.radius * norm_inf(matvec(c.shape.inv_sqrt, x));
    }
    return base;
}

inline double support_max(const ConfidenceRegion& c, const Vec& x) {
    if (x.size() != c.center.size()) throw DimensionMismatch("support_max: dimension");
    const double base = dot(c.center, x);
    switch (c.geometry) {
        case Geometry::Known:
            return base;
        case Geometry::Ellipsoid:
            return base + c.radius * norm2(matvec(c.shape.inv_sqrt, x));
        case Geometry::BoxLinf:
            return base + c.radius * norm1(matvec(c.shape.inv_sqrt, x));
        case Geometry::BoxL1:
            return base + c.radius * norm_inf(matvec(c.shape.inv_sqrt, x));
    }
    return base;
}

// Extreme points, in a fixed order: BoxL1 alternates +/- along each
// V^{-1/2} column; BoxLinf walks sign patterns in binary-counter order.
inline std::vector<Vec> vertices(const ConfidenceRegion& c) {
    const int d = static_cast<int>(c.center.size());
    std::vector<Vec> out;
    switch (c.geometry) {
        case Geometry::Known:
            out.push_back(c.center);
            break;
        case Geometry::BoxL1:
            for (int j = 0; j < d; ++j) {
                for (double s : {1.0, -1.0}) {
                    Vec v = c.center;
                    for (int r = 0; r < d; ++r)
                        v[static_cast<size_t>(r)] += s * c.radius * c.shape.inv_sqrt(r, j);
                    out.push_back(std::move(v));
                }
            }
            break;
        case Geometry::BoxLinf: {
            if (d > 12) throw TooManyVertices("vertices: BoxLinf capped at d <= 12");
            const std::uint32_t n = 1u << d;
            for (std::uint32_t b = 0; b < n; ++b) {
                Vec v = c.center;
                for (int r = 0; r < d; ++r)
                    for (int j = 0; j < d; ++j) {
                        const double s = (b >> j) & 1u ? -1.0 : 1.0;
                        v[static_cast<size_t>(r)] += s * c.radius * c.shape.inv_sqrt(r, j);
                    }
                out.push_back(std::move(v));
            }
            break;
        }
        case Geometry::Ellipsoid:
            throw ConfigError("vertices: ellipsoid has no finite vertex list");
    }
    return out;
}

inline bool contains(const ConfidenceRegion& c, const Vec& v) {
    if (v.size() != c.center.size()) throw DimensionMismatch("contains: dimension");
    if (c.geometry == Geometry::Known) {
        double dist = 0.0;
        for (size_t i = 0; i < v.size(); ++i)
            dist = std::max(dist, std::fabs(v[i] - c.center[i]));
        return dist <= 1e-9;
    }
    const Vec z = matvec(c.shape.sqrt, sub(v, c.center));
    double n = 0.0;
    switch (c.geometry) {
        case Geometry::Ellipsoid: n = norm2(z); break;
        case Geometry::BoxLinf: n = norm_inf(z); break;
        case Geometry::BoxL1: n = norm1(z); break;
        case Geometry::Known: break;
    }
    return n <= c.radius + 1e-9 * std::max(1.0, c.radius);
}

// ||x||_{V^{-1}}, the per-round information weight.
inline double vnorm_inv(const GramState& g, const Vec& x) {
    return norm2(matvec(g.fac.inv_sqrt, x));
}

// rho = 2 sqrt(beta) ||x||_{V^{-1}}, times sqrt(d) when a box relaxation is
// active (the box regret inflation).
inline double rho(const GramState& g, const Vec& x, const RadiusParams& p, Geometry geometry) {
    double r = 2.0 * std::sqrt(beta(g, p)) * vnorm_inv(g, x);
    if (geometry == Geometry::BoxLinf || geometry == Geometry::BoxL1)
        r *= std::sqrt(static_cast<double>(g.d));
    return r;
}

} // namespace doslb
