#pragma once

// Interaction protocol simulator: given an action, emit noisy reward and
// per-constraint safety feedback. Randomness is counter-based (value-type
// state, identical (seed, counter) -> identical stream on every platform),
// with Gaussian variates via Box-Muller.

#include <cmath>
#include <cstdint>

#include "doslb/errors.hpp"
#include "doslb/instance.hpp"
#include "doslb/linalg.hpp"

namespace doslb {

struct RngState {
    std::uint64_t seed = 0;
    std::uint64_t counter = 0;
};

namespace rngdetail {

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace rngdetail

inline std::uint64_t rng_next_u64(RngState& s) {
    const std::uint64_t v =
        rngdetail::mix64(s.seed + 0x9E3779B97F4A7C15ULL * (s.counter + 1));
    ++s.counter;
    return v;
}

// Uniform on [0,1), 53 mantissa bits.
inline double rng_uniform01(RngState& s) {
    return static_cast<double>(rng_next_u64(s) >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; consumes two uniforms, u1 shifted into
// (0,1] so the log never sees zero.
inline double rng_normal(RngState& s) {
    const double u1 = (static_cast<double>(rng_next_u64(s) >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng_next_u64(s) >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
}

struct NoiseModel {
    enum class Kind { None, Gaussian, Bernoulli };
    Kind kind = Kind::Gaussian;
    double sigma = 0.31622776601683794; // sqrt(0.1), the default variance 0.1
    bool independent_channels = true;
};

inline NoiseModel noise_none() { return {NoiseModel::Kind::None, 0.0, true}; }

inline NoiseModel noise_gaussian(double sigma, bool independent = true) {
    if (!(sigma >= 0.0)) throw OutOfRange("noise_gaussian: sigma must be nonnegative");
    return {NoiseModel::Kind::Gaussian, sigma, independent};
}

inline NoiseModel noise_bernoulli(bool independent = true) {
    return {NoiseModel::Kind::Bernoulli, 0.0, independent};
}

// Reward plus one safety channel per constraint; the known-constraint
// channels are redundant but emitted anyway.
struct Feedback {
    double reward = 0.0;
    Vec safety;
};

inline Feedback step(const ProblemInstance& p, const Vec& x, const NoiseModel& noise,
                     RngState& rng) {
    if (static_cast<int>(x.size()) != p.d)
        throw DimensionMismatch("step: action dimension mismatch");
    require_finite(x, "step.x");
    const int m = constraint_count(p);
    Feedback f;
    f.reward = dot(p.theta_star, x);
    f.safety.resize(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i)
        f.safety[static_cast<size_t>(i)] = dot(p.constraints[static_cast<size_t>(i)].vec, x);
    switch (noise.kind) {
        case NoiseModel::Kind::None:
            break;
        case NoiseModel::Kind::Gaussian: {
            const double shared = noise.independent_channels ? 0.0 : rng_normal(rng);
            f.reward += noise.sigma * (noise.independent_channels ? rng_normal(rng) : shared);
            for (double& s : f.safety)
                s += noise.sigma * (noise.independent_channels ? rng_normal(rng) : shared);
            break;
        }
        case NoiseModel::Kind::Bernoulli: {
            // Only the reward and the unknown-constraint channels are
            // binarized; known channels are redundant feedback and stay
            // exact (their means can be negative, e.g. simplex rows).
            const double shared = noise.independent_channels ? 0.0 : rng_uniform01(rng);
            const auto draw = [&](double mean) {
                if (mean < -1e-12 || mean > 1.0 + 1e-12)
                    throw BernoulliMeanOutOfRange("step: channel mean outside [0,1]");
                const double u = noise.independent_channels ? rng_uniform01(rng) : shared;
                return u < mean ? 1.0 : 0.0;
            };
            f.reward = draw(f.reward);
            for (int i = 0; i < m; ++i)
                if (p.constraints[static_cast<size_t>(i)].visibility == Visibility::Unknown)
                    f.safety[static_cast<size_t>(i)] = draw(f.safety[static_cast<size_t>(i)]);
            break;
        }
    }
    return f;
}

// Draws an arm index distributed as the simplex point x, after clipping
// tiny negatives and renormalizing.
inline int sample_arm(const Vec& x, RngState& rng) {
    double sum = 0.0;
    for (double v : x) {
        if (v < -1e-12) throw NotOnSimplex("sample_arm: negative coordinate");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw NotOnSimplex("sample_arm: coordinates must sum to 1");
    Vec w(x.size(), 0.0);
    double total = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        w[i] = x[i] > 0.0 ? x[i] : 0.0;
        total += w[i];
    }
    const double u = rng_uniform01(rng) * total;
    double acc = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
        acc += w[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(w.size()) - 1;
}

} // namespace doslb
