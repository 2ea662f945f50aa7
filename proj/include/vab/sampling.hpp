#pragma once
#include <array>
#include <cmath>
#include <cstdint>

#include "vab/tensor.hpp"

// Seeded randomness plus the Gumbel-Softmax relaxation of categorical
// sampling, including the two-class (binary concrete) specialization used
// for each Bernoulli latent dimension.

namespace vab {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}
} // namespace detail

/// Counter-seeded xoshiro256** stream. Identical seed gives a bit-exact
/// identical sample sequence; the standard library engines are avoided so
/// streams stay portable across implementations. Cheap to copy, which is
/// how tests freeze noise.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(seed) { reseed(seed); }

    std::uint64_t next_u64() {
        auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
        std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Modulo bias is irrelevant at these sizes.
    std::uint64_t bounded(std::uint64_t n) { return next_u64() % n; }

    /// Deterministic substream keyed by (a, b) on top of the original seed.
    /// Used to give every (epoch, batch) its own noise so batch order and
    /// parallelism cannot change results.
    Rng derive(std::uint64_t a, std::uint64_t b) const {
        std::uint64_t mix = key_;
        detail::splitmix64(mix);
        mix ^= 0x6a09e667f3bcc908ull + a;
        detail::splitmix64(mix);
        mix ^= 0xbb67ae8584caa73bull + b;
        return Rng(detail::splitmix64(mix));
    }

    std::uint64_t key() const { return key_; }
    std::array<std::uint64_t, 4> state() const { return s_; }
    void restore(std::uint64_t key, const std::array<std::uint64_t, 4>& state) {
        key_ = key;
        s_ = state;
    }

private:
    void reseed(std::uint64_t seed) {
        for (auto& w : s_) w = detail::splitmix64(seed);
        // xoshiro must not start at the all-zero state
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    std::uint64_t key_;
    std::array<std::uint64_t, 4> s_;
};

/// A temperature-relaxed sample: categorical values sum to 1, binary values
/// are per-dimension concrete relaxations.
struct RelaxedSample {
    enum class Kind { Binary, Categorical };
    Tensor values;
    double temperature = 1.0;
    Kind kind = Kind::Binary;
};

inline constexpr double kUniformClamp = 1e-12;
inline constexpr double kComponentClamp = 1e-15;

/// g = -log(-log(u)) with u clamped into [1e-12, 1-1e-12] so the transform
/// never produces an infinity.
inline double gumbel_from_uniform(double u) {
    u = std::min(std::max(u, kUniformClamp), 1.0 - kUniformClamp);
    return -std::log(-std::log(u));
}

inline double gumbel_draw(Rng& rng) { return gumbel_from_uniform(rng.uniform()); }

inline Tensor sample_gumbel(Rng& rng, std::vector<std::size_t> shape) {
    Tensor out(std::move(shape));
    for (double& v : out.data) v = gumbel_draw(rng);
    return out;
}

/// y_i = exp((log mu_i + eps_i)/tau) / sum_j exp((log mu_j + eps_j)/tau),
/// computed with max subtraction. Components are clamped into
/// (0, 1) exclusive; the sum stays within 1e-12 of 1.
inline RelaxedSample gumbel_softmax(const Tensor& log_mu, const Tensor& eps, double tau) {
    if (!(tau > 0.0)) throw ParameterError("gumbel_softmax: temperature must be positive");
    require_same_shape(log_mu, eps, "gumbel_softmax");
    RelaxedSample s;
    s.temperature = tau;
    s.kind = RelaxedSample::Kind::Categorical;
    s.values = Tensor(log_mu.shape);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < log_mu.numel(); ++i) {
        s.values.data[i] = (log_mu.data[i] + eps.data[i]) / tau;
        mx = std::max(mx, s.values.data[i]);
    }
    double sum = 0.0;
    for (double& v : s.values.data) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : s.values.data)
        v = std::min(std::max(v / sum, kComponentClamp), 1.0 - kComponentClamp);
    return s;
}

/// Two-class specialization: component 0 of gumbel_softmax over logits
/// (logit, 0) with noise pair (eps0, eps1), i.e. a logistic of the shifted
/// logit. Output strictly inside (0, 1).
inline double binary_concrete(double logit, double eps0, double eps1, double tau) {
    if (!(tau > 0.0)) throw ParameterError("binary_concrete: temperature must be positive");
    double t = (logit + eps0 - eps1) / tau;
    double y;
    if (t >= 0.0) {
        y = 1.0 / (1.0 + std::exp(-t));
    } else {
        double e = std::exp(t);
        y = e / (1.0 + e);
    }
    return std::min(std::max(y, kComponentClamp), 1.0 - kComponentClamp);
}

/// Discrete limit of a relaxed sample. Categorical: one-hot at the argmax.
/// Binary: threshold each value at 0.5, ties going to 1.
inline Tensor harden(const RelaxedSample& s) {
    Tensor out(s.values.shape);
    if (s.kind == RelaxedSample::Kind::Categorical) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < s.values.numel(); ++i)
            if (s.values.data[i] > s.values.data[best]) best = i;
        out.data[best] = 1.0;
    } else {
        for (std::size_t i = 0; i < s.values.numel(); ++i)
            out.data[i] = s.values.data[i] >= 0.5 ? 1.0 : 0.0;
    }
    return out;
}

} // namespace vab
