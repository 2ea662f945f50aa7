#pragma once
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vab/diffcore.hpp"
#include "vab/linalg.hpp"
#include "vab/sampling.hpp"
#include "vab/tensor.hpp"

// The generative and recognition models: encoder q(z|x) producing Bernoulli
// means over binary latents, decoder p(x|z) producing pixel Bernoulli means,
// a Bernoulli mixture prior p(c) p(z|c) over the latents, the five-term
// evidence lower bound with analytic gradients, the mixture-posterior
// cluster rule, and the bit-packed latent codec.

namespace vab {

/// All Bernoulli means are clamped into [kProbClamp, 1-kProbClamp] before
/// any log; gradients are zeroed where the clamp is active.
inline constexpr double kProbClamp = 1e-7;

inline double clamp_prob(double p) {
    return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
}

struct DenseLayer {
    Tensor w; // in x out
    Tensor b; // out
};

/// Cluster priors pi (simplex) and per-cluster Bernoulli means mu_z, both
/// stored as unconstrained logits.
struct MixtureParams {
    Tensor pi_logits;   // K
    Tensor mu_z_logits; // K x dim_z

    std::size_t num_clusters() const { return pi_logits.numel(); }
    std::size_t latent_dim() const { return mu_z_logits.cols(); }

    /// softmax(pi_logits): strictly positive, sums to 1.
    Tensor pi() const {
        Tensor p = pi_logits;
        double mx = -std::numeric_limits<double>::infinity();
        for (double v : p.data) mx = std::max(mx, v);
        double sum = 0.0;
        for (double& v : p.data) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : p.data) v /= sum;
        return p;
    }

    /// sigmoid(mu_z_logits): per-cluster Bernoulli means, strictly in (0,1).
    Tensor mu_z() const { return sigmoid_forward(mu_z_logits); }
};

/// All trainable parameters. Also used as the carrier for gradients and
/// optimizer moments, which mirror these shapes exactly.
struct VabParams {
    std::vector<DenseLayer> encoder;
    std::vector<DenseLayer> decoder;
    MixtureParams mixture;

    std::size_t input_dim() const { return encoder.front().w.rows(); }
    std::size_t latent_dim() const { return mixture.latent_dim(); }
    std::size_t num_clusters() const { return mixture.num_clusters(); }
};

/// Zero-valued parameter set for the given topology: encoder
/// d -> hidden... -> dim_z, decoder mirrored back to d.
inline VabParams make_params(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                             std::size_t dim_z, std::size_t k) {
    VabParams p;
    std::vector<std::size_t> enc_dims{input_dim};
    enc_dims.insert(enc_dims.end(), hidden.begin(), hidden.end());
    enc_dims.push_back(dim_z);
    for (std::size_t i = 0; i + 1 < enc_dims.size(); ++i)
        p.encoder.push_back({Tensor({enc_dims[i], enc_dims[i + 1]}), Tensor({enc_dims[i + 1]})});
    std::vector<std::size_t> dec_dims(enc_dims.rbegin(), enc_dims.rend());
    for (std::size_t i = 0; i + 1 < dec_dims.size(); ++i)
        p.decoder.push_back({Tensor({dec_dims[i], dec_dims[i + 1]}), Tensor({dec_dims[i + 1]})});
    p.mixture.pi_logits = Tensor({k});
    p.mixture.mu_z_logits = Tensor({k, dim_z});
    return p;
}

inline VabParams zeros_like(const VabParams& p) {
    VabParams z;
    for (const auto& l : p.encoder) z.encoder.push_back({Tensor(l.w.shape), Tensor(l.b.shape)});
    for (const auto& l : p.decoder) z.decoder.push_back({Tensor(l.w.shape), Tensor(l.b.shape)});
    z.mixture.pi_logits = Tensor(p.mixture.pi_logits.shape);
    z.mixture.mu_z_logits = Tensor(p.mixture.mu_z_logits.shape);
    return z;
}

/// Canonical tensor order: encoder W,b per layer, decoder W,b per layer,
/// pi_logits, mu_z_logits. Serialization, Adam and gradient checks all
/// iterate in this order.
inline std::vector<Tensor*> param_tensors(VabParams& p) {
    std::vector<Tensor*> out;
    for (auto& l : p.encoder) {
        out.push_back(&l.w);
        out.push_back(&l.b);
    }
    for (auto& l : p.decoder) {
        out.push_back(&l.w);
        out.push_back(&l.b);
    }
    out.push_back(&p.mixture.pi_logits);
    out.push_back(&p.mixture.mu_z_logits);
    return out;
}

inline std::vector<const Tensor*> param_tensors(const VabParams& p) {
    std::vector<const Tensor*> out;
    for (const auto& l : p.encoder) {
        out.push_back(&l.w);
        out.push_back(&l.b);
    }
    for (const auto& l : p.decoder) {
        out.push_back(&l.w);
        out.push_back(&l.b);
    }
    out.push_back(&p.mixture.pi_logits);
    out.push_back(&p.mixture.mu_z_logits);
    return out;
}

inline std::vector<std::string> param_names(const VabParams& p) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < p.encoder.size(); ++i) {
        out.push_back("encoder." + std::to_string(i) + ".w");
        out.push_back("encoder." + std::to_string(i) + ".b");
    }
    for (std::size_t i = 0; i < p.decoder.size(); ++i) {
        out.push_back("decoder." + std::to_string(i) + ".w");
        out.push_back("decoder." + std::to_string(i) + ".b");
    }
    out.push_back("mixture.pi_logits");
    out.push_back("mixture.mu_z_logits");
    return out;
}

inline std::size_t param_count(const VabParams& p) {
    std::size_t n = 0;
    for (const Tensor* t : param_tensors(p)) n += t->numel();
    return n;
}

namespace detail {

struct MlpCache {
    std::vector<Tensor> pre;  // affine output per layer
    std::vector<Tensor> post; // relu output per hidden layer
};

/// Affine layers with ReLU between them; the final layer stays linear.
inline Tensor mlp_forward(const std::vector<DenseLayer>& layers, const Tensor& x,
                          MlpCache* cache = nullptr) {
    Tensor h = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Tensor pre = affine_forward(h, layers[l].w, layers[l].b);
        if (cache) cache->pre.push_back(pre);
        if (l + 1 < layers.size()) {
            h = relu_forward(pre);
            if (cache) cache->post.push_back(h);
        } else {
            h = std::move(pre);
        }
    }
    return h;
}

/// Backward through the same stack; accumulates into grads, returns the
/// gradient w.r.t. the stack input.
inline Tensor mlp_backward(const std::vector<DenseLayer>& layers, const Tensor& x,
                           const MlpCache& cache, Tensor d_out,
                           std::vector<DenseLayer>& grads) {
    for (std::size_t l = layers.size(); l-- > 0;) {
        const Tensor& input = l == 0 ? x : cache.post[l - 1];
        LayerGrad g = affine_backward(input, layers[l].w, d_out);
        for (std::size_t i = 0; i < g.d_weights.numel(); ++i)
            grads[l].w.data[i] += g.d_weights.data[i];
        for (std::size_t i = 0; i < g.d_bias.numel(); ++i)
            grads[l].b.data[i] += g.d_bias.data[i];
        d_out = l == 0 ? std::move(g.d_input)
                       : relu_backward(cache.pre[l - 1], g.d_input);
    }
    return d_out;
}

} // namespace detail

/// Per-dimension Bernoulli means of q(z|x): encoder MLP with a final sigmoid.
inline Tensor encode(const VabParams& params, const Tensor& x) {
    if (x.cols() != params.input_dim())
        throw DimensionError("encode: input " + x.shape_str() + " does not match model dim " +
                             std::to_string(params.input_dim()));
    return sigmoid_forward(detail::mlp_forward(params.encoder, x));
}

/// Pre-sigmoid encoder output; algebraically the per-dimension Bernoulli
/// log-odds, which is what the concrete relaxation samples from.
inline Tensor encode_logits(const VabParams& params, const Tensor& x) {
    if (x.cols() != params.input_dim())
        throw DimensionError("encode: input " + x.shape_str() + " does not match model dim " +
                             std::to_string(params.input_dim()));
    return detail::mlp_forward(params.encoder, x);
}

/// Pixel Bernoulli means from latent values; accepts hard bits and relaxed
/// samples alike.
inline Tensor decode(const VabParams& params, const Tensor& z_or_y) {
    if (z_or_y.cols() != params.latent_dim())
        throw DimensionError("decode: input " + z_or_y.shape_str() +
                             " does not match latent dim " +
                             std::to_string(params.latent_dim()));
    return sigmoid_forward(detail::mlp_forward(params.decoder, z_or_y));
}

/// Per-row Bernoulli log-likelihood: sum_j x log mu + (1-x) log(1-mu).
inline Tensor log_p_x_given_z(const Tensor& mu_x, const Tensor& x) {
    require_same_shape(mu_x, x, "log_p_x_given_z");
    Tensor out({mu_x.rows()});
    for (std::size_t i = 0; i < mu_x.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < mu_x.cols(); ++j) {
            double m = clamp_prob(mu_x(i, j));
            acc += x(i, j) * std::log(m) + (1.0 - x(i, j)) * std::log(1.0 - m);
        }
        out(i) = acc;
    }
    return out;
}

/// Entry (i,c): Bernoulli log-mass of row i under cluster c's means,
/// evaluated at hard bits or relaxed values.
inline Tensor log_p_z_given_c(const MixtureParams& mixture, const Tensor& z_or_y) {
    if (z_or_y.cols() != mixture.latent_dim())
        throw DimensionError("log_p_z_given_c: input " + z_or_y.shape_str() +
                             " does not match latent dim " +
                             std::to_string(mixture.latent_dim()));
    const std::size_t k = mixture.num_clusters(), dz = mixture.latent_dim();
    Tensor mu = mixture.mu_z();
    // log p(y|c) = sum_j y log mu + (1-y) log(1-mu) = y . d_c + s_c
    Tensor d({k, dz});
    Tensor s({k});
    for (std::size_t c = 0; c < k; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < dz; ++j) {
            double m = clamp_prob(mu(c, j));
            d(c, j) = std::log(m) - std::log(1.0 - m);
            acc += std::log(1.0 - m);
        }
        s(c) = acc;
    }
    Tensor out = linalg::matmul_nt(z_or_y, d);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t c = 0; c < k; ++c) out(i, c) += s(c);
    return out;
}

/// Mixture responsibilities: row c-entry = pi_c p(y|c) / sum_c' pi_c' p(y|c'),
/// computed in log space. Rows sum to 1 and stay strictly positive.
inline Tensor cluster_posterior(const MixtureParams& mixture, const Tensor& z_or_y) {
    Tensor scores = log_p_z_given_c(mixture, z_or_y);
    Tensor log_pi = log_softmax_forward(Tensor({1, mixture.num_clusters()},
                                               mixture.pi_logits.data));
    for (std::size_t i = 0; i < scores.rows(); ++i)
        for (std::size_t c = 0; c < scores.cols(); ++c) scores(i, c) += log_pi(0, c);
    Tensor gamma = log_softmax_forward(scores);
    for (double& v : gamma.data)
        v = std::max(std::exp(v), std::numeric_limits<double>::min());
    return gamma;
}

/// The five expectation terms of the lower bound, each batch-and-draw
/// averaged, plus their sum.
struct ElboBreakdown {
    double recon = 0.0;     //  E log p(x|z)
    double prior_z = 0.0;   //  E log p(z|c)
    double prior_c = 0.0;   //  E log p(c)
    double entropy_z = 0.0; // -E log q(z|x)
    double entropy_c = 0.0; // -E log q(c|z)
    double total = 0.0;
};

/// Gumbel noise pairs for B rows, L draws: shape {L, B, dim_z, 2}, drawn in
/// exactly that order so a fixed seed freezes the noise.
inline Tensor draw_concrete_noise(Rng& rng, std::size_t num_draws, std::size_t batch,
                                  std::size_t dim_z) {
    return sample_gumbel(rng, {num_draws, batch, dim_z, 2});
}

namespace detail {

struct ElboTerms {
    Tensor recon, prior_z, prior_c, entropy_z, entropy_c; // each [B], summed over draws
};

inline void check_finite_term(double v, const char* name) {
    if (!std::isfinite(v))
        throw TrainingError(std::string("non-finite ELBO term: ") + name);
}

/// Shared forward/backward evaluation. When grads is non-null the gradient
/// of the batch-and-draw mean of the five-term sum is accumulated into it.
/// with_mixture=false swaps the mixture prior for a fixed uniform
/// Bernoulli(0.5) prior and drops both class terms (used for pretraining).
inline ElboBreakdown elbo_core(const VabParams& params, const Tensor& x, const Tensor& noise,
                               double tau, bool with_mixture, VabParams* grads) {
    if (!(tau > 0.0)) throw ParameterError("elbo: temperature must be positive");
    const std::size_t batch = x.rows();
    const std::size_t dz = params.latent_dim();
    const std::size_t k = params.num_clusters();
    const std::size_t num_draws = noise.shape.at(0);
    require_shape(noise, {num_draws, batch, dz, 2}, "elbo noise");
    if (num_draws == 0) throw ParameterError("elbo: need at least one draw");

    const double scale = 1.0 / (static_cast<double>(batch) * static_cast<double>(num_draws));

    // Encoder runs once; the latent logits are shared by all draws.
    detail::MlpCache enc_cache;
    Tensor a = detail::mlp_forward(params.encoder, x, grads ? &enc_cache : nullptr);
    Tensor mu_q = sigmoid_forward(a);

    // Mixture tables.
    Tensor mu_z, d_table, s_table, log_pi, pi;
    if (with_mixture) {
        mu_z = params.mixture.mu_z();
        d_table = Tensor({k, dz});
        s_table = Tensor({k});
        for (std::size_t c = 0; c < k; ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j < dz; ++j) {
                double m = clamp_prob(mu_z(c, j));
                d_table(c, j) = std::log(m) - std::log(1.0 - m);
                acc += std::log(1.0 - m);
            }
            s_table(c) = acc;
        }
        log_pi = log_softmax_forward(Tensor({1, k}, params.mixture.pi_logits.data));
        pi = params.mixture.pi();
    }

    ElboBreakdown sums; // accumulated over draws and batch
    Tensor d_a_accum = grads ? Tensor(a.shape) : Tensor();

    for (std::size_t l = 0; l < num_draws; ++l) {
        const double* eps = noise.data.data() + l * batch * dz * 2;

        Tensor y({batch, dz});
        for (std::size_t i = 0; i < batch; ++i)
            for (std::size_t j = 0; j < dz; ++j) {
                const double* pair = eps + (i * dz + j) * 2;
                y(i, j) = binary_concrete(a(i, j), pair[0], pair[1], tau);
            }

        detail::MlpCache dec_cache;
        Tensor u = detail::mlp_forward(params.decoder, y, grads ? &dec_cache : nullptr);
        Tensor mu_x = sigmoid_forward(u);

        // recon
        for (std::size_t i = 0; i < batch; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < x.cols(); ++j) {
                double m = clamp_prob(mu_x(i, j));
                acc += x(i, j) * std::log(m) + (1.0 - x(i, j)) * std::log(1.0 - m);
            }
            sums.recon += acc;
        }

        // entropy_z: -log q(y|x) with clamped encoder means
        for (std::size_t i = 0; i < batch; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < dz; ++j) {
                double m = clamp_prob(mu_q(i, j));
                acc += y(i, j) * std::log(m) + (1.0 - y(i, j)) * std::log(1.0 - m);
            }
            sums.entropy_z -= acc;
        }

        Tensor gamma; // responsibilities for this draw
        if (with_mixture) {
            Tensor scores = linalg::matmul_nt(y, d_table); // B x K
            for (std::size_t i = 0; i < batch; ++i)
                for (std::size_t c = 0; c < k; ++c) scores(i, c) += s_table(c) + log_pi(0, c);
            Tensor log_gamma = log_softmax_forward(scores);
            gamma = log_gamma;
            for (double& v : gamma.data) v = std::exp(v);
            for (std::size_t i = 0; i < batch; ++i) {
                for (std::size_t c = 0; c < k; ++c) {
                    double g = gamma(i, c);
                    if (g <= 0.0) continue;
                    double log_b = scores(i, c) - log_pi(0, c);
                    sums.prior_z += g * log_b;
                    sums.prior_c += g * log_pi(0, c);
                    sums.entropy_c -= g * log_gamma(i, c);
                }
            }
        } else {
            // Fixed uniform prior over bits: log p(y) = dz * log(1/2) at any
            // fractional y, and the class terms vanish.
            sums.prior_z += static_cast<double>(batch) * static_cast<double>(dz) *
                            std::log(0.5);
        }

        if (grads) {
            // Decoder path: d/du of recon is (x - mu_x), zero where clamped.
            Tensor d_u({batch, x.cols()});
            for (std::size_t i = 0; i < d_u.numel(); ++i) {
                double m = mu_x.data[i];
                d_u.data[i] = (m <= kProbClamp || m >= 1.0 - kProbClamp)
                                  ? 0.0
                                  : scale * (x.data[i] - m);
            }
            Tensor d_y =
                detail::mlp_backward(params.decoder, y, dec_cache, std::move(d_u),
                                     grads->decoder);

            // Mixture path: the three class terms collapse to the mixture
            // marginal log-sum-exp, whose y-gradient is gamma . d_table.
            if (with_mixture) {
                Tensor d_y_mix = linalg::matmul(gamma, d_table);
                for (std::size_t i = 0; i < d_y.numel(); ++i)
                    d_y.data[i] += scale * d_y_mix.data[i];

                // pi_logits: sum_i (gamma - pi)
                for (std::size_t i = 0; i < batch; ++i)
                    for (std::size_t c = 0; c < k; ++c)
                        grads->mixture.pi_logits(c) += scale * (gamma(i, c) - pi(c));

                // mu_z_logits: sum_i gamma_ic (y_ij - mu_z_cj), clamp-masked
                Tensor gty = linalg::matmul_tn(gamma, y); // K x dz
                Tensor gcol({k});
                for (std::size_t i = 0; i < batch; ++i)
                    for (std::size_t c = 0; c < k; ++c) gcol(c) += gamma(i, c);
                for (std::size_t c = 0; c < k; ++c)
                    for (std::size_t j = 0; j < dz; ++j) {
                        double m = mu_z(c, j);
                        if (m <= kProbClamp || m >= 1.0 - kProbClamp) continue;
                        grads->mixture.mu_z_logits(c, j) +=
                            scale * (gty(c, j) - gcol(c) * m);
                    }
            }

            // entropy_z contributes -logit(mu_q) through y ...
            for (std::size_t i = 0; i < batch; ++i)
                for (std::size_t j = 0; j < dz; ++j) {
                    double m = clamp_prob(mu_q(i, j));
                    d_y(i, j) -= scale * (std::log(m) - std::log(1.0 - m));
                }

            // ... and -(y - mu_q) directly through the encoder means.
            for (std::size_t i = 0; i < batch; ++i)
                for (std::size_t j = 0; j < dz; ++j) {
                    double dy_da;
                    double yv = y(i, j);
                    if (yv <= kComponentClamp || yv >= 1.0 - kComponentClamp)
                        dy_da = 0.0; // relaxation saturated
                    else
                        dy_da = yv * (1.0 - yv) / tau;
                    double m = mu_q(i, j);
                    double direct = (m <= kProbClamp || m >= 1.0 - kProbClamp)
                                        ? 0.0
                                        : -scale * (yv - m);
                    d_a_accum(i, j) += d_y(i, j) * dy_da + direct;
                }
        }
    }

    if (grads)
        detail::mlp_backward(params.encoder, x, enc_cache, std::move(d_a_accum),
                             grads->encoder);

    ElboBreakdown out;
    out.recon = sums.recon * scale;
    out.prior_z = sums.prior_z * scale;
    out.prior_c = sums.prior_c * scale;
    out.entropy_z = sums.entropy_z * scale;
    out.entropy_c = sums.entropy_c * scale;
    check_finite_term(out.recon, "recon");
    check_finite_term(out.prior_z, "prior_z");
    check_finite_term(out.prior_c, "prior_c");
    check_finite_term(out.entropy_z, "entropy_z");
    check_finite_term(out.entropy_c, "entropy_c");
    out.total = out.recon + out.prior_z + out.prior_c + out.entropy_z + out.entropy_c;
    return out;
}

} // namespace detail

/// Evaluate the lower bound on a batch with caller-provided noise (frozen
/// noise is how gradient checks and estimator tests stay deterministic).
inline ElboBreakdown elbo_eval(const VabParams& params, const Tensor& x, const Tensor& noise,
                               double tau, bool with_mixture = true) {
    return detail::elbo_core(params, x, noise, tau, with_mixture, nullptr);
}

/// Evaluate the lower bound, drawing L noise samples per row from rng.
inline ElboBreakdown elbo(const VabParams& params, const Tensor& x, Rng& rng, double tau,
                          std::size_t num_draws) {
    Tensor noise = draw_concrete_noise(rng, num_draws, x.rows(), params.latent_dim());
    return elbo_eval(params, x, noise, tau);
}

/// Lower bound plus the gradient of its batch-mean w.r.t. every parameter
/// group. Gradients accumulate into `grads` (zeroed by the caller).
inline ElboBreakdown elbo_with_grad(const VabParams& params, const Tensor& x,
                                    const Tensor& noise, double tau, VabParams& grads,
                                    bool with_mixture = true) {
    return detail::elbo_core(params, x, noise, tau, with_mixture, &grads);
}

/// Deterministic hardening of encoder means: 1 iff mean >= 0.5.
inline Tensor harden_means(const Tensor& means) {
    Tensor out = means;
    for (double& v : out.data) v = v >= 0.5 ? 1.0 : 0.0;
    return out;
}

/// Inference-time cluster assignment: encode, threshold at 0.5, take the
/// argmax responsibility. Ties break toward the smallest index. No sampling,
/// so repeated calls are identical.
inline std::vector<int> assign_cluster(const VabParams& params, const Tensor& x) {
    Tensor bits = harden_means(encode(params, x));
    Tensor gamma = cluster_posterior(params.mixture, bits);
    std::vector<int> out(x.rows());
    for (std::size_t i = 0; i < gamma.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < gamma.cols(); ++c)
            if (gamma(i, c) > gamma(i, best)) best = c;
        out[i] = static_cast<int>(best);
    }
    return out;
}

/// The compressed artifact shipped from vendor to consumer.
struct LatentCode {
    std::vector<std::uint8_t> bits; // one 0/1 entry per latent dimension
    std::size_t dim = 0;
};

/// Little-endian bit order within each byte, zero-padded final byte.
inline std::vector<std::uint8_t> pack_bits(const LatentCode& code) {
    std::vector<std::uint8_t> bytes((code.dim + 7) / 8, 0);
    for (std::size_t j = 0; j < code.dim; ++j)
        if (code.bits[j]) bytes[j >> 3] |= static_cast<std::uint8_t>(1u << (j & 7));
    return bytes;
}

inline LatentCode unpack_bits(const std::vector<std::uint8_t>& bytes, std::size_t dim) {
    std::size_t need = (dim + 7) / 8;
    if (bytes.size() < need)
        throw TruncationError("unpack_bits: need " + std::to_string(need) + " bytes for " +
                              std::to_string(dim) + " bits, got " +
                              std::to_string(bytes.size()));
    LatentCode code;
    code.dim = dim;
    code.bits.resize(dim);
    for (std::size_t j = 0; j < dim; ++j)
        code.bits[j] = (bytes[j >> 3] >> (j & 7)) & 1u;
    return code;
}

} // namespace vab
