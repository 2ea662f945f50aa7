#pragma once
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "vab/baselines.hpp"
#include "vab/data.hpp"
#include "vab/metrics.hpp"
#include "vab/model.hpp"
#include "vab/sampling.hpp"

// Adam optimization with the stepped learning-rate schedule, the seeded
// epoch/minibatch loop, temperature annealing, and checkpoint persistence.

namespace vab {

struct TrainConfig {
    std::size_t dim_z = 28;
    std::size_t num_clusters = 10;
    std::vector<std::size_t> hidden = {500, 500, 2000};
    std::size_t input_dim = 1024; // set from the data pipeline by callers
    std::size_t epochs = 100;
    std::size_t batch_size = 100;
    std::size_t num_draws = 1; // relaxed samples per row per step

    double lr0 = 0.001;
    double lr_decay = 0.9;
    std::size_t lr_every = 10;
    double lr_min = 0.0002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    double tau0 = 1.0;
    double tau_min = 0.3;
    double tau_anneal = 0.97; // per-epoch multiplier; 1.0 keeps tau fixed

    std::uint64_t seed = 1;
    std::size_t pretrain_epochs = 15; // plain autoencoder epochs before the mixture joins

    // Data pipeline settings, carried in the checkpoint so evaluation can
    // reproduce the exact preprocessing.
    bool pad = true;
    bool stochastic_binarize = false;
    double binarize_threshold = 0.5;
    std::size_t pixels_per_image = 1024;

    std::size_t eval_every = 1; // train ACC/PSNR cadence in the trace; 0 disables

    bool operator==(const TrainConfig&) const = default;

    void validate() const {
        if (dim_z == 0) throw ConfigError("dim_z must be positive");
        if (num_clusters == 0) throw ConfigError("num_clusters must be positive");
        if (input_dim == 0) throw ConfigError("input_dim must be positive");
        if (epochs == 0) throw ConfigError("epochs must be positive");
        if (batch_size == 0) throw ConfigError("batch_size must be positive");
        if (num_draws == 0) throw ConfigError("num_draws must be positive");
        if (!(lr_min > 0.0) || !(lr_min <= lr0))
            throw ConfigError("learning rates must satisfy 0 < lr_min <= lr0");
        if (!(lr_decay > 0.0) || !(lr_decay < 1.0))
            throw ConfigError("lr_decay must lie in (0, 1)");
        if (lr_every == 0) throw ConfigError("lr_every must be positive");
        if (!(tau_min > 0.0) || !(tau0 >= tau_min))
            throw ConfigError("temperatures must satisfy 0 < tau_min <= tau0");
        if (!(tau_anneal > 0.0) || !(tau_anneal <= 1.0))
            throw ConfigError("tau_anneal must lie in (0, 1]");
        if (!(binarize_threshold >= 0.0) || !(binarize_threshold <= 1.0))
            throw ConfigError("binarize_threshold must lie in [0, 1]");
        if (pixels_per_image == 0) throw ConfigError("pixels_per_image must be positive");
    }
};

/// max(lr_min, lr0 * decay^floor(epoch / lr_every))
inline double learning_rate(const TrainConfig& config, std::size_t epoch) {
    double lr = config.lr0 *
                std::pow(config.lr_decay, static_cast<double>(epoch / config.lr_every));
    return std::max(config.lr_min, lr);
}

/// max(tau_min, tau0 * anneal^epoch)
inline double temperature(const TrainConfig& config, std::size_t epoch) {
    double tau = config.tau0 * std::pow(config.tau_anneal, static_cast<double>(epoch));
    return std::max(config.tau_min, tau);
}

struct AdamState {
    VabParams m;
    VabParams v;
    std::uint64_t t = 0;
};

inline AdamState make_adam_state(const VabParams& params) {
    return AdamState{zeros_like(params), zeros_like(params), 0};
}

/// Standard bias-corrected Adam minimizer step. The caller passes the
/// gradient of the quantity being minimized.
inline void adam_step(VabParams& params, const VabParams& grads, AdamState& state, double lr,
                      const TrainConfig& config) {
    state.t += 1;
    const double b1 = config.beta1, b2 = config.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.t));

    std::vector<Tensor*> p = param_tensors(params);
    std::vector<const Tensor*> g = param_tensors(grads);
    std::vector<Tensor*> m = param_tensors(state.m);
    std::vector<Tensor*> v = param_tensors(state.v);
    std::vector<std::string> names = param_names(params);

    for (std::size_t k = 0; k < p.size(); ++k) {
        if (!g[k]->all_finite())
            throw TrainingError("non-finite gradient in " + names[k]);
        for (std::size_t i = 0; i < p[k]->numel(); ++i) {
            double gi = g[k]->data[i];
            double mi = m[k]->data[i] = b1 * m[k]->data[i] + (1.0 - b1) * gi;
            double vi = v[k]->data[i] = b2 * v[k]->data[i] + (1.0 - b2) * gi * gi;
            double mhat = mi / corr1;
            double vhat = vi / corr2;
            p[k]->data[i] -= lr * mhat / (std::sqrt(vhat) + config.adam_eps);
        }
    }
}

/// Glorot-uniform weights, zero biases, uniform cluster prior, cluster means
/// drawn mildly away from 0.5.
inline VabParams init_params(const TrainConfig& config, Rng& rng) {
    VabParams p = make_params(config.input_dim, config.hidden, config.dim_z,
                              config.num_clusters);
    auto fill_layers = [&](std::vector<DenseLayer>& layers) {
        for (auto& l : layers) {
            double bound = std::sqrt(6.0 / static_cast<double>(l.w.rows() + l.w.cols()));
            for (double& v : l.w.data) v = rng.uniform(-bound, bound);
        }
    };
    fill_layers(p.encoder);
    fill_layers(p.decoder);
    for (double& v : p.mixture.mu_z_logits.data) v = rng.uniform(-1.0, 1.0);
    return p;
}

struct Checkpoint {
    VabParams params;
    AdamState adam;
    std::uint64_t epoch = 0; // completed epochs
    TrainConfig config;
    std::uint64_t rng_key = 0;
    std::array<std::uint64_t, 4> rng_state{};
};

struct EpochStats {
    std::size_t epoch = 0;
    double elbo = 0.0; // row-weighted mean of batch ELBO totals
    double acc = std::numeric_limits<double>::quiet_NaN();
    double psnr_db = std::numeric_limits<double>::quiet_NaN();
    double lr = 0.0;
    double tau = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<EpochStats> trace;
    bool aborted = false;
    std::string abort_reason;
};

/// Deterministic inference over large batches without holding every
/// activation at once.
inline std::vector<int> assign_clusters_chunked(const VabParams& params, const Tensor& images,
                                                std::size_t chunk = 1000) {
    std::vector<int> out;
    out.reserve(images.rows());
    for (std::size_t start = 0; start < images.rows(); start += chunk) {
        std::size_t count = std::min(chunk, images.rows() - start);
        Tensor block({count, images.cols()});
        std::copy_n(images.data.begin() + start * images.cols(), count * images.cols(),
                    block.data.begin());
        std::vector<int> ids = assign_cluster(params, block);
        out.insert(out.end(), ids.begin(), ids.end());
    }
    return out;
}

/// Mean per-image PSNR of the deterministic reconstruction (decode of the
/// hardened code) against the model inputs.
inline double mean_psnr(const VabParams& params, const Tensor& images,
                        std::size_t chunk = 1000) {
    double acc = 0.0;
    for (std::size_t start = 0; start < images.rows(); start += chunk) {
        std::size_t count = std::min(chunk, images.rows() - start);
        Tensor block({count, images.cols()});
        std::copy_n(images.data.begin() + start * images.cols(), count * images.cols(),
                    block.data.begin());
        Tensor recon = decode(params, harden_means(encode(params, block)));
        for (std::size_t i = 0; i < count; ++i) {
            Tensor orig({1, images.cols()});
            Tensor rec({1, images.cols()});
            std::copy_n(block.data.begin() + i * images.cols(), images.cols(),
                        orig.data.begin());
            std::copy_n(recon.data.begin() + i * images.cols(), images.cols(),
                        rec.data.begin());
            acc += psnr(orig, rec);
        }
    }
    return acc / static_cast<double>(images.rows());
}

/// Hardened codes for a whole dataset, encoded in chunks.
inline Tensor harden_codes_chunked(const VabParams& params, const Tensor& images,
                                   std::size_t chunk = 1000) {
    Tensor codes({images.rows(), params.latent_dim()});
    for (std::size_t start = 0; start < images.rows(); start += chunk) {
        std::size_t count = std::min(chunk, images.rows() - start);
        Tensor block({count, images.cols()});
        std::copy_n(images.data.begin() + start * images.cols(), count * images.cols(),
                    block.data.begin());
        Tensor bits = harden_means(encode(params, block));
        std::copy_n(bits.data.begin(), count * params.latent_dim(),
                    codes.data.begin() + start * params.latent_dim());
    }
    return codes;
}

/// Re-seed the mixture from k-means over the hardened codes: centroids become
/// component means, cluster shares become weights. Leaving the mixture at its
/// random initialization after pretraining lets a single component swallow
/// the whole code distribution before the others see any responsibility.
inline void warm_start_mixture(VabParams& params, const Tensor& images, std::uint64_t seed) {
    Tensor codes = harden_codes_chunked(params, images);
    const std::size_t k = params.num_clusters();
    KMeansModel km = kmeans_fit(codes, k, seed, 50, 1e-4);
    std::vector<int> owner = kmeans_predict(km, codes);
    std::vector<double> share(k, 0.0);
    for (int c : owner) share[static_cast<std::size_t>(c)] += 1.0;
    for (std::size_t c = 0; c < k; ++c) {
        double w = std::max(share[c], 1.0) / static_cast<double>(codes.rows());
        params.mixture.pi_logits(c) = std::log(w);
        for (std::size_t j = 0; j < params.latent_dim(); ++j) {
            double m = clamp_prob(km.centroids(c, j));
            params.mixture.mu_z_logits(c, j) = std::log(m / (1.0 - m));
        }
    }
}

/// Batch-mean ELBO over a dataset with seeded noise, for report rows.
inline double dataset_elbo(const VabParams& params, const Tensor& images, double tau,
                           std::uint64_t seed, std::size_t chunk = 1000) {
    Rng rng(seed);
    double acc = 0.0;
    for (std::size_t start = 0; start < images.rows(); start += chunk) {
        std::size_t count = std::min(chunk, images.rows() - start);
        Tensor block({count, images.cols()});
        std::copy_n(images.data.begin() + start * images.cols(), count * images.cols(),
                    block.data.begin());
        Rng sub = rng.derive(5, start);
        ElboBreakdown bd = elbo(params, block, sub, tau, 1);
        acc += bd.total * static_cast<double>(count);
    }
    return acc / static_cast<double>(images.rows());
}

/// Seeded shuffle, minibatch gradient ascent on the ELBO, annealed
/// temperature, stepped learning rate. Pretraining epochs (if any) run the
/// mixture-free objective first and share the epoch-indexed schedules; the
/// mixture is then re-seeded from k-means over the pretrained codes before
/// the joint phase starts. A batch that produces a non-finite term or
/// gradient aborts the run and returns the last completed epoch's state.
inline TrainResult train(const TrainConfig& config, const Dataset& data,
                         const std::function<void(const EpochStats&)>& on_epoch = nullptr) {
    config.validate();
    if (data.size() == 0) throw InputError("train: empty dataset");
    if (data.dim() != config.input_dim)
        throw DimensionError("train: dataset dim " + std::to_string(data.dim()) +
                             " does not match config input_dim " +
                             std::to_string(config.input_dim));

    Rng root(config.seed);
    Rng init_rng = root.derive(1, 0);

    TrainResult result;
    result.checkpoint.config = config;
    result.checkpoint.params = init_params(config, init_rng);
    result.checkpoint.rng_key = root.key();
    result.checkpoint.rng_state = root.state();

    VabParams params = result.checkpoint.params;
    AdamState adam = make_adam_state(params);
    result.checkpoint.adam = adam;

    const std::size_t total_epochs = config.pretrain_epochs + config.epochs;
    const std::size_t n = data.size();
    const std::size_t k_true =
        data.labels.empty() ? 0
                            : static_cast<std::size_t>(
                                  *std::max_element(data.labels.begin(), data.labels.end())) +
                                  1;

    for (std::size_t epoch = 0; epoch < total_epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        const double lr = learning_rate(config, epoch);
        const double tau = temperature(config, epoch);
        const bool pretrain = epoch < config.pretrain_epochs;
        if (config.pretrain_epochs > 0 && epoch == config.pretrain_epochs)
            warm_start_mixture(params, data.images, root.derive(4, 0).next_u64());

        Rng shuffle_rng = root.derive(2, epoch);
        BatchPlan plan = make_batch_plan(n, config.batch_size, shuffle_rng);

        double elbo_sum = 0.0;
        try {
            for (std::size_t b = 0; b < plan.num_batches(); ++b) {
                auto [idx, count] = plan.batch(b);
                Tensor xb = gather_rows(data.images, idx, count);
                Rng noise_rng = root.derive(3, (static_cast<std::uint64_t>(epoch) << 32) |
                                                   static_cast<std::uint64_t>(b));
                Tensor noise =
                    draw_concrete_noise(noise_rng, config.num_draws, count, config.dim_z);

                VabParams grads = zeros_like(params);
                ElboBreakdown bd =
                    elbo_with_grad(params, xb, noise, tau, grads, !pretrain);
                elbo_sum += bd.total * static_cast<double>(count);

                // Ascent on the bound = descent on its negation.
                for (Tensor* g : param_tensors(grads))
                    for (double& v : g->data) v = -v;
                adam_step(params, grads, adam, lr, config);
            }
        } catch (const TrainingError& e) {
            result.aborted = true;
            result.abort_reason = e.what();
            return result;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.elbo = elbo_sum / static_cast<double>(n);
        stats.lr = lr;
        stats.tau = tau;
        if (config.eval_every != 0 && ((epoch + 1) % config.eval_every == 0) &&
            !data.labels.empty()) {
            std::vector<int> pred = assign_clusters_chunked(params, data.images);
            stats.acc = clustering_acc(pred, data.labels, config.num_clusters, k_true);
            stats.psnr_db = mean_psnr(params, data.images);
        }
        stats.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        result.checkpoint.params = params;
        result.checkpoint.adam = adam;
        result.checkpoint.epoch = epoch + 1;
        result.trace.push_back(stats);
        if (on_epoch) on_epoch(stats);
    }
    return result;
}

// ---- checkpoint serialization -------------------------------------------

namespace detail {

inline constexpr char kCheckpointMagic[4] = {'V', 'A', 'B', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct ByteWriter {
    std::vector<std::uint8_t> bytes;

    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void tensor_data(const Tensor& t) {
        for (double v : t.data) f64(v);
    }
};

struct ByteReader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size())
            throw TruncationError("checkpoint truncated at byte " + std::to_string(pos));
    }
    std::uint8_t u8() {
        need(1);
        return bytes[pos++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
};

inline void write_config(ByteWriter& w, const TrainConfig& c) {
    w.u64(c.dim_z);
    w.u64(c.num_clusters);
    w.u64(c.hidden.size());
    for (std::size_t h : c.hidden) w.u64(h);
    w.u64(c.input_dim);
    w.u64(c.epochs);
    w.u64(c.batch_size);
    w.u64(c.num_draws);
    w.f64(c.lr0);
    w.f64(c.lr_decay);
    w.u64(c.lr_every);
    w.f64(c.lr_min);
    w.f64(c.beta1);
    w.f64(c.beta2);
    w.f64(c.adam_eps);
    w.f64(c.tau0);
    w.f64(c.tau_min);
    w.f64(c.tau_anneal);
    w.u64(c.seed);
    w.u64(c.pretrain_epochs);
    w.u8(c.pad ? 1 : 0);
    w.u8(c.stochastic_binarize ? 1 : 0);
    w.f64(c.binarize_threshold);
    w.u64(c.pixels_per_image);
    w.u64(c.eval_every);
}

inline TrainConfig read_config(ByteReader& r) {
    TrainConfig c;
    c.dim_z = r.u64();
    c.num_clusters = r.u64();
    c.hidden.resize(r.u64());
    for (std::size_t& h : c.hidden) h = r.u64();
    c.input_dim = r.u64();
    c.epochs = r.u64();
    c.batch_size = r.u64();
    c.num_draws = r.u64();
    c.lr0 = r.f64();
    c.lr_decay = r.f64();
    c.lr_every = r.u64();
    c.lr_min = r.f64();
    c.beta1 = r.f64();
    c.beta2 = r.f64();
    c.adam_eps = r.f64();
    c.tau0 = r.f64();
    c.tau_min = r.f64();
    c.tau_anneal = r.f64();
    c.seed = r.u64();
    c.pretrain_epochs = r.u64();
    c.pad = r.u8() != 0;
    c.stochastic_binarize = r.u8() != 0;
    c.binarize_threshold = r.f64();
    c.pixels_per_image = r.u64();
    c.eval_every = r.u64();
    return c;
}

} // namespace detail

inline std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
    detail::ByteWriter w;
    w.bytes.insert(w.bytes.end(), detail::kCheckpointMagic, detail::kCheckpointMagic + 4);
    w.u32(detail::kCheckpointVersion);
    detail::write_config(w, ckpt.config);
    w.u64(ckpt.epoch);
    w.u64(ckpt.adam.t);
    w.u64(ckpt.rng_key);
    for (std::uint64_t s : ckpt.rng_state) w.u64(s);

    std::vector<const Tensor*> tensors = param_tensors(ckpt.params);
    w.u64(tensors.size());
    for (const Tensor* t : tensors) {
        w.u64(t->shape.size());
        for (std::size_t d : t->shape) w.u64(d);
    }
    for (const Tensor* t : tensors) w.tensor_data(*t);
    for (const Tensor* t : param_tensors(ckpt.adam.m)) w.tensor_data(*t);
    for (const Tensor* t : param_tensors(ckpt.adam.v)) w.tensor_data(*t);
    return w.bytes;
}

inline Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader r{bytes};
    r.need(4);
    if (std::memcmp(bytes.data(), detail::kCheckpointMagic, 4) != 0)
        throw FormatError("checkpoint magic mismatch, not a VAB1 file");
    r.pos = 4;
    std::uint32_t version = r.u32();
    if (version != detail::kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));

    Checkpoint ckpt;
    ckpt.config = detail::read_config(r);
    ckpt.epoch = r.u64();
    std::uint64_t adam_t = r.u64();
    ckpt.rng_key = r.u64();
    for (std::uint64_t& s : ckpt.rng_state) s = r.u64();

    ckpt.params = make_params(ckpt.config.input_dim, ckpt.config.hidden, ckpt.config.dim_z,
                              ckpt.config.num_clusters);
    std::vector<Tensor*> tensors = param_tensors(ckpt.params);
    std::uint64_t count = r.u64();
    if (count != tensors.size())
        throw FormatError("checkpoint tensor count " + std::to_string(count) +
                          " does not match config topology");
    for (Tensor* t : tensors) {
        std::uint64_t ndim = r.u64();
        std::vector<std::size_t> shape(ndim);
        for (std::size_t& d : shape) d = r.u64();
        if (shape != t->shape)
            throw FormatError("checkpoint shape table does not match config topology");
    }
    auto read_into = [&](std::vector<Tensor*> ts) {
        for (Tensor* t : ts)
            for (double& v : t->data) v = r.f64();
    };
    read_into(tensors);
    ckpt.adam = make_adam_state(ckpt.params);
    ckpt.adam.t = adam_t;
    read_into(param_tensors(ckpt.adam.m));
    read_into(param_tensors(ckpt.adam.v));
    if (r.pos != bytes.size())
        throw FormatError("checkpoint has " + std::to_string(bytes.size() - r.pos) +
                          " trailing bytes");
    return ckpt;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::vector<std::uint8_t> bytes = serialize_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("short write: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    return deserialize_checkpoint(read_file_bytes(path));
}

} // namespace vab
