#pragma once
#include <zlib.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "vab/error.hpp"
#include "vab/sampling.hpp"
#include "vab/tensor.hpp"

// MNIST-format IDX ingestion, binarization, optional padding to a 32x32
// canvas, and seeded batch iteration.

namespace vab {

struct Dataset {
    Tensor images;           // N x d, pixels in [0,1]
    std::vector<int> labels; // N, in [0,9]

    std::size_t size() const { return images.rows(); }
    std::size_t dim() const { return images.cols(); }
};

namespace detail {

inline std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in) {
    z_stream zs{};
    // 16+MAX_WBITS: gzip container
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
        throw FormatError("gzip: failed to initialize decompressor");
    std::vector<std::uint8_t> out;
    out.resize(in.size() * 4 + 1024);
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    std::size_t written = 0;
    int ret = Z_OK;
    while (ret != Z_STREAM_END) {
        if (written == out.size()) out.resize(out.size() * 2);
        zs.next_out = out.data() + written;
        zs.avail_out = static_cast<uInt>(out.size() - written);
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            inflateEnd(&zs);
            throw FormatError("gzip: corrupt stream (zlib code " + std::to_string(ret) + ")");
        }
        written = out.size() - zs.avail_out;
    }
    inflateEnd(&zs);
    out.resize(written);
    return out;
}

} // namespace detail

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxContent {
    bool is_images = false;
    Tensor images;           // N x rows*cols, scaled to [0,1]
    std::vector<int> labels; // for label files
    std::size_t rows = 0, cols = 0;
};

/// Parse an IDX container (big-endian magic and dimension sizes, raw uint8
/// payload). Gzip'd bytes are decompressed transparently based on the
/// 0x1f 0x8b prefix. Image pixels are scaled to [0,1] by /255.
inline IdxContent parse_idx(const std::vector<std::uint8_t>& raw) {
    const std::vector<std::uint8_t>* bytes = &raw;
    std::vector<std::uint8_t> inflated;
    if (raw.size() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b) {
        inflated = detail::gunzip(raw);
        bytes = &inflated;
    }
    if (bytes->size() < 4)
        throw TruncationError("idx: expected at least 4 header bytes, got " +
                              std::to_string(bytes->size()));
    std::uint32_t magic = detail::read_be32(bytes->data());
    IdxContent out;
    if (magic == kIdxImagesMagic) {
        if (bytes->size() < 16)
            throw TruncationError("idx: image header needs 16 bytes, got " +
                                  std::to_string(bytes->size()));
        std::size_t n = detail::read_be32(bytes->data() + 4);
        std::size_t rows = detail::read_be32(bytes->data() + 8);
        std::size_t cols = detail::read_be32(bytes->data() + 12);
        std::size_t expected = 16 + n * rows * cols;
        if (bytes->size() < expected)
            throw TruncationError("idx: expected " + std::to_string(expected) +
                                  " bytes for " + std::to_string(n) + " images, got " +
                                  std::to_string(bytes->size()));
        if (bytes->size() > expected)
            throw FormatError("idx: " + std::to_string(bytes->size() - expected) +
                              " trailing bytes after image payload");
        out.is_images = true;
        out.rows = rows;
        out.cols = cols;
        out.images = Tensor({n, rows * cols});
        const std::uint8_t* p = bytes->data() + 16;
        for (std::size_t i = 0; i < n * rows * cols; ++i)
            out.images.data[i] = static_cast<double>(p[i]) / 255.0;
    } else if (magic == kIdxLabelsMagic) {
        if (bytes->size() < 8)
            throw TruncationError("idx: label header needs 8 bytes, got " +
                                  std::to_string(bytes->size()));
        std::size_t n = detail::read_be32(bytes->data() + 4);
        std::size_t expected = 8 + n;
        if (bytes->size() < expected)
            throw TruncationError("idx: expected " + std::to_string(expected) +
                                  " bytes for " + std::to_string(n) + " labels, got " +
                                  std::to_string(bytes->size()));
        if (bytes->size() > expected)
            throw FormatError("idx: " + std::to_string(bytes->size() - expected) +
                              " trailing bytes after label payload");
        out.is_images = false;
        const std::uint8_t* p = bytes->data() + 8;
        out.labels.assign(p, p + n);
    } else {
        throw FormatError("idx: unrecognized magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%08x", magic);
            return std::string(buf);
        }());
    }
    return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

/// Open `path` directly, or `path.gz` when only that exists.
inline std::filesystem::path resolve_maybe_gz(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    if (fs::exists(path)) return path;
    fs::path gz = path;
    gz += ".gz";
    if (fs::exists(gz)) return gz;
    return path; // let the open fail with the original name
}

inline IdxContent load_idx(const std::filesystem::path& path) {
    return parse_idx(read_file_bytes(resolve_maybe_gz(path)));
}

inline Dataset load_dataset(const std::filesystem::path& images_path,
                            const std::filesystem::path& labels_path) {
    IdxContent imgs = load_idx(images_path);
    if (!imgs.is_images)
        throw FormatError("expected an image file at " + images_path.string());
    IdxContent labs = load_idx(labels_path);
    if (labs.is_images)
        throw FormatError("expected a label file at " + labels_path.string());
    if (imgs.images.rows() != labs.labels.size())
        throw FormatError("image/label count mismatch: " + std::to_string(imgs.images.rows()) +
                          " vs " + std::to_string(labs.labels.size()));
    return Dataset{std::move(imgs.images), std::move(labs.labels)};
}

/// Conventional MNIST filenames under a data directory, plain or gzip'd.
inline Dataset load_mnist_split(const std::filesystem::path& dir, bool train) {
    const char* img = train ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte";
    const char* lab = train ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte";
    return load_dataset(dir / img, dir / lab);
}

enum class BinarizeMode { Threshold, Stochastic };

inline BinarizeMode binarize_mode_from_string(const std::string& s) {
    if (s == "threshold") return BinarizeMode::Threshold;
    if (s == "stochastic") return BinarizeMode::Stochastic;
    throw ConfigError("unknown binarize mode \"" + s + "\" (threshold|stochastic)");
}

/// Threshold mode: 1 iff pixel >= threshold. Stochastic mode: pixel-wise
/// Bernoulli(pixel) draws from the given seed, intended to be re-run per
/// epoch with a fresh seed.
inline Tensor binarize(const Tensor& images, BinarizeMode mode, double threshold = 0.5,
                       std::uint64_t seed = 0) {
    Tensor out = images;
    if (mode == BinarizeMode::Threshold) {
        for (double& v : out.data) v = v >= threshold ? 1.0 : 0.0;
    } else {
        Rng rng(seed);
        for (double& v : out.data) v = rng.uniform() < v ? 1.0 : 0.0;
    }
    return out;
}

/// Center each 28x28 image on a 32x32 zero canvas (2-pixel border).
inline Tensor pad_to_1024(const Tensor& images) {
    if (images.ndim() != 2 || images.cols() != 784)
        throw InputError("pad_to_1024: expected N x 784 input, got " + images.shape_str());
    Tensor out({images.rows(), 1024});
    for (std::size_t i = 0; i < images.rows(); ++i)
        for (std::size_t r = 0; r < 28; ++r)
            for (std::size_t c = 0; c < 28; ++c)
                out(i, (r + 2) * 32 + (c + 2)) = images(i, r * 28 + c);
    return out;
}

/// Crop the centered 28x28 window back out; inverse of pad_to_1024.
inline Tensor crop_from_1024(const Tensor& images) {
    if (images.ndim() != 2 || images.cols() != 1024)
        throw InputError("crop_from_1024: expected N x 1024 input, got " + images.shape_str());
    Tensor out({images.rows(), 784});
    for (std::size_t i = 0; i < images.rows(); ++i)
        for (std::size_t r = 0; r < 28; ++r)
            for (std::size_t c = 0; c < 28; ++c)
                out(i, r * 28 + c) = images(i, (r + 2) * 32 + (c + 2));
    return out;
}

/// Seeded Fisher-Yates permutation of 0..N-1 chunked into minibatches;
/// the final partial batch is retained.
struct BatchPlan {
    std::uint64_t epoch_seed = 0;
    std::size_t batch_size = 0;
    std::vector<std::size_t> perm;

    std::size_t num_batches() const {
        return batch_size == 0 ? 0 : (perm.size() + batch_size - 1) / batch_size;
    }

    std::pair<const std::size_t*, std::size_t> batch(std::size_t k) const {
        std::size_t begin = k * batch_size;
        std::size_t end = std::min(begin + batch_size, perm.size());
        return {perm.data() + begin, end - begin};
    }
};

inline BatchPlan make_batch_plan(std::size_t n, std::size_t batch_size, Rng shuffle_rng) {
    if (batch_size == 0) throw ParameterError("batch size must be at least 1");
    BatchPlan plan;
    plan.epoch_seed = shuffle_rng.key();
    plan.batch_size = batch_size;
    plan.perm.resize(n);
    std::iota(plan.perm.begin(), plan.perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = shuffle_rng.bounded(i);
        std::swap(plan.perm[i - 1], plan.perm[j]);
    }
    return plan;
}

/// Copy the selected rows into a dense batch tensor.
inline Tensor gather_rows(const Tensor& images, const std::size_t* idx, std::size_t count) {
    Tensor out({count, images.cols()});
    for (std::size_t i = 0; i < count; ++i)
        std::copy_n(images.data.data() + idx[i] * images.cols(), images.cols(),
                    out.data.data() + i * images.cols());
    return out;
}

} // namespace vab
