#pragma once
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vab/data.hpp"
#include "vab/model.hpp"
#include "vab/sampling.hpp"
#include "vab/tensor.hpp"
#include "vab/trainer.hpp"

namespace test_support {

inline double rel_err(double a, double b) {
    double denom = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / denom;
}

/// Tiny model with random weights, for gradient checks.
inline vab::VabParams tiny_params(std::size_t input_dim, std::size_t hidden,
                                  std::size_t dim_z, std::size_t k, vab::Rng& rng) {
    vab::VabParams p = vab::make_params(input_dim, {hidden}, dim_z, k);
    for (vab::Tensor* t : vab::param_tensors(p))
        for (double& v : t->data) v = rng.uniform(-0.8, 0.8);
    return p;
}

/// Random binary batch in {0,1}.
inline vab::Tensor random_bits(std::size_t rows, std::size_t cols, vab::Rng& rng) {
    vab::Tensor x({rows, cols});
    for (double& v : x.data) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    return x;
}

inline std::vector<std::uint8_t> random_bit_vector(std::size_t n, vab::Rng& rng) {
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = rng.uniform() < 0.5 ? 0 : 1;
    return bits;
}

/// Draws n points from a Bernoulli mixture with the given component means
/// and uniform weights. Returns the sampled bits and component ids.
inline vab::Dataset sample_bmm(const vab::Tensor& means, std::size_t n, vab::Rng& rng) {
    const std::size_t k = means.rows(), d = means.cols();
    vab::Dataset data;
    data.images = vab::Tensor({n, d});
    data.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t c = static_cast<std::size_t>(rng.bounded(k));
        data.labels[i] = static_cast<int>(c);
        for (std::size_t j = 0; j < d; ++j)
            data.images(i, j) = rng.uniform() < means(c, j) ? 1.0 : 0.0;
    }
    return data;
}

/// Separated 3-component means over d dims: blocks of 0.9 / 0.1 patterns.
inline vab::Tensor separated_means3(std::size_t d) {
    vab::Tensor means({3, d});
    for (std::size_t j = 0; j < d; ++j) {
        means(0, j) = j < d / 3 ? 0.9 : 0.1;
        means(1, j) = (j >= d / 3 && j < 2 * d / 3) ? 0.9 : 0.1;
        means(2, j) = j >= 2 * d / 3 ? 0.9 : 0.1;
    }
    return means;
}

inline void push_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::vector<std::uint8_t> idx_image_bytes(std::uint32_t n, std::uint32_t rows,
                                                 std::uint32_t cols,
                                                 const std::vector<std::uint8_t>& pixels) {
    std::vector<std::uint8_t> out;
    push_be32(out, vab::kIdxImagesMagic);
    push_be32(out, n);
    push_be32(out, rows);
    push_be32(out, cols);
    out.insert(out.end(), pixels.begin(), pixels.end());
    return out;
}

inline std::vector<std::uint8_t> idx_label_bytes(const std::vector<std::uint8_t>& labels) {
    std::vector<std::uint8_t> out;
    push_be32(out, vab::kIdxLabelsMagic);
    push_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.insert(out.end(), labels.begin(), labels.end());
    return out;
}

inline void write_bytes(const std::filesystem::path& path,
                        const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

/// MNIST-shaped directory with tiny synthetic digits: three bright-block
/// patterns plus salt noise, labels 0..2.
inline void write_synth_mnist(const std::filesystem::path& dir, std::size_t n_train,
                              std::size_t n_test, std::size_t rows = 28,
                              std::size_t cols = 28) {
    std::filesystem::create_directories(dir);
    vab::Rng rng(2024);
    auto make_split = [&](std::size_t n, const char* img_name, const char* lab_name) {
        std::vector<std::uint8_t> pixels(n * rows * cols);
        std::vector<std::uint8_t> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint8_t cls = static_cast<std::uint8_t>(i % 3);
            labels[i] = cls;
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) {
                    bool on = r >= cls * rows / 3 && r < (cls + 1) * rows / 3;
                    if (rng.uniform() < 0.05) on = !on;
                    pixels[i * rows * cols + r * cols + c] = on ? 230 : 20;
                }
        }
        write_bytes(dir / img_name,
                    idx_image_bytes(static_cast<std::uint32_t>(n),
                                    static_cast<std::uint32_t>(rows),
                                    static_cast<std::uint32_t>(cols), pixels));
        write_bytes(dir / lab_name, idx_label_bytes(labels));
    };
    make_split(n_train, "train-images-idx3-ubyte", "train-labels-idx1-ubyte");
    make_split(n_test, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte");
}

/// Fresh scratch directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("vab_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string data_dir() {
    if (const char* env = std::getenv("VAB_DATA_DIR"); env && *env) return env;
    return "data";
}

inline bool have_mnist() {
    namespace fs = std::filesystem;
    fs::path dir = data_dir();
    return fs::exists(dir / "train-images-idx3-ubyte.gz") ||
           fs::exists(dir / "train-images-idx3-ubyte");
}

} // namespace test_support
