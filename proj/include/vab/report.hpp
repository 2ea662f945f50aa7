#pragma once
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vab/error.hpp"

// CSV report rows. One schema for run results (the plot axes: accuracy and
// PSNR against BPP) and one for per-epoch training traces. Numbers carry
// full double precision so a consumer can reconstruct them exactly.

namespace vab {

struct RunReport {
    std::size_t dim_z = 0;
    double bpp = 0.0;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    double acc = 0.0;
    double psnr_db = 0.0;
    double elbo = 0.0;
    double wall_seconds = 0.0;
};

/// Shortest decimal form that round-trips a double; infinities become
/// "inf"/"-inf", NaN becomes "nan".
inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw InputError("format_real: value does not fit");
    return std::string(buf, end);
}

inline constexpr const char* kRunCsvHeader =
    "dim_z,bpp,seed,epochs,acc,psnr_db,elbo,wall_seconds";

inline std::string to_csv_row(const RunReport& r) {
    std::string out;
    out += std::to_string(r.dim_z);
    out += ',';
    out += format_real(r.bpp);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += std::to_string(r.epochs);
    out += ',';
    out += format_real(r.acc);
    out += ',';
    out += format_real(r.psnr_db);
    out += ',';
    out += format_real(r.elbo);
    out += ',';
    out += format_real(r.wall_seconds);
    return out;
}

/// Append one line, writing the header first when the file is new or empty.
inline void append_csv_line(const std::string& path, const std::string& header,
                            const std::string& line) {
    bool fresh = true;
    {
        std::error_code ec;
        auto size = std::filesystem::file_size(path, ec);
        fresh = ec || size == 0;
    }
    std::ofstream out(path, std::ios::app);
    if (!out) throw InputError("cannot open for append: " + path);
    if (fresh) out << header << '\n';
    out << line << '\n';
    if (!out) throw InputError("short write: " + path);
}

inline void append_run_report(const std::string& path, const RunReport& r) {
    append_csv_line(path, kRunCsvHeader, to_csv_row(r));
}

/// Sample mean and standard error of the mean (sample stddev / sqrt(n)).
struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& xs) {
    if (xs.empty()) throw InputError("mean_stderr: empty sample");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return {mean, sd / std::sqrt(static_cast<double>(xs.size()))};
}

} // namespace vab
