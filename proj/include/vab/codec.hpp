#pragma once
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "vab/data.hpp"
#include "vab/model.hpp"

// The vendor-to-consumer code file: a 16-byte header (magic "VABC", latent
// width, record count) followed by one bit-packed latent code per image.
// The consumer side classifies from this file alone.

namespace vab {

inline constexpr char kCodeMagic[4] = {'V', 'A', 'B', 'C'};

struct CodeFile {
    std::uint32_t dim_z = 0;
    std::uint64_t count = 0;
    std::vector<std::uint8_t> payload; // count * stride() bytes

    std::size_t stride() const { return (static_cast<std::size_t>(dim_z) + 7) / 8; }

    void append(const LatentCode& code) {
        if (code.dim != dim_z)
            throw DimensionError("code file: record dim " + std::to_string(code.dim) +
                                 " does not match file dim_z " + std::to_string(dim_z));
        std::vector<std::uint8_t> bytes = pack_bits(code);
        payload.insert(payload.end(), bytes.begin(), bytes.end());
        count += 1;
    }

    LatentCode record(std::size_t i) const {
        if (i >= count) throw InputError("code file: record index out of range");
        std::vector<std::uint8_t> bytes(payload.begin() + i * stride(),
                                        payload.begin() + (i + 1) * stride());
        return unpack_bits(bytes, dim_z);
    }
};

inline std::vector<std::uint8_t> serialize_code_file(const CodeFile& file) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + file.payload.size());
    out.insert(out.end(), kCodeMagic, kCodeMagic + 4);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(file.dim_z >> (8 * i)));
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(file.count >> (8 * i)));
    out.insert(out.end(), file.payload.begin(), file.payload.end());
    return out;
}

inline CodeFile deserialize_code_file(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 16) throw TruncationError("code file shorter than its 16-byte header");
    if (std::memcmp(bytes.data(), kCodeMagic, 4) != 0)
        throw FormatError("code file magic mismatch, not a VABC file");
    CodeFile file;
    for (int i = 0; i < 4; ++i)
        file.dim_z |= static_cast<std::uint32_t>(bytes[4 + i]) << (8 * i);
    for (int i = 0; i < 8; ++i)
        file.count |= static_cast<std::uint64_t>(bytes[8 + i]) << (8 * i);
    if (file.dim_z == 0) throw FormatError("code file header has dim_z = 0");
    std::size_t expect = file.count * file.stride();
    if (bytes.size() - 16 < expect)
        throw TruncationError("code file payload truncated: expected " +
                              std::to_string(expect) + " bytes, got " +
                              std::to_string(bytes.size() - 16));
    if (bytes.size() - 16 > expect)
        throw FormatError("code file has " + std::to_string(bytes.size() - 16 - expect) +
                          " trailing bytes");
    file.payload.assign(bytes.begin() + 16, bytes.end());
    return file;
}

inline void save_code_file(const CodeFile& file, const std::string& path) {
    std::vector<std::uint8_t> bytes = serialize_code_file(file);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("short write: " + path);
}

inline CodeFile load_code_file(const std::string& path) {
    return deserialize_code_file(read_file_bytes(path));
}

} // namespace vab
