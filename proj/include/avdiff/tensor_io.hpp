#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "avdiff/errors.hpp"
#include "avdiff/tensor.hpp"

namespace avdiff {

// AMGT tensor file: magic "AMGT", u32 version=1, u32 ndim, ndim x u32 extents,
// then little-endian f32 payload. All integers little-endian.
//
// Archives are a concatenation of (u32 name length, name bytes, AMGT blob)
// records; checkpoints, motion files and video bundles all use them.

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    char b[4];
    b[0] = static_cast<char>(v & 0xff);
    b[1] = static_cast<char>((v >> 8) & 0xff);
    b[2] = static_cast<char>((v >> 16) & 0xff);
    b[3] = static_cast<char>((v >> 24) & 0xff);
    out.append(b, 4);
}

inline std::uint32_t get_u32(const char* p) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(p[0])) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(p[1])) << 8) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(p[2])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(p[3])) << 24);
}

inline void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

inline float get_f32(const char* p) {
    std::uint32_t bits = get_u32(p);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace detail

inline std::string amgt_encode(const Tensor& t) {
    std::string out;
    out.reserve(12 + 4 * t.rank() + 4 * t.size());
    out += "AMGT";
    detail::put_u32(out, 1);
    detail::put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (int e : t.shape()) detail::put_u32(out, static_cast<std::uint32_t>(e));
    for (float v : t.values()) detail::put_f32(out, v);
    return out;
}

// Decodes one AMGT blob starting at data[pos]; advances pos past it.
inline Tensor amgt_decode(const std::string& data, std::size_t& pos) {
    auto need = [&](std::size_t n) {
        if (pos + n > data.size()) throw IoError("truncated AMGT data");
    };
    need(12);
    if (std::memcmp(data.data() + pos, "AMGT", 4) != 0) throw IoError("bad AMGT magic");
    std::uint32_t version = detail::get_u32(data.data() + pos + 4);
    if (version != 1) throw IoError("unsupported AMGT version " + std::to_string(version));
    std::uint32_t ndim = detail::get_u32(data.data() + pos + 8);
    pos += 12;
    if (ndim > 16) throw IoError("implausible AMGT rank");
    Shape shape(ndim);
    need(4 * ndim);
    std::size_t n = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
        shape[i] = static_cast<int>(detail::get_u32(data.data() + pos));
        pos += 4;
        if (shape[i] <= 0) throw IoError("non-positive AMGT extent");
        n *= static_cast<std::size_t>(shape[i]);
    }
    need(4 * n);
    std::vector<float> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        values[i] = detail::get_f32(data.data() + pos);
        pos += 4;
    }
    Tensor t(std::move(shape), std::move(values));
    check_finite(t, "AMGT load");
    return t;
}

inline void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for write: " + path.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for read: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return bytes;
}

inline void save_amgt(const Tensor& t, const std::filesystem::path& path) {
    write_file_bytes(path, amgt_encode(t));
}

inline Tensor load_amgt(const std::filesystem::path& path) {
    std::string bytes = read_file_bytes(path);
    std::size_t pos = 0;
    Tensor t = amgt_decode(bytes, pos);
    if (pos != bytes.size()) throw IoError("trailing bytes after AMGT payload: " + path.string());
    return t;
}

// Ordered named-tensor archive.
using TensorArchive = std::vector<std::pair<std::string, Tensor>>;

inline std::string archive_encode(const TensorArchive& records) {
    std::string out;
    for (const auto& [name, tensor] : records) {
        detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        out += amgt_encode(tensor);
    }
    return out;
}

inline TensorArchive archive_decode(const std::string& bytes) {
    TensorArchive records;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        if (pos + 4 > bytes.size()) throw IoError("truncated archive record header");
        std::uint32_t len = detail::get_u32(bytes.data() + pos);
        pos += 4;
        if (pos + len > bytes.size()) throw IoError("truncated archive record name");
        std::string name(bytes.data() + pos, len);
        pos += len;
        records.emplace_back(std::move(name), amgt_decode(bytes, pos));
    }
    return records;
}

inline void save_archive(const TensorArchive& records, const std::filesystem::path& path) {
    write_file_bytes(path, archive_encode(records));
}

inline TensorArchive load_archive(const std::filesystem::path& path) {
    return archive_decode(read_file_bytes(path));
}

inline const Tensor& archive_get(const TensorArchive& records, const std::string& name) {
    for (const auto& [n, t] : records) {
        if (n == name) return t;
    }
    throw IoError("archive record not found: " + name);
}

// FNV-1a over raw bytes; used to fingerprint base checkpoints.
inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace avdiff
