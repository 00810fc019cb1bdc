#pragma once

#include <bit>
#include <cstring>
#include <fstream>

#include "tensor.hpp"

namespace opticnet {

/// Thrown when a container's records do not line up with the model that is
/// loading them (distinct from IO failures so callers can map exit codes).
struct checkpoint_mismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Container layout (all integers little-endian):
//   magic "OPTN", version u32
//   repeated until EOF:
//     u32 path length, path bytes,
//     u8 dtype tag (1 = f32, 2 = f64), u8 rank (always 4),
//     u32 dims[4], raw payload (dims product * dtype size bytes)

namespace checkpoint_detail {

constexpr uint32_t kVersion = 1;

template <class T>
constexpr uint8_t dtype_tag() {
    return sizeof(T) == 4 ? 1 : 2;
}

inline void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline bool read_u32(std::istream& in, uint32_t& v) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
    v = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
        (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
    return true;
}

static_assert(std::endian::native == std::endian::little,
              "payload serialization assumes a little-endian host");

}  // namespace checkpoint_detail

/// Write every (path, tensor) record to one container file.
template <class T>
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor<T>*>>& tensors) {
    using namespace checkpoint_detail;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot write " + path);
    os.write("OPTN", 4);
    write_u32(os, kVersion);
    for (const auto& [name, tens] : tensors) {
        write_u32(os, static_cast<uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        char meta[2] = {static_cast<char>(dtype_tag<T>()), 4};
        os.write(meta, 2);
        for (int d : tens->dims) write_u32(os, static_cast<uint32_t>(d));
        os.write(reinterpret_cast<const char*>(tens->data.data()),
                 static_cast<std::streamsize>(tens->size() * sizeof(T)));
    }
    if (!os) throw std::runtime_error("checkpoint: short write to " + path);
}

struct CheckpointRecord {
    std::string path;
    uint8_t dtype = 0;
    std::array<int, 4> dims{};
    std::vector<char> payload;
};

/// Raw record scan, dtype-agnostic.
inline std::vector<CheckpointRecord> read_checkpoint_records(const std::string& path) {
    using namespace checkpoint_detail;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[4];
    uint32_t version = 0;
    if (!in.read(magic, 4) || std::memcmp(magic, "OPTN", 4) != 0) {
        throw std::runtime_error("checkpoint: " + path + " is not an OPTN container");
    }
    if (!read_u32(in, version) || version != kVersion) {
        throw std::runtime_error("checkpoint: unsupported container version in " + path);
    }
    std::vector<CheckpointRecord> records;
    uint32_t len = 0;
    while (read_u32(in, len)) {
        CheckpointRecord r;
        r.path.resize(len);
        char meta[2];
        if (!in.read(r.path.data(), len) || !in.read(meta, 2)) {
            throw std::runtime_error("checkpoint: truncated record header in " + path);
        }
        r.dtype = static_cast<uint8_t>(meta[0]);
        if (meta[1] != 4) throw std::runtime_error("checkpoint: unsupported rank in " + path);
        size_t count = 1;
        for (int i = 0; i < 4; ++i) {
            uint32_t d = 0;
            if (!read_u32(in, d)) throw std::runtime_error("checkpoint: truncated dims in " + path);
            r.dims[i] = static_cast<int>(d);
            count *= d;
        }
        size_t bytes = count * (r.dtype == 1 ? 4 : 8);
        r.payload.resize(bytes);
        if (!in.read(r.payload.data(), static_cast<std::streamsize>(bytes))) {
            throw std::runtime_error("checkpoint: truncated payload for '" + r.path + "' in " + path);
        }
        records.push_back(std::move(r));
    }
    return records;
}

/// Restore a model's tensors in place. The file must contain exactly the
/// paths the model exposes, with matching dtype and shape; the first
/// mismatch is named in the error.
template <class T>
void load_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor<T>*>>& tensors) {
    using namespace checkpoint_detail;
    auto records = read_checkpoint_records(path);
    if (records.size() != tensors.size()) {
        throw checkpoint_mismatch("checkpoint: " + path + " holds " +
                                 std::to_string(records.size()) + " tensors, model expects " +
                                 std::to_string(tensors.size()));
    }
    for (size_t i = 0; i < tensors.size(); ++i) {
        const auto& [name, tens] = tensors[i];
        const CheckpointRecord& r = records[i];
        if (r.path != name) {
            throw checkpoint_mismatch("checkpoint: layer path mismatch at record " +
                                     std::to_string(i) + ": file has '" + r.path +
                                     "', model expects '" + name + "'");
        }
        if (r.dtype != dtype_tag<T>()) {
            throw checkpoint_mismatch("checkpoint: dtype mismatch for layer '" + name + "'");
        }
        if (r.dims != tens->dims) {
            throw checkpoint_mismatch("checkpoint: shape mismatch for layer '" + name +
                                     "': file " + Tensor<T>::shape_str(r.dims[0], r.dims[1],
                                                                       r.dims[2], r.dims[3]) +
                                     ", model " + tens->shape_str());
        }
        std::memcpy(tens->data.data(), r.payload.data(), r.payload.size());
    }
}

/// Exact on-disk size of a container holding the given tensors.
template <class T>
long long checkpoint_byte_size(const std::vector<std::pair<std::string, Tensor<T>*>>& tensors) {
    long long bytes = 8;  // magic + version
    for (const auto& [name, tens] : tensors) {
        bytes += 4 + static_cast<long long>(name.size()) + 2 + 16 +
                 static_cast<long long>(tens->size()) * static_cast<long long>(sizeof(T));
    }
    return bytes;
}

}  // namespace opticnet
