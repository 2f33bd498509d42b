#include "irts/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace irts {

namespace {

constexpr char kMagic[8] = {'I', 'R', 'T', 'S', 'C', 'K', 'P', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void write_string(std::ostream& os, const std::string& s) {
    write_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
    auto n = read_u64(is);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    return s;
}

}  // namespace

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

const Tensor* Checkpoint::find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return &t;
    return nullptr;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CheckpointError("cannot open " + path + " for writing");
    os.write(kMagic, 8);
    write_u64(os, static_cast<std::uint64_t>(c.schema_version));
    write_string(os, c.model_kind);
    write_string(os, c.config_json);
    write_u64(os, c.config_digest);
    write_u64(os, static_cast<std::uint64_t>(c.step));
    write_u64(os, static_cast<std::uint64_t>(c.epoch));
    write_string(os, c.rng_state);
    write_u64(os, c.tensors.size());
    for (const auto& [name, t] : c.tensors) {
        write_string(os, name);
        write_u64(os, t.ndim());
        for (auto e : t.shape()) write_u64(os, e);
        static_assert(sizeof(Real) == 8);
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.size() * 8));
    }
    if (!os) throw CheckpointError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw CheckpointError(path + " is not a checkpoint file");
    Checkpoint c;
    c.schema_version = static_cast<int>(read_u64(is));
    if (c.schema_version != 1)
        throw CheckpointError("unsupported checkpoint schema version " +
                              std::to_string(c.schema_version));
    c.model_kind = read_string(is);
    c.config_json = read_string(is);
    c.config_digest = read_u64(is);
    c.step = static_cast<std::int64_t>(read_u64(is));
    c.epoch = static_cast<std::int64_t>(read_u64(is));
    c.rng_state = read_string(is);
    auto n = read_u64(is);
    for (std::uint64_t i = 0; i < n; ++i) {
        std::string name = read_string(is);
        auto ndim = read_u64(is);
        std::vector<std::size_t> shape(ndim);
        for (auto& e : shape) e = read_u64(is);
        Tensor t(shape);
        is.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.size() * 8));
        c.tensors.emplace_back(std::move(name), std::move(t));
    }
    if (!is) throw CheckpointError("truncated checkpoint " + path);
    return c;
}

}  // namespace irts
