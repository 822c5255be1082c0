#include "avseg/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace avseg {

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

constexpr char kMagic[8] = {'A', 'V', 'S', 'E', 'G', 'C', 'K', '1'};

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return &t;
    return nullptr;
}

void Checkpoint::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_pod<uint32_t>(out, kVersion);
    write_pod<uint64_t>(out, config_hash);
    write_pod<int64_t>(out, epoch);
    write_pod<uint32_t>(out, static_cast<uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        write_pod<uint32_t>(out, static_cast<uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<uint32_t>(out, static_cast<uint32_t>(t.rank()));
        for (int d : t.shape()) write_pod<int32_t>(out, d);
        out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(Scalar)));
    }
    if (!out) throw IoError("short write: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("not a checkpoint file: " + path);
    const uint32_t version = read_pod<uint32_t>(in);
    if (version != kVersion)
        throw DataError("checkpoint version " + std::to_string(version) + " unsupported: " + path);
    Checkpoint ck;
    ck.config_hash = read_pod<uint64_t>(in);
    ck.epoch = read_pod<int64_t>(in);
    const uint32_t count = read_pod<uint32_t>(in);
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = read_pod<uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const uint32_t rank = read_pod<uint32_t>(in);
        Shape shape(rank);
        for (uint32_t d = 0; d < rank; ++d) shape[d] = read_pod<int32_t>(in);
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(Scalar)));
        if (!in) throw DataError("truncated checkpoint: " + path);
        ck.tensors.emplace_back(std::move(name), std::move(t));
    }
    return ck;
}

void Checkpoint::restore_params(nn::ParamSet& params, const std::string& prefix) const {
    for (auto& [name, var] : params.items) {
        const Tensor* t = find(prefix + name);
        if (!t) throw DataError("checkpoint missing tensor '" + prefix + name + "'");
        if (!t->same_shape(var->value))
            throw DataError("checkpoint tensor '" + prefix + name + "' has shape " + t->shape_str() +
                            ", model expects " + var->value.shape_str());
        var->value = *t;
    }
}

void Checkpoint::store_params(const nn::ParamSet& params, const std::string& prefix) {
    for (const auto& [name, var] : params.items) put(prefix + name, var->value);
}

}  // namespace avseg
