#include "curio/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "curio/errors.hpp"

namespace curio {

static_assert(std::endian::native == std::endian::little,
              "checkpoint i/o assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'C', 'U', 'R', 'I', 'O', 'C', 'K', '1'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ConfigError("checkpoint: truncated stream");
    return v;
}

} // namespace

void save_checkpoint(const ParamTree& tree, std::ostream& out) {
    out.write(kMagic, sizeof(kMagic));
    write_pod<uint32_t>(out, kVersion);
    write_pod<uint64_t>(out, static_cast<uint64_t>(tree.entry_count()));
    for (const auto& e : tree.entries()) {
        write_pod<uint32_t>(out, static_cast<uint32_t>(e.name.size()));
        out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        write_pod<uint32_t>(out, static_cast<uint32_t>(e.shape.size()));
        for (int d : e.shape) write_pod<uint64_t>(out, static_cast<uint64_t>(d));
        out.write(reinterpret_cast<const char*>(e.data.data()),
                  static_cast<std::streamsize>(e.data.size() * sizeof(double)));
    }
    if (!out) throw ConfigError("checkpoint: write failed");
}

void save_checkpoint(const ParamTree& tree, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("checkpoint: cannot open '" + path + "' for writing");
    save_checkpoint(tree, out);
}

ParamTree load_checkpoint(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw ConfigError("checkpoint: bad magic");
    }
    const auto version = read_pod<uint32_t>(in);
    if (version != kVersion) {
        throw ConfigError("checkpoint: unsupported version " + std::to_string(version));
    }
    const auto count = read_pod<uint64_t>(in);
    ParamTree tree;
    for (uint64_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto rank = read_pod<uint32_t>(in);
        std::vector<int> shape(rank);
        for (auto& d : shape) d = static_cast<int>(read_pod<uint64_t>(in));
        auto& e = tree.add(name, std::move(shape));
        in.read(reinterpret_cast<char*>(e.data.data()),
                static_cast<std::streamsize>(e.data.size() * sizeof(double)));
        if (!in) throw ConfigError("checkpoint: truncated entry '" + name + "'");
    }
    return tree;
}

ParamTree load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("checkpoint: cannot open '" + path + "'");
    return load_checkpoint(in);
}

} // namespace curio
