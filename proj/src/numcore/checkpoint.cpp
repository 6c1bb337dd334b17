#include "infotime/numcore/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace infotime::numcore {

namespace {

constexpr char kMagic[8] = {'I', 'T', 'C', 'K', 'P', 'T', '0', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw ParseError("checkpoint: truncated file");
    return v;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamList& params) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("checkpoint: cannot open " + tmp.string());
        os.write(kMagic, sizeof(kMagic));
        write_u64(os, params.size());
        for (const auto& [name, tensor] : params) {
            write_u64(os, name.size());
            os.write(name.data(), static_cast<std::streamsize>(name.size()));
            write_u64(os, tensor.rank());
            for (std::size_t d : tensor.shape()) write_u64(os, d);
            os.write(reinterpret_cast<const char*>(tensor.data()),
                     static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
        }
        if (!os) throw std::runtime_error("checkpoint: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

ParamList read_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ParseError("checkpoint: bad magic in " + path.string());
    const std::uint64_t count = read_u64(is);
    ParamList out;
    out.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        const std::uint64_t name_len = read_u64(is);
        std::string name(name_len, '\0');
        is.read(name.data(), static_cast<std::streamsize>(name_len));
        const std::uint64_t rank = read_u64(is);
        Shape shape(rank);
        for (auto& d : shape) d = read_u64(is);
        std::vector<double> values(shape_numel(shape));
        is.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(values.size() * sizeof(double)));
        if (!is) throw ParseError("checkpoint: truncated payload for \"" + name + "\"");
        out.push_back({std::move(name), Tensor::from(std::move(shape), std::move(values))});
    }
    return out;
}

void load_checkpoint(const std::filesystem::path& path, ParamList& params) {
    ParamList stored = read_checkpoint(path);
    std::map<std::string, Tensor*> by_name;
    for (auto& [name, tensor] : params) by_name[name] = &tensor;
    if (stored.size() != params.size())
        throw ContractError("checkpoint: parameter count mismatch (" +
                            std::to_string(stored.size()) + " stored, " +
                            std::to_string(params.size()) + " expected)");
    for (auto& [name, tensor] : stored) {
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw ContractError("checkpoint: unexpected parameter \"" + name + "\"");
        if (it->second->shape() != tensor.shape())
            throw ContractError("checkpoint: shape mismatch for \"" + name + "\"");
        std::copy(tensor.values().begin(), tensor.values().end(), it->second->values().begin());
    }
}

} // namespace infotime::numcore
