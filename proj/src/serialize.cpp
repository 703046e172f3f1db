#include "scod/serialize.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace scod {

namespace {

constexpr char kMagic[] = "SCODW1";
constexpr std::size_t kMagicLen = 6;

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(out, bits);
}

std::uint64_t take_u64(const std::string& in, std::size_t& pos) {
    if (pos + 8 > in.size()) throw std::runtime_error("weights: truncated at byte " +
                                                      std::to_string(pos));
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    pos += 8;
    return v;
}

double take_f64(const std::string& in, std::size_t& pos) {
    const std::uint64_t bits = take_u64(in, pos);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

} // namespace

std::string weights_to_bytes(const std::map<std::string, Tensor>& tensors) {
    std::string out(kMagic, kMagicLen);
    for (const auto& [name, t] : tensors) {
        put_u64(out, name.size());
        out += name;
        put_u64(out, t.rank());
        for (std::size_t e : t.shape) put_u64(out, e);
        for (double v : t.data) put_f64(out, v);
    }
    return out;
}

std::map<std::string, Tensor> weights_from_bytes(const std::string& bytes) {
    if (bytes.size() < kMagicLen || bytes.compare(0, kMagicLen, kMagic) != 0)
        throw std::runtime_error("weights: bad magic, not a SCODW1 container");
    std::map<std::string, Tensor> out;
    std::size_t pos = kMagicLen;
    while (pos < bytes.size()) {
        const std::uint64_t name_len = take_u64(bytes, pos);
        if (pos + name_len > bytes.size())
            throw std::runtime_error("weights: truncated tensor name at byte " +
                                     std::to_string(pos));
        std::string name = bytes.substr(pos, name_len);
        pos += name_len;
        const std::uint64_t rank = take_u64(bytes, pos);
        std::vector<std::size_t> shape;
        for (std::uint64_t i = 0; i < rank; ++i)
            shape.push_back(static_cast<std::size_t>(take_u64(bytes, pos)));
        Tensor t(shape);
        for (double& v : t.data) v = take_f64(bytes, pos);
        out.emplace(std::move(name), std::move(t));
    }
    return out;
}

void save_weights(const std::string& path, const std::map<std::string, Tensor>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("weights: cannot open " + path + " for writing");
    const std::string bytes = weights_to_bytes(tensors);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("weights: write failed for " + path);
}

std::map<std::string, Tensor> load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("weights: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return weights_from_bytes(bytes);
}

} // namespace scod
