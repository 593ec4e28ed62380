#include "nanosr/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace nanosr {

namespace {

void put_u16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) {
    put_u32(out, std::bit_cast<uint32_t>(f));
}

struct Reader {
    const std::string& buf;
    size_t pos = 0;
    std::string context = "header";

    void need(size_t n) {
        if (pos + n > buf.size())
            throw std::runtime_error("truncated weight file while reading " + context);
    }
    uint8_t u8() {
        need(1);
        return static_cast<uint8_t>(buf[pos++]);
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint8_t>(buf[pos]) |
                     (static_cast<uint16_t>(static_cast<uint8_t>(buf[pos + 1])) << 8);
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string bytes(size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void write_weight_file(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::string out;
    out += "NSRW";
    put_u32(out, kWeightFileVersion);
    put_u32(out, static_cast<uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        put_u16(out, static_cast<uint16_t>(t.name.size()));
        out += t.name;
        out.push_back(static_cast<char>(t.rank));
        size_t numel = 1;
        for (int d = 0; d < t.rank; ++d) {
            put_u32(out, static_cast<uint32_t>(t.dims[d]));
            numel *= static_cast<size_t>(t.dims[d]);
        }
        out.push_back(0);  // dtype f32
        if (numel != t.data.size())
            throw std::invalid_argument("tensor " + t.name + ": payload does not match dims");
        for (float f : t.data) put_f32(out, f);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write failed for " + path);
}

std::vector<NamedTensor> read_weight_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r{buf};
    if (r.bytes(4) != "NSRW") throw std::runtime_error(path + ": bad magic, not a weight file");
    const uint32_t version = r.u32();
    if (version != kWeightFileVersion)
        throw std::runtime_error(path + ": unsupported weight file version " +
                                 std::to_string(version));
    const uint32_t count = r.u32();
    std::vector<NamedTensor> tensors;
    tensors.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        r.context = "tensor #" + std::to_string(i);
        NamedTensor t;
        const uint16_t name_len = r.u16();
        t.name = r.bytes(name_len);
        r.context = "tensor " + t.name;
        t.rank = r.u8();
        if (t.rank < 1 || t.rank > 4)
            throw std::runtime_error(path + ": tensor " + t.name + " has invalid rank");
        size_t numel = 1;
        for (int d = 0; d < t.rank; ++d) {
            t.dims[d] = static_cast<int>(r.u32());
            numel *= static_cast<size_t>(t.dims[d]);
        }
        const uint8_t dtype = r.u8();
        if (dtype != 0)
            throw std::runtime_error(path + ": tensor " + t.name + " has unsupported dtype");
        t.data.resize(numel);
        for (size_t k = 0; k < numel; ++k) t.data[k] = r.f32();
        tensors.push_back(std::move(t));
    }
    return tensors;
}

std::vector<NamedTensor> graph_tensors(ModelGraph& g) {
    std::vector<NamedTensor> out;
    for (const auto& p : collect_params(g)) {
        NamedTensor t;
        t.name = p.name;
        t.rank = p.rank;
        t.dims = p.dims;
        t.data.assign(p.data, p.data + p.size);
        out.push_back(std::move(t));
    }
    return out;
}

void save_weights(ModelGraph& g, const std::string& path) {
    write_weight_file(path, graph_tensors(g));
}

void load_weights(ModelGraph& g, const std::string& path) {
    auto tensors = read_weight_file(path);
    auto params = collect_params(g);
    if (tensors.size() != params.size())
        throw std::runtime_error(path + ": file has " + std::to_string(tensors.size()) +
                                 " tensors, graph " + g.arch_id + " expects " +
                                 std::to_string(params.size()));
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& t = tensors[i];
        auto& p = params[i];
        if (t.name != p.name)
            throw std::runtime_error(path + ": tensor " + t.name + " where " + p.name +
                                     " was expected");
        if (t.rank != p.rank || t.dims != p.dims || t.data.size() != p.size)
            throw std::runtime_error(path + ": tensor " + t.name +
                                     " dims do not match the target graph");
        std::copy(t.data.begin(), t.data.end(), p.data);
    }
}

long long weight_file_bytes(ModelGraph& g) {
    long long total = 12;  // magic + version + count
    for (const auto& p : collect_params(g))
        total += 2 + static_cast<long long>(p.name.size()) + 1 + 4LL * p.rank + 1 +
                 4LL * static_cast<long long>(p.size);
    return total;
}

}  // namespace nanosr
