#include "afgrl/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "afgrl/error.hpp"

namespace afgrl {

namespace {

constexpr char kMagic[8] = {'A', 'F', 'G', 'R', 'L', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) throw DataError(path + ": truncated checkpoint");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in, const std::string& path) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), 8)) throw DataError(path + ": truncated checkpoint");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const TensorMap& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof kMagic);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const NamedTensor& t : tensors) {
        write_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        write_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        std::size_t count = 1;
        for (std::size_t d : t.shape) {
            write_u64(out, d);
            count *= d;
        }
        if (count != t.data.size()) {
            throw DataError("checkpoint tensor '" + t.name + "' shape/data mismatch");
        }
        for (double v : t.data) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            write_u64(out, bits);
        }
    }
    if (!out) throw DataError("failed writing checkpoint: " + path);
}

TensorMap load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw DataError(path + ": not an afgrl checkpoint");
    }
    const std::uint32_t version = read_u32(in, path);
    if (version != kVersion) {
        throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint32_t count = read_u32(in, path);
    TensorMap tensors;
    tensors.reserve(count);
    for (std::uint32_t t = 0; t < count; ++t) {
        NamedTensor nt;
        const std::uint32_t name_len = read_u32(in, path);
        nt.name.resize(name_len);
        if (!in.read(nt.name.data(), name_len)) throw DataError(path + ": truncated checkpoint");
        const std::uint32_t ndim = read_u32(in, path);
        std::size_t numel = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            const std::uint64_t dim = read_u64(in, path);
            nt.shape.push_back(static_cast<std::size_t>(dim));
            numel *= static_cast<std::size_t>(dim);
        }
        nt.data.resize(numel);
        for (std::size_t i = 0; i < numel; ++i) {
            const std::uint64_t bits = read_u64(in, path);
            double v;
            std::memcpy(&v, &bits, sizeof v);
            nt.data[i] = v;
        }
        tensors.push_back(std::move(nt));
    }
    return tensors;
}

const NamedTensor* find_tensor(const TensorMap& tensors, const std::string& name) {
    for (const NamedTensor& t : tensors) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

TensorMap network_tensors(const DualNetwork& net) {
    TensorMap out;
    visit_tensors(const_cast<DualNetwork&>(net),
                  [&](const std::string& name, double* data, std::size_t len,
                      std::vector<std::size_t> shape, bool) {
                      NamedTensor t;
                      t.name = name;
                      t.shape = std::move(shape);
                      t.data.assign(data, data + len);
                      out.push_back(std::move(t));
                  });
    return out;
}

void load_network_tensors(DualNetwork& net, const TensorMap& tensors) {
    visit_tensors(net, [&](const std::string& name, double* data, std::size_t len,
                           std::vector<std::size_t> shape, bool) {
        const NamedTensor* t = find_tensor(tensors, name);
        if (!t) throw DataError("checkpoint is missing tensor '" + name + "'");
        if (t->shape != shape || t->data.size() != len) {
            throw DataError("checkpoint tensor '" + name + "' has mismatched shape");
        }
        std::memcpy(data, t->data.data(), len * sizeof(double));
    });
}

DenseMatrix tensor_as_matrix(const NamedTensor& t) {
    if (t.shape.size() != 2) {
        throw DataError("tensor '" + t.name + "' is not a matrix");
    }
    DenseMatrix m(t.shape[0], t.shape[1]);
    m.data = t.data;
    return m;
}

NamedTensor matrix_as_tensor(const std::string& name, const DenseMatrix& m) {
    NamedTensor t;
    t.name = name;
    t.shape = {m.rows, m.cols};
    t.data = m.data;
    return t;
}

}  // namespace afgrl
