#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dmca/tensor.hpp"

namespace dmca::tg {

/// Ordered, named collection of trainable tensors. Iteration order is the
/// insertion order and is what the checkpoint format serializes.
class ParamStore {
public:
    Tensor& add(const std::string& name, Tensor t) {
        if (index_.count(name))
            throw std::invalid_argument("ParamStore: duplicate name '" + name + "'");
        t.set_requires_grad();
        index_[name] = items_.size();
        items_.emplace_back(name, std::move(t));
        return items_.back().second;
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    Tensor& get(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end())
            throw std::out_of_range("ParamStore: missing tensor '" + name + "'");
        return items_[it->second].second;
    }
    const Tensor& get(const std::string& name) const {
        return const_cast<ParamStore*>(this)->get(name);
    }

    std::vector<std::pair<std::string, Tensor>>& items() { return items_; }
    const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }

    std::size_t total_scalars() const {
        std::size_t n = 0;
        for (const auto& [_, t] : items_) n += t.size();
        return n;
    }

    void zero_grads() {
        for (auto& [_, t] : items_) t.zero_grad();
    }

    /// Deep copy: fresh value buffers, no grads.
    ParamStore clone() const {
        ParamStore out;
        for (const auto& [name, t] : items_) {
            Tensor c = Tensor::zeros(t.rows(), t.cols());
            c.values() = t.values();
            out.add(name, c);
        }
        return out;
    }

    /// Copy values from another store with identical layout.
    void copy_values_from(const ParamStore& other) {
        if (other.items_.size() != items_.size())
            throw std::invalid_argument("copy_values_from: store size mismatch");
        for (std::size_t i = 0; i < items_.size(); ++i) {
            if (other.items_[i].second.size() != items_[i].second.size())
                throw std::invalid_argument("copy_values_from: shape mismatch at '" +
                                            items_[i].first + "'");
            items_[i].second.values() = other.items_[i].second.values();
        }
    }

private:
    std::vector<std::pair<std::string, Tensor>> items_;
    std::unordered_map<std::string, std::size_t> index_;
};

// ---- checkpoint file format ----
//
//   magic   8 bytes  "DMCATG01"
//   bom     u16      0x0102 (byte-order probe; file is little-endian)
//   fsize   u8       bytes per float (8 or 4)
//   version u32      1
//   count   u64      number of records
// then per record:
//   name_len u32, name bytes, rank u32, extents u64[rank],
//   payload: prod(extents) little-endian floats.

namespace detail_ckpt {
inline constexpr char kMagic[8] = {'D', 'M', 'C', 'A', 'T', 'G', '0', '1'};

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& is, const std::string& what) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated while reading " + what);
    return v;
}
} // namespace detail_ckpt

inline void save(const ParamStore& store, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    using namespace detail_ckpt;
    os.write(kMagic, 8);
    put<std::uint16_t>(os, 0x0102);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(sizeof(real)));
    put<std::uint32_t>(os, 1);
    put<std::uint64_t>(os, store.size());
    for (const auto& [name, t] : store.items()) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint32_t>(os, 2);
        put<std::uint64_t>(os, t.rows());
        put<std::uint64_t>(os, t.cols());
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.size() * sizeof(real)));
    }
    if (!os) throw std::runtime_error("checkpoint: write failure on " + path);
}

inline ParamStore load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    using namespace detail_ckpt;
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    auto bom = take<std::uint16_t>(is, "byte-order mark");
    if (bom != 0x0102)
        throw std::runtime_error("checkpoint: byte order mismatch in " + path);
    auto fsize = take<std::uint8_t>(is, "float size");
    if (fsize != sizeof(real))
        throw std::runtime_error("checkpoint: float width " + std::to_string(fsize) +
                                 " does not match build (" +
                                 std::to_string(sizeof(real)) + ")");
    auto version = take<std::uint32_t>(is, "version");
    if (version != 1)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    auto count = take<std::uint64_t>(is, "record count");

    ParamStore store;
    for (std::uint64_t r = 0; r < count; ++r) {
        auto name_len = take<std::uint32_t>(is, "record name length");
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) throw std::runtime_error("checkpoint: truncated record name");
        auto rank = take<std::uint32_t>(is, "rank of '" + name + "'");
        if (rank != 2)
            throw std::runtime_error("checkpoint: record '" + name + "' has rank " +
                                     std::to_string(rank) + ", expected 2");
        auto rows = take<std::uint64_t>(is, "extents of '" + name + "'");
        auto cols = take<std::uint64_t>(is, "extents of '" + name + "'");
        Tensor t = Tensor::zeros(rows, cols);
        is.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.size() * sizeof(real)));
        if (!is)
            throw std::runtime_error("checkpoint: truncated payload in record '" + name + "'");
        store.add(name, std::move(t));
    }
    return store;
}

} // namespace dmca::tg
