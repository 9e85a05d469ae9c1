// SPDX-License-Identifier: Apache-2.0
//
// Self-describing checkpoint: a text config block, a tensor manifest
// (name, shape), then little-endian f32 payloads. Loads are all-or-nothing.
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "avflow/config.hpp"
#include "avflow/errors.hpp"
#include "avflow/network.hpp"

namespace avflow {

inline constexpr char kCkptMagic[8] = {'A', 'V', 'C', 'K', 'P', 'T', '0', '\n'};
inline constexpr uint32_t kCkptVersion = 1;

struct CheckpointHeader {
    ModelConfig model;
    TrainConfig train;
    int64_t step = 0;
};

namespace ckptdetail {

template <typename V>
void write_pod(std::ostream& os, const V& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
void read_pod(std::istream& is, V& v, const char* what) {
    is.read(reinterpret_cast<char*>(&v), sizeof(V));
    if (!is) throw IoError(std::string("checkpoint: truncated while reading ") + what);
}

inline void write_str(std::ostream& os, const std::string& s) {
    write_pod(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_str(std::istream& is, const char* what) {
    uint32_t n = 0;
    read_pod(is, n, what);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw IoError(std::string("checkpoint: truncated while reading ") + what);
    return s;
}

}  // namespace ckptdetail

struct NamedTensorRef {
    std::string name;
    const MatF* mat;
};

inline std::vector<NamedTensorRef> checkpoint_tensor_list(const Network<float>& net,
                                                          const std::vector<MatF>* m,
                                                          const std::vector<MatF>* v,
                                                          const std::vector<MatF>* ema) {
    std::vector<NamedTensorRef> out;
    for (size_t i = 0; i < net.ps.specs.size(); ++i)
        out.push_back({"param." + net.ps.specs[i].name, &net.ps.value[i]});
    auto add_group = [&](const char* prefix, const std::vector<MatF>* group) {
        if (group == nullptr) return;
        for (size_t i = 0; i < net.ps.specs.size(); ++i)
            out.push_back({prefix + net.ps.specs[i].name, &(*group)[i]});
    };
    add_group("adam.m.", m);
    add_group("adam.v.", v);
    add_group("ema.", ema);
    return out;
}

inline void save_checkpoint(const std::string& path, const Network<float>& net,
                            const TrainConfig& tcfg, int64_t step, const std::vector<MatF>* m,
                            const std::vector<MatF>* v, const std::vector<MatF>* ema) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("checkpoint: cannot open " + path + " for writing");
    os.write(kCkptMagic, sizeof(kCkptMagic));
    ckptdetail::write_pod(os, kCkptVersion);
    ckptdetail::write_str(os, serialize_configs(net.cfg, tcfg, SampleConfig{}));
    ckptdetail::write_pod(os, static_cast<int64_t>(step));
    const auto tensors = checkpoint_tensor_list(net, m, v, ema);
    ckptdetail::write_pod(os, static_cast<uint64_t>(tensors.size()));
    for (const auto& t : tensors) {
        ckptdetail::write_str(os, t.name);
        ckptdetail::write_pod(os, static_cast<uint32_t>(t.mat->rows));
        ckptdetail::write_pod(os, static_cast<uint32_t>(t.mat->cols));
    }
    for (const auto& t : tensors)
        os.write(reinterpret_cast<const char*>(t.mat->v.data()),
                 static_cast<std::streamsize>(t.mat->numel() * sizeof(float)));
    if (!os) throw IoError("checkpoint: write failed for " + path);
}

/// Reads the embedded configs and step without touching tensor payloads.
inline CheckpointHeader read_checkpoint_header(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
        throw IoError("checkpoint: bad magic in " + path);
    uint32_t version = 0;
    ckptdetail::read_pod(is, version, "version");
    if (version != kCkptVersion)
        throw IoError("checkpoint: unsupported format version " + std::to_string(version));
    CheckpointHeader h;
    const std::string cfg_text = ckptdetail::read_str(is, "config");
    SampleConfig scfg;
    std::istringstream cfg_in(cfg_text);
    std::string line;
    while (std::getline(cfg_in, line)) {
        const size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const size_t a = s.find_first_not_of(" \t");
            const size_t b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        apply_config_kv(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), h.model, h.train, scfg);
    }
    ckptdetail::read_pod(is, h.step, "step");
    return h;
}

struct TensorInfo {
    std::string name;
    int rows = 0;
    int cols = 0;
};

/// Manifest listing without reading payloads.
inline std::vector<TensorInfo> list_checkpoint_tensors(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
        throw IoError("checkpoint: bad magic in " + path);
    uint32_t version = 0;
    ckptdetail::read_pod(is, version, "version");
    if (version != kCkptVersion)
        throw IoError("checkpoint: unsupported format version " + std::to_string(version));
    (void)ckptdetail::read_str(is, "config");
    int64_t step = 0;
    ckptdetail::read_pod(is, step, "step");
    uint64_t n_tensors = 0;
    ckptdetail::read_pod(is, n_tensors, "tensor count");
    std::vector<TensorInfo> out;
    out.reserve(n_tensors);
    for (uint64_t i = 0; i < n_tensors; ++i) {
        TensorInfo t;
        t.name = ckptdetail::read_str(is, "tensor name");
        uint32_t r = 0, c = 0;
        ckptdetail::read_pod(is, r, "tensor shape");
        ckptdetail::read_pod(is, c, "tensor shape");
        t.rows = static_cast<int>(r);
        t.cols = static_cast<int>(c);
        out.push_back(std::move(t));
    }
    return out;
}

/// Fills an allocated network (and optionally optimizer moments and EMA
/// shadow) from a checkpoint. Every tensor must match the network's name and
/// shape; nothing is committed until the whole file has been read.
inline int64_t load_checkpoint_into(const std::string& path, Network<float>& net,
                                    std::vector<MatF>* m, std::vector<MatF>* v,
                                    std::vector<MatF>* ema) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
        throw IoError("checkpoint: bad magic in " + path);
    uint32_t version = 0;
    ckptdetail::read_pod(is, version, "version");
    if (version != kCkptVersion)
        throw IoError("checkpoint: unsupported format version " + std::to_string(version));
    (void)ckptdetail::read_str(is, "config");
    int64_t step = 0;
    ckptdetail::read_pod(is, step, "step");
    uint64_t n_tensors = 0;
    ckptdetail::read_pod(is, n_tensors, "tensor count");

    struct Entry {
        std::string name;
        int rows, cols;
    };
    std::vector<Entry> entries;
    entries.reserve(n_tensors);
    for (uint64_t i = 0; i < n_tensors; ++i) {
        Entry e;
        e.name = ckptdetail::read_str(is, "tensor name");
        uint32_t r = 0, c = 0;
        ckptdetail::read_pod(is, r, "tensor shape");
        ckptdetail::read_pod(is, c, "tensor shape");
        e.rows = static_cast<int>(r);
        e.cols = static_cast<int>(c);
        entries.push_back(std::move(e));
    }

    std::vector<MatF> payloads(entries.size());
    for (size_t i = 0; i < entries.size(); ++i) {
        payloads[i].resize(entries[i].rows, entries[i].cols);
        is.read(reinterpret_cast<char*>(payloads[i].v.data()),
                static_cast<std::streamsize>(payloads[i].numel() * sizeof(float)));
        if (!is)
            throw IoError("checkpoint: truncated payload for tensor " + entries[i].name);
    }

    // Validate every group before committing anything, so a bad file never
    // leaves partially loaded state behind.
    auto for_group = [&](const std::string& prefix, auto touch) {
        for (size_t i = 0; i < net.ps.specs.size(); ++i) {
            const std::string want = prefix + net.ps.specs[i].name;
            bool found = false;
            for (size_t j = 0; j < entries.size(); ++j) {
                if (entries[j].name != want) continue;
                if (entries[j].rows != net.ps.specs[i].rows ||
                    entries[j].cols != net.ps.specs[i].cols)
                    throw ConfigError("checkpoint: shape mismatch for tensor " + want +
                                      ": file has (" + std::to_string(entries[j].rows) + ", " +
                                      std::to_string(entries[j].cols) + "), model expects (" +
                                      std::to_string(net.ps.specs[i].rows) + ", " +
                                      std::to_string(net.ps.specs[i].cols) + ")");
                touch(i, j);
                found = true;
                break;
            }
            if (!found) throw IoError("checkpoint: missing tensor " + want);
        }
    };
    auto validate = [](size_t, size_t) {};
    for_group("param.", validate);
    if (m != nullptr) for_group("adam.m.", validate);
    if (v != nullptr) for_group("adam.v.", validate);
    if (ema != nullptr) for_group("ema.", validate);
    for_group("param.", [&](size_t i, size_t j) { net.ps.value[i] = payloads[j]; });
    if (m != nullptr) for_group("adam.m.", [&](size_t i, size_t j) { (*m)[i] = payloads[j]; });
    if (v != nullptr) for_group("adam.v.", [&](size_t i, size_t j) { (*v)[i] = payloads[j]; });
    if (ema != nullptr) for_group("ema.", [&](size_t i, size_t j) { (*ema)[i] = payloads[j]; });
    return step;
}

}  // namespace avflow
