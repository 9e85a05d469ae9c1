// SPDX-License-Identifier: Apache-2.0
#include "avflow/tensor_io.hpp"

#include <fstream>
#include <sstream>

#include "avflow/errors.hpp"

namespace avflow {

void write_tensor_archive(const std::string& path, const TensorArchive& t) {
    if (t.name.find(' ') != std::string::npos)
        throw ContractError("tensor archive: name must not contain spaces");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("tensor archive: cannot open " + path + " for writing");
    std::ostringstream header;
    header.precision(17);
    header << "avtens 1 " << t.data.rows << " " << t.data.cols << " " << t.fps << " "
           << (t.name.empty() ? "-" : t.name) << "\n";
    os << header.str();
    os.write(reinterpret_cast<const char*>(t.data.v.data()),
             static_cast<std::streamsize>(t.data.numel() * sizeof(float)));
    if (!os) throw IoError("tensor archive: write failed for " + path);
}

TensorArchive read_tensor_archive(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("tensor archive: cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw IoError("tensor archive: missing header in " + path);
    std::istringstream hs(line);
    std::string magic;
    int version = 0, rows = 0, cols = 0;
    TensorArchive t;
    if (!(hs >> magic >> version >> rows >> cols >> t.fps >> t.name) || magic != "avtens")
        throw IoError("tensor archive: bad header in " + path);
    if (version != 1)
        throw IoError("tensor archive: unsupported version " + std::to_string(version));
    if (rows < 0 || cols < 0) throw IoError("tensor archive: negative shape in " + path);
    if (t.name == "-") t.name.clear();
    t.data.resize(rows, cols);
    is.read(reinterpret_cast<char*>(t.data.v.data()),
            static_cast<std::streamsize>(t.data.numel() * sizeof(float)));
    if (!is) throw IoError("tensor archive: truncated payload in " + path);
    return t;
}

}  // namespace avflow
