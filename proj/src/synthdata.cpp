// SPDX-License-Identifier: Apache-2.0
#include "avflow/synthdata.hpp"

#include <fstream>
#include <sstream>

namespace avflow {

std::string manifest_to_text(const std::vector<ManifestRecord>& records) {
    std::ostringstream os;
    os.precision(17);
    for (const auto& r : records) {
        os << "seed=" << r.seed << " class=" << r.class_id << " duration=" << r.duration_sec
           << " has_video=" << (r.has_video ? 1 : 0) << " has_text=" << (r.has_text ? 1 : 0)
           << "\n";
    }
    return os.str();
}

std::vector<ManifestRecord> manifest_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("manifest: cannot open " + path);
    std::vector<ManifestRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        ManifestRecord r;
        std::istringstream is(line);
        std::string field;
        int seen = 0;
        while (is >> field) {
            const size_t eq = field.find('=');
            if (eq == std::string::npos)
                throw IoError("manifest: " + path + ":" + std::to_string(lineno) + ": bad field");
            const std::string key = field.substr(0, eq);
            const std::string val = field.substr(eq + 1);
            try {
                if (key == "seed") r.seed = std::stoull(val);
                else if (key == "class") r.class_id = std::stoi(val);
                else if (key == "duration") r.duration_sec = std::stod(val);
                else if (key == "has_video") r.has_video = std::stoi(val) != 0;
                else if (key == "has_text") r.has_text = std::stoi(val) != 0;
                else throw IoError("manifest: unknown field '" + key + "'");
            } catch (const std::logic_error&) {
                throw IoError("manifest: " + path + ":" + std::to_string(lineno) +
                              ": bad value for " + key);
            }
            ++seen;
        }
        if (seen != 5)
            throw IoError("manifest: " + path + ":" + std::to_string(lineno) +
                          ": expected 5 fields");
        out.push_back(r);
    }
    return out;
}

}  // namespace avflow
