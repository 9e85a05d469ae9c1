// SPDX-License-Identifier: Apache-2.0
//
// Shared single-matrix file format: one ASCII header line
//   avtens 1 <rows> <cols> <fps> <name>
// followed by rows*cols little-endian f32 values. Used for mel matrices,
// latents, envelopes, embeddings, and logit sets.
#pragma once

#include <string>

#include "avflow/mat.hpp"

namespace avflow {

struct TensorArchive {
    MatF data;
    double fps = 0.0;     // 0 when not a rate-bearing sequence
    std::string name;     // preset or source tag, no spaces
};

void write_tensor_archive(const std::string& path, const TensorArchive& t);
TensorArchive read_tensor_archive(const std::string& path);

}  // namespace avflow
