#pragma once

#include <iosfwd>
#include <string>

#include "halluguard/tinylm/model.hpp"
#include "halluguard/tinylm/vocabulary.hpp"

namespace halluguard::tinylm {

// Binary checkpoint: magic "HGTM", version, config, alphabet and every tensor
// row-major as little-endian float32 in declaration order. Weights are
// rounded to float on save; a save of a loaded checkpoint is bit-identical.
struct Checkpoint {
  TinyLM model;
  Vocabulary vocab;
};

void save_checkpoint(std::ostream& out, const TinyLM& model, const Vocabulary& vocab);
void save_checkpoint(const std::string& path, const TinyLM& model, const Vocabulary& vocab);

// Throws Error(kBadMagic / kVersionMismatch / kParse) and TruncatedError
// on a short file.
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace halluguard::tinylm
