#pragma once

#include <string>
#include <utility>
#include <vector>

#include "adr/encoder.hpp"

namespace adr {

struct Concept {
  std::string code;
  std::string term;
};

struct Checkpoint {
  ModelParams params;
  std::vector<std::pair<std::string, std::string>> metadata;  // ordered key/value
  std::vector<Concept> concepts;                               // concept head order

  const std::string* find_metadata(const std::string& key) const;
};

// Text header (format tag, config, metadata, concept list, tensor manifest)
// followed by a `data` line and the raw little-endian float32 tensors in
// manifest order, row-major.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace adr
