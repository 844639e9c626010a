#pragma once

#include <string>

#include "reqgen/model.hpp"

namespace reqgen {

struct Checkpoint {
  int version = 1;
  Parameters params;
  Vocabulary vocab;
};

// Single JSON document {version, config, vocabulary, parameters}. Doubles are
// emitted with shortest round-trip formatting, so save/load is loss-identical
// and re-saving an unchanged model is byte-identical.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

}  // namespace reqgen
