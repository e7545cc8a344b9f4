#pragma once

#include <string>

#include "sentigen/corpus.hpp"
#include "sentigen/model.hpp"

namespace sentigen {

// Trained model plus everything needed to run it.
struct Checkpoint {
  ModelParams params;
  Vocabulary vocab;
};

// Binary container, all integers and doubles little-endian:
//   magic "SGCK", u32 version (currently 1)
//   config: u32 variant, i32 vocab_size/embed_dim/hidden_dim/
//           sentiment_embed_dim/feature_dim/classifier_hidden
//   vocab:  u32 count, then per token u32 length + bytes (id order,
//           reserved four first)
//   params: u32 count, then per tensor u32 name length + name bytes,
//           u32 rank, i32 dims, f64 values (row-major, raw IEEE-754 bits)
// The writer is deterministic, so save -> load -> save reproduces the file
// byte for byte.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sentigen
