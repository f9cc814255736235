#pragma once

#include <cstdint>
#include <string>

#include "ctc/models.hpp"

namespace ctc {

// Checkpoint file layout (little-endian):
//   bytes 0..3   magic "CTCM"
//   bytes 4..7   format version, u32
//   bytes 8..15  header length in bytes, u64
//   header       UTF-8 JSON: model config document, vocab digest (hex), and a
//                tensor manifest with name, shape, payload-relative byte
//                offset, byte count, and a per-tensor 64-bit FNV-1a checksum
//   payload      raw float32 tensor data, starting at the first 8-byte
//                boundary after the header, each segment 8-byte aligned
inline constexpr char kCheckpointMagic[4] = {'C', 'T', 'C', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
    std::uint32_t version = 0;
    std::string model_config_json;
    std::uint64_t vocab_digest = 0;
    Extent tensor_count = 0;
};

void save_checkpoint(const Model& model, std::uint64_t vocab_digest, const std::string& path);

CheckpointMeta read_checkpoint_meta(const std::string& path);

// Rebuilds the model from the stored config and restores every tensor.
// data_error on: unreadable file, bad magic, version mismatch, vocab-digest
// mismatch, manifest/model disagreement, truncation, or checksum failure.
Model load_checkpoint(const std::string& path, std::uint64_t expected_vocab_digest);

}  // namespace ctc
