#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "msse/params.hpp"

namespace msse {

// Binary checkpoint:
//   magic "MSSE", u32 version, u32 tensor count,
//   per tensor: u16 name length, UTF-8 name, u8 dtype tag (0 = f32, 1 = u8),
//               u8 rank, u32 dims, raw little-endian payload,
//   trailing u64 optimizer step.
// Each parameter contributes three f32 tensors (value, <name>.m, <name>.v);
// the run-config echo travels as one u8 tensor named "__config__".
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointTensor {
    std::uint8_t dtype = 0;
    std::vector<std::uint32_t> dims;
    std::vector<float> f32;
    std::vector<std::uint8_t> bytes;
};

struct Checkpoint {
    std::vector<std::pair<std::string, CheckpointTensor>> tensors; // file order
    std::uint64_t step = 0;

    const CheckpointTensor *find(const std::string &name) const;
    std::string config_echo() const;

    // Copies value/moment tensors into the store; throws (naming the tensor)
    // on any missing entry or shape disagreement.
    void apply(ParamStore<float> &store, const std::string &prefix) const;
};

void checkpoint_add_store(Checkpoint &ckpt, const ParamStore<float> &store,
                          const std::string &prefix);
void checkpoint_set_config(Checkpoint &ckpt, const std::string &config_json);

void save_checkpoint(const Checkpoint &ckpt, const std::string &path);
Checkpoint load_checkpoint(const std::string &path);

} // namespace msse
