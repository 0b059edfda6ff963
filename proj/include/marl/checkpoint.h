#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "marl/paramstore.h"

namespace marl {

// Versioned JSON snapshot of one or more parameter stores plus the config
// hash of the run that produced it. Doubles are serialized shortest-roundtrip
// so values survive save/load bit-compatibly; a checksum over the payload
// rejects tampered files.
namespace checkpoint {

constexpr int kVersion = 1;

void save(const std::string& path, const std::map<std::string, const ParamStore*>& stores,
          std::uint64_t config_hash, const std::string& rng_state = "");

struct Loaded {
  std::map<std::string, ParamStore> stores;
  std::uint64_t config_hash = 0;
  std::string rng_state;
};

Loaded load(const std::string& path);

// convenience for a single store
void save_single(const std::string& path, const ParamStore& store, std::uint64_t config_hash);
ParamStore load_single(const std::string& path, std::uint64_t expect_hash);

}  // namespace checkpoint

}  // namespace marl
