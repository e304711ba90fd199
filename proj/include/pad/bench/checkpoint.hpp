#pragma once

#include <cstdint>
#include <string>

#include "pad/bench/runconfig.hpp"
#include "pad/policynet/policy.hpp"

namespace pad::bench {

// CRC-32 (IEEE 0xEDB88320, zlib-compatible).
uint32_t crc32(const uint8_t* data, size_t len);

// Binary checkpoint: "PADC" magic, u32 version, length-prefixed UTF-8 config
// snapshot (RunConfig text plus partition membership lines), tensor count,
// then per tensor a length-prefixed name, rank, u32 dims and f32 payload,
// all little-endian, closed by a CRC-32 of every preceding byte.
// save -> load -> save is byte-identical.
void checkpoint_save(const policynet::PolicyParams& params, const RunConfig& config,
                     const std::string& path);

struct LoadedCheckpoint {
    policynet::PolicyParams params;
    RunConfig config;
};

LoadedCheckpoint checkpoint_load(const std::string& path);

}  // namespace pad::bench
