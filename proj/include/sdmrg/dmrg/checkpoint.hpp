#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdmrg/dmrg/dmrg.hpp"

// Checkpoint file, all integers and doubles little-endian:
//
//   magic "SDMRGCKP", u32 version
//   sections: u32 tag, u64 payload length, payload, u32 CRC-32 of the payload
//   the last section has tag END and an empty payload
//
// Sections: HEAD (fingerprint, sites, seed, target, flags, cursor, warmup
// energies), BLOK (one per stored block), WAVE (the pending start vector),
// RECS (sweep records). A SectorBasis is u32 count then (i32, i32, i64) per
// sector; a SectorMatrix is both bases, the delta and its blocks in key order.

namespace sdmrg {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class CheckpointVersionError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};
class CheckpointCorrupt : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

std::vector<std::uint8_t> encode_checkpoint(const EngineState& state);
/// `site` rebuilds wavefunction layouts. Throws CheckpointCorrupt on a bad
/// magic, checksum, length or truncation and CheckpointVersionError on an
/// unknown version.
EngineState decode_checkpoint(const std::vector<std::uint8_t>& bytes, const LocalBasis& site);

/// Writes to a temporary file next to `path` and renames it into place.
void write_checkpoint(const EngineState& state, const std::filesystem::path& path);
EngineState read_checkpoint(const std::filesystem::path& path, const LocalBasis& site);

}  // namespace sdmrg
