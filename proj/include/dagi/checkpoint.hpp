#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dagi/matrix.hpp"

namespace dagi {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// One serialized model: a JSON header (kind, hyperparameters, schema
/// fingerprint, training record) plus named f64 matrix payloads. All model
/// families share this container, discriminated by header["model_kind"].
struct Checkpoint {
    nlohmann::ordered_json header;
    std::vector<std::pair<std::string, Matrix>> matrices;

    /// Header field access that throws FormatError (not a json exception)
    /// on missing keys, so callers surface readable load errors.
    const nlohmann::ordered_json& field(const std::string& key) const;
};

/// Layout: magic "DAGICKPT", format version (u32 LE), header length
/// (u64 LE), header JSON (UTF-8, carries the matrix manifest), then each
/// matrix as rows x cols little-endian f64 in manifest order. Writes are
/// atomic.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

/// FormatError on bad magic, unsupported version, truncation, or a
/// manifest/payload mismatch; IoError on unreadable paths.
Checkpoint load_checkpoint(const std::string& path);

} // namespace dagi
