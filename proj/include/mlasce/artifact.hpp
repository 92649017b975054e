#pragma once

#include <string>

#include "mlasce/multilevel.hpp"

namespace mlasce {

inline constexpr int kArtifactVersion = 1;

/// Versioned JSON document with every level's design, outputs and fitted
/// hyperparameters plus the full ledger. Doubles are written with round-trip
/// precision and nothing time-dependent is stored, so equal runs give equal bytes.
std::string artifact_to_string(const MultilevelEmulator& emulator);
MultilevelEmulator artifact_from_string(const std::string& text);

void save_artifact(const MultilevelEmulator& emulator, const std::string& path);
/// Throws ConfigError for unreadable files, unknown versions or inconsistent contents.
MultilevelEmulator load_artifact(const std::string& path);

}  // namespace mlasce
