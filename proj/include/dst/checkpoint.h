#ifndef DST_CHECKPOINT_H_
#define DST_CHECKPOINT_H_

#include <string>

#include "json.hpp"

namespace dst {

// Shared container for every trained head:
//   {"format_version": 1, "section": "<mrc|wd|intent|reqslot>", ...}
// Doubles are written in shortest round-trip form, so reloading is
// bit-exact.
inline constexpr int kCheckpointFormatVersion = 1;

void WriteCheckpoint(const std::string& path, const nlohmann::json& body,
                     const std::string& section);

// Throws CompatibilityError on version or section mismatch.
nlohmann::json ReadCheckpoint(const std::string& path, const std::string& section);

nlohmann::json ReadJsonFile(const std::string& path);
void WriteJsonFile(const std::string& path, const nlohmann::json& value);

}  // namespace dst

#endif  // DST_CHECKPOINT_H_
