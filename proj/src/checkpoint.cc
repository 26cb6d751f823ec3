#include "dst/checkpoint.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dst/errors.h"

namespace dst {

nlohmann::json ReadJsonFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    size_t off = e.byte == 0 ? 0 : std::min<size_t>(e.byte - 1, text.size());
    int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + off, '\n'));
    throw ParseError(path, line, "", e.what());
  }
}

void WriteJsonFile(const std::string& path, const nlohmann::json& value) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << value.dump(1) << "\n";
  if (!out) throw Error("write failed for '" + path + "'");
}

void WriteCheckpoint(const std::string& path, const nlohmann::json& body,
                     const std::string& section) {
  nlohmann::json doc = body;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["section"] = section;
  WriteJsonFile(path, doc);
}

nlohmann::json ReadCheckpoint(const std::string& path, const std::string& section) {
  nlohmann::json doc = ReadJsonFile(path);
  if (!doc.is_object() || doc.value("format_version", -1) != kCheckpointFormatVersion) {
    throw CompatibilityError("'" + path + "' is not a version " +
                             std::to_string(kCheckpointFormatVersion) + " checkpoint");
  }
  std::string found = doc.value("section", std::string());
  if (found != section) {
    throw CompatibilityError("'" + path + "' holds a '" + found + "' checkpoint, expected '" +
                             section + "'");
  }
  return doc;
}

}  // namespace dst
