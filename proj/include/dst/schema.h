#ifndef DST_SCHEMA_H_
#define DST_SCHEMA_H_

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dst {

inline constexpr std::string_view kDontCare = "dontcare";
inline constexpr std::string_view kUnknown = "unknown";

// How a slot is tracked. Span and Numerical slots go to the reading
// comprehension head; Boolean and Text slots are ranked by the wide & deep
// head over their candidate list.
enum class SlotKind { kSpan, kNumerical, kBoolean, kText };

std::string_view SlotKindName(SlotKind kind);

struct SlotDef {
  std::string name;
  std::string description;
  bool is_categorical = false;
  std::vector<std::string> possible_values;
  nlohmann::json extra = nlohmann::json::object();  // unrecognized fields
};

struct IntentDef {
  std::string name;
  std::string description;
  bool is_transactional = false;
  std::vector<std::string> required_slots;
  std::vector<std::string> optional_slots;
  nlohmann::json extra = nlohmann::json::object();
};

struct ServiceDef {
  std::string name;
  std::string description;
  std::vector<SlotDef> slots;
  std::vector<IntentDef> intents;
  nlohmann::json extra = nlohmann::json::object();

  const SlotDef* FindSlot(std::string_view slot_name) const;
  const IntentDef* FindIntent(std::string_view intent_name) const;
};

// Immutable after loading; safe to share between threads.
struct Schema {
  std::vector<ServiceDef> services;

  const ServiceDef* FindService(std::string_view service_name) const;
  const ServiceDef& GetService(std::string_view service_name) const;
};

// Parses and validates. Throws ParseError (with line and field) on
// malformed text and ValidationError naming the service/slot on invariant
// violations.
Schema ParseSchema(std::string_view text, const std::string& source_name = "");
Schema LoadSchema(const std::string& path);

nlohmann::json SchemaToJson(const Schema& schema);
std::string SerializeSchema(const Schema& schema);

// Throws ValidationError.
void ValidateSchema(const Schema& schema);

SlotKind ClassifySlot(const SlotDef& slot);

// possible_values followed by whichever of "dontcare"/"unknown" are not
// already present. Throws UsageError for Span and Numerical slots.
std::vector<std::string> CandidateValues(const SlotDef& slot);

}  // namespace dst

#endif  // DST_SCHEMA_H_
