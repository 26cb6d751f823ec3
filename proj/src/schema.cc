#include "dst/schema.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "dst/errors.h"
#include "dst/text.h"

namespace dst {

namespace {

using nlohmann::json;

int LineOfOffset(std::string_view text, size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + offset, '\n'));
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  const json& Field(const json& obj, const char* key, const std::string& path) const {
    auto it = obj.find(key);
    if (it == obj.end()) Fail(path + "." + key, "missing required field");
    return *it;
  }

  std::string String(const json& obj, const char* key, const std::string& path,
                     bool required = true) const {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) Fail(path + "." + key, "missing required field");
      return "";
    }
    if (!it->is_string()) Fail(path + "." + key, "expected a string");
    return it->get<std::string>();
  }

  bool Bool(const json& obj, const char* key, const std::string& path,
            bool required) const {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) Fail(path + "." + key, "missing required field");
      return false;
    }
    if (!it->is_boolean()) Fail(path + "." + key, "expected a boolean");
    return it->get<bool>();
  }

  std::vector<std::string> Strings(const json& obj, const char* key,
                                   const std::string& path) const {
    std::vector<std::string> out;
    auto it = obj.find(key);
    if (it == obj.end()) return out;
    if (!it->is_array()) Fail(path + "." + key, "expected an array of strings");
    for (size_t i = 0; i < it->size(); ++i) {
      const json& v = (*it)[i];
      if (!v.is_string()) {
        Fail(path + "." + key + "[" + std::to_string(i) + "]", "expected a string");
      }
      out.push_back(v.get<std::string>());
    }
    return out;
  }

  [[noreturn]] void Fail(const std::string& field, const std::string& msg) const {
    throw ParseError(source_, 0, field, msg);
  }

 private:
  std::string source_;
};

json Extras(const json& obj, std::initializer_list<const char*> known) {
  json extra = json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(known.begin(), known.end(),
                     [&](const char* k) { return it.key() == k; })) {
      extra[it.key()] = it.value();
    }
  }
  return extra;
}

bool ParsesAsInteger(std::string_view s) {
  s = Trim(s);
  if (s.empty()) return false;
  if (s.front() == '+' || s.front() == '-') s.remove_prefix(1);
  if (s.empty()) return false;
  long long value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::string_view SlotKindName(SlotKind kind) {
  switch (kind) {
    case SlotKind::kSpan: return "span";
    case SlotKind::kNumerical: return "numerical";
    case SlotKind::kBoolean: return "boolean";
    case SlotKind::kText: return "text";
  }
  return "?";
}

const SlotDef* ServiceDef::FindSlot(std::string_view slot_name) const {
  for (const auto& s : slots) {
    if (s.name == slot_name) return &s;
  }
  return nullptr;
}

const IntentDef* ServiceDef::FindIntent(std::string_view intent_name) const {
  for (const auto& i : intents) {
    if (i.name == intent_name) return &i;
  }
  return nullptr;
}

const ServiceDef* Schema::FindService(std::string_view service_name) const {
  for (const auto& s : services) {
    if (s.name == service_name) return &s;
  }
  return nullptr;
}

const ServiceDef& Schema::GetService(std::string_view service_name) const {
  const ServiceDef* s = FindService(service_name);
  if (s == nullptr) {
    throw UsageError("service '" + std::string(service_name) + "' is not in the schema");
  }
  return *s;
}

Schema ParseSchema(std::string_view text, const std::string& source_name) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source_name, LineOfOffset(text, e.byte == 0 ? 0 : e.byte - 1),
                     "", e.what());
  }
  Reader r(source_name);
  if (!root.is_array()) r.Fail("$", "schema must be an array of service objects");

  Schema schema;
  for (size_t si = 0; si < root.size(); ++si) {
    const json& js = root[si];
    const std::string path = "[" + std::to_string(si) + "]";
    if (!js.is_object()) r.Fail(path, "expected a service object");
    ServiceDef svc;
    svc.name = r.String(js, "service_name", path);
    svc.description = r.String(js, "description", path, false);
    svc.extra = Extras(js, {"service_name", "description", "slots", "intents"});

    const json& slots = r.Field(js, "slots", path);
    if (!slots.is_array()) r.Fail(path + ".slots", "expected an array");
    for (size_t k = 0; k < slots.size(); ++k) {
      const json& jslot = slots[k];
      const std::string sp = path + ".slots[" + std::to_string(k) + "]";
      if (!jslot.is_object()) r.Fail(sp, "expected a slot object");
      SlotDef slot;
      slot.name = r.String(jslot, "name", sp);
      slot.description = r.String(jslot, "description", sp, false);
      slot.is_categorical = r.Bool(jslot, "is_categorical", sp, true);
      slot.possible_values = r.Strings(jslot, "possible_values", sp);
      slot.extra = Extras(jslot, {"name", "description", "is_categorical", "possible_values"});
      svc.slots.push_back(std::move(slot));
    }

    auto intents_it = js.find("intents");
    if (intents_it != js.end()) {
      if (!intents_it->is_array()) r.Fail(path + ".intents", "expected an array");
      for (size_t k = 0; k < intents_it->size(); ++k) {
        const json& ji = (*intents_it)[k];
        const std::string ip = path + ".intents[" + std::to_string(k) + "]";
        if (!ji.is_object()) r.Fail(ip, "expected an intent object");
        IntentDef intent;
        intent.name = r.String(ji, "name", ip);
        intent.description = r.String(ji, "description", ip, false);
        intent.is_transactional = r.Bool(ji, "is_transactional", ip, false);
        intent.required_slots = r.Strings(ji, "required_slots", ip);
        intent.optional_slots = r.Strings(ji, "optional_slots", ip);
        intent.extra = Extras(ji, {"name", "description", "is_transactional",
                                   "required_slots", "optional_slots"});
        svc.intents.push_back(std::move(intent));
      }
    }
    schema.services.push_back(std::move(svc));
  }
  ValidateSchema(schema);
  return schema;
}

Schema LoadSchema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open schema file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseSchema(buf.str(), path);
}

void ValidateSchema(const Schema& schema) {
  std::set<std::string> service_names;
  for (const auto& svc : schema.services) {
    if (svc.name.empty()) throw ValidationError("service with empty name");
    if (!service_names.insert(svc.name).second) {
      throw ValidationError("duplicate service '" + svc.name + "'");
    }
    std::set<std::string> slot_names;
    for (const auto& slot : svc.slots) {
      const std::string where = "service '" + svc.name + "' slot '" + slot.name + "'";
      if (slot.name.empty()) throw ValidationError("service '" + svc.name + "' has a slot with empty name");
      if (!slot_names.insert(slot.name).second) {
        throw ValidationError(where + ": duplicate slot name");
      }
      if (slot.is_categorical && slot.possible_values.empty()) {
        throw ValidationError(where + ": categorical slot has no possible_values");
      }
      if (!slot.is_categorical && !slot.possible_values.empty()) {
        throw ValidationError(where + ": non-categorical slot lists possible_values");
      }
    }
    std::set<std::string> intent_names;
    for (const auto& intent : svc.intents) {
      const std::string where = "service '" + svc.name + "' intent '" + intent.name + "'";
      if (!intent_names.insert(intent.name).second) {
        throw ValidationError(where + ": duplicate intent name");
      }
      std::set<std::string> required(intent.required_slots.begin(), intent.required_slots.end());
      for (const auto& s : intent.required_slots) {
        if (!slot_names.count(s)) {
          throw ValidationError(where + ": required slot '" + s + "' is not defined");
        }
      }
      for (const auto& s : intent.optional_slots) {
        if (!slot_names.count(s)) {
          throw ValidationError(where + ": optional slot '" + s + "' is not defined");
        }
        if (required.count(s)) {
          throw ValidationError(where + ": slot '" + s + "' is both required and optional");
        }
      }
    }
  }
}

nlohmann::json SchemaToJson(const Schema& schema) {
  json root = json::array();
  for (const auto& svc : schema.services) {
    json js = svc.extra;
    js["service_name"] = svc.name;
    js["description"] = svc.description;
    js["slots"] = json::array();
    for (const auto& slot : svc.slots) {
      json jslot = slot.extra;
      jslot["name"] = slot.name;
      jslot["description"] = slot.description;
      jslot["is_categorical"] = slot.is_categorical;
      jslot["possible_values"] = slot.possible_values;
      js["slots"].push_back(std::move(jslot));
    }
    js["intents"] = json::array();
    for (const auto& intent : svc.intents) {
      json ji = intent.extra;
      ji["name"] = intent.name;
      ji["description"] = intent.description;
      ji["is_transactional"] = intent.is_transactional;
      ji["required_slots"] = intent.required_slots;
      ji["optional_slots"] = intent.optional_slots;
      js["intents"].push_back(std::move(ji));
    }
    root.push_back(std::move(js));
  }
  return root;
}

std::string SerializeSchema(const Schema& schema) {
  return SchemaToJson(schema).dump(2);
}

SlotKind ClassifySlot(const SlotDef& slot) {
  if (!slot.is_categorical) return SlotKind::kSpan;
  const auto& values = slot.possible_values;
  if (std::all_of(values.begin(), values.end(),
                  [](const std::string& v) { return v == "True" || v == "False"; })) {
    return SlotKind::kBoolean;
  }
  if (std::all_of(values.begin(), values.end(), [](const std::string& v) { return ParsesAsInteger(v); })) {
    return SlotKind::kNumerical;
  }
  return SlotKind::kText;
}

std::vector<std::string> CandidateValues(const SlotDef& slot) {
  SlotKind kind = ClassifySlot(slot);
  if (kind != SlotKind::kBoolean && kind != SlotKind::kText) {
    throw UsageError("candidate list requested for " + std::string(SlotKindName(kind)) +
                     " slot '" + slot.name + "'");
  }
  std::vector<std::string> out = slot.possible_values;
  for (std::string_view extra : {kDontCare, kUnknown}) {
    if (std::find(out.begin(), out.end(), extra) == out.end()) out.emplace_back(extra);
  }
  return out;
}

}  // namespace dst
