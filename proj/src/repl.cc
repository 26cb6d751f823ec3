#include "dst/repl.h"

#include <cstdio>
#include <istream>
#include <ostream>

#include "dst/errors.h"
#include "dst/text.h"

namespace dst {

namespace {

std::string Fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

Repl::Repl(const Schema& schema, std::string service, std::vector<ResetRule> rules, Loader loader)
    : schema_(schema), service_(std::move(service)), rules_(std::move(rules)), loader_(std::move(loader)) {
  schema_.GetService(service_);
  dialogue_.dialogue_id = "repl";
  dialogue_.services = {service_};
}

std::string Repl::Prompt() const {
  const bool user_next = dialogue_.turns.empty() || dialogue_.turns.back().speaker == Speaker::kSystem;
  return user_next ? "user> " : "system> ";
}

void Repl::Run(std::istream& in, std::ostream& out, bool echo) {
  std::string line;
  while (true) {
    out << Prompt();
    if (!std::getline(in, line)) {
      out << "\n";
      break;
    }
    if (echo) out << line << "\n";
    if (!HandleLine(line, out)) break;
  }
  out.flush();
}

bool Repl::HandleLine(const std::string& raw, std::ostream& out) {
  std::string_view line = Trim(raw);
  if (line.empty()) return true;
  if (line.front() == ':') {
    std::string_view body = line.substr(1);
    size_t sp = body.find(' ');
    std::string cmd(body.substr(0, sp));
    std::string arg(sp == std::string_view::npos ? "" : Trim(body.substr(sp + 1)));
    if (cmd == "quit" || cmd == "q") return false;
    Command(cmd, arg, out);
    return true;
  }

  const bool user_turn = Prompt() == "user> ";
  if (user_turn && !models_) {
    out << "error: no models loaded; use :load <models-dir|oracle>\n";
    return true;
  }
  Turn turn;
  turn.speaker = user_turn ? Speaker::kUser : Speaker::kSystem;
  turn.utterance = std::string(line);
  Frame frame;
  frame.service = service_;
  turn.frames.push_back(frame);
  dialogue_.turns.push_back(std::move(turn));
  if (!user_turn) return true;
  try {
    last_state_ = TrackTurn(dialogue_, dialogue_.turns.size() - 1, service_, schema_, *models_, rules_);
    PrintState(*last_state_, out);
  } catch (const Error& e) {
    dialogue_.turns.pop_back();
    out << "error: " << e.what() << "\n";
  }
  return true;
}

void Repl::Command(const std::string& cmd, const std::string& arg, std::ostream& out) {
  if (cmd == "help") {
    PrintHelp(out);
  } else if (cmd == "history") {
    if (dialogue_.turns.empty()) out << "(empty)\n";
    for (size_t i = 0; i < dialogue_.turns.size(); ++i) {
      const Turn& t = dialogue_.turns[i];
      out << "  " << i << " " << (t.speaker == Speaker::kUser ? "User: " : "System: ") << t.utterance
          << "\n";
    }
  } else if (cmd == "state") {
    if (last_state_) {
      PrintState(*last_state_, out);
    } else {
      out << "no state yet\n";
    }
  } else if (cmd == "service") {
    if (schema_.FindService(arg) == nullptr) {
      out << "error: unknown service '" << arg << "'\n";
      return;
    }
    service_ = arg;
    dialogue_ = Dialogue{};
    dialogue_.dialogue_id = "repl";
    dialogue_.services = {service_};
    last_state_.reset();
    out << "service " << service_ << "; dialogue cleared\n";
  } else if (cmd == "reset") {
    dialogue_.turns.clear();
    last_state_.reset();
    out << "dialogue cleared\n";
  } else if (cmd == "load") {
    if (arg.empty() || !loader_) {
      out << "error: usage :load <models-dir|oracle>\n";
      return;
    }
    try {
      models_ = loader_(arg);
      out << "loaded " << models_->name() << " models from " << arg << "\n";
    } catch (const Error& e) {
      out << "error: " << e.what() << "\n";
    }
  } else {
    out << "error: unknown command ':" << cmd << "'\n";
    PrintHelp(out);
  }
}

void Repl::PrintState(const TurnState& st, std::ostream& out) const {
  out << "[turn " << dialogue_.turns.size() - 1 << "] " << st.service
      << " intent=" << st.active_intent;
  if (st.history_from > 0) out << " history_from=" << st.history_from;
  out << "\n  requested:";
  if (st.requested_slots.empty()) out << " -";
  for (const auto& s : st.requested_slots) out << " " << s;
  out << "\n";
  if (st.slot_values.empty()) out << "  (no slot values)\n";
  for (const auto& [slot, value] : st.slot_values) {
    out << "  " << slot << " = \"" << value << "\"";
    auto it = st.provenance.find(slot);
    if (it != st.provenance.end()) {
      const SlotProvenance& p = it->second;
      out << "  (" << p.head << ", p=" << Fixed3(p.score);
      if (p.turn) out << ", turn " << *p.turn;
      if (p.span) out << ", chars " << p.span->start << "-" << p.span->end;
      out << ")";
    }
    out << "\n";
  }
}

void Repl::PrintHelp(std::ostream& out) const {
  out << "commands:\n"
         "  :history          show the dialogue so far\n"
         "  :state            show the last tracked state\n"
         "  :service <name>   track another service (clears the dialogue)\n"
         "  :reset            clear the dialogue\n"
         "  :load <dir>       load a model directory, or 'oracle'\n"
         "  :quit             leave\n"
         "other lines are utterances, alternating user and system, user first\n";
}

}  // namespace dst
