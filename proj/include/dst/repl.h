#ifndef DST_REPL_H_
#define DST_REPL_H_

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dst/corpus.h"
#include "dst/encoder.h"
#include "dst/schema.h"
#include "dst/tracker.h"

namespace dst {

// Turn-stepping session: lines alternate user/system utterances (user
// first); after every user line the tracked state of the chosen service
// is printed. Lines starting with ':' are commands.
class Repl {
 public:
  // Returns loaded models for `:load <arg>`; throws dst::Error on failure.
  using Loader = std::function<std::shared_ptr<const TrackerModels>(const std::string& arg)>;

  Repl(const Schema& schema, std::string service, std::vector<ResetRule> rules, Loader loader);

  void SetModels(std::shared_ptr<const TrackerModels> models) { models_ = std::move(models); }

  // Reads until `:quit` or end of input. With `echo`, every input line is
  // written back after its prompt, which makes piped transcripts readable.
  void Run(std::istream& in, std::ostream& out, bool echo);

  // Returns false when the session should end.
  bool HandleLine(const std::string& line, std::ostream& out);

  const Dialogue& dialogue() const { return dialogue_; }
  std::string Prompt() const;

 private:
  void Command(const std::string& cmd, const std::string& arg, std::ostream& out);
  void PrintState(const TurnState& st, std::ostream& out) const;
  void PrintHelp(std::ostream& out) const;

  const Schema& schema_;
  std::string service_;
  std::vector<ResetRule> rules_;
  Loader loader_;
  std::shared_ptr<const TrackerModels> models_;
  Dialogue dialogue_;
  std::optional<TurnState> last_state_;
};

}  // namespace dst

#endif  // DST_REPL_H_
