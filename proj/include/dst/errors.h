#ifndef DST_ERRORS_H_
#define DST_ERRORS_H_

#include <stdexcept>
#include <string>

namespace dst {

// Base of every error thrown by the library. Callers that only need to
// report a failure can catch this; the subclasses exist so tests and the
// CLI can tell usage mistakes from bad data from I/O trouble.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structured text failed to parse. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, int line, const std::string& field,
             const std::string& message)
      : Error(Format(file, line, field, message)),
        file_(file),
        line_(line),
        field_(field) {}

  const std::string& file() const { return file_; }
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string Format(const std::string& file, int line,
                            const std::string& field,
                            const std::string& message) {
    std::string out = file.empty() ? "<input>" : file;
    if (line > 0) out += ":" + std::to_string(line);
    if (!field.empty()) out += " [" + field + "]";
    return out + ": " + message;
  }

  std::string file_;
  int line_;
  std::string field_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// A function was called outside its contract (wrong slot kind, index out
// of range, user turn expected, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class UnsupportedValueError : public Error {
 public:
  using Error::Error;
};

class CompatibilityError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class CacheMissError : public Error {
 public:
  CacheMissError(const std::string& provider, const std::string& term)
      : Error("provider '" + provider + "' has no cached expansion for '" +
              term + "'"),
        provider_(provider),
        term_(term) {}
  const std::string& provider() const { return provider_; }
  const std::string& term() const { return term_; }

 private:
  std::string provider_;
  std::string term_;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

}  // namespace dst

#endif  // DST_ERRORS_H_
