#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gvt {

enum class ErrorCode {
  ZeroAreaQuad,
  NonConvexQuad,
  InvalidBox,
  Unsatisfiable,
  OutOfBounds,
  UncanonicalInput,
  StrictParseError,
  MalformedBox,
  NoChoiceFound,
  CategoryMismatch,
  LengthMismatch,
  SchemaError,
  ValidationError,
  RoiOutOfBounds,
  EmptySubset,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Non-fatal findings collected alongside a result.
struct Diagnostics {
  std::vector<std::string> messages;

  void add(std::string message) { messages.push_back(std::move(message)); }
  bool empty() const noexcept { return messages.empty(); }
  std::size_t size() const noexcept { return messages.size(); }
};

inline void note(Diagnostics* diag, std::string message) {
  if (diag != nullptr) diag->add(std::move(message));
}

}  // namespace gvt
