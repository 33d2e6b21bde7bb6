#ifndef MIXCLEAN_ERROR_HPP
#define MIXCLEAN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mixclean {

/// Error categories. The numeric values double as CLI exit codes.
enum class ErrorCode : int {
  Validation = 1,
  Numerical = 2,
  Io = 3,
  Internal = 4,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string &message) {
  if (!condition)
    throw Error(ErrorCode::Validation, message);
}

} // namespace mixclean

#endif // MIXCLEAN_ERROR_HPP
