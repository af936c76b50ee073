#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace molrel {

// Validation errors map to CLI exit code 1, runtime errors to 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

class RuntimeError : public std::runtime_error {
 public:
  explicit RuntimeError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
inline void concat_into(std::ostringstream&) {}
template <typename T, typename... Rest>
void concat_into(std::ostringstream& os, T&& v, Rest&&... rest) {
  os << std::forward<T>(v);
  concat_into(os, std::forward<Rest>(rest)...);
}
}  // namespace detail

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream os;
  detail::concat_into(os, std::forward<Args>(args)...);
  return os.str();
}

template <typename... Args>
[[noreturn]] void fail_validation(Args&&... args) {
  throw ValidationError(concat(std::forward<Args>(args)...));
}

template <typename... Args>
[[noreturn]] void fail_runtime(Args&&... args) {
  throw RuntimeError(concat(std::forward<Args>(args)...));
}

}  // namespace molrel
