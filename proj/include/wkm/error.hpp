#pragma once

#include <stdexcept>
#include <string>

namespace wkm {

enum class Errc {
  invalid_spec,
  invalid_argument,
  shape,
  io,
  unsupported_shape,
  unsupported_mode,
  degenerate_signal,
  unbalanced_input,
  domain,
  size_cap,
  invalid_k,
  data,
};

const char* errc_name(Errc code) noexcept;

/// Every library failure is reported through this type; `code()` tells the
/// caller which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace wkm
