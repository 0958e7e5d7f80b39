#pragma once

#include <stdexcept>
#include <string>

namespace avp {

// Contract violations and malformed inputs. The message is the diagnostic
// surfaced by the CLI.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace avp
