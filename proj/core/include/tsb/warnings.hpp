#pragma once

#include <functional>
#include <string>

namespace tsb {

using WarningHandler = std::function<void(const std::string&)>;

// Non-fatal diagnostics (thin tails, monotonicity violations, cache repair)
// go through a process-wide handler. Default prints to stderr.
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace tsb
