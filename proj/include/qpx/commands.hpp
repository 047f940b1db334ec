#pragma once

#include <iostream>
#include <string>

#include "qpx/config.hpp"

namespace qpx {

// Exit-status contract: 0 success, 1 verification failure, 2 configuration error.
inline constexpr int kStatusOk = 0;
inline constexpr int kStatusVerificationFailed = 1;
inline constexpr int kStatusConfigError = 2;

struct CommandOptions {
  std::string config_path;
  CliOverrides overrides;
  std::ostream* out = &std::cout;
};

int cmd_validate_model(const CommandOptions& opts);
int cmd_verify_hessian(const CommandOptions& opts);
int cmd_extend(const CommandOptions& opts);

} // namespace qpx
