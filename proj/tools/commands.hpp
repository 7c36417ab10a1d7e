#pragma once

#include "CLI11.hpp"

namespace sabrdnn::cli {

// Registers every subcommand on app; the chosen one runs from its callback.
void register_commands(CLI::App& app);

// Exit status for a failure class.
enum Exit : int { kOk = 0, kUnexpected = 1, kUsage = 2, kIo = 3, kData = 4, kNumerical = 5 };

}  // namespace sabrdnn::cli
