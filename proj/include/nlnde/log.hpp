#pragma once

#include <spdlog/spdlog.h>

namespace nlnde::log {

using spdlog::debug;
using spdlog::error;
using spdlog::info;
using spdlog::warn;

// Routes logging to stderr at the level named by NLNDE_LOG
// (error | info | debug; default info).
void init_from_env();

}  // namespace nlnde::log
