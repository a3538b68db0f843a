#pragma once

#include <memory>

#include <spdlog/logger.h>

namespace qmem
{

// Library logger, stderr sink. Level comes from QMEM_LOG
// (trace|debug|info|warn|error|off), default warn.
spdlog::logger &logger();

} // namespace qmem
