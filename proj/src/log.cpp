#include "qmem/log.hpp"

#include <cstdlib>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace qmem
{

spdlog::logger &logger()
{
    static const std::shared_ptr<spdlog::logger> instance = [] {
        auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
        auto l = std::make_shared<spdlog::logger>("qmem", sink);
        l->set_pattern("[%l] %v");
        l->set_level(spdlog::level::warn);
        if (const char *env = std::getenv("QMEM_LOG"))
            l->set_level(spdlog::level::from_str(env));
        return l;
    }();
    return *instance;
}

} // namespace qmem
