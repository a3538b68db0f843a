#pragma once

#include <iosfwd>

namespace qmem::cli
{

// Exit codes: 0 success, 1 computation or fit failure, 2 usage, IO or format error.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace qmem::cli
