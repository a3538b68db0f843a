#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qmem::csv
{

// Comma-delimited, '.' decimal point, exactly one header row, LF line endings.
struct Table
{
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

// Reads a numeric table whose header equals one of `accepted` headers.
// Throws Error(format_error) naming the offending line.
Table read(std::istream &in, const std::vector<std::vector<std::string>> &accepted);

inline Table read(std::istream &in, const std::vector<std::string> &header)
{
    return read(in, std::vector<std::vector<std::string>>{header});
}

void write_header(std::ostream &out, const std::vector<std::string> &header);

// Shortest round-trip representation of a double.
std::string format_number(double value);

} // namespace qmem::csv
