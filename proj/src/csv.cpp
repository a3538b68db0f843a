#include "qmem/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "qmem/errors.hpp"

namespace qmem::csv
{

namespace
{

std::vector<std::string> split(const std::string &line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ','))
        out.push_back(field);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

std::string join(const std::vector<std::string> &fields)
{
    std::string s;
    for (std::size_t i = 0; i < fields.size(); ++i)
        s += (i ? "," : "") + fields[i];
    return s;
}

[[noreturn]] void fail(std::size_t line, const std::string &what)
{
    throw Error(Errc::format_error, "line " + std::to_string(line) + ": " + what);
}

} // namespace

Table read(std::istream &in, const std::vector<std::vector<std::string>> &accepted)
{
    Table table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            fail(line_no, "CRLF line endings are not accepted");
        if (line.empty())
            continue;
        const auto fields = split(line);
        if (table.header.empty()) {
            for (const auto &h : accepted)
                if (fields == h)
                    table.header = h;
            if (table.header.empty()) {
                std::string expected;
                for (const auto &h : accepted)
                    expected += (expected.empty() ? "`" : " or `") + join(h) + "`";
                fail(line_no, "expected header " + expected + ", got `" + line + "`");
            }
            continue;
        }
        if (fields.size() != table.header.size())
            fail(line_no, "expected " + std::to_string(table.header.size()) + " fields, got " + std::to_string(fields.size()));
        std::vector<double> row;
        for (const auto &f : fields) {
            double v = 0.0;
            const auto *end = f.data() + f.size();
            const auto [ptr, ec] = std::from_chars(f.data(), end, v);
            if (ec != std::errc() || ptr != end)
                fail(line_no, "cannot parse number `" + f + "`");
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty())
        fail(line_no, "missing header row");
    return table;
}

void write_header(std::ostream &out, const std::vector<std::string> &header) { out << join(header) << '\n'; }

std::string format_number(double value)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

} // namespace qmem::csv
