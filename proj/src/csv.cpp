#include "omcool/csv.hpp"

#include <charconv>
#include <system_error>

#include "omcool/errors.hpp"

namespace omcool {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, const std::string& context) {
    double value = 0.0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    // allow surrounding spaces
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    const char* stop = end;
    while (stop > begin && (stop[-1] == ' ' || stop[-1] == '\t' || stop[-1] == '\r')) --stop;
    auto res = std::from_chars(begin, stop, value);
    if (res.ec != std::errc() || res.ptr != stop)
        throw ConfigError(context + ": cannot parse '" + token + "' as a number");
    return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace omcool
