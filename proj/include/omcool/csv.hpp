#ifndef OMCOOL_CSV_HPP
#define OMCOOL_CSV_HPP

#include <string>
#include <vector>

namespace omcool {

// Shortest decimal representation that round-trips the double exactly;
// locale-independent.
std::string format_double(double v);

// Locale-independent parse of a full token; throws ConfigError with the given
// location context on failure.
double parse_double(const std::string& token, const std::string& context);

std::vector<std::string> split_csv_line(const std::string& line);

} // namespace omcool

#endif
