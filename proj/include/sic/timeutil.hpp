#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace sic {

using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::sys_days;

/// Parses "YYYY-MM-DD" or "YYYY-MM-DDTHH:MM:SS[Z]".
Timestamp parse_timestamp(std::string_view text);
Date parse_date(std::string_view text);

/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(Timestamp t);
/// "YYYY-MM-DD"
std::string format_date(Date d);

inline Date utc_date(Timestamp t) { return std::chrono::floor<std::chrono::days>(t); }

}  // namespace sic
