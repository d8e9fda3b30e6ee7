#include "sic/timeutil.hpp"

#include <cstdio>

#include "sic/error.hpp"

namespace sic {

using namespace std::chrono;

Timestamp parse_timestamp(std::string_view text) {
  const std::string s(text);
  int y = 0, mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
  int consumed = 0;
  bool ok = false;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &hh, &mm, &ss, &consumed) == 6) {
    ok = consumed == static_cast<int>(s.size()) ||
         (consumed + 1 == static_cast<int>(s.size()) && s.back() == 'Z');
  } else if (std::sscanf(s.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed) == 3) {
    ok = consumed == static_cast<int>(s.size());
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ok || !ymd.ok() || hh > 23 || mm > 59 || ss > 60) {
    throw InvalidArgument("malformed timestamp '" + s + "'");
  }
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
}

Date parse_date(std::string_view text) { return floor<days>(parse_timestamp(text)); }

std::string format_timestamp(Timestamp t) {
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::string format_date(Date d) {
  const year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace sic
