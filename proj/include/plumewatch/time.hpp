#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace plumewatch {

// All instants are UTC seconds.
using Timestamp = std::chrono::sys_seconds;
using CivilDate = std::chrono::year_month_day;

// Accepts extended (2015-08-03T12:00:00Z, 2015-08-03T12:00Z, ±hh:mm offsets,
// optional fractional seconds which are truncated) and basic (20150803T120000Z) forms.
Timestamp parse_iso8601(std::string_view text);
std::optional<Timestamp> try_parse_iso8601(std::string_view text);

std::string format_iso8601(Timestamp t);        // 2015-08-03T12:00:00Z
std::string format_iso8601_basic(Timestamp t);  // 20150803T120000Z

CivilDate parse_date(std::string_view text);  // YYYY-MM-DD
std::string format_date(CivilDate d);
CivilDate utc_date(Timestamp t);
std::int64_t days_between(CivilDate from, CivilDate to);

// NCSA log time, e.g. "10/Aug/2015:13:55:36 -0400". Returns the instant and the
// UTC offset in minutes that was written in the log.
struct LogTime {
  Timestamp instant;
  int offset_minutes = 0;
};
std::optional<LogTime> parse_log_time(std::string_view text);
std::string format_log_time(Timestamp t);  // always +0000

// An IANA zone used to map instants onto calendar dates.
class StudyZone {
 public:
  StudyZone();  // UTC
  static StudyZone load(const std::string& name);

  CivilDate date_of(Timestamp t) const;
  const std::string& name() const noexcept { return name_; }

 private:
  struct Impl;
  std::string name_;
  std::shared_ptr<const Impl> impl_;
};

}  // namespace plumewatch
