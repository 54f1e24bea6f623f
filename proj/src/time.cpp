#include "plumewatch/time.hpp"

#include <absl/time/civil_time.h>
#include <absl/time/time.h>

#include <array>
#include <cctype>
#include <cstdio>

#include "plumewatch/error.hpp"

namespace plumewatch {

namespace {

using namespace std::chrono;

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  bool digits(int count, int& out) {
    if (pos_ + count > s_.size()) return false;
    int v = 0;
    for (int i = 0; i < count; ++i) {
      char c = s_[pos_ + i];
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
      v = v * 10 + (c - '0');
    }
    out = v;
    pos_ += count;
    return true;
  }
  bool accept(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  bool done() const { return pos_ == s_.size(); }
  void advance() { ++pos_; }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

std::optional<Timestamp> make_instant(int y, int mo, int d, int h, int mi, int s) {
  CivilDate date{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!date.ok() || h > 23 || mi > 59 || s > 60) return std::nullopt;
  return sys_days{date} + hours{h} + minutes{mi} + seconds{s};
}

constexpr std::array<const char*, 12> kMonths = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                 "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

}  // namespace

std::optional<Timestamp> try_parse_iso8601(std::string_view text) {
  Cursor c(text);
  int y, mo, d, h = 0, mi = 0, s = 0;
  if (!c.digits(4, y)) return std::nullopt;
  const bool extended = c.accept('-');
  if (!c.digits(2, mo)) return std::nullopt;
  if (extended && !c.accept('-')) return std::nullopt;
  if (!c.digits(2, d)) return std::nullopt;
  if (!c.accept('T') && !c.accept(' ')) return std::nullopt;
  if (!c.digits(2, h)) return std::nullopt;
  if (extended && !c.accept(':')) return std::nullopt;
  if (!c.digits(2, mi)) return std::nullopt;
  if (extended ? c.accept(':') : std::isdigit(static_cast<unsigned char>(c.peek()))) {
    if (!c.digits(2, s)) return std::nullopt;
    if (c.accept('.')) {
      while (std::isdigit(static_cast<unsigned char>(c.peek()))) c.advance();
    }
  }
  int offset = 0;
  if (c.accept('Z')) {
  } else if (c.peek() == '+' || c.peek() == '-') {
    const int sign = c.peek() == '-' ? -1 : 1;
    c.advance();
    int oh, om = 0;
    if (!c.digits(2, oh)) return std::nullopt;
    c.accept(':');
    if (!c.done() && !c.digits(2, om)) return std::nullopt;
    offset = sign * (oh * 60 + om);
  } else {
    return std::nullopt;  // zone designator is mandatory
  }
  if (!c.done()) return std::nullopt;
  auto t = make_instant(y, mo, d, h, mi, s);
  if (!t) return std::nullopt;
  return *t - minutes{offset};
}

Timestamp parse_iso8601(std::string_view text) {
  auto t = try_parse_iso8601(text);
  if (!t) throw ValidationError("invalid ISO-8601 timestamp '" + std::string(text) + "'");
  return *t;
}

std::string format_iso8601(Timestamp t) {
  const auto days = floor<std::chrono::days>(t);
  const CivilDate date{days};
  const hh_mm_ss tod{t - days};
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", int(date.year()),
                unsigned(date.month()), unsigned(date.day()), long(tod.hours().count()),
                long(tod.minutes().count()), long(tod.seconds().count()));
  return buf;
}

std::string format_iso8601_basic(Timestamp t) {
  const auto days = floor<std::chrono::days>(t);
  const CivilDate date{days};
  const hh_mm_ss tod{t - days};
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d%02u%02uT%02ld%02ld%02ldZ", int(date.year()),
                unsigned(date.month()), unsigned(date.day()), long(tod.hours().count()),
                long(tod.minutes().count()), long(tod.seconds().count()));
  return buf;
}

CivilDate parse_date(std::string_view text) {
  Cursor c(text);
  int y, mo, d;
  if (c.digits(4, y) && c.accept('-') && c.digits(2, mo) && c.accept('-') && c.digits(2, d) &&
      c.done()) {
    CivilDate date{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (date.ok()) return date;
  }
  throw ValidationError("invalid date '" + std::string(text) + "', expected YYYY-MM-DD");
}

std::string format_date(CivilDate d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(d.year()), unsigned(d.month()),
                unsigned(d.day()));
  return buf;
}

CivilDate utc_date(Timestamp t) { return CivilDate{floor<days>(t)}; }

std::int64_t days_between(CivilDate from, CivilDate to) {
  return (sys_days{to} - sys_days{from}).count();
}

std::optional<LogTime> parse_log_time(std::string_view text) {
  // dd/Mon/yyyy:HH:MM:SS +hhmm
  if (text.size() != 26) return std::nullopt;
  Cursor c(text);
  int d, y, h, mi, s, oh, om;
  if (!c.digits(2, d) || !c.accept('/')) return std::nullopt;
  const std::string_view mon = text.substr(3, 3);
  int mo = 0;
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    if (mon == kMonths[i]) mo = static_cast<int>(i) + 1;
  }
  if (mo == 0) return std::nullopt;
  Cursor rest(text.substr(6));
  if (!rest.accept('/') || !rest.digits(4, y) || !rest.accept(':') || !rest.digits(2, h) ||
      !rest.accept(':') || !rest.digits(2, mi) || !rest.accept(':') || !rest.digits(2, s) ||
      !rest.accept(' ')) {
    return std::nullopt;
  }
  const char sign_char = rest.peek();
  if (sign_char != '+' && sign_char != '-') return std::nullopt;
  rest.advance();
  if (!rest.digits(2, oh) || !rest.digits(2, om) || !rest.done()) return std::nullopt;
  auto local = make_instant(y, mo, d, h, mi, s);
  if (!local) return std::nullopt;
  const int offset = (sign_char == '-' ? -1 : 1) * (oh * 60 + om);
  return LogTime{*local - minutes{offset}, offset};
}

std::string format_log_time(Timestamp t) {
  const auto days = floor<std::chrono::days>(t);
  const CivilDate date{days};
  const hh_mm_ss tod{t - days};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%02u/%s/%04d:%02ld:%02ld:%02ld +0000", unsigned(date.day()),
                kMonths[unsigned(date.month()) - 1], int(date.year()), long(tod.hours().count()),
                long(tod.minutes().count()), long(tod.seconds().count()));
  return buf;
}

struct StudyZone::Impl {
  absl::TimeZone zone;
};

StudyZone::StudyZone() : name_("UTC"), impl_(std::make_shared<Impl>(Impl{absl::UTCTimeZone()})) {}

StudyZone StudyZone::load(const std::string& name) {
  absl::TimeZone tz;
  if (!absl::LoadTimeZone(name, &tz)) {
    throw ValidationError("unknown time zone '" + name + "'", "tz");
  }
  StudyZone z;
  z.name_ = name;
  z.impl_ = std::make_shared<Impl>(Impl{tz});
  return z;
}

CivilDate StudyZone::date_of(Timestamp t) const {
  const absl::CivilDay day =
      absl::ToCivilDay(absl::FromUnixSeconds(t.time_since_epoch().count()), impl_->zone);
  return CivilDate{year{static_cast<int>(day.year())}, month{static_cast<unsigned>(day.month())},
                   std::chrono::day{static_cast<unsigned>(day.day())}};
}

}  // namespace plumewatch
