#include "plumewatch/usage.hpp"

#include <arpa/inet.h>
#include <glob.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "plumewatch/error.hpp"

namespace plumewatch {

namespace fs = std::filesystem;
using json = nlohmann::json;

// --- log lines ---

namespace {

class LineCursor {
 public:
  explicit LineCursor(std::string_view s) : s_(s) {}

  std::optional<std::string_view> token() {
    if (pos_ >= s_.size() || s_[pos_] == ' ') return std::nullopt;
    const auto end = s_.find(' ', pos_);
    const auto tok = s_.substr(pos_, end == std::string_view::npos ? std::string_view::npos : end - pos_);
    pos_ = end == std::string_view::npos ? s_.size() : end;
    return tok;
  }
  bool space() {
    if (pos_ < s_.size() && s_[pos_] == ' ') {
      ++pos_;
      return true;
    }
    return false;
  }
  std::optional<std::string_view> bracketed() {
    if (pos_ >= s_.size() || s_[pos_] != '[') return std::nullopt;
    const auto end = s_.find(']', pos_);
    if (end == std::string_view::npos) return std::nullopt;
    const auto inner = s_.substr(pos_ + 1, end - pos_ - 1);
    pos_ = end + 1;
    return inner;
  }
  // "..." with backslash escapes.
  std::optional<std::string> quoted() {
    if (pos_ >= s_.size() || s_[pos_] != '"') return std::nullopt;
    std::string out;
    for (std::size_t i = pos_ + 1; i < s_.size(); ++i) {
      const char c = s_[i];
      if (c == '\\' && i + 1 < s_.size()) {
        out.push_back(s_[++i]);
      } else if (c == '"') {
        pos_ = i + 1;
        return out;
      } else {
        out.push_back(c);
      }
    }
    return std::nullopt;
  }
  bool at_end() const { return pos_ >= s_.size(); }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string escape_quoted(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n' || c == '\r') c = ' ';
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::optional<AccessLogEntry> parse_log_line(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
  LineCursor c(line);
  AccessLogEntry e;
  auto ip = c.token();
  if (!ip || !c.space() || !c.token() || !c.space() || !c.token() || !c.space()) return std::nullopt;
  e.ip = std::string(*ip);

  auto when = c.bracketed();
  if (!when) return std::nullopt;
  auto lt = parse_log_time(*when);
  if (!lt) return std::nullopt;
  e.request_time = lt->instant;
  e.utc_offset_minutes = lt->offset_minutes;

  if (!c.space()) return std::nullopt;
  auto request = c.quoted();
  if (!request) return std::nullopt;
  {
    std::istringstream rs(*request);
    std::string extra;
    if (!(rs >> e.method >> e.path_and_query)) return std::nullopt;
    rs >> e.protocol;
    if (rs >> extra) return std::nullopt;
  }

  if (!c.space()) return std::nullopt;
  auto status = c.token();
  if (!status || status->size() != 3 ||
      !std::all_of(status->begin(), status->end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
    return std::nullopt;
  }
  e.status = std::stoi(std::string(*status));

  if (!c.space()) return std::nullopt;
  auto bytes = c.token();
  if (!bytes) return std::nullopt;
  if (*bytes == "-") {
    e.bytes = -1;
  } else {
    if (!std::all_of(bytes->begin(), bytes->end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
      return std::nullopt;
    }
    e.bytes = std::stoll(std::string(*bytes));
  }

  if (c.at_end()) return e;  // common log format
  if (!c.space()) return std::nullopt;
  auto referer = c.quoted();
  if (!referer || !c.space()) return std::nullopt;
  auto agent = c.quoted();
  if (!agent) return std::nullopt;
  e.referer = *referer;
  e.user_agent = *agent;
  return e;
}

std::string format_log_line(const AccessLogEntry& e) {
  std::string line = e.ip.empty() ? "-" : e.ip;
  line += " - - [" + format_log_time(e.request_time) + "] \"";
  line += escape_quoted(e.method) + " " + escape_quoted(e.path_and_query);
  if (!e.protocol.empty()) line += " " + escape_quoted(e.protocol);
  line += "\" " + std::to_string(e.status) + " " + (e.bytes < 0 ? "-" : std::to_string(e.bytes));
  line += " \"" + escape_quoted(e.referer.empty() ? "-" : e.referer) + "\" \"" +
          escape_quoted(e.user_agent.empty() ? "-" : e.user_agent) + "\"";
  return line;
}

ParsedLog parse_log(std::span<const std::string> lines) {
  ParsedLog out;
  for (const std::string& l : lines) {
    if (l.empty()) continue;
    if (auto e = parse_log_line(l)) {
      out.entries.push_back(std::move(*e));
    } else {
      ++out.skipped;
    }
  }
  return out;
}

ParsedLog parse_log(std::istream& in) {
  ParsedLog out;
  std::string l;
  while (std::getline(in, l)) {
    if (l.empty()) continue;
    if (auto e = parse_log_line(l)) {
      out.entries.push_back(std::move(*e));
    } else {
      ++out.skipped;
    }
  }
  return out;
}

namespace {

bool is_2xx(int status) { return status >= 200 && status < 300; }

std::string_view path_of(std::string_view target) {
  return target.substr(0, target.find('?'));
}

}  // namespace

bool is_thumbnail_view(const AccessLogEntry& e) {
  return e.method == "GET" && is_2xx(e.status) && path_of(e.path_and_query) == "/thumbnail" &&
         e.path_and_query.find('?') != std::string::npos;
}

bool is_thumbnail_creation(const AccessLogEntry& e) {
  return e.method == "POST" && is_2xx(e.status) && path_of(e.path_and_query) == "/api/thumbnail";
}

// --- CIDR ---

Cidr Cidr::parse(std::string_view text) {
  Cidr c;
  c.text_ = std::string(text);
  const auto slash = text.find('/');
  const std::string addr(text.substr(0, slash));
  if (inet_pton(AF_INET, addr.c_str(), c.network_.data()) == 1) {
    c.v6_ = false;
    c.prefix_ = 32;
  } else if (inet_pton(AF_INET6, addr.c_str(), c.network_.data()) == 1) {
    c.v6_ = true;
    c.prefix_ = 128;
  } else {
    throw ValidationError("invalid CIDR '" + c.text_ + "'", "exclude-cidr");
  }
  if (slash != std::string_view::npos) {
    const std::string bits(text.substr(slash + 1));
    const int max = c.v6_ ? 128 : 32;
    int p = -1;
    try {
      std::size_t used = 0;
      p = std::stoi(bits, &used);
      if (used != bits.size()) p = -1;
    } catch (const std::exception&) {
    }
    if (p < 0 || p > max) throw ValidationError("invalid CIDR prefix '" + c.text_ + "'", "exclude-cidr");
    c.prefix_ = p;
  }
  return c;
}

bool Cidr::contains(std::string_view ip) const {
  std::array<std::uint8_t, 16> a{};
  const std::string s(ip);
  const int family = v6_ ? AF_INET6 : AF_INET;
  if (inet_pton(family, s.c_str(), a.data()) != 1) return false;
  int bits = prefix_;
  for (std::size_t i = 0; bits > 0; ++i, bits -= 8) {
    const std::uint8_t mask = bits >= 8 ? 0xff : static_cast<std::uint8_t>(0xff << (8 - bits));
    if ((a[i] & mask) != (network_[i] & mask)) return false;
  }
  return true;
}

std::vector<Cidr> parse_cidr_list(std::string_view list) {
  std::vector<Cidr> out;
  while (!list.empty()) {
    const auto comma = list.find(',');
    std::string_view item = list.substr(0, comma);
    list = comma == std::string_view::npos ? std::string_view{} : list.substr(comma + 1);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.push_back(Cidr::parse(item));
  }
  return out;
}

bool is_excluded(std::string_view ip, std::span<const Cidr> exclusions) {
  return std::any_of(exclusions.begin(), exclusions.end(),
                     [&](const Cidr& c) { return c.contains(ip); });
}

// --- views ---

DerivedViews derive_views(std::span<const AccessLogEntry> entries, std::span<const Cidr> exclusions,
                          const std::map<std::string, CivilDate>& dataset_dates,
                          const StudyZone& zone) {
  DerivedViews out;
  for (const AccessLogEntry& e : entries) {
    const bool view = is_thumbnail_view(e);
    const bool creation = !view && is_thumbnail_creation(e);
    if (!view && !creation) continue;
    if (is_excluded(e.ip, exclusions)) {
      ++out.excluded;
      continue;
    }
    if (creation) {
      out.creations.push_back({e.ip, e.request_time});
      continue;
    }
    ThumbnailSpec spec;
    try {
      spec = decode_url(e.path_and_query);
    } catch (const ValidationError&) {
      ++out.undecodable;
      continue;
    }
    const auto ds = dataset_dates.find(spec.dataset_id);
    if (ds == dataset_dates.end()) {
      ++out.unknown_dataset;
      continue;
    }
    ImageView v;
    v.image_key = encode_url(spec);
    v.dataset_id = spec.dataset_id;
    v.origin = spec.origin;
    v.dataset_date = ds->second;
    v.view_date = zone.date_of(e.request_time);
    v.d = days_between(v.dataset_date, v.view_date);
    v.ip = e.ip;
    if (v.d < 0) {
      ++out.negative_d;
      continue;
    }
    out.views.push_back(std::move(v));
  }
  return out;
}

UsageSummary summarize(std::span<const ImageView> views, std::span<const CreationEvent> creations) {
  UsageSummary s;
  std::set<std::string> keys_hg, keys_ag, users_hg, users_ag, creators, all_users;
  for (const ImageView& v : views) {
    all_users.insert(v.ip);
    if (v.origin == Origin::human) {
      ++s.views_hg;
      keys_hg.insert(v.image_key);
      users_hg.insert(v.ip);
    } else {
      ++s.views_ag;
      keys_ag.insert(v.image_key);
      users_ag.insert(v.ip);
    }
  }
  for (const CreationEvent& c : creations) {
    creators.insert(c.ip);
    all_users.insert(c.ip);
  }
  s.unique_viewed_hg = keys_hg.size();
  s.unique_viewed_ag = keys_ag.size();
  s.total_views = s.views_hg + s.views_ag;
  s.users_created_hg = creators.size();
  s.users_viewed_hg = users_hg.size();
  s.users_viewed_ag = users_ag.size();
  s.total_users = all_users.size();
  return s;
}

std::string_view to_string(AggregateAxis axis) {
  switch (axis) {
    case AggregateAxis::d: return "d";
    case AggregateAxis::dataset_date: return "dataset_date";
    case AggregateAxis::view_date: return "view_date";
  }
  return "?";
}

std::string_view to_string(OriginFilter filter) {
  switch (filter) {
    case OriginFilter::all: return "all";
    case OriginFilter::human: return "human";
    case OriginFilter::algorithm: return "algorithm";
  }
  return "?";
}

std::uint64_t Histogram::total() const {
  std::uint64_t t = 0;
  for (const auto& [k, n] : bins) t += n;
  return t;
}

std::string Histogram::label(std::int64_t key) const {
  if (axis == AggregateAxis::d) return std::to_string(key);
  return format_date(CivilDate{std::chrono::sys_days{std::chrono::days{key}}});
}

Histogram aggregate(std::span<const ImageView> views, AggregateAxis axis, OriginFilter filter) {
  Histogram h;
  h.axis = axis;
  std::map<std::int64_t, std::uint64_t> counts;
  for (const ImageView& v : views) {
    if (filter == OriginFilter::human && v.origin != Origin::human) continue;
    if (filter == OriginFilter::algorithm && v.origin != Origin::algorithm) continue;
    std::int64_t key = 0;
    switch (axis) {
      case AggregateAxis::d: key = v.d; break;
      case AggregateAxis::dataset_date:
        key = std::chrono::sys_days{v.dataset_date}.time_since_epoch().count();
        break;
      case AggregateAxis::view_date:
        key = std::chrono::sys_days{v.view_date}.time_since_epoch().count();
        break;
    }
    ++counts[key];
  }
  if (counts.empty()) return h;
  for (std::int64_t k = counts.begin()->first; k <= counts.rbegin()->first; ++k) {
    auto it = counts.find(k);
    h.bins.emplace_back(k, it == counts.end() ? 0 : it->second);
  }
  return h;
}

std::array<double, 5> UserVector::components() const {
  return {static_cast<double>(n_created_hg), static_cast<double>(n_viewed_hg),
          static_cast<double>(n_datasets_hg), static_cast<double>(n_viewed_ag),
          static_cast<double>(n_datasets_ag)};
}

std::vector<UserVector> user_vectors(std::span<const ImageView> views,
                                     std::span<const CreationEvent> creations) {
  struct Acc {
    UserVector v;
    std::set<std::string> datasets_hg, datasets_ag;
  };
  std::map<std::string, Acc> by_ip;
  for (const CreationEvent& c : creations) ++by_ip[c.ip].v.n_created_hg;
  for (const ImageView& view : views) {
    Acc& a = by_ip[view.ip];
    if (view.origin == Origin::human) {
      ++a.v.n_viewed_hg;
      a.datasets_hg.insert(view.dataset_id);
    } else {
      ++a.v.n_viewed_ag;
      a.datasets_ag.insert(view.dataset_id);
    }
  }
  std::vector<UserVector> out;
  out.reserve(by_ip.size());
  for (auto& [ip, a] : by_ip) {
    a.v.ip = ip;
    a.v.n_datasets_hg = static_cast<std::int64_t>(a.datasets_hg.size());
    a.v.n_datasets_ag = static_cast<std::int64_t>(a.datasets_ag.size());
    out.push_back(a.v);
  }
  return out;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix correlation_matrix(std::span<const UserVector> vectors) {
  if (vectors.size() < 2) {
    throw ValidationError("correlation needs at least two user vectors", "vectors");
  }
  std::array<std::vector<double>, 5> columns;
  for (const UserVector& v : vectors) {
    const auto c = v.components();
    for (std::size_t k = 0; k < 5; ++k) columns[k].push_back(c[k]);
  }
  CorrelationMatrix m;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = i; j < 5; ++j) {
      std::optional<double> r = pearson(columns[i], columns[j]);
      if (i == j && r) r = 1.0;
      m.r[i][j] = r;
      m.r[j][i] = r;
    }
  }
  return m;
}

// --- batch analysis ---

std::vector<fs::path> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<fs::path> out;
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  if (rc == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw IoError("glob failed for '" + pattern + "'");
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

json summary_json(const UsageSummary& s) {
  return {{"unique_viewed_hg", s.unique_viewed_hg}, {"views_hg", s.views_hg},
          {"unique_viewed_ag", s.unique_viewed_ag}, {"views_ag", s.views_ag},
          {"total_views", s.total_views},           {"users_created_hg", s.users_created_hg},
          {"users_viewed_hg", s.users_viewed_hg},   {"users_viewed_ag", s.users_viewed_ag},
          {"total_users", s.total_users}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace

AnalysisReport run_analysis(const AnalysisOptions& opt) {
  if (opt.log_files.empty()) throw ValidationError("no log files matched", "logs");
  AnalysisReport report;
  std::vector<AccessLogEntry> entries;
  for (const fs::path& file : opt.log_files) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read log " + file.string());
    ParsedLog parsed = parse_log(in);
    report.lines_skipped += parsed.skipped;
    std::move(parsed.entries.begin(), parsed.entries.end(), std::back_inserter(entries));
  }
  report.derived = derive_views(entries, opt.exclusions, opt.dataset_dates, opt.zone);
  report.summary = summarize(report.derived.views, report.derived.creations);
  report.vectors = user_vectors(report.derived.views, report.derived.creations);
  if (report.vectors.size() >= 2) report.correlations = correlation_matrix(report.vectors);

  fs::create_directories(opt.out_dir);

  json corr = nullptr;
  if (report.correlations) {
    corr = json::array();
    for (const auto& row : report.correlations->r) {
      json jr = json::array();
      for (const auto& v : row) jr.push_back(v ? json(*v) : json(nullptr));
      corr.push_back(jr);
    }
  }
  json exclusions = json::array();
  for (const Cidr& c : opt.exclusions) exclusions.push_back(c.text());
  const json doc = {
      {"summary", summary_json(report.summary)},
      {"correlation", {{"components", kUserVectorComponents}, {"matrix", corr}}},
      {"counts",
       {{"log_lines_skipped", report.lines_skipped},
        {"excluded_requests", report.derived.excluded},
        {"undecodable_urls", report.derived.undecodable},
        {"unknown_dataset", report.derived.unknown_dataset},
        {"negative_d", report.derived.negative_d},
        {"creation_events", report.derived.creations.size()}}},
      {"study_timezone", opt.zone.name()},
      {"excluded_cidrs", exclusions}};
  write_text(opt.out_dir / "summary.json", doc.dump(2) + "\n");

  std::ostringstream uv;
  uv << "ip";
  for (const char* name : kUserVectorComponents) uv << ',' << name;
  uv << '\n';
  for (const UserVector& v : report.vectors) {
    uv << v.ip << ',' << v.n_created_hg << ',' << v.n_viewed_hg << ',' << v.n_datasets_hg << ','
       << v.n_viewed_ag << ',' << v.n_datasets_ag << '\n';
  }
  write_text(opt.out_dir / "user_vectors.csv", uv.str());

  for (AggregateAxis axis : {AggregateAxis::d, AggregateAxis::dataset_date, AggregateAxis::view_date}) {
    for (OriginFilter filter : {OriginFilter::all, OriginFilter::human, OriginFilter::algorithm}) {
      const Histogram h = aggregate(report.derived.views, axis, filter);
      std::ostringstream csv;
      csv << to_string(axis) << ",views\n";
      for (const auto& [key, n] : h.bins) csv << h.label(key) << ',' << n << '\n';
      write_text(opt.out_dir /
                     ("hist_" + std::string(to_string(axis)) + "_" + std::string(to_string(filter)) + ".csv"),
                 csv.str());
    }
  }
  return report;
}

}  // namespace plumewatch
