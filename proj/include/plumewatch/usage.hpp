#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plumewatch/thumbnail.hpp"
#include "plumewatch/time.hpp"

namespace plumewatch {

// One line of an NCSA common/combined access log.
struct AccessLogEntry {
  std::string ip;
  Timestamp request_time;  // UTC
  int utc_offset_minutes = 0;
  std::string method;
  std::string path_and_query;
  std::string protocol;
  int status = 0;
  std::int64_t bytes = 0;  // -1 when logged as "-"
  std::string referer;
  std::string user_agent;
};

std::optional<AccessLogEntry> parse_log_line(std::string_view line);
std::string format_log_line(const AccessLogEntry& entry);

struct ParsedLog {
  std::vector<AccessLogEntry> entries;
  std::size_t skipped = 0;  // malformed lines
};
ParsedLog parse_log(std::span<const std::string> lines);
ParsedLog parse_log(std::istream& in);

// 2xx GET of /thumbnail?...
bool is_thumbnail_view(const AccessLogEntry& e);
// 2xx POST of /api/thumbnail
bool is_thumbnail_creation(const AccessLogEntry& e);

// IPv4 or IPv6 network in CIDR notation. A bare address means a single host.
class Cidr {
 public:
  static Cidr parse(std::string_view text);
  bool contains(std::string_view ip) const;
  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
  bool v6_ = false;
  std::array<std::uint8_t, 16> network_{};
  int prefix_ = 0;
};
std::vector<Cidr> parse_cidr_list(std::string_view comma_separated);
bool is_excluded(std::string_view ip, std::span<const Cidr> exclusions);

struct ImageView {
  std::string image_key;  // canonical thumbnail URL
  std::string dataset_id;
  Origin origin = Origin::human;
  CivilDate dataset_date;
  CivilDate view_date;
  std::int64_t d = 0;  // view_date - dataset_date, whole days, >= 0
  std::string ip;
};

struct CreationEvent {
  std::string ip;
  Timestamp time;
};

struct DerivedViews {
  std::vector<ImageView> views;
  std::vector<CreationEvent> creations;
  std::size_t excluded = 0;         // requests from excluded networks
  std::size_t undecodable = 0;      // thumbnail URLs that failed to decode
  std::size_t unknown_dataset = 0;  // decoded, but the dataset is not known
  std::size_t negative_d = 0;       // viewed before the dataset was captured (integrity warning)
};

DerivedViews derive_views(std::span<const AccessLogEntry> entries, std::span<const Cidr> exclusions,
                          const std::map<std::string, CivilDate>& dataset_dates,
                          const StudyZone& zone);

struct UsageSummary {
  std::size_t unique_viewed_hg = 0;
  std::size_t views_hg = 0;
  std::size_t unique_viewed_ag = 0;
  std::size_t views_ag = 0;
  std::size_t total_views = 0;
  std::size_t users_created_hg = 0;
  std::size_t users_viewed_hg = 0;
  std::size_t users_viewed_ag = 0;
  std::size_t total_users = 0;  // distinct ips that viewed or created

  friend bool operator==(const UsageSummary&, const UsageSummary&) = default;
};

UsageSummary summarize(std::span<const ImageView> views, std::span<const CreationEvent> creations = {});

enum class AggregateAxis { d, dataset_date, view_date };
enum class OriginFilter { all, human, algorithm };

std::string_view to_string(AggregateAxis axis);
std::string_view to_string(OriginFilter filter);

struct Histogram {
  AggregateAxis axis = AggregateAxis::d;
  // Dense from the smallest to the largest observed key. Keys are D for the D axis
  // and days since 1970-01-01 for the date axes.
  std::vector<std::pair<std::int64_t, std::uint64_t>> bins;

  std::uint64_t total() const;
  std::string label(std::int64_t key) const;
};

Histogram aggregate(std::span<const ImageView> views, AggregateAxis axis, OriginFilter filter);

struct UserVector {
  std::string ip;
  std::int64_t n_created_hg = 0;
  std::int64_t n_viewed_hg = 0;
  std::int64_t n_datasets_hg = 0;
  std::int64_t n_viewed_ag = 0;
  std::int64_t n_datasets_ag = 0;

  std::array<double, 5> components() const;
  friend bool operator==(const UserVector&, const UserVector&) = default;
};

inline constexpr std::array<const char*, 5> kUserVectorComponents = {
    "n_created_hg", "n_viewed_hg", "n_datasets_hg", "n_viewed_ag", "n_datasets_ag"};

// One vector per ip seen in views or creations, ordered by ip.
std::vector<UserVector> user_vectors(std::span<const ImageView> views,
                                     std::span<const CreationEvent> creations);

// Sample Pearson r; nullopt when either side has zero variance or fewer than two points.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationMatrix {
  // nullopt marks an undefined coefficient (a zero-variance component).
  std::array<std::array<std::optional<double>, 5>, 5> r{};
};

// Requires at least two vectors.
CorrelationMatrix correlation_matrix(std::span<const UserVector> vectors);

struct AnalysisOptions {
  std::vector<std::filesystem::path> log_files;
  std::vector<Cidr> exclusions;
  StudyZone zone;
  std::map<std::string, CivilDate> dataset_dates;
  std::filesystem::path out_dir;
};

struct AnalysisReport {
  std::size_t lines_skipped = 0;
  DerivedViews derived;
  UsageSummary summary;
  std::vector<UserVector> vectors;
  std::optional<CorrelationMatrix> correlations;  // absent with fewer than two users
};

// Expands a shell glob into a sorted list of files.
std::vector<std::filesystem::path> expand_glob(const std::string& pattern);

// Parses every log, derives views and writes summary.json, user_vectors.csv and
// hist_<axis>_<origin>.csv files into out_dir.
AnalysisReport run_analysis(const AnalysisOptions& options);

}  // namespace plumewatch
