#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plumewatch/time.hpp"

struct sqlite3;

namespace plumewatch {

struct Station {
  std::string station_id;
  std::string display_name;
  double latitude = 0.0;
  double longitude = 0.0;
  int cadence_s = 60;  // 60 for citizen sensors, 3600 for the hourly government feed
};

struct SensorReading {
  std::string station_id;
  Timestamp t;
  double pm25 = 0.0;  // µg/m³
};

// Meteorological convention: direction is where the wind blows FROM, degrees clockwise from north.
struct WindReading {
  Timestamp t;
  double speed = 0.0;      // m/s
  double direction = 0.0;  // [0, 360)
};

struct SmellReport {
  std::int64_t report_id = 0;
  Timestamp t;
  int severity = 1;  // 1..5, 5 worst
  std::string note;
  std::string reporter_token;
};

struct SeriesBucket {
  Timestamp bucket_start;
  std::optional<double> mean_pm25;  // absent when sample_count == 0
  int sample_count = 0;
};

struct StationSeries {
  std::string station_id;
  std::vector<SeriesBucket> buckets;
};

struct StationLatest {
  std::string station_id;
  std::optional<SensorReading> reading;
};

struct Context {
  Timestamp t;
  std::optional<WindReading> wind;
  std::vector<SmellReport> smell_reports;
  std::vector<StationLatest> stations;
};

inline constexpr std::int64_t kWindWindowS = 15 * 60;
inline constexpr std::int64_t kSmellWindowS = 30 * 60;

void validate(const Station& s);
void validate(const SensorReading& r);
void validate(const WindReading& w);

// Durable store for readings, wind and smell reports. Every write is committed
// before it returns; queries run inside one read transaction so they see a single
// point in time. All methods are thread safe.
class TelemetryStore {
 public:
  static TelemetryStore open(const std::filesystem::path& db_path);
  static TelemetryStore in_memory();

  TelemetryStore(TelemetryStore&&) noexcept;
  TelemetryStore& operator=(TelemetryStore&&) noexcept;
  ~TelemetryStore();

  void register_station(const Station& station);
  std::vector<Station> stations() const;

  // Duplicate (station, t) replaces the stored value.
  void ingest_reading(const SensorReading& reading);
  // All-or-nothing batch; returns the number of rows written.
  std::size_t ingest_readings(std::span<const SensorReading> readings);
  void ingest_wind(const WindReading& wind);
  std::size_t ingest_winds(std::span<const WindReading> winds);

  SmellReport submit_smell_report(int severity, Timestamp t, std::string note,
                                  std::string reporter_token = {});

  std::vector<StationSeries> query_series(std::span<const std::string> station_ids, Timestamp t0,
                                          Timestamp t1, std::int64_t bucket_s) const;
  Context query_context(Timestamp t) const;

  std::size_t reading_count() const;

 private:
  explicit TelemetryStore(sqlite3* db);

  struct State;
  std::unique_ptr<State> state_;
};

// Bulk CSV import helpers. Columns: t_iso,station_id,pm25 and t_iso,speed_ms,direction_deg.
// A header row is skipped when its first cell is not a timestamp.
std::vector<SensorReading> parse_readings_csv(std::istream& in);
std::vector<WindReading> parse_wind_csv(std::istream& in);
// station_id,display_name,latitude,longitude,cadence_s
std::vector<Station> parse_stations_csv(std::istream& in);

}  // namespace plumewatch
