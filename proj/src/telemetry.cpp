#include "plumewatch/telemetry.hpp"

#include <sqlite3.h>

#include <cmath>
#include <istream>
#include <map>
#include <sstream>

#include "plumewatch/error.hpp"

namespace plumewatch {

namespace {

constexpr const char* kSchema = R"sql(
PRAGMA journal_mode = WAL;
PRAGMA synchronous = FULL;
PRAGMA foreign_keys = ON;
CREATE TABLE IF NOT EXISTS stations (
  station_id   TEXT PRIMARY KEY,
  display_name TEXT NOT NULL,
  latitude     REAL NOT NULL,
  longitude    REAL NOT NULL,
  cadence_s    INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS readings (
  station_id TEXT NOT NULL REFERENCES stations(station_id),
  t          INTEGER NOT NULL,
  pm25       REAL NOT NULL CHECK (pm25 >= 0),
  PRIMARY KEY (station_id, t)
) WITHOUT ROWID;
CREATE TABLE IF NOT EXISTS wind (
  t         INTEGER PRIMARY KEY,
  speed     REAL NOT NULL CHECK (speed >= 0),
  direction REAL NOT NULL CHECK (direction >= 0 AND direction < 360)
);
CREATE TABLE IF NOT EXISTS smell (
  report_id      INTEGER PRIMARY KEY AUTOINCREMENT,
  t              INTEGER NOT NULL,
  severity       INTEGER NOT NULL CHECK (severity BETWEEN 1 AND 5),
  note           TEXT NOT NULL,
  reporter_token TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS smell_t ON smell(t);
)sql";

std::int64_t to_epoch(Timestamp t) { return t.time_since_epoch().count(); }
Timestamp from_epoch(std::int64_t s) { return Timestamp{std::chrono::seconds{s}}; }

[[noreturn]] void fail(sqlite3* db, const std::string& what) {
  throw IoError(what + ": " + sqlite3_errmsg(db));
}

class Statement {
 public:
  Statement(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) fail(db, "prepare");
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  Statement& bind(int i, std::int64_t v) {
    sqlite3_bind_int64(stmt_, i, v);
    return *this;
  }
  Statement& bind(int i, double v) {
    sqlite3_bind_double(stmt_, i, v);
    return *this;
  }
  Statement& bind(int i, const std::string& v) {
    sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
    return *this;
  }

  // True while rows remain.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    fail(db_, "step");
  }
  void run() {
    while (step()) {
    }
    reset();
  }
  void reset() {
    sqlite3_reset(stmt_);
    sqlite3_clear_bindings(stmt_);
  }

  std::int64_t int64(int col) const { return sqlite3_column_int64(stmt_, col); }
  double real(int col) const { return sqlite3_column_double(stmt_, col); }
  std::string text(int col) const {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
    return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : std::string{};
  }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw IoError(std::string("sqlite: ") + msg);
  }
}

// BEGIN ... COMMIT, rolled back if the scope exits by exception.
class Transaction {
 public:
  Transaction(sqlite3* db, const char* begin = "BEGIN IMMEDIATE") : db_(db) { exec(db_, begin); }
  ~Transaction() {
    if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
  }
  void commit() {
    exec(db_, "COMMIT");
    done_ = true;
  }

 private:
  sqlite3* db_;
  bool done_ = false;
};

bool station_exists(sqlite3* db, const std::string& id) {
  Statement q(db, "SELECT 1 FROM stations WHERE station_id = ?");
  q.bind(1, id);
  return q.step();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  return cells;
}

double parse_number(const std::string& s, std::size_t line_no, const char* column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError("line " + std::to_string(line_no) + ": " + column + " is not a number", column);
}

template <class Row, class F>
std::vector<Row> parse_rows(std::istream& in, std::size_t columns, F&& make) {
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv(line);
    if (line_no == 1 && !cells.empty() && !try_parse_iso8601(cells[0]) &&
        cells[0].find_first_of("0123456789") == std::string::npos) {
      continue;  // header
    }
    if (cells.size() != columns) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(columns) + " columns");
    }
    rows.push_back(make(cells, line_no));
  }
  return rows;
}

}  // namespace

void validate(const Station& s) {
  if (s.station_id.empty()) throw ValidationError("station_id is empty", "station_id");
  if (!(s.latitude >= -90 && s.latitude <= 90)) throw ValidationError("latitude out of range", "latitude");
  if (!(s.longitude >= -180 && s.longitude <= 180)) {
    throw ValidationError("longitude out of range", "longitude");
  }
  if (s.cadence_s <= 0) throw ValidationError("cadence must be positive", "cadence_s");
}

void validate(const SensorReading& r) {
  if (r.station_id.empty()) throw ValidationError("station_id is empty", "station_id");
  if (!std::isfinite(r.pm25) || r.pm25 < 0) {
    throw ValidationError("pm25 must be a finite value >= 0", "pm25");
  }
}

void validate(const WindReading& w) {
  if (!std::isfinite(w.speed) || w.speed < 0) throw ValidationError("speed must be >= 0", "speed");
  if (!std::isfinite(w.direction) || w.direction < 0 || w.direction >= 360) {
    throw ValidationError("direction must be in [0, 360)", "direction");
  }
}

struct TelemetryStore::State {
  sqlite3* db = nullptr;
  mutable std::mutex mu;
  ~State() {
    if (db) sqlite3_close(db);
  }
};

TelemetryStore::TelemetryStore(sqlite3* db) : state_(std::make_unique<State>()) {
  state_->db = db;
  exec(db, kSchema);
}

TelemetryStore::TelemetryStore(TelemetryStore&&) noexcept = default;
TelemetryStore& TelemetryStore::operator=(TelemetryStore&&) noexcept = default;
TelemetryStore::~TelemetryStore() = default;

TelemetryStore TelemetryStore::open(const std::filesystem::path& db_path) {
  if (db_path.has_parent_path()) std::filesystem::create_directories(db_path.parent_path());
  sqlite3* db = nullptr;
  if (sqlite3_open_v2(db_path.c_str(), &db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    std::string msg = db ? sqlite3_errmsg(db) : "out of memory";
    sqlite3_close(db);
    throw IoError("cannot open telemetry store " + db_path.string() + ": " + msg);
  }
  sqlite3_busy_timeout(db, 5000);
  return TelemetryStore(db);
}

TelemetryStore TelemetryStore::in_memory() {
  sqlite3* db = nullptr;
  if (sqlite3_open(":memory:", &db) != SQLITE_OK) throw IoError("cannot open in-memory store");
  return TelemetryStore(db);
}

void TelemetryStore::register_station(const Station& s) {
  validate(s);
  std::lock_guard lock(state_->mu);
  Statement q(state_->db,
              "INSERT INTO stations(station_id, display_name, latitude, longitude, cadence_s) "
              "VALUES (?, ?, ?, ?, ?) ON CONFLICT(station_id) DO UPDATE SET "
              "display_name = excluded.display_name, latitude = excluded.latitude, "
              "longitude = excluded.longitude, cadence_s = excluded.cadence_s");
  q.bind(1, s.station_id).bind(2, s.display_name).bind(3, s.latitude).bind(4, s.longitude);
  q.bind(5, static_cast<std::int64_t>(s.cadence_s));
  q.run();
}

std::vector<Station> TelemetryStore::stations() const {
  std::lock_guard lock(state_->mu);
  Statement q(state_->db,
              "SELECT station_id, display_name, latitude, longitude, cadence_s FROM stations "
              "ORDER BY rowid");
  std::vector<Station> out;
  while (q.step()) {
    out.push_back({q.text(0), q.text(1), q.real(2), q.real(3), static_cast<int>(q.int64(4))});
  }
  return out;
}

void TelemetryStore::ingest_reading(const SensorReading& r) { ingest_readings(std::span(&r, 1)); }

std::size_t TelemetryStore::ingest_readings(std::span<const SensorReading> readings) {
  for (const SensorReading& r : readings) validate(r);
  std::lock_guard lock(state_->mu);
  Transaction tx(state_->db);
  std::map<std::string, bool> known;
  Statement q(state_->db, "INSERT OR REPLACE INTO readings(station_id, t, pm25) VALUES (?, ?, ?)");
  for (const SensorReading& r : readings) {
    auto [it, fresh] = known.try_emplace(r.station_id, false);
    if (fresh) it->second = station_exists(state_->db, r.station_id);
    if (!it->second) throw ValidationError("unknown station '" + r.station_id + "'", "station_id");
    q.bind(1, r.station_id).bind(2, to_epoch(r.t)).bind(3, r.pm25);
    q.run();
  }
  tx.commit();
  return readings.size();
}

void TelemetryStore::ingest_wind(const WindReading& w) { ingest_winds(std::span(&w, 1)); }

std::size_t TelemetryStore::ingest_winds(std::span<const WindReading> winds) {
  for (const WindReading& w : winds) validate(w);
  std::lock_guard lock(state_->mu);
  Transaction tx(state_->db);
  Statement q(state_->db, "INSERT OR REPLACE INTO wind(t, speed, direction) VALUES (?, ?, ?)");
  for (const WindReading& w : winds) {
    q.bind(1, to_epoch(w.t)).bind(2, w.speed).bind(3, w.direction);
    q.run();
  }
  tx.commit();
  return winds.size();
}

SmellReport TelemetryStore::submit_smell_report(int severity, Timestamp t, std::string note,
                                                std::string reporter_token) {
  if (severity < 1 || severity > 5) {
    throw ValidationError("severity must be an integer from 1 to 5", "severity");
  }
  std::lock_guard lock(state_->mu);
  Statement q(state_->db,
              "INSERT INTO smell(t, severity, note, reporter_token) VALUES (?, ?, ?, ?)");
  q.bind(1, to_epoch(t)).bind(2, static_cast<std::int64_t>(severity)).bind(3, note).bind(4, reporter_token);
  q.run();
  SmellReport r;
  r.report_id = sqlite3_last_insert_rowid(state_->db);
  r.t = t;
  r.severity = severity;
  r.note = std::move(note);
  r.reporter_token = std::move(reporter_token);
  return r;
}

std::vector<StationSeries> TelemetryStore::query_series(std::span<const std::string> station_ids,
                                                        Timestamp t0, Timestamp t1,
                                                        std::int64_t bucket_s) const {
  if (!(t0 < t1)) throw ValidationError("t0 must be before t1", "t0");
  if (bucket_s < 1) throw ValidationError("bucket must be >= 1 second", "bucket");
  const std::int64_t span_s = to_epoch(t1) - to_epoch(t0);
  const std::int64_t n_buckets = (span_s + bucket_s - 1) / bucket_s;
  if (n_buckets > 1'000'000) throw ValidationError("too many buckets requested", "bucket");

  std::lock_guard lock(state_->mu);
  Transaction tx(state_->db, "BEGIN DEFERRED");
  std::vector<StationSeries> out;
  Statement q(state_->db,
              "SELECT t, pm25 FROM readings WHERE station_id = ? AND t >= ? AND t < ? ORDER BY t");
  for (const std::string& id : station_ids) {
    if (!station_exists(state_->db, id)) {
      throw ValidationError("unknown station '" + id + "'", "stations");
    }
    StationSeries series;
    series.station_id = id;
    std::vector<double> sums(static_cast<std::size_t>(n_buckets), 0.0);
    std::vector<int> counts(static_cast<std::size_t>(n_buckets), 0);
    q.bind(1, id).bind(2, to_epoch(t0)).bind(3, to_epoch(t1));
    while (q.step()) {
      const auto k = static_cast<std::size_t>((q.int64(0) - to_epoch(t0)) / bucket_s);
      sums[k] += q.real(1);
      ++counts[k];
    }
    q.reset();
    for (std::size_t k = 0; k < sums.size(); ++k) {
      SeriesBucket b;
      b.bucket_start = t0 + std::chrono::seconds{static_cast<std::int64_t>(k) * bucket_s};
      b.sample_count = counts[k];
      if (counts[k] > 0) b.mean_pm25 = sums[k] / counts[k];
      series.buckets.push_back(b);
    }
    out.push_back(std::move(series));
  }
  tx.commit();
  return out;
}

Context TelemetryStore::query_context(Timestamp t) const {
  const std::int64_t now = to_epoch(t);
  std::lock_guard lock(state_->mu);
  Transaction tx(state_->db, "BEGIN DEFERRED");
  Context ctx;
  ctx.t = t;

  {
    std::optional<WindReading> before, after;
    Statement qb(state_->db,
                 "SELECT t, speed, direction FROM wind WHERE t <= ? AND t >= ? ORDER BY t DESC LIMIT 1");
    qb.bind(1, now).bind(2, now - kWindWindowS);
    if (qb.step()) before = WindReading{from_epoch(qb.int64(0)), qb.real(1), qb.real(2)};
    Statement qa(state_->db,
                 "SELECT t, speed, direction FROM wind WHERE t > ? AND t <= ? ORDER BY t ASC LIMIT 1");
    qa.bind(1, now).bind(2, now + kWindWindowS);
    if (qa.step()) after = WindReading{from_epoch(qa.int64(0)), qa.real(1), qa.real(2)};
    if (before && after) {
      // Ties go to the earlier reading.
      ctx.wind = (t - before->t) <= (after->t - t) ? before : after;
    } else {
      ctx.wind = before ? before : after;
    }
  }

  {
    Statement q(state_->db,
                "SELECT report_id, t, severity, note, reporter_token FROM smell "
                "WHERE t >= ? AND t <= ? ORDER BY t, report_id");
    q.bind(1, now - kSmellWindowS).bind(2, now + kSmellWindowS);
    while (q.step()) {
      ctx.smell_reports.push_back({q.int64(0), from_epoch(q.int64(1)), static_cast<int>(q.int64(2)),
                                   q.text(3), q.text(4)});
    }
  }

  {
    Statement qs(state_->db, "SELECT station_id, cadence_s FROM stations ORDER BY rowid");
    Statement qr(state_->db,
                 "SELECT t, pm25 FROM readings WHERE station_id = ? AND t <= ? AND t >= ? "
                 "ORDER BY t DESC LIMIT 1");
    while (qs.step()) {
      StationLatest latest;
      latest.station_id = qs.text(0);
      const std::int64_t cadence = qs.int64(1);
      qr.bind(1, latest.station_id).bind(2, now).bind(3, now - 2 * cadence);
      if (qr.step()) latest.reading = SensorReading{latest.station_id, from_epoch(qr.int64(0)), qr.real(1)};
      qr.reset();
      ctx.stations.push_back(std::move(latest));
    }
  }
  tx.commit();
  return ctx;
}

std::size_t TelemetryStore::reading_count() const {
  std::lock_guard lock(state_->mu);
  Statement q(state_->db, "SELECT COUNT(*) FROM readings");
  q.step();
  return static_cast<std::size_t>(q.int64(0));
}

std::vector<SensorReading> parse_readings_csv(std::istream& in) {
  return parse_rows<SensorReading>(in, 3, [](const std::vector<std::string>& c, std::size_t line) {
    auto t = try_parse_iso8601(c[0]);
    if (!t) throw ValidationError("line " + std::to_string(line) + ": bad timestamp", "t_iso");
    SensorReading r{c[1], *t, parse_number(c[2], line, "pm25")};
    validate(r);
    return r;
  });
}

std::vector<WindReading> parse_wind_csv(std::istream& in) {
  return parse_rows<WindReading>(in, 3, [](const std::vector<std::string>& c, std::size_t line) {
    auto t = try_parse_iso8601(c[0]);
    if (!t) throw ValidationError("line " + std::to_string(line) + ": bad timestamp", "t_iso");
    WindReading w{*t, parse_number(c[1], line, "speed_ms"), parse_number(c[2], line, "direction_deg")};
    validate(w);
    return w;
  });
}

std::vector<Station> parse_stations_csv(std::istream& in) {
  std::vector<Station> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto c = split_csv(line);
    if (c.empty() || (c.size() == 1 && c[0].empty())) continue;
    if (line_no == 1 && c[0] == "station_id") continue;
    if (c.size() != 5) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected 5 columns");
    }
    Station s{c[0], c[1], parse_number(c[2], line_no, "latitude"),
              parse_number(c[3], line_no, "longitude"),
              static_cast<int>(parse_number(c[4], line_no, "cadence_s"))};
    validate(s);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace plumewatch
