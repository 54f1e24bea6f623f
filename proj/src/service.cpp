#include "plumewatch/service.hpp"

#include <httplib.h>

#include <atomic>
#include <fstream>
#include <json.hpp>
#include <list>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "plumewatch/error.hpp"
#include "plumewatch/smoke.hpp"
#include "plumewatch/telemetry.hpp"
#include "plumewatch/thumbnail.hpp"
#include "plumewatch/timelapse.hpp"
#include "plumewatch/usage.hpp"

namespace plumewatch {

namespace fs = std::filesystem;
using json = nlohmann::json;

Timestamp system_now() {
  return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

ServiceConfig ServiceConfig::from_config(const FlatConfig& cfg) {
  ServiceConfig c;
  if (auto listen = cfg.get("listen")) {
    const auto colon = listen->rfind(':');
    if (colon == std::string::npos) throw ValidationError("listen must be host:port", "listen");
    c.host = listen->substr(0, colon);
    try {
      c.port = std::stoi(listen->substr(colon + 1));
    } catch (const std::exception&) {
      throw ValidationError("listen port is not a number", "listen");
    }
  }
  c.data_root = cfg.get_or("data_root", "");
  c.timezone = cfg.get_or("timezone", c.timezone);
  if (auto cidrs = cfg.get("exclude_cidrs")) {
    for (const Cidr& cidr : parse_cidr_list(*cidrs)) c.exclude_cidrs.push_back(cidr.text());
  }
  c.thumbnail_rate_limit = cfg.get_double("thumbnail_rate_limit", c.thumbnail_rate_limit);
  c.log_path = cfg.get_or("log_path", "");
  c.admin_token = cfg.get_or("admin_token", "");
  c.trust_forwarded_for = cfg.get_bool("trust_forwarded_for", c.trust_forwarded_for);
  c.worker_threads = static_cast<int>(cfg.get_int("worker_threads", c.worker_threads));
  c.frame_cache_size = static_cast<int>(cfg.get_int("frame_cache_size", c.frame_cache_size));
  return c;
}

void ServiceConfig::validate() const {
  if (data_root.empty()) throw ValidationError("data_root is required", "data_root");
  if (!fs::is_directory(data_root)) {
    throw ValidationError("data_root " + data_root.string() + " does not exist", "data_root");
  }
  StudyZone::load(timezone);
  for (const std::string& c : exclude_cidrs) Cidr::parse(c);
  if (port < 0 || port > 65535) throw ValidationError("port out of range", "listen");
  if (thumbnail_rate_limit < 0) throw ValidationError("rate limit must be >= 0", "thumbnail_rate_limit");
  if (worker_threads < 1) throw ValidationError("worker_threads must be >= 1", "worker_threads");
  if (frame_cache_size < 0) throw ValidationError("frame_cache_size must be >= 0", "frame_cache_size");
}

fs::path ServiceConfig::effective_log_path() const {
  return log_path.empty() ? data_root / "access.log" : log_path;
}

namespace {

struct Unauthorized : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- json mapping of domain types ---

json rect_json(const PixelRect& r) {
  return {{"left", r.left}, {"top", r.top}, {"right", r.right}, {"bottom", r.bottom}};
}

json dataset_summary(const DataRoot& root, const Dataset& ds) {
  json j = {{"id", ds.id},
            {"frame_count", ds.frame_count()},
            {"frame_width", ds.frame_width},
            {"frame_height", ds.frame_height},
            {"capture_interval_s", ds.capture_interval_s},
            {"capture_date", format_date(ds.capture_date)},
            {"start", ds.frames.empty() ? json(nullptr) : json(format_iso8601(ds.frames.front().capture_time))},
            {"end", ds.frames.empty() ? json(nullptr) : json(format_iso8601(ds.frames.back().capture_time))}};
  try {
    const TilePyramid p = load_pyramid(root, ds.id);
    j["pyramid"] = {{"tile_size", p.tile_size}, {"num_levels", p.num_levels}, {"segment_length", p.segment_length}};
  } catch (const std::exception&) {
    j["pyramid"] = nullptr;
  }
  return j;
}

json reading_json(const SensorReading& r) {
  return {{"station_id", r.station_id}, {"t", format_iso8601(r.t)}, {"pm25", r.pm25}};
}

json wind_json(const WindReading& w) {
  return {{"t", format_iso8601(w.t)}, {"speed", w.speed}, {"direction", w.direction}};
}

json smell_json(const SmellReport& s) {
  return {{"report_id", s.report_id},
          {"t", format_iso8601(s.t)},
          {"severity", s.severity},
          {"note", s.note},
          {"reporter_token", s.reporter_token}};
}

json station_json(const Station& s) {
  return {{"station_id", s.station_id},
          {"display_name", s.display_name},
          {"latitude", s.latitude},
          {"longitude", s.longitude},
          {"cadence_s", s.cadence_s}};
}

template <typename T>
T field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw ValidationError(std::string("missing field ") + name, name);
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field ") + name + " has the wrong type", name);
  }
}

template <typename T>
T field_or(const json& j, const char* name, T fallback) {
  if (!j.is_object() || !j.contains(name) || j.at(name).is_null()) return fallback;
  return field<T>(j, name);
}

Timestamp time_field(const json& j, const char* name) {
  const auto text = field<std::string>(j, name);
  auto t = try_parse_iso8601(text);
  if (!t) throw ValidationError(std::string("field ") + name + " is not an ISO-8601 time", name);
  return *t;
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception&) {
    throw ValidationError("request body is not valid JSON", "body");
  }
}

ThumbnailSpec spec_from_json(const json& j) {
  ThumbnailSpec s;
  s.dataset_id = field<std::string>(j, "dataset_id");
  const json bounds = j.contains("bounds") ? j.at("bounds") : json();
  if (!bounds.is_object()) throw ValidationError("missing field bounds", "bounds");
  s.bounds.left = field<int>(bounds, "left");
  s.bounds.top = field<int>(bounds, "top");
  s.bounds.right = field<int>(bounds, "right");
  s.bounds.bottom = field<int>(bounds, "bottom");
  s.out_width = field<int>(j, "out_width");
  s.out_height = field<int>(j, "out_height");
  s.start_frame = field_or<int>(j, "start_frame", 0);
  s.nframes = field<int>(j, "nframes");
  s.fps = field_or<int>(j, "fps", s.fps);
  const auto format = field_or<std::string>(j, "format", "gif");
  if (format == "gif") {
    s.format = ThumbnailFormat::gif;
  } else if (format == "mp4") {
    s.format = ThumbnailFormat::mp4;
  } else {
    throw ValidationError("format must be gif or mp4", "format");
  }
  s.origin = parse_origin(field_or<std::string>(j, "origin", "human"));
  return s;
}

int int_param(const httplib::Request& req, const char* name, std::optional<int> fallback) {
  if (!req.has_param(name)) {
    if (fallback) return *fallback;
    throw ValidationError(std::string("missing parameter ") + name, name);
  }
  const std::string v = req.get_param_value(name);
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used == v.size() && x >= INT32_MIN && x <= INT32_MAX) return static_cast<int>(x);
  } catch (const std::exception&) {
  }
  throw ValidationError(std::string("parameter ") + name + " is not an integer", name);
}

Timestamp time_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) throw ValidationError(std::string("missing parameter ") + name, name);
  auto t = try_parse_iso8601(req.get_param_value(name));
  if (!t) throw ValidationError(std::string("parameter ") + name + " is not an ISO-8601 time", name);
  return *t;
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message,
                const std::string& parameter = {}) {
  json body = {{"error", message}};
  if (!parameter.empty()) body["parameter"] = parameter;
  send_json(res, body, status);
}

thread_local Timestamp request_started;

class FrameCache {
 public:
  explicit FrameCache(std::size_t capacity) : capacity_(capacity) {}

  std::shared_ptr<const Image> get(const std::string& key, const std::function<Image()>& load) {
    {
      std::lock_guard lock(mu_);
      auto it = index_.find(key);
      if (it != index_.end()) {
        order_.splice(order_.begin(), order_, it->second);
        return it->second->second;
      }
    }
    auto img = std::make_shared<const Image>(load());
    if (capacity_ == 0) return img;
    std::lock_guard lock(mu_);
    if (!index_.count(key)) {
      order_.emplace_front(key, img);
      index_[key] = order_.begin();
      while (order_.size() > capacity_) {
        index_.erase(order_.back().first);
        order_.pop_back();
      }
    }
    return img;
  }

 private:
  using Entry = std::pair<std::string, std::shared_ptr<const Image>>;
  std::size_t capacity_;
  std::mutex mu_;
  std::list<Entry> order_;
  std::unordered_map<std::string, std::list<Entry>::iterator> index_;
};

class RateLimiter {
 public:
  explicit RateLimiter(double rate) : rate_(rate), burst_(std::max(1.0, rate)) {}

  bool allow(const std::string& ip) {
    if (rate_ <= 0) return true;
    const auto now = std::chrono::steady_clock::now();
    std::lock_guard lock(mu_);
    auto [it, fresh] = buckets_.try_emplace(ip, Bucket{burst_, now});
    Bucket& b = it->second;
    if (!fresh) {
      const double elapsed = std::chrono::duration<double>(now - b.last).count();
      b.tokens = std::min(burst_, b.tokens + elapsed * rate_);
      b.last = now;
    }
    if (b.tokens < 1.0) return false;
    b.tokens -= 1.0;
    return true;
  }

 private:
  struct Bucket {
    double tokens;
    std::chrono::steady_clock::time_point last;
  };
  double rate_;
  double burst_;
  std::mutex mu_;
  std::unordered_map<std::string, Bucket> buckets_;
};

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  Clock clock;
  DataRoot root;
  TelemetryStore telemetry;
  FrameCache frames;
  RateLimiter limiter;
  httplib::Server server;
  std::thread thread;
  std::atomic<int> bound_port{0};

  std::mutex log_mu;
  std::ofstream log;

  std::mutex ds_mu;
  struct CachedDataset {
    fs::file_time_type mtime;
    std::shared_ptr<const Dataset> dataset;
  };
  std::unordered_map<std::string, CachedDataset> datasets;

  Impl(ServiceConfig cfg, Clock clk)
      : config(std::move(cfg)),
        clock(std::move(clk)),
        root(config.data_root),
        telemetry(TelemetryStore::open(root.telemetry_db())),
        frames(static_cast<std::size_t>(config.frame_cache_size)),
        limiter(config.thumbnail_rate_limit) {
    const fs::path log_path = config.effective_log_path();
    if (log_path.has_parent_path()) fs::create_directories(log_path.parent_path());
    log.open(log_path, std::ios::app | std::ios::binary);
    if (!log) throw IoError("cannot open access log " + log_path.string());
    routes();
  }

  std::string client_ip(const httplib::Request& req) const {
    if (config.trust_forwarded_for && req.has_header("X-Forwarded-For")) {
      std::string v = req.get_header_value("X-Forwarded-For");
      v = v.substr(0, v.find(','));
      const auto b = v.find_first_not_of(' ');
      const auto e = v.find_last_not_of(' ');
      if (b != std::string::npos) return v.substr(b, e - b + 1);
    }
    return req.remote_addr;
  }

  std::shared_ptr<const Dataset> dataset(const std::string& id) {
    if (!is_valid_dataset_id(id) || !root.has_dataset(id)) throw NotFoundError("unknown dataset " + id);
    const fs::path file = root.dataset_dir(id) / "dataset.json";
    std::error_code ec;
    const auto mtime = fs::last_write_time(file, ec);
    std::lock_guard lock(ds_mu);
    auto it = datasets.find(id);
    if (it != datasets.end() && !ec && it->second.mtime == mtime) return it->second.dataset;
    auto ds = std::make_shared<const Dataset>(root.load_dataset(id));
    datasets[id] = {mtime, ds};
    return ds;
  }

  void require_admin(const httplib::Request& req) const {
    if (config.admin_token.empty()) return;
    const std::string expected = "Bearer " + config.admin_token;
    if (req.get_header_value("Authorization") != expected &&
        req.get_header_value("X-Admin-Token") != config.admin_token) {
      throw Unauthorized("admin token required");
    }
  }

  void write_log(const httplib::Request& req, const httplib::Response& res) {
    AccessLogEntry e;
    e.ip = client_ip(req);
    e.request_time = request_started;
    e.method = req.method;
    e.path_and_query = req.target.empty() ? req.path : req.target;
    e.protocol = req.version.empty() ? "HTTP/1.1" : req.version;
    e.status = res.status;
    e.bytes = static_cast<std::int64_t>(res.body.size());
    e.referer = req.get_header_value("Referer");
    e.user_agent = req.get_header_value("User-Agent");
    const std::string line = format_log_line(e) + "\n";
    std::lock_guard lock(log_mu);
    log << line;
    log.flush();
  }

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  // Maps domain exceptions onto status codes.
  static httplib::Server::Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const ValidationError& e) {
        send_error(res, 400, e.what(), e.parameter());
      } catch (const NotFoundError& e) {
        send_error(res, 404, e.what());
      } catch (const NotImplementedError& e) {
        send_error(res, 501, e.what());
      } catch (const Unauthorized& e) {
        send_error(res, 401, e.what());
      } catch (const IoError& e) {
        send_error(res, 500, e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      }
    };
  }

  void routes() {
    const int threads = config.worker_threads;
    server.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<size_t>(threads)); };
    // The logger runs after the response is written, so stamp the time on arrival.
    server.set_pre_routing_handler([this](const httplib::Request&, httplib::Response&) {
      request_started = clock();
      return httplib::Server::HandlerResponse::Unhandled;
    });
    server.set_logger([this](const httplib::Request& req, const httplib::Response& res) { write_log(req, res); });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) send_error(res, res.status, res.status == 404 ? "not found" : "error");
    });

    server.Get("/api/datasets", guarded([this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const std::string& id : root.list_datasets()) out.push_back(dataset_summary(root, *dataset(id)));
      send_json(res, out);
    }));

    server.Get(R"(/api/datasets/([A-Za-z0-9_-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto ds = dataset(req.matches[1]);
      json j = dataset_summary(root, *ds);
      json frames = json::array();
      for (const FrameInfo& f : ds->frames) frames.push_back({{"index", f.index}, {"t", format_iso8601(f.capture_time)}});
      json gaps = json::array();
      for (const GapAnnotation& g : ds->gaps) {
        gaps.push_back({{"after_index", g.after_index}, {"gap_s", g.gap_s}, {"missing_frames", g.missing_frames}});
      }
      j["frames"] = frames;
      j["gaps"] = gaps;
      send_json(res, j);
    }));

    server.Get(R"(/api/datasets/([A-Za-z0-9_-]+)/frame_index)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto ds = dataset(req.matches[1]);
                 const Timestamp t = time_param(req, "t");
                 const bool before = ds->frames.empty() || t < ds->frames.front().capture_time;
                 const bool after = !ds->frames.empty() && t > ds->frames.back().capture_time;
                 send_json(res, {{"frame_index", frame_index_at(*ds, t)},
                                 {"clamped", before ? "start" : after ? "end" : ""}});
               }));

    server.Get(R"(/tiles/([A-Za-z0-9_-]+)/(\d+)/(\d+)/(\d+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 TileAddress a;
                 a.dataset_id = req.matches[1];
                 if (!root.has_dataset(a.dataset_id)) throw NotFoundError("unknown dataset " + a.dataset_id);
                 a.level = std::stoi(req.matches[2]);
                 a.row = std::stoi(req.matches[3]);
                 a.col = std::stoi(req.matches[4]);
                 a.frame_start = int_param(req, "startFrame", 0);
                 a.frame_count = int_param(req, "nframes", 1);
                 if (a.frame_count < 1) throw ValidationError("nframes must be >= 1", "nframes");
                 const TileClip clip = get_tile(root, a);
                 const auto bytes = encode_tile_clip(clip);
                 res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(),
                                 "application/x-plumewatch-tile");
               }));

    server.Get("/thumbnail", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (!limiter.allow(client_ip(req))) {
        send_error(res, 429, "thumbnail rate limit exceeded");
        return;
      }
      const ThumbnailSpec spec = decode_url(req.target);
      const auto ds = dataset(spec.dataset_id);
      validate_against(spec, *ds);
      const std::string id = ds->id;
      const RenderedThumbnail out = render_thumbnail(spec, *ds, [&](int index) {
        const FrameInfo& f = ds->frames.at(static_cast<std::size_t>(index));
        return frames.get(id + "/" + f.file, [&] { return root.read_frame(*ds, index); });
      });
      res.set_header("X-Thumbnail-Frames", std::to_string(out.frame_count));
      res.set_content(reinterpret_cast<const char*>(out.bytes.data()), out.bytes.size(), out.content_type);
    }));

    server.Post("/api/thumbnail", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const ThumbnailSpec spec = spec_from_json(parse_body(req));
      validate(spec);
      validate_against(spec, *dataset(spec.dataset_id));
      send_json(res, {{"url", encode_url(spec)}});
    }));

    server.Get(R"(/api/smoke/([A-Za-z0-9_-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      dataset(id);
      json frames_out = json::array();
      for (const SmokeFrameResult& f : load_frame_results(root, id)) {
        frames_out.push_back({{"frame_index", f.frame_index},
                              {"smoke_pixel_count", f.smoke_pixel_count},
                              {"is_daytime", f.is_daytime}});
      }
      json events = json::array();
      for (const auto& [url, e] : list_event_thumbnails(root, id)) {
        events.push_back({{"start_frame", e.start_frame},
                          {"end_frame", e.end_frame},
                          {"peak_count", e.peak_count},
                          {"bounds", rect_json(e.bounds)},
                          {"url", url}});
      }
      send_json(res, {{"dataset_id", id}, {"frames", frames_out}, {"events", events}});
    }));

    server.Get("/api/stations", guarded([this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const Station& s : telemetry.stations()) out.push_back(station_json(s));
      send_json(res, out);
    }));

    server.Post("/api/stations", guarded([this](const httplib::Request& req, httplib::Response& res) {
      require_admin(req);
      const json body = parse_body(req);
      std::vector<json> items = body.is_array() ? body.get<std::vector<json>>() : std::vector<json>{body};
      for (const json& j : items) {
        Station s;
        s.station_id = field<std::string>(j, "station_id");
        s.display_name = field_or<std::string>(j, "display_name", s.station_id);
        s.latitude = field<double>(j, "latitude");
        s.longitude = field<double>(j, "longitude");
        s.cadence_s = field_or<int>(j, "cadence_s", s.cadence_s);
        telemetry.register_station(s);
      }
      send_json(res, {{"registered", items.size()}});
    }));

    server.Post("/api/readings", guarded([this](const httplib::Request& req, httplib::Response& res) {
      require_admin(req);
      const json body = parse_body(req);
      std::vector<SensorReading> readings;
      for (const json& j : body.is_array() ? body : json::array({body})) {
        readings.push_back({field<std::string>(j, "station_id"), time_field(j, "t"), field<double>(j, "pm25")});
      }
      send_json(res, {{"ingested", telemetry.ingest_readings(readings)}});
    }));

    server.Post("/api/wind", guarded([this](const httplib::Request& req, httplib::Response& res) {
      require_admin(req);
      const json body = parse_body(req);
      std::vector<WindReading> winds;
      for (const json& j : body.is_array() ? body : json::array({body})) {
        winds.push_back({time_field(j, "t"), field<double>(j, "speed"), field<double>(j, "direction")});
      }
      send_json(res, {{"ingested", telemetry.ingest_winds(winds)}});
    }));

    server.Post("/api/smell", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const Timestamp t = body.contains("t") && !body.at("t").is_null() ? time_field(body, "t") : clock();
      const SmellReport r = telemetry.submit_smell_report(field<int>(body, "severity"), t,
                                                          field_or<std::string>(body, "note", ""),
                                                          field_or<std::string>(body, "reporter_token", ""));
      send_json(res, smell_json(r), 201);
    }));

    server.Get("/api/series", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::vector<std::string> ids;
      if (req.has_param("stations") && !req.get_param_value("stations").empty()) {
        std::string list = req.get_param_value("stations");
        std::size_t pos = 0;
        while (pos <= list.size()) {
          const auto comma = list.find(',', pos);
          const std::string id = list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
          if (!id.empty()) ids.push_back(id);
          if (comma == std::string::npos) break;
          pos = comma + 1;
        }
      } else {
        for (const Station& s : telemetry.stations()) ids.push_back(s.station_id);
      }
      const auto series = telemetry.query_series(ids, time_param(req, "t0"), time_param(req, "t1"),
                                                 int_param(req, "bucket_s", std::nullopt));
      json out = json::array();
      for (const StationSeries& s : series) {
        json buckets = json::array();
        for (const SeriesBucket& b : s.buckets) {
          buckets.push_back({{"bucket_start", format_iso8601(b.bucket_start)},
                             {"mean_pm25", b.mean_pm25 ? json(*b.mean_pm25) : json(nullptr)},
                             {"sample_count", b.sample_count}});
        }
        out.push_back({{"station_id", s.station_id}, {"buckets", buckets}});
      }
      send_json(res, out);
    }));

    server.Get("/api/context", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const Context c = telemetry.query_context(time_param(req, "t"));
      json smells = json::array();
      for (const SmellReport& s : c.smell_reports) smells.push_back(smell_json(s));
      json stations = json::array();
      for (const StationLatest& s : c.stations) {
        stations.push_back({{"station_id", s.station_id},
                            {"reading", s.reading ? reading_json(*s.reading) : json(nullptr)}});
      }
      send_json(res, {{"t", format_iso8601(c.t)},
                      {"wind", c.wind ? wind_json(*c.wind) : json(nullptr)},
                      {"smell_reports", smells},
                      {"stations", stations}});
    }));
  }
};

Service::Service(ServiceConfig config, Clock clock) {
  config.validate();
  if (!clock) clock = system_now;
  impl_ = std::make_unique<Impl>(std::move(config), std::move(clock));
}

Service::~Service() { stop(); }

int Service::start() {
  int port = impl_->config.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->config.host);
  } else if (!impl_->server.bind_to_port(impl_->config.host, port)) {
    port = -1;
  }
  if (port < 0) throw IoError("cannot bind " + impl_->config.host + ":" + std::to_string(impl_->config.port));
  impl_->bound_port = port;
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void Service::run() {
  if (!impl_->server.bind_to_port(impl_->config.host, impl_->config.port)) {
    throw IoError("cannot bind " + impl_->config.host + ":" + std::to_string(impl_->config.port));
  }
  impl_->bound_port = impl_->config.port;
  impl_->server.listen_after_bind();
}

void Service::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int Service::port() const { return impl_->bound_port; }

}  // namespace plumewatch
