#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "plumewatch/config.hpp"
#include "plumewatch/time.hpp"

namespace plumewatch {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path data_root;
  std::string timezone = "UTC";
  std::vector<std::string> exclude_cidrs;  // default exclusions for `analyze`
  double thumbnail_rate_limit = 0.0;       // GET /thumbnail per ip per second, 0 = unlimited
  std::filesystem::path log_path;          // empty = <data_root>/access.log
  std::string admin_token;                 // required on POST /api/readings|wind|stations when set
  bool trust_forwarded_for = false;        // take the client ip from X-Forwarded-For
  int worker_threads = 8;
  int frame_cache_size = 256;

  // Keys: listen (host:port), data_root, timezone, exclude_cidrs (comma list),
  // thumbnail_rate_limit, log_path, admin_token, trust_forwarded_for, worker_threads,
  // frame_cache_size.
  static ServiceConfig from_config(const FlatConfig& cfg);
  void validate() const;
  std::filesystem::path effective_log_path() const;
};

using Clock = std::function<Timestamp()>;
Timestamp system_now();

class Service {
 public:
  explicit Service(ServiceConfig config, Clock clock = system_now);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  int start();
  // Binds and serves on the calling thread until stop().
  void run();
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace plumewatch
