#include "plumewatch/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <optional>

#include <CLI11.hpp>

#include "plumewatch/config.hpp"
#include "plumewatch/error.hpp"
#include "plumewatch/service.hpp"
#include "plumewatch/smoke.hpp"
#include "plumewatch/survey.hpp"
#include "plumewatch/telemetry.hpp"
#include "plumewatch/timelapse.hpp"
#include "plumewatch/usage.hpp"

namespace plumewatch {

namespace fs = std::filesystem;

namespace {

// --config beats PLUMEWATCH_CONFIG, which beats ./plumewatch.toml.
FlatConfig load_config(const std::string& explicit_path) {
  if (!explicit_path.empty()) return FlatConfig::load(explicit_path);
  if (const char* env = std::getenv("PLUMEWATCH_CONFIG"); env && *env) return FlatConfig::load(env);
  if (fs::exists("plumewatch.toml")) return FlatConfig::load("plumewatch.toml");
  return {};
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return in;
}

void wait_for_shutdown_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"plumewatch: community air-quality platform", "plumewatch"};
  app.require_subcommand(1);

  std::string config_path;
  std::string data_root_flag;
  app.add_option("--config", config_path, "Flat key=value config file");
  app.add_option("--data-root", data_root_flag, "Data root directory")->envname("PLUMEWATCH_DATA_ROOT");

  std::string dataset_id, source_dir;
  auto* ingest = app.add_subcommand("ingest", "Register a directory of timestamped frames as a dataset");
  ingest->add_option("--dataset", dataset_id, "Dataset id")->required();
  ingest->add_option("--dir", source_dir, "Directory of <YYYYMMDDTHHMMSSZ>.jpg|png frames")->required();

  int tile_size = kDefaultTileSize;
  int segment_length = kDefaultSegmentLength;
  auto* tile = app.add_subcommand("tile", "Build the tile pyramid of a dataset");
  tile->add_option("--dataset", dataset_id, "Dataset id")->required();
  tile->add_option("--tile-size", tile_size, "Tile edge in pixels");
  tile->add_option("--segment-length", segment_length, "Frames per tile segment file");

  std::string params_path;
  std::optional<int> bg_window;
  auto* detect = app.add_subcommand("detect", "Run smoke detection and event segmentation");
  detect->add_option("--dataset", dataset_id, "Dataset id")->required();
  detect->add_option("--params", params_path, "Smoke parameter file");
  detect->add_option("--bg-window", bg_window, "Background window in frames (overrides --params)");

  std::string csv_path, stations_path;
  auto* readings = app.add_subcommand("import-readings", "Bulk import t_iso,station_id,pm25 rows");
  readings->add_option("--csv", csv_path, "Readings CSV")->required();
  readings->add_option("--stations", stations_path, "station_id,display_name,latitude,longitude,cadence_s CSV");

  auto* wind = app.add_subcommand("import-wind", "Bulk import t_iso,speed_ms,direction_deg rows");
  wind->add_option("--csv", csv_path, "Wind CSV")->required();

  std::vector<std::string> log_globs, cidrs;
  std::string tz, out_dir;
  auto* analyze = app.add_subcommand("analyze", "Usage analytics over access logs");
  analyze->add_option("--logs", log_globs, "Log file glob (repeatable)")->required();
  analyze->add_option("--exclude-cidr", cidrs, "Excluded network, CIDR (repeatable or comma list)");
  analyze->add_option("--tz", tz, "Study time zone for view dates");
  analyze->add_option("--out", out_dir, "Output directory")->required();

  std::string survey_in, method_name = "automatic";
  auto* survey = app.add_subcommand("survey", "Survey statistics");
  survey->add_option("--in", survey_in, "Respondent CSV")->required();
  survey->add_option("--out", out_dir, "Output directory")->required();
  survey->add_option("--method", method_name, "automatic, exact or normal")
      ->check(CLI::IsMember({"automatic", "exact", "normal"}));

  std::string listen, log_path;
  std::optional<double> rate_limit;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--listen", listen, "host:port");
  serve->add_option("--log", log_path, "Access log path");
  serve->add_option("--rate-limit", rate_limit, "Thumbnail requests per second per ip (0 = off)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (!args.empty()) err << "error: " << e.what() << "\n";
    err << app.help();
    return kExitValidation;
  }

  try {
    const FlatConfig cfg = load_config(config_path);
    const fs::path data_root = !data_root_flag.empty() ? fs::path(data_root_flag)
                                                       : fs::path(cfg.get_or("data_root", "."));
    const DataRoot root(data_root);

    if (ingest->parsed()) {
      const Dataset ds = ingest_frames(root, dataset_id, source_dir);
      out << "ingested " << ds.frame_count() << " frames into " << ds.id << " (" << ds.frame_width << "x"
          << ds.frame_height << ", interval " << ds.capture_interval_s << " s, " << ds.gaps.size()
          << " gaps)\n";
    } else if (tile->parsed()) {
      const TilePyramid p = build_pyramid(root, dataset_id, tile_size, segment_length);
      out << "built " << p.num_levels << " levels of " << p.tile_size << " px tiles for " << p.dataset_id
          << "\n";
    } else if (detect->parsed()) {
      FlatConfig smoke_cfg;
      if (!params_path.empty()) smoke_cfg = FlatConfig::load(params_path);
      if (bg_window) smoke_cfg.set("bg_window", std::to_string(*bg_window));
      const DetectionRun run = run_detection(root, dataset_id, SmokeParams::from_config(smoke_cfg));
      out << "analysed " << run.frames.size() << " frames, " << run.events.size() << " smoke events\n";
    } else if (readings->parsed() || wind->parsed()) {
      fs::create_directories(root.path());
      TelemetryStore store = TelemetryStore::open(root.telemetry_db());
      if (readings->parsed()) {
        if (!stations_path.empty()) {
          auto in = open_input(stations_path);
          for (const Station& s : parse_stations_csv(in)) store.register_station(s);
        }
        auto in = open_input(csv_path);
        const auto rows = parse_readings_csv(in);
        out << "imported " << store.ingest_readings(rows) << " readings\n";
      } else {
        auto in = open_input(csv_path);
        const auto rows = parse_wind_csv(in);
        out << "imported " << store.ingest_winds(rows) << " wind readings\n";
      }
    } else if (analyze->parsed()) {
      AnalysisOptions opt;
      for (const std::string& g : log_globs) {
        for (const fs::path& p : expand_glob(g)) opt.log_files.push_back(p);
      }
      std::vector<std::string> cidr_texts = cidrs;
      if (cidr_texts.empty()) {
        if (auto c = cfg.get("exclude_cidrs")) cidr_texts.push_back(*c);
      }
      for (const std::string& c : cidr_texts) {
        for (Cidr& parsed : parse_cidr_list(c)) opt.exclusions.push_back(std::move(parsed));
      }
      opt.zone = StudyZone::load(!tz.empty() ? tz : cfg.get_or("timezone", "UTC"));
      for (const std::string& id : root.list_datasets()) {
        opt.dataset_dates[id] = root.load_dataset(id).capture_date;
      }
      opt.out_dir = out_dir;
      const AnalysisReport r = run_analysis(opt);
      out << "views " << r.summary.total_views << " (hg " << r.summary.views_hg << ", ag " << r.summary.views_ag
          << "), users " << r.summary.total_users << ", excluded requests " << r.derived.excluded
          << ", skipped lines " << r.lines_skipped << "\n";
      if (r.derived.negative_d > 0) {
        err << "warning: " << r.derived.negative_d << " views predate their dataset and were dropped\n";
      }
    } else if (survey->parsed()) {
      auto in = open_input(survey_in);
      const auto responses = read_survey_csv(in);
      const WilcoxonMethod method = method_name == "exact"    ? WilcoxonMethod::exact
                                    : method_name == "normal" ? WilcoxonMethod::normal
                                                              : WilcoxonMethod::automatic;
      const StudyResult s = run_study(responses, method);
      write_study(s, out_dir);
      out << "valid " << s.n_valid << " of " << s.n_rows << " (incomplete " << s.n_incomplete << ", invalid "
          << s.n_invalid << ")\n";
      for (const VariableResult& v : s.variables) {
        out << to_string(v.variable) << ": ";
        if (v.test) {
          out << "p=" << v.test->p_right << " W+=" << v.test->w_plus << " mean=" << v.test->mean_diff << "\n";
        } else {
          out << "no information\n";
        }
      }
    } else if (serve->parsed()) {
      FlatConfig service_cfg = cfg;
      if (!listen.empty()) service_cfg.set("listen", listen);
      ServiceConfig sc = ServiceConfig::from_config(service_cfg);
      sc.data_root = data_root;
      if (!log_path.empty()) sc.log_path = log_path;
      if (rate_limit) sc.thumbnail_rate_limit = *rate_limit;
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      Service service(sc);
      const int port = service.start();
      out << "listening on " << sc.host << ":" << port << "\n" << std::flush;
      wait_for_shutdown_signal();
      service.stop();
    }
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what();
    if (!e.parameter().empty()) err << " [" << e.parameter() << "]";
    err << "\n";
    return kExitValidation;
  } catch (const NotFoundError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace plumewatch
