#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "plumewatch/cli.hpp"
#include "plumewatch/error.hpp"
#include "plumewatch/smoke.hpp"
#include "plumewatch/survey.hpp"
#include "plumewatch/thumbnail.hpp"
#include "plumewatch/timelapse.hpp"
#include "plumewatch/usage.hpp"

namespace py = pybind11;
using namespace plumewatch;

PYBIND11_MODULE(_plumewatch, m) {
  m.doc() = "plumewatch core bindings";

  auto validation_error = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NotFoundError>(m, "NotFoundError", PyExc_LookupError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NotImplementedError>(m, "NotImplementedError", PyExc_NotImplementedError);
  (void)validation_error;

  py::enum_<ThumbnailFormat>(m, "ThumbnailFormat")
      .value("gif", ThumbnailFormat::gif)
      .value("mp4", ThumbnailFormat::mp4);
  py::enum_<Origin>(m, "Origin").value("human", Origin::human).value("algorithm", Origin::algorithm);

  py::class_<PixelRect>(m, "PixelRect")
      .def(py::init([](int l, int t, int r, int b) { return PixelRect{l, t, r, b}; }), py::arg("left"),
           py::arg("top"), py::arg("right"), py::arg("bottom"))
      .def_readwrite("left", &PixelRect::left)
      .def_readwrite("top", &PixelRect::top)
      .def_readwrite("right", &PixelRect::right)
      .def_readwrite("bottom", &PixelRect::bottom)
      .def("__eq__", [](const PixelRect& a, const PixelRect& b) { return a == b; });

  py::class_<ThumbnailSpec>(m, "ThumbnailSpec")
      .def(py::init<>())
      .def_readwrite("dataset_id", &ThumbnailSpec::dataset_id)
      .def_readwrite("bounds", &ThumbnailSpec::bounds)
      .def_readwrite("out_width", &ThumbnailSpec::out_width)
      .def_readwrite("out_height", &ThumbnailSpec::out_height)
      .def_readwrite("start_frame", &ThumbnailSpec::start_frame)
      .def_readwrite("nframes", &ThumbnailSpec::nframes)
      .def_readwrite("fps", &ThumbnailSpec::fps)
      .def_readwrite("format", &ThumbnailSpec::format)
      .def_readwrite("origin", &ThumbnailSpec::origin)
      .def("__eq__", [](const ThumbnailSpec& a, const ThumbnailSpec& b) { return a == b; });

  m.def("encode_url", &encode_url);
  m.def("decode_url", [](const std::string& url) { return decode_url(url); });
  m.def("validate_spec", [](const ThumbnailSpec& s) { validate(s); });
  m.def("render_thumbnail", [](const std::filesystem::path& root, const ThumbnailSpec& spec) {
    const RenderedThumbnail r = render_thumbnail(DataRoot(root), spec);
    return py::bytes(reinterpret_cast<const char*>(r.bytes.data()), r.bytes.size());
  });

  py::class_<TilePyramid>(m, "TilePyramid")
      .def_static("plan", &TilePyramid::plan, py::arg("dataset_id"), py::arg("frame_width"),
                  py::arg("frame_height"), py::arg("tile_size") = kDefaultTileSize)
      .def_readonly("num_levels", &TilePyramid::num_levels)
      .def_readonly("tile_size", &TilePyramid::tile_size)
      .def("level_width", &TilePyramid::level_width)
      .def("level_height", &TilePyramid::level_height)
      .def("cols", &TilePyramid::cols)
      .def("rows", &TilePyramid::rows);

  m.def("ingest_frames", [](const std::filesystem::path& root, const std::string& id,
                            const std::filesystem::path& dir) {
    return ingest_frames(DataRoot(root), id, dir).frame_count();
  });
  m.def("build_pyramid", [](const std::filesystem::path& root, const std::string& id, int tile_size) {
    return build_pyramid(DataRoot(root), id, tile_size).num_levels;
  }, py::arg("root"), py::arg("dataset_id"), py::arg("tile_size") = kDefaultTileSize);

  py::class_<FrameRun>(m, "FrameRun")
      .def_readonly("start", &FrameRun::start)
      .def_readonly("end", &FrameRun::end);
  m.def("segment_runs", [](const std::vector<int>& counts, int threshold, int min_frames, int merge_gap) {
    std::vector<std::pair<int, int>> out;
    for (const FrameRun& r : segment_runs(counts, threshold, min_frames, merge_gap)) out.emplace_back(r.start, r.end);
    return out;
  });

  py::class_<AccessLogEntry>(m, "AccessLogEntry")
      .def_readonly("ip", &AccessLogEntry::ip)
      .def_readonly("method", &AccessLogEntry::method)
      .def_readonly("path_and_query", &AccessLogEntry::path_and_query)
      .def_readonly("status", &AccessLogEntry::status)
      .def_readonly("bytes", &AccessLogEntry::bytes)
      .def_readonly("user_agent", &AccessLogEntry::user_agent);
  m.def("parse_log_line", [](const std::string& line) { return parse_log_line(line); });
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return pearson(x, y); });

  py::enum_<WilcoxonMethod>(m, "WilcoxonMethod")
      .value("automatic", WilcoxonMethod::automatic)
      .value("exact", WilcoxonMethod::exact)
      .value("normal", WilcoxonMethod::normal);
  py::class_<TestResult>(m, "TestResult")
      .def_readonly("n_total", &TestResult::n_total)
      .def_readonly("n_effective", &TestResult::n_effective)
      .def_readonly("w_plus", &TestResult::w_plus)
      .def_readonly("p_right", &TestResult::p_right)
      .def_readonly("method", &TestResult::method)
      .def_readonly("mean_diff", &TestResult::mean_diff)
      .def_readonly("ci95_half_width", &TestResult::ci95_half_width);
  m.def("wilcoxon_right", [](const std::vector<double>& diffs, WilcoxonMethod method) {
    return wilcoxon_right(diffs, method);
  }, py::arg("diffs"), py::arg("method") = WilcoxonMethod::automatic);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
