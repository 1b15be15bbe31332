#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "semtrack/assignment.hpp"
#include "semtrack/degrade.hpp"
#include "semtrack/embedder.hpp"
#include "semtrack/error.hpp"
#include "semtrack/fusion.hpp"
#include "semtrack/metrics.hpp"
#include "semtrack/mot_io.hpp"
#include "semtrack/synth.hpp"
#include "semtrack/tracker.hpp"

namespace py = pybind11;
using namespace semtrack;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  Array a(t.shape());
  std::copy(t.data().begin(), t.data().end(), a.mutable_data());
  return a;
}

struct FusionModel {
  FusionParams params;
  FusionDims dims;

  FusionModel(std::size_t channels, std::size_t height, std::size_t width, std::size_t queries,
              std::size_t query_dim, std::size_t heads, std::uint64_t seed) {
    dims = {channels, height, width, queries, query_dim, heads};
    RngStream rng(seed);
    params = init_fusion_params(dims, rng);
  }
};

py::dict report_dict(const MetricsReport& r) {
  py::dict d;
  d["HOTA"] = r.hota;
  d["DetA"] = r.deta;
  d["AssA"] = r.assa;
  d["MOTA"] = r.mota;
  d["IDF1"] = r.idf1;
  d["IDSW"] = r.clear.idsw;
  d["text"] = format_report(r);
  return d;
}

}  // namespace

PYBIND11_MODULE(_semtrack, m) {
  m.doc() = "Degradation, fusion, tracking and MOT evaluation core";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<BoundingBox>(m, "BoundingBox")
      .def(py::init<double, double, double, double>(), py::arg("left"), py::arg("top"), py::arg("width"),
           py::arg("height"))
      .def_readwrite("left", &BoundingBox::left)
      .def_readwrite("top", &BoundingBox::top)
      .def_readwrite("width", &BoundingBox::width)
      .def_readwrite("height", &BoundingBox::height)
      .def("__eq__", [](const BoundingBox& a, const BoundingBox& b) { return a == b; })
      .def("__repr__", [](const BoundingBox& b) {
        return "BoundingBox(" + std::to_string(b.left) + ", " + std::to_string(b.top) + ", " +
               std::to_string(b.width) + ", " + std::to_string(b.height) + ")";
      });

  py::class_<DetectionRecord>(m, "DetectionRecord")
      .def(py::init([](std::int64_t frame, std::optional<std::int64_t> identity, BoundingBox box, double confidence) {
             return DetectionRecord{frame, identity, box, confidence};
           }),
           py::arg("frame"), py::arg("identity"), py::arg("box"), py::arg("confidence") = 1.0)
      .def_readwrite("frame", &DetectionRecord::frame)
      .def_readwrite("identity", &DetectionRecord::identity)
      .def_readwrite("box", &DetectionRecord::box)
      .def_readwrite("confidence", &DetectionRecord::confidence)
      .def("__eq__", [](const DetectionRecord& a, const DetectionRecord& b) { return a == b; });

  m.def("parse_mot", &parse_mot_file, py::arg("text"), "Parse MOTChallenge text into records");
  m.def("write_mot", [](const std::vector<DetectionRecord>& r) { return write_mot_file(r); }, py::arg("records"));
  m.def("read_mot", &read_mot_file, py::arg("path"));

  m.def("iou", &iou, py::arg("a"), py::arg("b"));

  m.def(
      "hungarian",
      [](const std::vector<std::vector<double>>& rows) {
        const std::size_t cols = rows.empty() ? 0 : rows[0].size();
        CostMatrix c(rows.size(), cols);
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (rows[i].size() != cols) throw ValidationError("cost matrix rows differ in length");
          for (std::size_t j = 0; j < cols; ++j) c(i, j) = rows[i][j];
        }
        const auto a = hungarian(c);
        return py::make_tuple(a.row_to_col, a.cost);
      },
      py::arg("cost"), "Minimum-cost assignment; inf marks forbidden pairs. Returns (row_to_col, cost).");

  m.def(
      "evaluate",
      [](const std::vector<DetectionRecord>& gt, const std::vector<DetectionRecord>& pred) {
        return report_dict(evaluate(records_to_trackset(gt), records_to_trackset(pred)));
      },
      py::arg("gt"), py::arg("pred"), "HOTA, DetA, AssA, MOTA and IDF1 in percent");

  m.def(
      "degrade_sequence",
      [](const std::filesystem::path& in, const std::filesystem::path& out, std::uint64_t seed, int stages,
         double fraction, bool restore_size) {
        DegradationConfig c;
        c.seed = seed;
        c.stages = stages;
        c.restore_original_size = restore_size;
        const auto manifest = degrade_sequence(in, out, c, fraction);
        py::list checksums;
        for (const auto& f : manifest.frames) checksums.append(f.checksum);
        py::dict d;
        d["selected"] = manifest.selected;
        d["frames"] = manifest.frames.size();
        d["checksums"] = checksums;
        return d;
      },
      py::arg("input"), py::arg("output"), py::arg("seed") = 0, py::arg("stages") = 2,
      py::arg("fraction") = 2.0 / 3.0, py::arg("restore_size") = true);

  py::class_<FusionModel>(m, "FusionModel")
      .def(py::init<std::size_t, std::size_t, std::size_t, std::size_t, std::size_t, std::size_t, std::uint64_t>(),
           py::arg("channels") = 4, py::arg("height") = 3, py::arg("width") = 3, py::arg("queries") = 5,
           py::arg("query_dim") = 4, py::arg("heads") = 4, py::arg("seed") = 0)
      .def("adapter", [](const FusionModel& f, const Array& x_q, const Array& x_s) {
        return to_array(adapter_forward(to_tensor(x_q), to_tensor(x_s), f.params.adapter));
      })
      .def("vsfm", [](const FusionModel& f, const Array& x_as, const Array& x_q) {
        return to_array(vsfm_forward(to_tensor(x_as), to_tensor(x_q), f.params.vsfm));
      })
      .def("fuse", [](const FusionModel& f, const Array& x_q, const Array& x_s) {
        return to_array(fuse_queries(to_tensor(x_q), to_tensor(x_s), f.params));
      });

  m.def(
      "track",
      [](const std::filesystem::path& seq_dir, const std::vector<DetectionRecord>& detections, double lambda,
         double proposal_threshold, double propagate_threshold, int max_age, double match_floor, std::uint64_t seed) {
        TrackerConfig cfg;
        cfg.lambda = lambda;
        cfg.proposal_threshold = proposal_threshold;
        cfg.propagate_threshold = propagate_threshold;
        cfg.max_age = max_age;
        cfg.match_floor = match_floor;
        cfg.seed = seed;
        cfg.validate();
        DefaultEmbedder embedder;
        return run_sequence(load_sequence(seq_dir), detections, embedder, cfg).records;
      },
      py::arg("sequence"), py::arg("detections"), py::arg("lambda_") = 0.5, py::arg("proposal_threshold") = 0.05,
      py::arg("propagate_threshold") = 0.5, py::arg("max_age") = 10, py::arg("match_floor") = 0.3,
      py::arg("seed") = 0);

  m.def(
      "synth",
      [](const std::filesystem::path& out, int frames, int objects, std::uint64_t seed, int width, int height) {
        SynthConfig c;
        c.frames = frames;
        c.objects = objects;
        c.seed = seed;
        c.width = width;
        c.height = height;
        write_synthetic(out, make_synthetic(c));
      },
      py::arg("output"), py::arg("frames") = 20, py::arg("objects") = 3, py::arg("seed") = 0, py::arg("width") = 320,
      py::arg("height") = 240, "Write a synthetic sequence with ground truth and perfect detections");
}
