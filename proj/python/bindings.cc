#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "roba/commands.h"
#include "roba/epipolar.h"
#include "roba/error.h"
#include "roba/eval.h"
#include "roba/optimizer.h"
#include "roba/random.h"
#include "roba/so3.h"
#include "roba/synth.h"
#include "roba/view_graph.h"

namespace py = pybind11;

namespace roba {
namespace {

// Rotations cross the boundary as 3x3 float arrays.
std::vector<Rotation> ToRotations(const std::vector<Mat3>& mats) {
  std::vector<Rotation> out;
  out.reserve(mats.size());
  for (const Mat3& m : mats) out.push_back(Rotation::FromMatrix(m));
  return out;
}

std::vector<Mat3> ToMatrices(const std::vector<Rotation>& rots) {
  std::vector<Mat3> out;
  out.reserve(rots.size());
  for (const Rotation& r : rots) out.push_back(r.matrix());
  return out;
}

EdgeObservations ToObservations(const std::vector<Vec3>& f_j,
                                const std::vector<Vec3>& f_k) {
  EdgeObservations obs;
  obs.bearings_j = f_j;
  obs.bearings_k = f_k;
  return obs;
}

py::dict MomentsDict(const EdgeMoments& m) {
  py::dict d;
  d["xx"] = m.xx;
  d["xy"] = m.xy;
  d["xz"] = m.xz;
  d["yy"] = m.yy;
  d["yz"] = m.yz;
  d["zz"] = m.zz;
  return d;
}

EdgeMoments MomentsFromDict(const py::dict& d) {
  EdgeMoments m;
  m.xx = d["xx"].cast<Mat3>();
  m.xy = d["xy"].cast<Mat3>();
  m.xz = d["xz"].cast<Mat3>();
  m.yy = d["yy"].cast<Mat3>();
  m.yz = d["yz"].cast<Mat3>();
  m.zz = d["zz"].cast<Mat3>();
  return m;
}

OptimizerConfig MakeConfig(int iters, double alpha, double alpha_reduced,
                           double delta, bool use_sqrt, bool approximate,
                           int threads) {
  OptimizerConfig cfg;
  cfg.n_iterations = iters;
  cfg.alpha_initial = alpha;
  cfg.alpha_reduced = alpha_reduced;
  cfg.delta = delta;
  cfg.use_sqrt = use_sqrt;
  cfg.approximate_gradient = approximate;
  cfg.num_threads = threads;
  ValidateConfig(cfg);
  return cfg;
}

}  // namespace
}  // namespace roba

PYBIND11_MODULE(_core, m) {
  using namespace roba;
  m.doc() = "Rotation averaging from per-edge epipolar moments.";

  // Held for the life of the process; instances carry the error kind name.
  static PyObject* error_type = py::exception<Error>(m, "Error").release().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error_type)(e.what());
      exc.attr("kind") = ErrorKindName(e.kind());
      PyErr_SetObject(error_type, exc.ptr());
    }
  });

  m.def("exp_map", [](const Vec3& u) { return ExpMap(u).matrix(); }, py::arg("u"));
  m.def("log_map",
        [](const Mat3& r) { return LogMap(Rotation::FromMatrix(r)); },
        py::arg("r"));
  m.def("geodesic_distance",
        [](const Mat3& a, const Mat3& b) {
          return GeodesicDistance(Rotation::FromMatrix(a), Rotation::FromMatrix(b));
        },
        py::arg("r1"), py::arg("r2"));
  m.def("random_rotation",
        [](double max_angle, uint64_t seed) {
          Rng rng(seed);
          return RandomRotation(max_angle, rng).matrix();
        },
        py::arg("max_angle"), py::arg("seed"));

  m.def("precompute_moments",
        [](const std::vector<Vec3>& f_j, const std::vector<Vec3>& f_k) {
          return MomentsDict(PrecomputeMoments(ToObservations(f_j, f_k)));
        },
        py::arg("bearings_j"), py::arg("bearings_k"));
  m.def("assemble_m",
        [](const Mat3& rel, const py::dict& moments) {
          return AssembleM(rel, MomentsFromDict(moments));
        },
        py::arg("relative_rotation"), py::arg("moments"));
  m.def("smallest_eigenvalue", &SmallestEigenvalue, py::arg("m"));
  m.def("symmetric_eigenvalues", &SymmetricEigenvalues, py::arg("m"));
  m.def("recover_translation_direction", &RecoverTranslationDirection,
        py::arg("m"));
  m.def("edge_cost",
        [](const Mat3& rel, const py::dict& moments, bool use_sqrt) {
          return EdgeCost(rel, MomentsFromDict(moments), use_sqrt);
        },
        py::arg("relative_rotation"), py::arg("moments"),
        py::arg("use_sqrt") = true);

  py::class_<Edge>(m, "Edge")
      .def_readonly("j", &Edge::j)
      .def_readonly("k", &Edge::k)
      .def_property_readonly("num_observations",
                             [](const Edge& e) { return e.observations.size(); })
      .def_property_readonly("bearings_j",
                             [](const Edge& e) { return e.observations.bearings_j; })
      .def_property_readonly("bearings_k",
                             [](const Edge& e) { return e.observations.bearings_k; })
      .def_property_readonly("moments",
                             [](const Edge& e) { return MomentsDict(e.moments); });

  py::class_<ViewGraph>(m, "ViewGraph")
      .def_static(
          "create",
          [](int n, const std::vector<std::tuple<int, int, std::vector<Vec3>,
                                                 std::vector<Vec3>>>& edges,
             const std::vector<Mat3>& initial,
             const std::optional<std::vector<Mat3>>& gt, int min_covisible) {
            std::vector<EdgeInput> inputs;
            for (const auto& [j, k, f_j, f_k] : edges) {
              inputs.push_back({j, k, ToObservations(f_j, f_k), std::nullopt});
            }
            std::optional<std::vector<Rotation>> gt_rots;
            if (gt) gt_rots = ToRotations(*gt);
            return ViewGraph::Create(n, std::move(inputs), ToRotations(initial),
                                     std::move(gt_rots),
                                     GraphOptions{min_covisible});
          },
          py::arg("num_cameras"), py::arg("edges"), py::arg("initial_rotations"),
          py::arg("gt_rotations") = py::none(), py::arg("min_covisible") = 10)
      .def_property_readonly("num_cameras", &ViewGraph::num_cameras)
      .def_property_readonly("num_edges", &ViewGraph::num_edges)
      .def_property_readonly("edges", &ViewGraph::edges)
      .def_property_readonly("initial_rotations",
                             [](const ViewGraph& g) {
                               return ToMatrices(g.initial_rotations());
                             })
      .def_property_readonly("gt_rotations",
                             [](const ViewGraph& g) -> std::optional<std::vector<Mat3>> {
                               if (!g.gt_rotations()) return std::nullopt;
                               return ToMatrices(*g.gt_rotations());
                             })
      .def("with_initial_rotations",
           [](const ViewGraph& g, const std::vector<Mat3>& rots) {
             return g.WithInitialRotations(ToRotations(rots));
           })
      .def("stats", [](const ViewGraph& g) {
        const GraphStats s = ComputeGraphStats(g);
        py::dict d;
        d["n_edges"] = s.n_edges;
        d["edge_density"] = s.edge_density;
        d["mean_rel_rot_error"] = s.mean_rel_rot_error;
        d["median_rel_rot_error"] = s.median_rel_rot_error;
        return d;
      })
      .def("to_json", &SerializeGraph)
      .def_static("from_json",
                  [](const std::string& text, int min_covisible) {
                    return ParseGraph(text, GraphOptions{min_covisible});
                  },
                  py::arg("text"), py::arg("min_covisible") = 10);

  m.def("load_graph",
        [](const std::filesystem::path& path, int min_covisible) {
          return LoadGraph(path, GraphOptions{min_covisible});
        },
        py::arg("path"), py::arg("min_covisible") = 10);
  m.def("save_graph", &SaveGraph, py::arg("graph"), py::arg("path"));
  m.def("load_rotations",
        [](const std::filesystem::path& path) {
          return ToMatrices(LoadRotations(path));
        },
        py::arg("path"));
  m.def("save_rotations",
        [](const std::vector<Mat3>& rots, const std::filesystem::path& path) {
          SaveRotations(ToRotations(rots), path);
        },
        py::arg("rotations"), py::arg("path"));

  py::class_<SimSettings>(m, "SimSettings")
      .def(py::init<>())
      .def_readwrite("n", &SimSettings::n)
      .def_readwrite("n_cov", &SimSettings::n_cov)
      .def_readwrite("sigma", &SimSettings::sigma)
      .def_readwrite("d_min", &SimSettings::d_min)
      .def_readwrite("d_max", &SimSettings::d_max)
      .def_property(
          "layout", [](const SimSettings& s) { return std::string(LayoutName(s.layout)); },
          [](SimSettings& s, const std::string& name) { s.layout = ParseLayout(name); })
      .def_readwrite("groups", &SimSettings::groups)
      .def_readwrite("group_size", &SimSettings::group_size)
      .def_readwrite("rot_perturb_max", &SimSettings::rot_perturb_max)
      .def_readwrite("image_w", &SimSettings::image_w)
      .def_readwrite("image_h", &SimSettings::image_h)
      .def_readwrite("focal", &SimSettings::focal)
      .def_readwrite("seed", &SimSettings::seed)
      .def_readwrite("inlier_threshold", &SimSettings::inlier_threshold)
      .def_readwrite("candidate_perturb_max", &SimSettings::candidate_perturb_max)
      .def_readwrite("num_candidates", &SimSettings::num_candidates)
      .def_readwrite("min_inliers", &SimSettings::min_inliers)
      .def("to_json", &SerializeSimSettings);

  m.def("generate_dataset",
        [](const SimSettings& cfg) { return GenerateDataset(cfg).graph; },
        py::arg("settings"));
  m.def("perturb_rotations",
        [](const std::vector<Mat3>& rots, double max_deg, uint64_t seed) {
          return ToMatrices(PerturbRotations(ToRotations(rots), max_deg, seed));
        },
        py::arg("rotations"), py::arg("max_deg"), py::arg("seed"));

  m.def("total_cost",
        [](const std::vector<Mat3>& rots, const ViewGraph& g, bool use_sqrt) {
          return TotalCost(ToRotations(rots), g, use_sqrt);
        },
        py::arg("rotations"), py::arg("graph"), py::arg("use_sqrt") = true);

  py::class_<OptimizeResult>(m, "OptimizeResult")
      .def_property_readonly("rotations",
                             [](const OptimizeResult& r) { return ToMatrices(r.rotations); })
      .def_readonly("initial_cost", &OptimizeResult::initial_cost)
      .def_readonly("final_cost", &OptimizeResult::final_cost)
      .def_readonly("evaluations_per_iteration",
                    &OptimizeResult::evaluations_per_iteration)
      .def_readonly("total_evaluations", &OptimizeResult::total_evaluations)
      .def_readonly("converged_early", &OptimizeResult::converged_early)
      .def_property_readonly("costs", [](const OptimizeResult& r) {
        std::vector<double> out;
        for (const IterationRecord& rec : r.trace.records) out.push_back(rec.cost);
        return out;
      });

  m.def("optimize",
        [](const ViewGraph& g, int iters, double alpha, double alpha_reduced,
           double delta, bool use_sqrt, bool approximate_gradient, int threads) {
          const OptimizerConfig cfg = MakeConfig(iters, alpha, alpha_reduced, delta,
                                                 use_sqrt, approximate_gradient,
                                                 threads);
          py::gil_scoped_release release;
          return Optimize(g, cfg);
        },
        py::arg("graph"), py::arg("iters") = 100, py::arg("alpha") = 0.01,
        py::arg("alpha_reduced") = 0.001, py::arg("delta") = 1e-4,
        py::arg("use_sqrt") = true, py::arg("approximate_gradient") = true,
        py::arg("threads") = 1);

  py::class_<ErrorReport>(m, "ErrorReport")
      .def_readonly("mn1", &ErrorReport::mn1)
      .def_readonly("md1", &ErrorReport::md1)
      .def_readonly("mn2", &ErrorReport::mn2)
      .def_readonly("md2", &ErrorReport::md2)
      .def_readonly("errors_l1", &ErrorReport::errors_l1)
      .def_readonly("errors_l2", &ErrorReport::errors_l2)
      .def("to_json", &ReportToJson)
      .def("to_csv", &ReportToCsv);

  m.def("error_report",
        [](const std::vector<Mat3>& est, const std::vector<Mat3>& gt) {
          return ComputeErrorReport(ToRotations(est), ToRotations(gt));
        },
        py::arg("estimates"), py::arg("gt"));
  m.def("align_l1",
        [](const std::vector<Mat3>& est, const std::vector<Mat3>& gt) {
          return AlignL1(ToRotations(est), ToRotations(gt)).matrix();
        },
        py::arg("estimates"), py::arg("gt"));
  m.def("align_l2",
        [](const std::vector<Mat3>& est, const std::vector<Mat3>& gt) {
          return AlignL2(ToRotations(est), ToRotations(gt)).matrix();
        },
        py::arg("estimates"), py::arg("gt"));

  // Returns (exit_code, stdout, stderr) of the command-line tool.
  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out;
          std::ostringstream err;
          int code;
          {
            py::gil_scoped_release release;
            code = RunCli(args, out, err);
          }
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
