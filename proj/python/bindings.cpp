#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "nnmass/archspec.hpp"
#include "nnmass/cli.hpp"
#include "nnmass/costmodel.hpp"
#include "nnmass/error.hpp"
#include "nnmass/restructure.hpp"
#include "nnmass/scaler.hpp"
#include "nnmass/search.hpp"
#include "nnmass/topology.hpp"
#include "nnmass/verify.hpp"

namespace py = pybind11;
using namespace nnmass;

namespace {

// Descriptors cross the boundary as JSON text or a preset name.
ArchDescriptor load_arch(const std::string& name_or_json) {
  const auto& names = preset_names();
  if (std::find(names.begin(), names.end(), name_or_json) != names.end()) return preset(name_or_json);
  return parse_arch(name_or_json);
}

py::dict candidate_dict(const ScaleCandidate& c) {
  py::dict d;
  d["w_m"] = c.w_m;
  d["d_m"] = c.d_m;
  d["widths"] = c.widths;
  d["depths"] = c.depths;
  d["params"] = c.params;
  d["macs"] = c.macs;
  d["mass"] = c.mass;
  d["nonlinear_units"] = c.nonlinear_units;
  d["valid"] = c.valid;
  return d;
}

Budget make_budget(std::optional<double> macs, std::optional<double> params, double tol) {
  Budget b;
  if (macs) b.target_macs = static_cast<std::int64_t>(*macs);
  if (params) b.target_params = static_cast<std::int64_t>(*params);
  b.tolerance = tol;
  b.validate();
  return b;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "NN-Mass cost model, scaling search, restructuring and verification harness.";
  py::register_exception<Error>(m, "NnmassError", PyExc_ValueError);

  m.def("preset_names", &preset_names);
  m.def("preset_json", [](const std::string& name) { return serialize_arch(preset(name)); });
  m.def("validate_arch", [](const std::string& arch) { return serialize_arch(load_arch(arch)); },
        py::arg("arch"), "Parse and validate a preset name or descriptor JSON; returns the canonical JSON.");

  m.def(
      "cost",
      [](const std::string& arch, int resolution) {
        const auto a = load_arch(arch);
        const auto r = count_arch(a, resolution > 0 ? resolution : a.input_resolution);
        py::dict d;
        d["params"] = r.total_params;
        d["macs"] = r.total_macs;
        return d;
      },
      py::arg("arch"), py::arg("resolution") = 0);
  m.def(
      "mass",
      [](const std::string& arch) {
        const auto r = nn_mass(load_arch(arch));
        py::dict d;
        d["mass"] = r.mass;
        d["nonlinear_units"] = r.nonlinear_units;
        d["k"] = to_double(r.k);
        d["avg_degree"] = r.avg_degree;
        return d;
      },
      py::arg("arch"));

  m.def(
      "scan",
      [](const std::string& arch, int resolution, unsigned threads) {
        const auto a = load_arch(arch);
        py::list out;
        for (const auto& c : enumerate_candidates(a, MultiplierGrid{}, resolution > 0 ? resolution : a.input_resolution,
                                                  threads)) {
          out.append(candidate_dict(c));
        }
        return out;
      },
      py::arg("arch") = "convnext-t", py::arg("resolution") = 0, py::arg("threads") = 0,
      "Evaluate the default 40 x 20 width/depth grid.");
  m.def(
      "select",
      [](const std::string& arch, std::optional<double> macs, std::optional<double> params, double tol) {
        const auto a = load_arch(arch);
        const auto scan = enumerate_candidates(a, MultiplierGrid{}, a.input_resolution);
        const auto admitted = filter_budget(scan, make_budget(macs, params, tol));
        py::dict d;
        d["candidates"] = admitted.size();
        d["selected"] = admitted.empty() ? py::object(py::none()) : py::object(candidate_dict(select_max_mass(admitted)));
        return d;
      },
      py::arg("arch") = "convnext-t", py::arg("macs") = py::none(), py::arg("params") = py::none(),
      py::arg("tol") = 0.025);
  m.def(
      "pareto",
      [](const std::string& arch, const std::string& axis) {
        const auto a = load_arch(arch);
        if (axis != "macs" && axis != "params") throw Error("axis must be macs or params");
        py::list out;
        for (const auto& c : pareto_frontier(enumerate_candidates(a, MultiplierGrid{}, a.input_resolution),
                                             axis == "macs" ? CostAxis::Macs : CostAxis::Params)) {
          out.append(candidate_dict(c));
        }
        return out;
      },
      py::arg("arch") = "convnext-t", py::arg("axis") = "macs");

  m.def(
      "collapse_trial",
      [](std::uint64_t seed, int cin, int expansion, int kernel, int stride, bool biased) {
        CollapseTrial t;
        t.seed = seed;
        t.in_channels = cin;
        t.expansion = Rational(expansion);
        t.kernel = kernel;
        t.stride = stride;
        t.biased = biased;
        const auto r = run_collapse_trial(t);
        py::dict d;
        d["max_abs_diff_interior"] = r.max_abs_diff_interior;
        d["max_abs_diff_full"] = r.max_abs_diff_full;
        d["pass"] = r.pass;
        return d;
      },
      py::arg("seed") = 0, py::arg("cin") = 4, py::arg("expansion") = 6, py::arg("kernel") = 3,
      py::arg("stride") = 1, py::arg("biased") = false);
  m.def(
      "restructure",
      [](const std::string& arch, int keep_num, int keep_den) {
        return serialize_arch(restructure_arch(load_arch(arch), Rational(keep_num, keep_den), Activation::none()));
      },
      py::arg("arch") = "convnext-t", py::arg("keep_num") = 3, py::arg("keep_den") = 5);

  m.def(
      "afrb_search",
      [](std::uint64_t seed, int epochs, double lambda) {
        ModelConfig mc;
        mc.seed = seed;
        auto model = make_afrb_model(mc);
        SearchConfig sc;
        sc.seed = seed;
        sc.epochs = epochs;
        sc.lambda = lambda;
        const auto data = make_dataset(DatasetKind::Blobs, 256, 0.3, seed);
        const auto trace = train_search(model, data, sc);
        py::dict d;
        d["trace_csv"] = trace_csv(trace);
        d["summary_json"] = search_summary_json(model, trace, sc.band);
        return d;
      },
      py::arg("seed") = 0, py::arg("epochs") = 300, py::arg("lambda_") = 1e-3);

  m.def(
      "ldi",
      [](int width, int depth, int skip, std::optional<double> q, int trials, std::uint64_t seed) {
        LinearDensenetConfig c;
        c.width = width;
        c.depth = depth;
        c.skip = skip;
        c.seed = seed;
        c.q = q.value_or(1.0 / build_linear_densenet(c).k_hat);
        return ldi_report_json(c, ldi_report(c, trials));
      },
      py::arg("width") = 32, py::arg("depth") = 8, py::arg("skip") = 32, py::arg("q") = py::none(),
      py::arg("trials") = 200, py::arg("seed") = 0);
  m.def(
      "count_regions",
      [](const std::vector<int>& widths, std::uint64_t seed, bool relu, double radius, int grid) {
        const auto r = count_linear_regions(random_relu_mlp(widths, seed, relu), radius, grid);
        py::dict d;
        d["distinct_patterns"] = r.distinct_patterns;
        d["relu_units"] = r.relu_units;
        return d;
      },
      py::arg("widths"), py::arg("seed") = 0, py::arg("relu") = true, py::arg("radius") = 3.0, py::arg("grid") = 256);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run a CLI subcommand in-process; returns (exit_code, stdout, stderr).");
}
