#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "byzcode/cluster.hpp"
#include "byzcode/encoder.hpp"
#include "byzcode/experiment.hpp"
#include "byzcode/locator.hpp"
#include "byzcode/mvp.hpp"
#include "byzcode/optim.hpp"

namespace py = pybind11;
using namespace byzcode;

namespace {

py::dict report_dict(const SupportReport& r) {
  py::dict d;
  d["support"] = r.support;
  d["magnitudes"] = r.magnitudes;
  d["residual"] = r.residual;
  d["failed"] = r.failed;
  return d;
}

py::dict outcome_dict(const DecodeOutcome& out) {
  py::dict d;
  d["product"] = out.product;
  d["corrupt"] = out.corrupt;
  d["erased"] = out.erased;
  d["residual"] = out.residual;
  return d;
}

ExperimentConfig config_from(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

TargetSelection parse_selection(const std::string& name) {
  if (name == "fixed-set") return TargetSelection::fixed_set;
  if (name == "per-round-random") return TargetSelection::per_round_random;
  throw Error(ErrorCode::config_parse, "selection must be fixed-set or per-round-random");
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Error-locator codes for distributed matrix-vector products";

  static py::exception<Error> error(mod, "ByzcodeError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object code = py::str(to_string(e.code()));
      PyErr_SetObject(error.ptr(), py::make_tuple(code, py::str(e.what())).ptr());
    }
  });

  py::enum_<NodeScheme>(mod, "NodeScheme")
      .value("chebyshev", NodeScheme::chebyshev)
      .value("equispaced", NodeScheme::equispaced);
  py::enum_<BasisVariant>(mod, "BasisVariant")
      .value("rref", BasisVariant::rref)
      .value("orthonormal", BasisVariant::orthonormal);

  py::class_<ErrorLocatorMatrix>(mod, "Locator")
      .def_property_readonly("m", &ErrorLocatorMatrix::m)
      .def_property_readonly("k", &ErrorLocatorMatrix::k)
      .def_property_readonly("q", &ErrorLocatorMatrix::q)
      .def_property_readonly("nodes", &ErrorLocatorMatrix::nodes)
      .def("monomial", &ErrorLocatorMatrix::monomial)
      .def("row_basis", &ErrorLocatorMatrix::row_basis)
      .def("syndrome", &ErrorLocatorMatrix::syndrome, py::arg("e"))
      .def("from_monomial", &ErrorLocatorMatrix::from_monomial, py::arg("s"));

  py::class_<NullBasis>(mod, "NullBasis")
      .def_readonly("coeffs", &NullBasis::coeffs)
      .def_readonly("variant", &NullBasis::variant)
      .def_property_readonly("m", &NullBasis::m)
      .def_property_readonly("q", &NullBasis::q);

  mod.def("build_locator", &build_locator, py::arg("m"), py::arg("t"),
          py::arg("scheme") = NodeScheme::chebyshev);
  mod.def("null_basis", &null_basis, py::arg("locator"),
          py::arg("variant") = BasisVariant::rref);

  mod.def(
      "recover_support",
      [](const ErrorLocatorMatrix& F, const Vector& s, int t, double rel, double abs) {
        return report_dict(recover_support(F, s, t, {rel, abs}));
      },
      py::arg("locator"), py::arg("syndrome"), py::arg("t"), py::arg("relative") = 1e-8,
      py::arg("absolute") = 0.0);
  mod.def(
      "joint_support",
      [](const ErrorLocatorMatrix& F, const Matrix& s, std::uint64_t seed, double rel) {
        return report_dict(joint_support(F, s, seed, {rel, 0.0}));
      },
      py::arg("locator"), py::arg("syndromes"), py::arg("seed") = 0, py::arg("relative") = 1e-8);

  // Shares come back as the p x cols matrices each worker stores.
  mod.def(
      "encode",
      [](const NullBasis& basis, const Matrix& a) {
        std::vector<Matrix> out;
        for (const EncodedShare& sh : encode(basis, a)) out.push_back(sh.data);
        return out;
      },
      py::arg("basis"), py::arg("a"));
  mod.def(
      "worker_product",
      [](const NullBasis& basis, const Matrix& a, int worker, const Vector& v) {
        return worker_product(encode(basis, a).at(worker), v);
      },
      py::arg("basis"), py::arg("a"), py::arg("worker"), py::arg("v"));

  // payloads[i] is worker i's response, None for a straggler.
  mod.def(
      "decode",
      [](const std::vector<std::optional<Vector>>& payloads, const ErrorLocatorMatrix& F,
         const NullBasis& basis, Index rows, std::uint64_t seed, double scale) {
        std::vector<WorkerResponse> resp;
        for (std::size_t i = 0; i < payloads.size(); ++i) {
          resp.push_back({static_cast<int>(i), payloads[i]});
        }
        DecodeOptions opt;
        opt.seed = seed;
        opt.scale = scale;
        return outcome_dict(decode(resp, F, basis, BlockGeometry::make(rows, basis.q()), opt));
      },
      py::arg("payloads"), py::arg("locator"), py::arg("basis"), py::arg("rows"),
      py::arg("seed") = 0, py::arg("scale") = 0.0);

  mod.def(
      "coded_matvec",
      [](const Matrix& a, const Vector& v, int m, int t, int s, const std::string& adversary,
         const std::string& selection, double sigma, std::uint64_t seed) {
        ClusterConfig c;
        c.m = m;
        c.t = t;
        c.s = s;
        c.seed = seed;
        c.adversary.kind = parse_adversary_kind(adversary);
        c.adversary.selection = parse_selection(selection);
        c.adversary.sigma = sigma;
        if (s > 0) c.straggler_policy = StragglerPolicy::random_per_round;
        Cluster cl(c);
        const auto& shares = cl.install("a", a, BasisVariant::rref, Provenance::x);
        if (v.size() != a.cols()) throw Error(ErrorCode::dimension_mismatch, "vector length");
        auto resp = cl.run_round(v, [&shares](int i, const Vector& req, OpCounter* ops) {
          return worker_product(shares[i], req, ops);
        });
        DecodeOptions opt;
        opt.seed = cl.decode_seed();
        opt.scale = cl.coeff_bound(BasisVariant::rref) * a.norm() * v.norm();
        py::dict d = outcome_dict(decode(resp, cl.locator(), cl.rref_basis(), shares[0].geometry, opt));
        d["true_corrupt"] = cl.last_selection().corrupt;
        d["true_stragglers"] = cl.last_selection().stragglers;
        return d;
      },
      py::arg("a"), py::arg("v"), py::arg("m"), py::arg("t"), py::arg("s") = 0,
      py::arg("adversary") = "honest", py::arg("selection") = "fixed-set",
      py::arg("sigma") = 100.0, py::arg("seed") = 1);

  mod.def(
      "gen_dataset",
      [](Index n, Index d, std::uint64_t seed) {
        Dataset ds = gen_dataset(n, d, seed);
        return py::make_tuple(ds.X, ds.y, ds.theta);
      },
      py::arg("n"), py::arg("d"), py::arg("seed"));

  mod.def(
      "serial_pgd",
      [](const Matrix& X, const Vector& y, const std::string& reg, double lambda, double step,
         std::size_t iterations) {
        ModelSpec model;
        if (reg == "l1") model.reg = Regularizer::l1(lambda);
        else if (reg == "l2") model.reg = Regularizer::l2(lambda);
        else if (reg == "box") model.reg = Regularizer::box(-lambda, lambda);
        else if (reg != "none") throw Error(ErrorCode::config_parse, "regularizer must be none, l1, l2 or box");
        model.step.constant = step;
        if (step <= 0.0) model = with_default_step(model, X);
        return serial_pgd(X, y, model, Vector::Zero(X.cols()), iterations);
      },
      py::arg("X"), py::arg("y"), py::arg("reg") = "none", py::arg("lam") = 0.0,
      py::arg("step") = 0.0, py::arg("iterations") = 10);

  // Both take the text of a key = value config file.
  mod.def(
      "run_experiment",
      [](const std::string& text) {
        py::list rows;
        for (const ExperimentRecord& r : run_experiment(config_from(text))) {
          py::dict d;
          d["task"] = r.task;
          d["m"] = r.m;
          d["t"] = r.t;
          d["s"] = r.s;
          d["adversary"] = r.adversary;
          d["iteration"] = r.iteration;
          d["max_worker_flops"] = r.max_worker_flops;
          d["master_flops"] = r.master_flops;
          d["wall_time_worker_max"] = r.wall_time_worker_max;
          d["wall_time_master"] = r.wall_time_master;
          d["objective_value"] = r.objective_value;
          d["trajectory_deviation"] = r.trajectory_deviation;
          rows.append(d);
        }
        return rows;
      },
      py::arg("config"));
  mod.def(
      "verify_config",
      [](const std::string& text) {
        std::vector<std::tuple<std::string, bool, std::string>> out;
        for (const CheckResult& c : verify_config(config_from(text))) {
          out.emplace_back(c.name, c.passed, c.detail);
        }
        return out;
      },
      py::arg("config"));
}
