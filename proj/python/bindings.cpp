#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "certfair/checkpoint.hpp"
#include "certfair/dataset.hpp"
#include "certfair/evaluation.hpp"
#include "certfair/fair_init.hpp"
#include "certfair/randomized_response.hpp"
#include "certfair/trainer.hpp"
#include "certfair/verifier.hpp"

namespace py = pybind11;
using namespace certfair;

namespace {

py::dict epoch_dict(const EpochStats& e) {
  py::dict d;
  d["epoch"] = e.epoch;
  d["loss"] = e.loss;
  d["gamma"] = e.gamma;
  d["residual"] = e.residual;
  d["gamma_feasible"] = e.gamma_feasible;
  d["spread"] = e.spread;
  d["epoch_seconds"] = e.epoch_seconds;
  d["seconds"] = e.seconds;
  d["fairness_pct"] = e.fairness_pct;
  d["accuracy_pct"] = e.accuracy_pct;
  d["steps"] = e.steps;
  d["rollbacks"] = e.rollbacks;
  d["projections"] = e.projections;
  return d;
}

Dataset load_dataset(const std::filesystem::path& csv, const std::filesystem::path& schema_path) {
  const auto schema = load_schema(schema_path);
  return preprocess(load_csv(csv, schema), schema);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Certified individually fair training of ReLU networks";

  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<DataIoError>(m, "DataIoError", PyExc_OSError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<TrainingHalted>(m, "TrainingHalted", PyExc_RuntimeError);
  py::register_exception<InitExhausted>(m, "InitExhausted", PyExc_RuntimeError);

  py::enum_<SensitiveEncoding>(m, "SensitiveEncoding")
      .value("ONE_HOT", SensitiveEncoding::kOneHot)
      .value("SIGNED_BINARY", SensitiveEncoding::kSignedBinary);
  py::enum_<TrainMode>(m, "TrainMode")
      .value("STOCHASTIC", TrainMode::kStochastic)
      .value("EXPECTATION", TrainMode::kExpectation);
  py::enum_<GammaSchedule>(m, "GammaSchedule")
      .value("EPOCH", GammaSchedule::kEpoch)
      .value("STEP", GammaSchedule::kStep);
  py::enum_<InitScheme>(m, "InitScheme")
      .value("ZERO", InitScheme::kZero)
      .value("BERNOULLI", InitScheme::kBernoulli);
  py::enum_<VerdictTag>(m, "VerdictTag")
      .value("VERIFIED", VerdictTag::kVerified)
      .value("FALSIFIED", VerdictTag::kFalsified)
      .value("UNDECIDED", VerdictTag::kUndecided);

  py::class_<NetworkSpec>(m, "NetworkSpec")
      .def_readonly("layer_sizes", &NetworkSpec::layer_sizes)
      .def_property_readonly("sensitive_offset", [](const NetworkSpec& s) { return s.sensitive.offset; })
      .def_property_readonly("sensitive_width", [](const NetworkSpec& s) { return s.sensitive.width; })
      .def_property_readonly("encoding", [](const NetworkSpec& s) { return s.sensitive.encoding; })
      .def_property_readonly("feature_width", &NetworkSpec::feature_width)
      .def_property_readonly("output_width", &NetworkSpec::output_width);

  py::class_<Parameters>(m, "Parameters")
      .def_property_readonly("weights",
                             [](const Parameters& p) {
                               std::vector<std::vector<double>> out;
                               for (const auto& l : p.layers) out.push_back(l.weights);
                               return out;
                             })
      .def_property_readonly("biases",
                             [](const Parameters& p) {
                               std::vector<std::vector<double>> out;
                               for (const auto& l : p.layers) out.push_back(l.bias);
                               return out;
                             })
      .def_readonly("version", &Parameters::version)
      .def("count", &Parameters::count);

  py::class_<Sample>(m, "Sample")
      .def_readonly("x", &Sample::x)
      .def_readonly("s", &Sample::s)
      .def_readonly("y", &Sample::y);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("name", &Dataset::name)
      .def_readonly("attribute", &Dataset::attribute)
      .def_readonly("columns", &Dataset::columns)
      .def_readonly("labels", &Dataset::labels)
      .def_readonly("samples", &Dataset::samples)
      .def_property_readonly("sensitive_values", [](const Dataset& d) { return d.sensitive.values; })
      .def("__len__", &Dataset::size)
      .def_property_readonly("feature_width", &Dataset::feature_width);

  py::class_<InputDomain>(m, "InputDomain")
      .def_readonly("names", &InputDomain::names)
      .def_property_readonly("dims", &InputDomain::dims);

  py::class_<InitConfig>(m, "InitConfig")
      .def(py::init<>())
      .def_readwrite("scheme", &InitConfig::scheme)
      .def_readwrite("c", &InitConfig::c)
      .def_readwrite("p_init", &InitConfig::p_init)
      .def_readwrite("phi", &InitConfig::phi)
      .def_readwrite("fan_in_scaling", &InitConfig::fan_in_scaling)
      .def_readwrite("seed", &InitConfig::seed);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("batch", &TrainConfig::batch)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("mode", &TrainConfig::mode)
      .def_readwrite("delta", &TrainConfig::delta)
      .def_readwrite("schedule", &TrainConfig::schedule)
      .def_readwrite("projection", &TrainConfig::projection)
      .def_readwrite("tol_fair", &TrainConfig::tol_fair);

  py::class_<VerifyBudget>(m, "VerifyBudget")
      .def(py::init<>())
      .def_readwrite("max_partitions", &VerifyBudget::max_partitions)
      .def_readwrite("max_seconds", &VerifyBudget::max_seconds)
      .def_readwrite("use_certificate", &VerifyBudget::use_certificate)
      .def_readwrite("workers", &VerifyBudget::workers);

  py::class_<Counterexample>(m, "Counterexample")
      .def_readonly("x", &Counterexample::x)
      .def_readonly("s1", &Counterexample::s1)
      .def_readonly("s2", &Counterexample::s2);

  py::class_<Verdict>(m, "Verdict")
      .def_property_readonly("tag", &Verdict::tag)
      .def_property_readonly("counterexample", &Verdict::counterexample)
      .def_property_readonly("partitions", [](const Verdict& v) { return v.stats().partitions; })
      .def_property_readonly("seconds", [](const Verdict& v) { return v.stats().seconds; })
      .def_property_readonly("by_certificate", [](const Verdict& v) { return v.stats().by_certificate; });

  py::class_<CertificateResult>(m, "CertificateResult")
      .def_readonly("passed", &CertificateResult::pass)
      .def_readonly("spread", &CertificateResult::spread);

  py::class_<InitResult>(m, "InitResult")
      .def_readonly("params", &InitResult::params)
      .def_readonly("verdict", &InitResult::verdict)
      .def_readonly("attempts", &InitResult::attempts);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("params", &TrainResult::params)
      .def_readonly("rollbacks", &TrainResult::rollbacks)
      .def_readonly("projections", &TrainResult::projections)
      .def_property_readonly("epochs", [](const TrainResult& r) {
        py::list out;
        for (const auto& e : r.epochs) out.append(epoch_dict(e));
        return out;
      });

  py::class_<FairnessResult>(m, "FairnessResult")
      .def_readonly("fairness_pct", &FairnessResult::fairness_pct)
      .def_readonly("discriminatory", &FairnessResult::discriminatory)
      .def_readonly("total", &FairnessResult::total);

  py::class_<GammaSolution>(m, "GammaSolution")
      .def_readonly("gamma", &GammaSolution::gamma)
      .def_readonly("keep_probability", &GammaSolution::keep_probability)
      .def_readonly("residual", &GammaSolution::residual)
      .def_readonly("feasible", &GammaSolution::feasible);

  m.def("load_dataset", &load_dataset, py::arg("csv"), py::arg("schema"));
  m.def("split", &split, py::arg("dataset"), py::arg("test_fraction") = 0.2, py::arg("seed") = 0);
  m.def("extract_domain", &extract_domain);
  m.def("network_for",
        py::overload_cast<const Dataset&, const std::vector<std::size_t>&, bool>(&network_for),
        py::arg("dataset"), py::arg("hidden"), py::arg("single_logit") = false);

  m.def("zero_init", &zero_init, py::arg("spec"), py::arg("c") = 0.0);
  m.def("bernoulli_init", &bernoulli_init, py::arg("spec"), py::arg("config"));
  m.def("init_until_verified",
        py::overload_cast<const NetworkSpec&, const InitConfig&, const InputDomain&,
                          const VerifyBudget&, std::size_t>(&init_until_verified),
        py::arg("spec"), py::arg("config"), py::arg("domain"), py::arg("budget") = VerifyBudget{},
        py::arg("max_attempts") = 10);

  m.def("structural_certificate",
        [](const NetworkSpec& s, const Parameters& p) { return structural_certificate(s, p); });
  m.def("verify", &verify, py::arg("spec"), py::arg("params"), py::arg("domain"),
        py::arg("budget") = VerifyBudget{});
  m.def("grid_falsify", &grid_falsify, py::arg("spec"), py::arg("params"), py::arg("domain"),
        py::arg("resolution") = 50, py::arg("samples") = 100000, py::arg("seed") = 0);

  m.def("train_fair", &train_fair, py::arg("spec"), py::arg("params"), py::arg("train"),
        py::arg("config"), py::arg("holdout") = nullptr);
  m.def("train_erm", &train_erm, py::arg("spec"), py::arg("params"), py::arg("train"),
        py::arg("config"), py::arg("holdout") = nullptr);

  m.def("predict", [](const NetworkSpec& s, const Parameters& p, const std::vector<double>& x,
                      std::size_t sv) { return predict(s, p, x, sv); });
  m.def("accuracy", py::overload_cast<const NetworkSpec&, const Parameters&, const Dataset&>(&accuracy));
  m.def("empirical_fairness",
        py::overload_cast<const NetworkSpec&, const Parameters&, const Dataset&>(&empirical_fairness));

  m.def("keep_probability", &keep_probability, py::arg("gamma"), py::arg("domain_size"));
  m.def("response_prob", [](double gamma, std::size_t n, std::size_t i, std::size_t j) {
    return response_prob(RRConfig(gamma, n), i, j);
  });
  m.def(
      "solve_gamma_pair",
      [](double g_true, double g_other) {
        SensitiveFrontier f;
        f.domain_size = 2;
        f.equations.push_back({{1, 0}, 0, {g_true, g_other}, 1});
        return solve_gamma(f);
      },
      "Gamma for one binary equation g_true * p + g_other * (1 - p) = 0.");

  m.def("save_checkpoint", [](const std::filesystem::path& path, const NetworkSpec& s,
                              const Parameters& p) { save_checkpoint(path, {s, p}); });
  m.def("load_checkpoint", [](const std::filesystem::path& path) {
    auto c = load_checkpoint(path);
    return py::make_tuple(c.spec, c.params);
  });
}
