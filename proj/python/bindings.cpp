// Python bindings for the mczsl core (module mczsl._core).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "mczsl/checkpoint.hpp"
#include "mczsl/experiment.hpp"

namespace py = pybind11;
using namespace mczsl;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

Dense2D to_matrix(const FloatArray& a, const char* what) {
  if (a.ndim() != 2) throw ShapeError(std::string(what) + " must be a 2-D array");
  const auto rows = static_cast<Index>(a.shape(0));
  const auto cols = static_cast<Index>(a.shape(1));
  return Dense2D(rows, cols, std::vector<Real>(a.data(), a.data() + rows * cols));
}

py::array_t<float> to_numpy(const Dense2D& m) {
  py::array_t<float> out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

template <class T>
py::array_t<std::int64_t> index_array(const std::vector<T>& v) {
  py::array_t<std::int64_t> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

template <class T>
std::vector<T> from_index_array(const IntArray& a, const char* what) {
  if (a.ndim() != 1) throw ShapeError(std::string(what) + " must be a 1-D array");
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(a.size()));
  for (py::ssize_t i = 0; i < a.size(); ++i) {
    if (a.data()[i] < 0) throw ShapeError(std::string(what) + " must be non-negative");
    out.push_back(static_cast<T>(a.data()[i]));
  }
  return out;
}

py::dict metrics_dict(const MetricsRecord& m) {
  py::list tasks;
  for (const auto& t : m.tasks) {
    py::dict row;
    row["task"] = t.task + 1;
    row["seen_acc"] = t.seen_acc;
    row["unseen_acc"] = t.unseen_acc;
    row["harmonic"] = t.harmonic;
    tasks.append(row);
  }
  py::dict d;
  d["protocol"] = m.protocol;
  d["dataset"] = m.dataset;
  d["tasks"] = tasks;
  d["mSA"] = m.mean_seen;
  d["mUA"] = m.mean_unseen;
  d["mH"] = m.mean_harmonic;
  return d;
}

RunConfig config_from(const py::dict& overrides) {
  RunConfig cfg;
  for (const auto& [k, v] : overrides) {
    set_config_key(cfg, py::str(k).cast<std::string>(), py::str(v).cast<std::string>());
  }
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Continual zero-shot classifier core";
  m.attr("__version__") = version_string();

  static py::exception<Error> base_error(m, "Error", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", base_error.ptr());
  static py::exception<DataError> data_error(m, "DataError", base_error.ptr());
  static py::exception<NumericError> numeric_error(m, "NumericError", base_error.ptr());
  static py::exception<ShapeError> shape_error(m, "ShapeError", base_error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const DataError& e) {
      py::set_error(data_error, e.what());
    } catch (const NumericError& e) {
      py::set_error(numeric_error, e.what());
    } catch (const ShapeError& e) {
      py::set_error(shape_error, e.what());
    } catch (const Error& e) {
      py::set_error(base_error, e.what());
    }
  });

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform", py::overload_cast<>(&Rng::uniform))
      .def("normal", &Rng::normal)
      .def("uniform_index", &Rng::uniform_index, py::arg("n"));

  py::class_<SynthSpec>(m, "SynthSpec")
      .def(py::init<>())
      .def_readwrite("n_seen", &SynthSpec::n_seen)
      .def_readwrite("n_unseen", &SynthSpec::n_unseen)
      .def_readwrite("feat_dim", &SynthSpec::feat_dim)
      .def_readwrite("attr_dim", &SynthSpec::attr_dim)
      .def_readwrite("noise_sigma", &SynthSpec::noise_sigma)
      .def_readwrite("samples_per_class", &SynthSpec::samples_per_class)
      .def_readwrite("test_fraction", &SynthSpec::test_fraction);

  py::class_<DatasetContainer>(m, "Dataset")
      .def(py::init([](const FloatArray& features, const IntArray& labels,
                       const FloatArray& attributes, const IntArray& train,
                       const IntArray& test_seen, const IntArray& test_unseen) {
             DatasetContainer c;
             c.features = to_matrix(features, "features");
             c.labels = from_index_array<int>(labels, "labels");
             c.attributes = to_matrix(attributes, "attributes");
             c.train = from_index_array<Index>(train, "train");
             c.test_seen = from_index_array<Index>(test_seen, "test_seen");
             c.test_unseen = from_index_array<Index>(test_unseen, "test_unseen");
             c.validate();
             return c;
           }),
           py::arg("features"), py::arg("labels"), py::arg("attributes"), py::arg("train"),
           py::arg("test_seen"), py::arg("test_unseen"))
      .def_property_readonly("features", [](const DatasetContainer& c) { return to_numpy(c.features); })
      .def_property_readonly("labels", [](const DatasetContainer& c) { return index_array(c.labels); })
      .def_property_readonly("attributes", [](const DatasetContainer& c) { return to_numpy(c.attributes); })
      .def_property_readonly("train", [](const DatasetContainer& c) { return index_array(c.train); })
      .def_property_readonly("test_seen", [](const DatasetContainer& c) { return index_array(c.test_seen); })
      .def_property_readonly("test_unseen", [](const DatasetContainer& c) { return index_array(c.test_unseen); })
      .def_property_readonly("num_classes", &DatasetContainer::num_classes)
      .def("write", [](const DatasetContainer& c, const std::filesystem::path& p) { write_container(c, p); })
      .def("__eq__", [](const DatasetContainer& a, const DatasetContainer& b) { return a == b; });

  m.def("synth_dataset", [](const SynthSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    return synth_dataset(spec, rng);
  }, py::arg("spec"), py::arg("seed"));
  m.def("read_container", &read_container, py::arg("path"));

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("hidden_width", &ModelConfig::hidden_width)
      .def_readwrite("logit_scale", &ModelConfig::logit_scale)
      .def_readwrite("disable_self_gating", &ModelConfig::disable_self_gating)
      .def_property("normalization",
                    [](const ModelConfig& c) { return std::string(to_string(c.normalization)); },
                    [](ModelConfig& c, const std::string& s) { c.normalization = parse_normalization(s); })
      .def_readwrite("init_seed", &ModelConfig::init_seed);

  py::class_<ModelParams>(m, "Model")
      .def(py::init([](const ModelConfig& cfg, Index attr_dim, Index feat_dim) {
             return init_params(cfg, attr_dim, feat_dim);
           }),
           py::arg("config"), py::arg("attr_dim"), py::arg("feat_dim"))
      .def_property_readonly("size", &ModelParams::size)
      .def_property_readonly("attr_dim", &ModelParams::attr_dim)
      .def_property_readonly("feat_dim", &ModelParams::feat_dim)
      .def_property_readonly("config", &ModelParams::config)
      .def_property(
          "values",
          [](const ModelParams& p) {
            py::array_t<float> out(static_cast<py::ssize_t>(p.size()));
            std::copy(p.values().begin(), p.values().end(), out.mutable_data());
            return out;
          },
          [](ModelParams& p, const FloatArray& v) {
            p.unflatten(std::span<const float>(v.data(), static_cast<std::size_t>(v.size())));
          })
      .def("embed", [](const ModelParams& p, const FloatArray& attrs) {
        return to_numpy(embed_attributes(p, to_matrix(attrs, "attributes")).output);
      }, py::arg("attributes"))
      .def("logits", [](const ModelParams& p, const FloatArray& x, const FloatArray& attrs) {
        return to_numpy(forward_logits(p, to_matrix(x, "features"), to_matrix(attrs, "attributes")).output);
      }, py::arg("features"), py::arg("attributes"))
      .def("predict", [](const ModelParams& p, const FloatArray& x, const FloatArray& attrs) {
        return index_array(predict(p, to_matrix(x, "features"), to_matrix(attrs, "attributes")));
      }, py::arg("features"), py::arg("attributes"))
      .def("loss_and_grads", [](const ModelParams& p, const FloatArray& x, const IntArray& labels,
                                const FloatArray& attrs) {
        const auto lab = from_index_array<int>(labels, "labels");
        const LossAndGrad lg = loss_and_grads(p, to_matrix(x, "features"), lab, to_matrix(attrs, "attributes"));
        py::array_t<float> g(static_cast<py::ssize_t>(lg.grad.size()));
        std::copy(lg.grad.begin(), lg.grad.end(), g.mutable_data());
        return py::make_tuple(lg.loss, g);
      }, py::arg("features"), py::arg("labels"), py::arg("attributes"))
      .def("save", [](const ModelParams& p, const std::filesystem::path& path) { save_checkpoint(p, path); })
      .def("__eq__", [](const ModelParams& a, const ModelParams& b) { return a == b; });

  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
  m.def("trainable_parameter_count", &trainable_parameter_count, py::arg("config"),
        py::arg("attr_dim"), py::arg("feat_dim"));

  py::class_<Reservoir>(m, "Reservoir")
      .def(py::init([](Index capacity, Index feat_dim, const std::string& policy) {
             return Reservoir(capacity, feat_dim, parse_replay_policy(policy));
           }),
           py::arg("capacity"), py::arg("feat_dim"), py::arg("policy") = "reservoir")
      .def("offer", [](Reservoir& r, const FloatArray& x, int label, int task, Rng& rng) {
        if (x.ndim() != 1) throw ShapeError("feature must be a 1-D array");
        r.offer(std::span<const float>(x.data(), static_cast<std::size_t>(x.size())), label, task, rng);
      }, py::arg("feature"), py::arg("label"), py::arg("task"), py::arg("rng"))
      .def("__len__", &Reservoir::size)
      .def_property_readonly("capacity", &Reservoir::capacity)
      .def_property_readonly("seen_count", &Reservoir::seen_count)
      .def_property_readonly("labels", [](const Reservoir& r) {
        std::vector<int> out;
        for (const auto& item : r.slots()) out.push_back(item.label);
        return index_array(out);
      })
      .def("save", [](const Reservoir& r, const std::filesystem::path& p) { save_reservoir(r, p); });
  m.def("load_reservoir", &load_reservoir, py::arg("path"));

  m.def("harmonic_mean", &harmonic_mean, py::arg("seen"), py::arg("unseen"));
  m.def("per_class_accuracy", [](const IntArray& pred, const IntArray& truth, const IntArray& classes) {
    try {
      return per_class_accuracy(from_index_array<int>(pred, "predicted"),
                                from_index_array<int>(truth, "truth"),
                                from_index_array<int>(classes, "classes"));
    } catch (const std::invalid_argument& e) {
      throw py::value_error(e.what());
    }
  }, py::arg("predicted"), py::arg("truth"), py::arg("classes"));
  m.def("meta_lr", [](Index epoch, double base, Index epochs) {
    MetaSchedule s;
    s.meta_lr = base;
    s.epochs = epochs;
    return meta_lr(epoch, s);
  }, py::arg("epoch"), py::arg("base"), py::arg("epochs"));

  m.def("config_keys", [] {
    std::vector<std::string> out;
    for (auto k : config_keys()) out.emplace_back(k);
    return out;
  });
  m.def("serialize_config", [](const py::dict& overrides) { return serialize_config(config_from(overrides)); },
        py::arg("overrides") = py::dict());
  m.def("train", [](const py::dict& overrides, std::optional<std::filesystem::path> out_dir) {
    const RunConfig cfg = config_from(overrides);
    const DatasetContainer data = load_run_data(cfg);
    RunResult result = [&] {
      py::gil_scoped_release release;
      return run_experiment(cfg, data, out_dir);
    }();
    return py::make_tuple(metrics_dict(result.metrics), std::move(result.params));
  }, py::arg("config") = py::dict(), py::arg("out_dir") = py::none(),
     "Train per a config given as {key: value}; returns (metrics, model).");
  m.def("evaluate_run", [](const std::filesystem::path& run_dir, std::optional<std::uint64_t> permute_seed) {
    return metrics_dict(evaluate_run(run_dir, permute_seed));
  }, py::arg("run_dir"), py::arg("permute_seed") = py::none());
}
