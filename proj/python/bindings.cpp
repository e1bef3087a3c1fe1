#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include "stockcnn/checkpoint.hpp"
#include "stockcnn/cli.hpp"
#include "stockcnn/data.hpp"
#include "stockcnn/metrics.hpp"
#include "stockcnn/model.hpp"
#include "stockcnn/optim.hpp"
#include "stockcnn/synthetic.hpp"
#include "stockcnn/trainer.hpp"

namespace py = pybind11;
using namespace stockcnn;

namespace {

using DArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

FeatureMap to_feature_map(const DArray& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D (channels, length) array");
    std::vector<double> values(a.data(), a.data() + a.size());
    return FeatureMap(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)), std::move(values));
}

py::array_t<std::uint8_t> labels_to_array(const std::vector<std::uint8_t>& labels) {
    py::array_t<std::uint8_t> out(static_cast<py::ssize_t>(labels.size()));
    std::copy(labels.begin(), labels.end(), out.mutable_data());
    return out;
}

py::array_t<double> from_feature_map(const FeatureMap& m) {
    py::array_t<double> out({m.channels(), m.length()});
    std::copy(m.values().begin(), m.values().end(), out.mutable_data());
    return out;
}

py::array_t<double> bars_to_array(const std::vector<Bar>& bars) {
    py::array_t<double> out({bars.size(), kFeatureCount});
    auto r = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < bars.size(); ++i) {
        auto f = bars[i].features();
        for (std::size_t k = 0; k < kFeatureCount; ++k) r(i, k) = f[k];
    }
    return out;
}

Activation parse_activation(const std::string& kind, double slope) {
    if (kind == "relu") return Activation::relu();
    if (kind == "leaky_relu") return Activation::leaky_relu(slope);
    if (kind == "sigmoid") return Activation::sigmoid();
    if (kind == "identity") return Activation::identity();
    throw py::value_error("unknown activation '" + kind + "'");
}

std::vector<std::span<double>> mutable_spans(py::list arrays) {
    std::vector<std::span<double>> spans;
    for (auto item : arrays) {
        auto arr = item.cast<py::array_t<double>>();
        if (!(arr.flags() & py::array::c_style) || !arr.writeable()) {
            throw py::value_error("parameters must be writeable C-contiguous float64 arrays");
        }
        spans.emplace_back(arr.mutable_data(), static_cast<std::size_t>(arr.size()));
    }
    return spans;
}

std::vector<std::vector<double>> to_vectors(py::list arrays) {
    std::vector<std::vector<double>> out;
    for (auto item : arrays) {
        auto arr = item.cast<DArray>();
        out.emplace_back(arr.data(), arr.data() + arr.size());
    }
    return out;
}

template <void (*Step)(ParamSpans, GradSpans, AdamState&, const HyperParams&)>
void step_binding(py::list params, py::list grads, AdamState& state, const HyperParams& hp) {
    auto p = mutable_spans(params);
    auto gv = to_vectors(grads);
    std::vector<std::span<const double>> g(gv.begin(), gv.end());
    Step(p, g, state, hp);
}

py::dict evaluation_dict(const Evaluation& ev) {
    py::dict d;
    d["tp"] = ev.confusion.tp;
    d["fp"] = ev.confusion.fp;
    d["tn"] = ev.confusion.tn;
    d["fn"] = ev.confusion.fn;
    d["accuracy"] = ev.accuracy.value;
    d["precision"] = ev.precision.value;
    d["recall"] = ev.recall.value;
    d["f1"] = ev.f1.value;
    d["loss"] = ev.loss;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "1-D CNN stock movement classifier: data pipeline, network, optimizers and training";

    static py::exception<Error> error_type(m, "Error", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error_type, (e.code() + ": " + e.what()).c_str());
        }
    });

    // data pipeline
    py::class_<RawFrame>(m, "RawFrame")
        .def_property_readonly("dropped", [](const RawFrame& f) { return f.dropped; })
        .def("__len__", [](const RawFrame& f) { return f.rows.size(); })
        .def("ohlc", [](const RawFrame& f) {
            std::vector<Bar> bars;
            for (const auto& r : f.rows) bars.push_back(r.bar);
            return bars_to_array(bars);
        });

    py::class_<LabeledFrame>(m, "LabeledFrame")
        .def("__len__", &LabeledFrame::size)
        .def_readonly("horizon", &LabeledFrame::horizon)
        .def_property_readonly("has_auxiliary", &LabeledFrame::has_auxiliary)
        .def("features", [](const LabeledFrame& f) { return bars_to_array(f.bars); })
        .def("labels", [](const LabeledFrame& f) { return labels_to_array(f.labels); });

    py::class_<NormStats>(m, "NormStats")
        .def_property_readonly("min", [](const NormStats& s) { return s.min; })
        .def_property_readonly("max", [](const NormStats& s) { return s.max; });

    py::class_<SampleSet>(m, "SampleSet")
        .def("__len__", &SampleSet::size)
        .def_readonly("channels", &SampleSet::channels)
        .def_readonly("window_len", &SampleSet::window_len)
        .def("window", [](const SampleSet& s, std::size_t i) { return from_feature_map(s.windows.at(i)); })
        .def("labels", [](const SampleSet& s) { return labels_to_array(s.labels); })
        .def("positive_fraction", &SampleSet::positive_fraction)
        .def("slice", &SampleSet::slice);

    m.def("load_ohlc_csv", &load_ohlc_csv, py::arg("path"));
    m.def("label_high15", &label_high15, py::arg("frame"), py::arg("horizon") = kDefaultHorizon);
    m.def("select_features", &select_features, py::arg("frame"));
    m.def("split_train_test", &split_train_test, py::arg("frame"), py::arg("train_fraction") = 0.7);
    m.def("fit_minmax", &fit_minmax, py::arg("train"));
    m.def("apply_minmax", &apply_minmax, py::arg("frame"), py::arg("stats"));
    m.def("make_windows", &make_windows, py::arg("frame"), py::arg("window_len") = kDefaultWindowLen);
    m.def("save_samples", &save_samples, py::arg("path"), py::arg("samples"));
    m.def("load_samples", &load_samples, py::arg("path"));
    m.def(
        "generate_ohlc_csv",
        [](const std::filesystem::path& path, std::size_t rows, std::uint64_t seed) {
            SyntheticSpec spec;
            spec.rows = rows;
            spec.seed = seed;
            std::ofstream out(path);
            write_ohlc_csv(out, generate_ohlc(spec));
        },
        py::arg("path"), py::arg("rows") = 20000, py::arg("seed") = 1);

    // network
    m.def(
        "activation", [](double x, const std::string& kind, double slope) { return activate(x, parse_activation(kind, slope)); },
        py::arg("x"), py::arg("kind"), py::arg("slope") = 0.001);
    m.def(
        "activation_grad",
        [](double x, const std::string& kind, double slope) { return activation_grad(x, parse_activation(kind, slope)); },
        py::arg("x"), py::arg("kind"), py::arg("slope") = 0.001);
    m.def(
        "conv1d_forward",
        [](const DArray& input, const DArray& weights, const DArray& bias, const std::string& activation) {
            if (weights.ndim() != 3) throw py::value_error("weights must be (out, in, kernel)");
            ConvLayer layer(weights.shape(0), weights.shape(1), weights.shape(2), parse_activation(activation, 0.001));
            std::copy(weights.data(), weights.data() + weights.size(), layer.weights.begin());
            if (static_cast<std::size_t>(bias.size()) != layer.out_channels) throw py::value_error("bias size mismatch");
            std::copy(bias.data(), bias.data() + bias.size(), layer.bias.begin());
            return from_feature_map(conv1d_forward(to_feature_map(input), layer));
        },
        py::arg("input"), py::arg("weights"), py::arg("bias"), py::arg("activation") = "identity");
    m.def(
        "maxpool1d_forward",
        [](const DArray& input, std::size_t pool_size) {
            auto r = maxpool1d_forward(to_feature_map(input), pool_size);
            return py::make_tuple(from_feature_map(r.output), r.argmax);
        },
        py::arg("input"), py::arg("pool_size") = 2);

    py::class_<ModelConfig>(m, "ModelConfig")
        .def_static("standard", &ModelConfig::standard, py::arg("window_len") = 32, py::arg("dropout") = 0.5,
                    py::arg("leaky_slope") = 0.001)
        .def_static("tiny", &ModelConfig::tiny)
        .def_readwrite("input_channels", &ModelConfig::input_channels)
        .def_readwrite("window_len", &ModelConfig::window_len)
        .def("flatten_length", &ModelConfig::flatten_length);

    py::class_<Model>(m, "Model")
        .def_property_readonly("config", &Model::config)
        .def("parameter_count", &Model::parameter_count)
        .def("parameters",
             [](const Model& model) {
                 py::dict d;
                 for (const auto& p : model.parameters()) {
                     py::array_t<double> a(p.shape);
                     std::copy(p.values.begin(), p.values.end(), a.mutable_data());
                     d[py::str(p.name)] = a;
                 }
                 return d;
             })
        .def("predict", [](const Model& model, const DArray& sample) { return predict(to_feature_map(sample), model); })
        .def("__eq__", &Model::operator==);

    m.def("init_model", &init_model, py::arg("config"), py::arg("seed"));
    m.def("init_probe_model", &init_probe_model, py::arg("config"), py::arg("seed"), py::arg("bias_scale") = 0.1);
    m.def("save_checkpoint", [](const std::filesystem::path& p, const Model& model) { save_checkpoint(p, model); });
    m.def("load_checkpoint", [](const std::filesystem::path& p) { return load_checkpoint(p).model; });

    // optimizers
    py::class_<HyperParams>(m, "HyperParams")
        .def(py::init<>())
        .def_readwrite("learning_rate", &HyperParams::learning_rate)
        .def_readwrite("beta1", &HyperParams::beta1)
        .def_readwrite("beta2", &HyperParams::beta2)
        .def_readwrite("epsilon", &HyperParams::epsilon)
        .def_readwrite("bias_correction", &HyperParams::bias_correction);

    py::class_<AdamState>(m, "AdamState")
        .def(py::init([](py::list params) {
                 std::vector<std::size_t> sizes;
                 for (auto item : params) sizes.push_back(item.cast<DArray>().size());
                 return AdamState::zeros(sizes);
             }),
             py::arg("params"))
        .def_readonly("step", &AdamState::step)
        .def_readonly("m", &AdamState::m)
        .def_readonly("s", &AdamState::s);

    m.def("momentum_step", &step_binding<&momentum_step>, py::arg("params"), py::arg("grads"), py::arg("state"),
          py::arg("hp"));
    m.def("rmsprop_step", &step_binding<&rmsprop_step>, py::arg("params"), py::arg("grads"), py::arg("state"),
          py::arg("hp"));
    m.def("adam_step", &step_binding<&adam_step>, py::arg("params"), py::arg("grads"), py::arg("state"),
          py::arg("hp"));

    // loss and metrics
    py::class_<ConfusionMatrix>(m, "ConfusionMatrix")
        .def(py::init<>())
        .def_readwrite("tp", &ConfusionMatrix::tp)
        .def_readwrite("fp", &ConfusionMatrix::fp)
        .def_readwrite("tn", &ConfusionMatrix::tn)
        .def_readwrite("fn", &ConfusionMatrix::fn)
        .def("total", &ConfusionMatrix::total);
    m.def(
        "bce_loss",
        [](std::vector<double> preds, std::vector<std::uint8_t> labels) { return bce_loss(preds, labels); },
        py::arg("preds"), py::arg("labels"));
    m.def(
        "confusion",
        [](std::vector<double> preds, std::vector<std::uint8_t> labels, double threshold) {
            return confusion(preds, labels, threshold);
        },
        py::arg("preds"), py::arg("labels"), py::arg("threshold") = 0.5);
    m.def("accuracy", [](const ConfusionMatrix& cm) { return accuracy(cm).value; });
    m.def("precision", [](const ConfusionMatrix& cm) { return precision(cm).value; });
    m.def("recall", [](const ConfusionMatrix& cm) { return recall(cm).value; });
    m.def("f1", [](const ConfusionMatrix& cm) { return f1(cm).value; });

    // training
    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("max_epochs", &TrainConfig::max_epochs)
        .def_readwrite("patience", &TrainConfig::patience)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("early_stopping", &TrainConfig::early_stopping)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("validation_fraction", &TrainConfig::validation_fraction)
        .def_readwrite("optimizer", &TrainConfig::optimizer)
        .def_readwrite("threshold", &TrainConfig::threshold)
        .def_readwrite("threads", &TrainConfig::threads);

    m.def(
        "train",
        [](const Model& model, const SampleSet& train_set, const TrainConfig& config, const SampleSet* test_set) {
            TrainResult r = [&] {
                py::gil_scoped_release release;
                return train(model, train_set, config, test_set);
            }();
            py::list history;
            for (const auto& e : r.history.epochs) {
                py::dict d;
                d["epoch"] = e.epoch;
                d["train_loss"] = e.train_loss;
                d["train_acc"] = e.train_acc;
                d["val_loss"] = e.val_loss;
                d["val_acc"] = e.val_acc;
                d["test_loss"] = e.test_loss;
                d["test_acc"] = e.test_acc;
                history.append(d);
            }
            return py::make_tuple(r.model, history, r.history.best_epoch);
        },
        py::arg("model"), py::arg("train_set"), py::arg("config"), py::arg("test_set") = nullptr);

    m.def(
        "evaluate",
        [](const Model& model, const SampleSet& data, double threshold) {
            return evaluation_dict(evaluate(model, data, threshold));
        },
        py::arg("model"), py::arg("data"), py::arg("threshold") = 0.5);

    py::class_<GradCheckResult>(m, "GradCheckResult")
        .def_readonly("max_relative_error", &GradCheckResult::max_relative_error)
        .def_readonly("worst_parameter", &GradCheckResult::worst_parameter)
        .def_readonly("worst_index", &GradCheckResult::worst_index)
        .def_readonly("checked", &GradCheckResult::checked);

    m.def(
        "grad_check",
        [](const Model& model, const DArray& sample, int label, double epsilon) {
            GradCheckOptions opts;
            opts.epsilon = epsilon;
            return grad_check(model, to_feature_map(sample), label, opts);
        },
        py::arg("model"), py::arg("sample"), py::arg("label"), py::arg("epsilon") = 1e-5);

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "stockcnn");
            std::ostringstream out;
            std::ostringstream err;
            int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
