// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>
#include <optional>

#include "json.hpp"
#include "vtd/checkpoint.hpp"
#include "vtd/ctc.hpp"
#include "vtd/errors.hpp"
#include "vtd/eval.hpp"
#include "vtd/experiment.hpp"
#include "vtd/frontend.hpp"
#include "vtd/nnet.hpp"
#include "vtd/scorer.hpp"

namespace py = pybind11;
using namespace vtd;

namespace {

Head parse_head(const std::string& s) {
  if (s == "phonetic") return Head::kPhonetic;
  if (s == "discriminative") return Head::kDiscriminative;
  throw ConfigError("head must be 'phonetic' or 'discriminative', got '" + s + "'");
}

ModelConfig model_config(int input_dim, int hidden_dim, int num_layers, int n_phones,
                         bool phonetic, bool discriminative) {
  ModelConfig c;
  c.input_dim = input_dim;
  c.hidden_dim = hidden_dim;
  c.num_layers = num_layers;
  c.phonetic_alphabet = Alphabet::phonetic(n_phones);
  c.has_phonetic_head = phonetic;
  c.has_discriminative_head = discriminative;
  return c;
}

py::tuple as_tuple(const DetectionScore& s) {
  return py::make_tuple(s.log_prob, s.length_normalized);
}

Matrix curve_points(const DetCurve& c) {
  Matrix out(static_cast<Eigen::Index>(c.points.size()), 3);
  for (std::size_t i = 0; i < c.points.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) << c.points[i].threshold, c.points[i].fa_per_hour,
        c.points[i].fr_proportion;
  return out;
}

}  // namespace

PYBIND11_MODULE(_vtd, m) {
  m.doc() = "Keyword-trigger detection: frontend, CTC, biLSTM models, scoring and DET evaluation";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<EmptyInputError>(m, "EmptyInputError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<StateError>(m, "StateError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  // Frontend.
  m.def(
      "compute_features",
      [](std::vector<float> samples, int sample_rate_hz, int n_mels) {
        FrontendConfig cfg;
        cfg.sample_rate_hz = sample_rate_hz;
        cfg.n_mels = n_mels;
        return compute_features(AudioClip{std::move(samples), sample_rate_hz}, cfg).frames;
      },
      py::arg("samples"), py::arg("sample_rate_hz") = 16000, py::arg("n_mels") = 40,
      "Log-Mel features (25 ms Hann window, 10 ms shift), shape (frames, n_mels).");
  m.def(
      "stack_and_subsample",
      [](const Matrix& feats, int context, int factor) {
        return stack_and_subsample(FeatureSequence{feats, 100.0}, context, factor).windows;
      },
      py::arg("features"), py::arg("context") = 3, py::arg("factor") = 3,
      "Stack +-context frames around every factor-th frame, edges clamped.");

  // CTC.
  m.def(
      "ctc_loss",
      [](const Matrix& log_probs, const std::vector<int>& target, int blank) {
        return ctc_loss(log_probs, target, blank).loss;
      },
      py::arg("log_probs"), py::arg("target"), py::arg("blank") = 0,
      "-log P(target | log_probs); +inf when the target cannot fit.");
  m.def(
      "ctc_grad",
      [](const Matrix& log_probs, const std::vector<int>& target, int blank) {
        return ctc_grad(log_probs, target, blank);
      },
      py::arg("log_probs"), py::arg("target"), py::arg("blank") = 0,
      "Gradient of ctc_loss w.r.t. the pre-softmax logits.");
  m.def("blank_only_loss", &blank_only_loss, py::arg("log_probs"), py::arg("blank") = 0);

  // Scoring.
  m.def(
      "score_keyword",
      [](const Matrix& posteriors, const std::vector<int>& keyword) {
        const int n_phones = static_cast<int>(posteriors.cols()) - 1;
        return as_tuple(score_keyword(PosteriorGram{posteriors, Alphabet::phonetic(n_phones)},
                                      KeywordSpec{"keyword", keyword}));
      },
      py::arg("posteriors"), py::arg("keyword"),
      "(log_prob, length_normalized) of the keyword phone string; blank is column 0.");
  m.def(
      "score_discriminative",
      [](const Matrix& posteriors) {
        return as_tuple(
            score_discriminative(PosteriorGram{posteriors, Alphabet::discriminative()}));
      },
      py::arg("posteriors"));

  // Evaluation.
  m.def(
      "det_curve",
      [](const std::vector<double>& scores, const std::vector<bool>& labels,
         const std::vector<double>& durations, std::optional<double> hours) {
        if (scores.size() != labels.size() || scores.size() != durations.size())
          throw ShapeError("scores, labels and durations must have equal length");
        std::vector<ScoredSegment> segs;
        for (std::size_t i = 0; i < scores.size(); ++i)
          segs.push_back({std::to_string(i), scores[i], labels[i], durations[i]});
        return curve_points(det_curve(segs, hours ? *hours : negative_hours(segs)));
      },
      py::arg("scores"), py::arg("labels"), py::arg("durations"),
      py::arg("negative_hours") = py::none(),
      "DET operating points as rows (threshold, fa_per_hour, fr_proportion).");
  m.def(
      "fr_at_fa",
      [](const Matrix& points, double fa_target) {
        DetCurve c;
        for (Eigen::Index i = 0; i < points.rows(); ++i)
          c.points.push_back({points(i, 0), points(i, 1), points(i, 2)});
        return fr_at_fa(c, fa_target);
      },
      py::arg("points"), py::arg("fa_target"));

  // Models.
  m.def(
      "count_parameters",
      [](int input_dim, int hidden_dim, int num_layers, int n_phones, bool phonetic,
         bool discriminative) {
        return count_parameters(
            model_config(input_dim, hidden_dim, num_layers, n_phones, phonetic, discriminative));
      },
      py::arg("input_dim") = 280, py::arg("hidden_dim") = 256, py::arg("num_layers") = 4,
      py::arg("n_phones") = 52, py::arg("phonetic") = true, py::arg("discriminative") = false);

  py::class_<MtlModel>(m, "Model")
      .def(py::init([](int input_dim, int hidden_dim, int num_layers, int n_phones,
                       std::uint64_t seed, bool phonetic, bool discriminative) {
             return MtlModel::initialized(model_config(input_dim, hidden_dim, num_layers,
                                                       n_phones, phonetic, discriminative),
                                          seed);
           }),
           py::arg("input_dim"), py::arg("hidden_dim"), py::arg("num_layers"),
           py::arg("n_phones"), py::arg("seed") = 1, py::arg("phonetic") = true,
           py::arg("discriminative") = true)
      .def_static(
          "load", [](const std::string& path) { return load_checkpoint(path); }, py::arg("path"))
      .def(
          "save",
          [](const MtlModel& self, const std::string& path) { save_checkpoint(path, self); },
          py::arg("path"))
      .def_property_readonly("num_parameters",
                             [](const MtlModel& self) { return count_parameters(self); })
      .def_property_readonly("input_dim",
                             [](const MtlModel& self) { return self.config.input_dim; })
      .def_property_readonly("hidden_dim",
                             [](const MtlModel& self) { return self.config.hidden_dim; })
      .def_property_readonly("num_layers",
                             [](const MtlModel& self) { return self.config.num_layers; })
      .def("has_head", [](const MtlModel& self, const std::string& h) {
        return self.has_head(parse_head(h));
      })
      .def(
          "posteriors",
          [](const MtlModel& self, const Matrix& input, const std::string& head) {
            ModelTape tape(self);
            tape.forward(input);
            return tape.posteriors(parse_head(head)).probs;
          },
          py::arg("input"), py::arg("head") = "phonetic",
          "Per-frame softmax over the head's alphabet, shape (frames, symbols).");

  // Whole experiment.
  m.def(
      "run_demo",
      [](const std::string& config_json) {
        nlohmann::json j = nlohmann::json::object();
        if (!config_json.empty()) {
          try {
            j = nlohmann::json::parse(config_json);
          } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad experiment config: ") + e.what());
          }
        }
        const ExperimentConfig cfg = experiment_from_json(j);
        DemoReport r;
        {
          py::gil_scoped_release release;
          r = run_demo(cfg);
        }
        py::dict fr;
        for (const auto& model : r.models) fr[py::str(model.label)] = model.fr_at_targets;
        py::dict out;
        out["fa_targets"] = r.fa_targets;
        out["negative_hours"] = r.negative_hours;
        out["fr"] = fr;
        out["report"] = format_report(r);
        return out;
      },
      py::arg("config_json") = "",
      "Train and score the five-model comparison; config is a JSON string.");
}
