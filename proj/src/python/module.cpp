// Copyright 2026 The Readout Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <optional>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "readout_lab/calibration.hpp"
#include "readout_lab/errors.hpp"
#include "readout_lab/experiments.hpp"
#include "readout_lab/geometry.hpp"
#include "readout_lab/linalg.hpp"
#include "readout_lab/metatrain.hpp"
#include "readout_lab/readouts.hpp"
#include "readout_lab/version.hpp"

namespace py = pybind11;
using rlab::Matrix;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Labels = std::vector<std::size_t>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() == 1) {
    return Matrix(1, static_cast<std::size_t>(a.shape(0)),
                  std::vector<double>(a.data(), a.data() + a.size()));
  }
  if (a.ndim() != 2) throw rlab::ParameterError("expected a 1-D or 2-D array");
  return Matrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Array to_array(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Matrix targets(const Labels& labels, std::optional<std::size_t> classes) {
  std::size_t c = 0;
  for (std::size_t l : labels) c = std::max(c, l + 1);
  return rlab::one_hot(labels, classes.value_or(c));
}

py::dict sweep_dict(const rlab::SweepResult& r) {
  py::dict d;
  d["variable"] = r.variable;
  d["values"] = to_array(r.values);
  d["columns"] = r.columns;
  d["seeds"] = r.seeds;
  d["mean"] = to_array(r.mean);
  d["std"] = to_array(r.stddev);
  return d;
}

py::list bins_list(const std::vector<rlab::ReliabilityBin>& bins) {
  py::list out;
  for (const auto& b : bins) {
    py::dict d;
    d["lower"] = b.lower;
    d["upper"] = b.upper;
    d["confidence"] = b.confidence;
    d["accuracy"] = b.accuracy;
    d["count"] = b.count;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_readout_lab, m) {
  m.doc() = "Few-shot readouts, hull geometry, calibration and the synthetic experiments.";
  m.attr("__version__") = std::string(rlab::kVersion);

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const rlab::ParameterError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const rlab::ValidationError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const rlab::Error& e) {
      PyErr_SetString(PyExc_RuntimeError, e.what());
    }
  });

  m.def(
      "fit_prototypes",
      [](const Array& z, const Labels& labels, std::optional<std::size_t> num_classes) {
        return to_array(rlab::fit_prototypes(to_matrix(z), targets(labels, num_classes)).prototypes);
      },
      py::arg("z"), py::arg("labels"), py::arg("num_classes") = py::none(),
      "Per-class mean embeddings, one row per class.");
  m.def(
      "prototype_logits",
      [](const Array& prototypes, const Array& z) {
        return to_array(rlab::prototype_logits(rlab::PrototypeModel{to_matrix(prototypes), {}},
                                               to_matrix(z)));
      },
      py::arg("prototypes"), py::arg("z"));
  m.def(
      "fit_ridge",
      [](const Array& z, const Labels& labels, double lam, std::optional<std::size_t> num_classes) {
        const auto r = rlab::fit_ridge(to_matrix(z), targets(labels, num_classes), lam);
        return py::make_tuple(to_array(r.weights), to_array(r.bias));
      },
      py::arg("z"), py::arg("labels"), py::arg("lam") = 10.0, py::arg("num_classes") = py::none(),
      "Bias-augmented closed-form ridge head. Returns (W, b).");
  m.def(
      "ridge_logits",
      [](const Array& w, const Array& b, const Array& z) {
        rlab::FittedRidge r;
        r.weights = to_matrix(w);
        const Matrix bias = to_matrix(b);
        r.bias.assign(bias.data().begin(), bias.data().end());
        return to_array(rlab::ridge_logits(r, to_matrix(z)));
      },
      py::arg("weights"), py::arg("bias"), py::arg("z"));
  m.def(
      "hull_distance",
      [](const Array& prototypes, std::size_t c) {
        const auto h = rlab::hull_distance(to_matrix(prototypes), c);
        py::dict d;
        d["distance"] = h.distance;
        d["weights"] = to_array(h.weights);
        d["kkt_residual"] = h.kkt_residual;
        d["iterations"] = h.iterations;
        return d;
      },
      py::arg("prototypes"), py::arg("c"));
  m.def(
      "flag_interior",
      [](const Array& prototypes) {
        const auto r = rlab::flag_interior(to_matrix(prototypes));
        py::list classes;
        for (const auto& c : r.classes) {
          py::dict d;
          d["d_ch"] = c.d_ch;
          d["d_ch_norm"] = c.d_ch_norm;
          d["weights"] = to_array(c.weights);
          d["interior"] = c.interior;
          classes.append(d);
        }
        py::dict d;
        d["classes"] = classes;
        d["mean_pairwise_distance"] = r.mean_pairwise_distance;
        d["pca"] = to_array(r.pca);
        d["hull_vertices"] = r.hull_vertices;
        return d;
      },
      py::arg("prototypes"));
  m.def("eps_inclusion_margin",
        [](const Array& prototypes, std::size_t c, double radius, std::size_t trials,
           std::uint64_t seed) {
          return rlab::eps_inclusion_margin(to_matrix(prototypes), c, radius, trials, seed);
        },
        py::arg("prototypes"), py::arg("c"), py::arg("radius"), py::arg("trials") = 10000,
        py::arg("seed") = 0);
  m.def(
      "ece",
      [](const Array& probs, const Labels& labels, std::size_t n_bins) {
        const auto r = rlab::ece(to_matrix(probs), labels, n_bins);
        py::dict d;
        d["ece"] = r.ece;
        d["bins"] = bins_list(r.bins);
        return d;
      },
      py::arg("probs"), py::arg("labels"), py::arg("n_bins") = 15);
  m.def(
      "temperature_fit",
      [](const Array& logits, const Labels& labels) {
        const auto t = rlab::temperature_fit(to_matrix(logits), labels);
        return py::make_tuple(t.temperature, t.nll, t.degenerate);
      },
      py::arg("logits"), py::arg("labels"), "Returns (temperature, nll, degenerate).");
  m.def(
      "truncated_svd",
      [](const Array& a, std::size_t k, std::size_t power_iters, std::uint64_t seed) {
        const auto s = rlab::truncated_svd(to_matrix(a), k, power_iters, seed);
        return py::make_tuple(to_array(s.u), to_array(s.s), to_array(s.v));
      },
      py::arg("m"), py::arg("k"), py::arg("power_iters") = 2, py::arg("seed") = 0);

  m.def("run_worked_examples", [] {
    py::list out;
    for (const auto& c : rlab::run_worked_examples()) {
      py::dict d;
      d["example"] = c.example;
      d["quantity"] = c.quantity;
      d["expected"] = c.expected;
      d["actual"] = c.actual;
      d["pass"] = c.pass;
      out.append(d);
    }
    return out;
  });
  m.def(
      "translation_sweep",
      [](std::size_t n_seeds, std::uint64_t seed, std::size_t jobs,
         std::optional<std::vector<double>> t_grid, std::size_t n, std::size_t d) {
        rlab::TranslationConfig cfg;
        cfg.n_seeds = n_seeds;
        cfg.seed = seed;
        cfg.jobs = jobs;
        cfg.n = n;
        cfg.d = d;
        if (t_grid) cfg.t_grid = *t_grid;
        rlab::SweepResult r;
        {
          py::gil_scoped_release release;
          r = rlab::run_translation_sweep(cfg);
        }
        return sweep_dict(r);
      },
      py::arg("n_seeds") = 20, py::arg("seed") = 0, py::arg("jobs") = 1,
      py::arg("t_grid") = py::none(), py::arg("n") = 800, py::arg("d") = 64);
  m.def(
      "bimodal_sweep",
      [](std::size_t n_seeds, std::uint64_t seed, std::size_t jobs,
         std::optional<std::vector<double>> delta_grid, std::size_t d) {
        rlab::BimodalConfig cfg;
        cfg.n_seeds = n_seeds;
        cfg.seed = seed;
        cfg.jobs = jobs;
        cfg.points.d = d;
        if (delta_grid) cfg.delta_grid = *delta_grid;
        rlab::SweepResult r;
        rlab::BimodalSummary s;
        {
          py::gil_scoped_release release;
          r = rlab::run_bimodal_sweep(cfg);
          s = rlab::summarize_bimodal(r);
        }
        py::dict out = sweep_dict(r);
        py::dict summary;
        summary["dominated_instances"] = s.dominated_instances;
        summary["dominated_proto_recall_a"] = s.dominated_proto_recall_a;
        summary["dominated_proto_acc"] = s.dominated_proto_acc;
        summary["dominated_ridge_recall_a"] = s.dominated_ridge_recall_a;
        summary["min_ridge_recall_a"] = s.min_ridge_recall_a;
        summary["first_dominated_delta"] = s.first_dominated_delta;
        out["summary"] = summary;
        return out;
      },
      py::arg("n_seeds") = 20, py::arg("seed") = 0, py::arg("jobs") = 1,
      py::arg("delta_grid") = py::none(), py::arg("d") = 64);
  m.def(
      "calibration_suite",
      [](std::size_t n_seeds, std::uint64_t seed, std::size_t jobs) {
        rlab::CalibrationConfig cfg;
        cfg.n_seeds = n_seeds;
        cfg.seed = seed;
        cfg.jobs = jobs;
        rlab::CalibrationSuite suite;
        {
          py::gil_scoped_release release;
          suite = rlab::run_calibration_suite(cfg);
        }
        py::dict out;
        for (const auto& g : suite.geometries) {
          py::dict geo;
          geo["temperature_mean"] = g.temperature_mean;
          for (const auto& mc : g.methods) {
            py::dict d;
            d["ece_mean"] = mc.ece_mean;
            d["ece_std"] = mc.ece_std;
            d["accuracy_mean"] = mc.accuracy_mean;
            d["bins"] = bins_list(mc.bins);
            geo[py::str(mc.method)] = d;
          }
          out[py::str(g.geometry)] = geo;
        }
        return out;
      },
      py::arg("n_seeds") = 20, py::arg("seed") = 0, py::arg("jobs") = 1);
  m.def(
      "train_bimodal_demo",
      [](std::uint64_t seed, std::optional<std::size_t> steps) {
        rlab::DemoSetup demo = rlab::bimodal_demo(seed);
        if (steps) demo.config.steps = *steps;
        rlab::TrainResult r;
        double frozen = 0.0;
        const std::size_t n = demo.config.steps;
        {
          py::gil_scoped_release release;
          r = rlab::train(demo.config, demo.sources);
          if (n > 0) {
            const std::size_t window = std::min<std::size_t>(50, n);
            frozen = rlab::replay_prototype_accuracy(r.initial, demo.config, demo.sources,
                                                     n - window, n);
          }
        }
        std::vector<double> loss, acc;
        for (const auto& row : r.log) {
          loss.push_back(row.loss);
          acc.push_back(row.query_accuracy);
        }
        py::dict d;
        d["steps"] = n;
        d["loss"] = to_array(loss);
        d["query_accuracy"] = to_array(acc);
        d["final_window_accuracy"] =
            r.log.empty() ? 0.0 : rlab::final_window_accuracy(r.log, std::min<std::size_t>(50, r.log.size()));
        d["frozen_prototype_accuracy"] = frozen;
        return d;
      },
      py::arg("seed") = 0, py::arg("steps") = py::none(),
      "Meta-trains the bimodal demo preset and reports the final-window query accuracy "
      "next to a frozen-encoder prototype readout on the same episodes.");
}
