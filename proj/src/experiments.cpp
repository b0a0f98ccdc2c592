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


#include "readout_lab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "readout_lab/errors.hpp"
#include "readout_lab/geometry.hpp"
#include "readout_lab/io.hpp"
#include "readout_lab/linalg.hpp"
#include "readout_lab/readouts.hpp"

namespace rlab {
namespace {

struct Split {
  Matrix z_s, y_s, z_q;
  std::vector<std::size_t> labels_s, labels_q;
};

Split make_split(const Matrix& x, const std::vector<std::size_t>& labels,
                 const std::vector<std::size_t>& support,
                 const std::vector<std::size_t>& query, std::size_t classes) {
  Split s;
  s.z_s = x.select_rows(support);
  s.z_q = x.select_rows(query);
  for (std::size_t i : support) s.labels_s.push_back(labels[i]);
  for (std::size_t i : query) s.labels_q.push_back(labels[i]);
  s.y_s = one_hot(s.labels_s, classes);
  return s;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

namespace {

// Average ranks, ties share the mean of their positions.
std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ParameterError("spearman: need two equal-length samples of size >= 2");
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = mean_of(rx), my = mean_of(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

void parallel_for(std::size_t n, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) throw ParameterError("jobs must be at least 1");
  std::vector<std::exception_ptr> errors(n);
  if (jobs == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<std::uint64_t> seed_list(std::uint64_t base, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = derive_seed(base, i);
  return seeds;
}

std::size_t SweepResult::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw ParameterError("sweep has no column " + std::string(name));
}

void SweepResult::aggregate() {
  mean = Matrix(values.size(), columns.size());
  stddev = Matrix(values.size(), columns.size());
  std::vector<double> col;
  for (std::size_t v = 0; v < values.size(); ++v) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      col.clear();
      for (std::size_t s = 0; s < samples[v].rows(); ++s) col.push_back(samples[v](s, c));
      mean(v, c) = mean_of(col);
      stddev(v, c) = sample_std(col);
    }
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  out << r.variable;
  for (const auto& c : r.columns) out << ',' << c << "_mean," << c << "_std";
  out << ",n_seeds\n";
  for (std::size_t v = 0; v < r.values.size(); ++v) {
    out << fmt(r.values[v]);
    for (std::size_t c = 0; c < r.columns.size(); ++c)
      out << ',' << fmt(r.mean(v, c)) << ',' << fmt(r.stddev(v, c));
    out << ',' << r.seeds.size() << '\n';
  }
}

SweepResult run_translation_sweep(const TranslationConfig& config) {
  if (config.t_grid.empty()) throw ParameterError("translation sweep: empty t grid");
  if (config.n_seeds == 0) throw ParameterError("translation sweep: need at least one seed");
  SweepResult r;
  r.variable = "t";
  r.values = config.t_grid;
  r.columns = {"proto_acc", "ridge_acc"};
  r.seeds = seed_list(config.seed, config.n_seeds);
  r.samples.assign(r.values.size(), Matrix(r.seeds.size(), r.columns.size()));

  parallel_for(r.seeds.size(), config.jobs, [&](std::size_t s) {
    Rng rng(r.seeds[s]);
    const auto u = random_unit_vector(config.d, rng);
    const LabeledPoints pts = translation_clusters(config.n, config.d, config.margin, u, rng);
    const auto [support, query] = stratified_split(pts, derive_seed(r.seeds[s], 1));
    for (std::size_t v = 0; v < r.values.size(); ++v) {
      const Matrix x = translate_rows(pts.x, u, r.values[v]);
      const Split sp = make_split(x, pts.labels, support, query, 2);
      const PrototypeModel proto = fit_prototypes(sp.z_s, sp.y_s);
      const FittedRidge ridge = fit_ridge(sp.z_s, sp.y_s, config.lambda);
      r.samples[v](s, 0) = accuracy(prototype_logits(proto, sp.z_q), sp.labels_q);
      r.samples[v](s, 1) = accuracy(ridge_logits(ridge, sp.z_q), sp.labels_q);
    }
  });
  r.aggregate();
  return r;
}

std::vector<double> default_delta_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(0.25 * i);
  return grid;
}

SweepResult run_bimodal_sweep(const BimodalConfig& config) {
  if (config.delta_grid.empty()) throw ParameterError("bimodal sweep: empty delta grid");
  if (config.n_seeds == 0) throw ParameterError("bimodal sweep: need at least one seed");
  SweepResult r;
  r.variable = "delta";
  r.values = config.delta_grid;
  r.columns = {"d_ch_a",         "dominated",      "proto_recall_a", "proto_recall_b",
               "proto_recall_c", "ridge_recall_a", "ridge_recall_b", "ridge_recall_c",
               "proto_acc",      "ridge_acc"};
  r.seeds = seed_list(config.seed, config.n_seeds);
  r.samples.assign(r.values.size(), Matrix(r.seeds.size(), r.columns.size()));

  parallel_for(r.seeds.size(), config.jobs, [&](std::size_t s) {
    for (std::size_t v = 0; v < r.values.size(); ++v) {
      Rng rng(derive_seed(r.seeds[s], 2 * v));
      const LabeledPoints pts = bimodal_points(r.values[v], config.points, rng);
      const auto [support, query] = stratified_split(pts, derive_seed(r.seeds[s], 2 * v + 1));
      const Split sp = make_split(pts.x, pts.labels, support, query, 3);
      const PrototypeModel proto = fit_prototypes(sp.z_s, sp.y_s);
      const FittedRidge ridge = fit_ridge(sp.z_s, sp.y_s, config.lambda);
      const Matrix pl = prototype_logits(proto, sp.z_q);
      const Matrix rl = ridge_logits(ridge, sp.z_q);
      const auto pr = per_class_recall(pl, sp.labels_q, 3);
      const auto rr = per_class_recall(rl, sp.labels_q, 3);
      const double d_ch = hull_distance(proto.prototypes, 0).distance;
      Matrix& out = r.samples[v];
      out(s, 0) = d_ch;
      out(s, 1) = d_ch <= config.dominance_tol ? 1.0 : 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        out(s, 2 + c) = pr[c];
        out(s, 5 + c) = rr[c];
      }
      out(s, 8) = accuracy(pl, sp.labels_q);
      out(s, 9) = accuracy(rl, sp.labels_q);
    }
  });
  r.aggregate();
  return r;
}

BimodalSummary summarize_bimodal(const SweepResult& sweep) {
  const std::size_t dom = sweep.column("dominated");
  const std::size_t pra = sweep.column("proto_recall_a");
  const std::size_t pacc = sweep.column("proto_acc");
  const std::size_t rra = sweep.column("ridge_recall_a");
  BimodalSummary out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.first_zero_recall_delta = nan;
  out.first_dominated_delta = nan;
  out.min_ridge_recall_a = std::numeric_limits<double>::infinity();
  double recall = 0.0, acc = 0.0, ridge = 0.0;
  for (std::size_t v = 0; v < sweep.values.size(); ++v) {
    const Matrix& m = sweep.samples[v];
    for (std::size_t s = 0; s < m.rows(); ++s) {
      if (m(s, dom) != 1.0) continue;
      ++out.dominated_instances;
      recall += m(s, pra);
      acc += m(s, pacc);
      ridge += m(s, rra);
    }
    if (sweep.mean(v, rra) < out.min_ridge_recall_a) {
      out.min_ridge_recall_a = sweep.mean(v, rra);
      out.min_ridge_recall_a_delta = sweep.values[v];
    }
    if (std::isnan(out.first_zero_recall_delta) && sweep.mean(v, pra) == 0.0)
      out.first_zero_recall_delta = sweep.values[v];
    if (std::isnan(out.first_dominated_delta) && sweep.mean(v, dom) == 1.0)
      out.first_dominated_delta = sweep.values[v];
  }
  if (out.dominated_instances > 0) {
    const double n = static_cast<double>(out.dominated_instances);
    out.dominated_proto_recall_a = recall / n;
    out.dominated_proto_acc = acc / n;
    out.dominated_ridge_recall_a = ridge / n;
  } else {
    out.dominated_proto_recall_a = out.dominated_proto_acc = out.dominated_ridge_recall_a = nan;
  }
  return out;
}

CalibrationSuite run_calibration_suite(const CalibrationConfig& config) {
  if (config.n_seeds == 0) throw ParameterError("calibration suite: need at least one seed");
  const std::vector<std::string> geometries{"origin-shifted", "varying-radius"};
  const std::vector<std::string> methods{"prototype", "temperature", "logistic"};
  const std::size_t classes = config.clusters.classes;
  CalibrationSuite suite;
  suite.seeds = seed_list(config.seed, config.n_seeds);

  // reports[g][s][m]
  std::vector<std::vector<std::vector<CalibrationReport>>> reports(
      geometries.size(), std::vector<std::vector<CalibrationReport>>(
                             suite.seeds.size(), std::vector<CalibrationReport>(methods.size())));
  std::vector<std::vector<std::vector<double>>> accs(
      geometries.size(),
      std::vector<std::vector<double>>(suite.seeds.size(), std::vector<double>(methods.size())));
  std::vector<std::vector<double>> temps(geometries.size(),
                                         std::vector<double>(suite.seeds.size()));

  parallel_for(suite.seeds.size(), config.jobs, [&](std::size_t s) {
    for (std::size_t g = 0; g < geometries.size(); ++g) {
      Rng rng(derive_seed(suite.seeds[s], 2 * g));
      const LabeledPoints pts =
          g == 0 ? origin_shifted_clusters(config.clusters, config.spread, config.shift_factor, rng)
                 : varying_radius_clusters(config.clusters, config.r_min, config.r_max, rng);
      const auto [support, query] = stratified_split(pts, derive_seed(suite.seeds[s], 2 * g + 1));
      const Split sp = make_split(pts.x, pts.labels, support, query, classes);

      const PrototypeModel proto = fit_prototypes(sp.z_s, sp.y_s);
      const Matrix query_logits = prototype_logits(proto, sp.z_q);
      const TemperatureFit tf = temperature_fit(prototype_logits(proto, sp.z_s), sp.labels_s);
      LogisticOptions lo;
      lo.lambda = config.logistic_lambda;
      const LogisticModel logistic = fit_logistic(sp.z_s, sp.y_s, lo);

      const Matrix probs[3] = {softmax_rows(query_logits),
                               temperature_softmax(query_logits, tf.temperature),
                               logistic_probabilities(logistic, sp.z_q)};
      for (std::size_t m = 0; m < methods.size(); ++m) {
        reports[g][s][m] = ece(probs[m], sp.labels_q, config.n_bins);
        accs[g][s][m] = accuracy(probs[m], sp.labels_q);
      }
      reports[g][s][1].temperature = tf.temperature;
      reports[g][s][1].temperature_degenerate = tf.degenerate;
      temps[g][s] = tf.temperature;
    }
  });

  for (std::size_t g = 0; g < geometries.size(); ++g) {
    GeometryCalibration gc;
    gc.geometry = geometries[g];
    gc.temperature_mean = mean_of(temps[g]);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      MethodCalibration mc;
      mc.method = methods[m];
      std::vector<double> eces, acc;
      const auto& first = reports[g][0][m].bins;
      mc.bins.assign(first.size(), ReliabilityBin{});
      std::vector<double> conf_sum(first.size()), correct_sum(first.size());
      for (std::size_t s = 0; s < suite.seeds.size(); ++s) {
        const CalibrationReport& rep = reports[g][s][m];
        eces.push_back(rep.ece);
        acc.push_back(accs[g][s][m]);
        for (std::size_t b = 0; b < rep.bins.size(); ++b) {
          const double n = static_cast<double>(rep.bins[b].count);
          conf_sum[b] += rep.bins[b].confidence * n;
          correct_sum[b] += rep.bins[b].accuracy * n;
          mc.bins[b].count += rep.bins[b].count;
        }
      }
      for (std::size_t b = 0; b < mc.bins.size(); ++b) {
        mc.bins[b].lower = first[b].lower;
        mc.bins[b].upper = first[b].upper;
        if (mc.bins[b].count > 0) {
          const double n = static_cast<double>(mc.bins[b].count);
          mc.bins[b].confidence = conf_sum[b] / n;
          mc.bins[b].accuracy = correct_sum[b] / n;
        }
      }
      mc.ece_mean = mean_of(eces);
      mc.ece_std = sample_std(eces);
      mc.accuracy_mean = mean_of(acc);
      gc.methods.push_back(std::move(mc));
    }
    suite.geometries.push_back(std::move(gc));
  }
  return suite;
}

void write_calibration_csv(std::ostream& out, const CalibrationSuite& suite) {
  out << "geometry,method,ece_mean,ece_std,acc_mean,n_seeds\n";
  for (const auto& g : suite.geometries)
    for (const auto& m : g.methods)
      out << g.geometry << ',' << m.method << ',' << fmt(m.ece_mean) << ',' << fmt(m.ece_std)
          << ',' << fmt(m.accuracy_mean) << ',' << suite.seeds.size() << '\n';
}

void write_reliability_csv(std::ostream& out, const CalibrationSuite& suite) {
  out << "geometry,method,bin,lower,upper,confidence,accuracy,count\n";
  for (const auto& g : suite.geometries)
    for (const auto& m : g.methods)
      for (std::size_t b = 0; b < m.bins.size(); ++b) {
        const auto& bin = m.bins[b];
        out << g.geometry << ',' << m.method << ',' << b << ',' << fmt(bin.lower) << ','
            << fmt(bin.upper) << ',' << fmt(bin.confidence) << ',' << fmt(bin.accuracy) << ','
            << bin.count << '\n';
      }
}

std::vector<WorkedCheck> run_worked_examples() {
  std::vector<WorkedCheck> checks;
  auto exact = [&](const char* example, std::string quantity, double expected, double actual) {
    checks.push_back({example, std::move(quantity), fmt(expected), fmt(actual), expected == actual});
  };

  {
    // Four 1-D points, two per class, before and after a shift by 5.
    const char* ex = "translation-1d";
    const std::vector<std::size_t> labels{0, 0, 1, 1};
    const Matrix y = one_hot(labels, 2);
    const Matrix z = Matrix::from_rows({{-1.0}, {0.0}, {1.0}, {2.0}});
    const Matrix shifted = Matrix::from_rows({{4.0}, {5.0}, {6.0}, {7.0}});

    const PrototypeModel before = fit_prototypes(z, y);
    exact(ex, "p0", -0.5, before.prototypes(0, 0));
    exact(ex, "p1", 1.5, before.prototypes(1, 0));
    const Matrix l = prototype_logits(before, Matrix::from_rows({{-1.0}}));
    exact(ex, "logit0(z=-1)", 0.5, l(0, 0));
    exact(ex, "logit1(z=-1)", -1.5, l(0, 1));
    exact(ex, "prototype accuracy t=0", 1.0, accuracy(prototype_logits(before, z), labels));

    const PrototypeModel after = fit_prototypes(shifted, y);
    exact(ex, "p0 t=5", 4.5, after.prototypes(0, 0));
    exact(ex, "p1 t=5", 6.5, after.prototypes(1, 0));
    exact(ex, "prototype gap t=5", 2.0, after.prototypes(1, 0) - after.prototypes(0, 0));
    const Matrix la = prototype_logits(after, shifted);
    double predicted_one = 0.0;
    for (std::size_t p : argmax_rows(la)) predicted_one += p == 1 ? 1.0 : 0.0;
    exact(ex, "points predicted class 1 t=5", 4.0, predicted_one);
    exact(ex, "prototype accuracy t=5", 0.5, accuracy(la, labels));

    const FittedRidge r0 = fit_ridge(z, y, 0.01);
    const FittedRidge r5 = fit_ridge(shifted, y, 0.01);
    exact(ex, "ridge accuracy t=0", 1.0, accuracy(ridge_logits(r0, z), labels));
    exact(ex, "ridge accuracy t=5", 1.0, accuracy(ridge_logits(r5, shifted), labels));
    // The bias is shrunk with the weights, so the boundary is only near 5.5.
    const double boundary =
        (r5.bias[1] - r5.bias[0]) / (r5.weights(0, 0) - r5.weights(0, 1));
    checks.push_back({ex, "ridge boundary t=5 (lambda=0.01)", "5.5 +- 0.05", fmt(boundary),
                      std::abs(boundary - 5.5) <= 0.05});
  }

  {
    // Bimodal class A around two specialist classes B and C in 2-D.
    const char* ex = "inclusion-2d";
    const Matrix x = Matrix::from_rows({{-3, 1}, {-3, -1}, {3, 1}, {3, -1},
                                        {-2, 0}, {-1, 0}, {1, 0}, {2, 0}});
    const std::vector<std::size_t> labels{0, 0, 0, 0, 1, 1, 2, 2};
    const Matrix y = one_hot(labels, 3);
    const PrototypeModel proto = fit_prototypes(x, y);
    exact(ex, "p_A.x", 0.0, proto.prototypes(0, 0));
    exact(ex, "p_A.y", 0.0, proto.prototypes(0, 1));
    exact(ex, "p_B.x", -1.5, proto.prototypes(1, 0));
    exact(ex, "p_B.y", 0.0, proto.prototypes(1, 1));
    exact(ex, "p_C.x", 1.5, proto.prototypes(2, 0));
    exact(ex, "p_C.y", 0.0, proto.prototypes(2, 1));
    const HullDistance hd = hull_distance(proto.prototypes, 0);
    exact(ex, "d_CH(A)", 0.0, hd.distance);
    exact(ex, "hull weight B", 0.5, hd.weights[1]);
    exact(ex, "hull weight C", 0.5, hd.weights[2]);
    const HullReport report = flag_interior(proto.prototypes);
    exact(ex, "A flagged interior", 1.0, report.classes[0].interior ? 1.0 : 0.0);

    const Matrix logits = prototype_logits(proto, x);
    double predicted_a = 0.0;
    for (std::size_t p : argmax_rows(logits)) predicted_a += p == 0 ? 1.0 : 0.0;
    exact(ex, "points predicted A", 0.0, predicted_a);
    exact(ex, "prototype accuracy", 0.5, accuracy(logits, labels));

    // A linear head that sees the second coordinate as |y| separates all
    // three classes.
    Matrix feats = x;
    for (std::size_t i = 0; i < feats.rows(); ++i) feats(i, 1) = std::abs(feats(i, 1));
    const FittedRidge head = fit_ridge(feats, y, 0.01);
    exact(ex, "linear head accuracy on (x, |y|)", 1.0, accuracy(ridge_logits(head, feats), labels));
  }
  return checks;
}

void write_worked_csv(std::ostream& out, const std::vector<WorkedCheck>& checks) {
  out << "example,quantity,expected,actual,pass\n";
  for (const auto& c : checks)
    out << c.example << ',' << c.quantity << ',' << c.expected << ',' << c.actual << ','
        << (c.pass ? "true" : "false") << '\n';
}

}  // namespace rlab
