#pragma once

#include <filesystem>
#include <map>

#include "protorel/data.hpp"
#include "protorel/metric.hpp"
#include "protorel/svg.hpp"

namespace protorel {

struct LinearBoundary {
  Eigen::Vector2d w = Eigen::Vector2d::Zero();
  double b = 0.0;

  int classify(const Eigen::Vector2d& x) const { return w.dot(x) + b >= 0 ? 1 : -1; }
  bool valid() const { return w.norm() > 0; }
};

struct PrototypePair {
  Eigen::Vector2d positive;
  Eigen::Vector2d negative;
};

inline PrototypePair mean_prototypes(std::span<const Eigen::Vector2d> points, std::span<const int> labels) {
  if (points.size() != labels.size()) throw InvalidArgument("mean_prototypes needs one label per point");
  PrototypePair z{Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  std::size_t np = 0, nn = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i] > 0) {
      z.positive += points[i];
      ++np;
    } else {
      z.negative += points[i];
      ++nn;
    }
  }
  if (np == 0 || nn == 0) throw InvalidArgument("mean_prototypes needs both classes to be nonempty");
  z.positive /= static_cast<double>(np);
  z.negative /= static_cast<double>(nn);
  return z;
}

/// sign(|x - z-|^2 - |x - z+|^2); an exact tie counts as +1.
inline int proto_decision(const PrototypePair& z, const Eigen::Vector2d& x) {
  return (x - z.negative).squaredNorm() - (x - z.positive).squaredNorm() >= 0 ? 1 : -1;
}

/// w = z+ - z-, b = (|z-|^2 - |z+|^2) / 2.
inline LinearBoundary proto_linear_form(const PrototypePair& z) {
  if (z.positive == z.negative) throw InvalidArgument("degenerate boundary: the two prototypes coincide");
  return {z.positive - z.negative, (z.negative.squaredNorm() - z.positive.squaredNorm()) / 2};
}

struct LogisticConfig {
  std::size_t iterations = 5000;
  double learning_rate = 0.1;
  double l2 = 1e-4;
};

/// Full-batch gradient descent on the mean logistic loss plus (l2/2)|w|^2,
/// on standardized features, from a zero start. The boundary is returned in
/// the original coordinates.
inline LinearBoundary fit_logistic(std::span<const Eigen::Vector2d> points, std::span<const int> labels,
                                   const LogisticConfig& cfg = {}) {
  if (points.size() != labels.size()) throw InvalidArgument("fit_logistic needs one label per point");
  if (points.size() < 2) throw InvalidArgument("fit_logistic needs at least two points");
  const bool has_pos = std::any_of(labels.begin(), labels.end(), [](int y) { return y > 0; });
  const bool has_neg = std::any_of(labels.begin(), labels.end(), [](int y) { return y <= 0; });
  if (!has_pos || !has_neg) throw InvalidArgument("fit_logistic needs both classes present");

  const auto n = static_cast<double>(points.size());
  Eigen::Vector2d mu = Eigen::Vector2d::Zero(), sd = Eigen::Vector2d::Zero();
  for (const auto& p : points) mu += p;
  mu /= n;
  for (const auto& p : points) sd += (p - mu).cwiseAbs2();
  sd = (sd / n).cwiseSqrt();
  if (!(sd.minCoeff() > 0)) throw InvalidArgument("fit_logistic: a feature is constant (degenerate data)");

  std::vector<Eigen::Vector2d> x;
  for (const auto& p : points) x.push_back((p - mu).cwiseQuotient(sd));
  Eigen::Vector2d w = Eigen::Vector2d::Zero();
  double b = 0.0;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    Eigen::Vector2d gw = cfg.l2 * w;
    double gb = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      // d/dm log(1 + exp(-y m)) = -y sigmoid(-y m)
      const double y = labels[i] > 0 ? 1.0 : -1.0;
      const double g = -y * sigmoid(-y * (w.dot(x[i]) + b)) / n;
      gw += g * x[i];
      gb += g;
    }
    w -= cfg.learning_rate * gw;
    b -= cfg.learning_rate * gb;
  }
  LinearBoundary out;
  out.w = w.cwiseQuotient(sd);
  out.b = b - out.w.dot(mu);
  return out;
}

inline std::vector<int> flip_labels(std::span<const int> labels, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0 && fraction <= 1)) throw InvalidArgument("flip fraction must lie in [0, 1]");
  std::vector<int> out(labels.begin(), labels.end());
  Rng rng = make_rng(seed, 80);
  for (auto i : sample_without_replacement(out.size(), round_count(fraction * static_cast<double>(out.size())), rng)) {
    out[i] = -out[i];
  }
  return out;
}

/// Angle between the two normals in degrees, ignoring orientation: [0, 90].
inline double boundary_distortion(const LinearBoundary& a, const LinearBoundary& b) {
  if (!a.valid() || !b.valid()) throw InvalidArgument("boundary_distortion: zero normal vector");
  const double c = std::clamp(std::abs(a.w.normalized().dot(b.w.normalized())), 0.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

inline double boundary_accuracy(const LinearBoundary& f, std::span<const Eigen::Vector2d> points,
                                std::span<const int> labels) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < points.size(); ++i) correct += f.classify(points[i]) == (labels[i] > 0 ? 1 : -1);
  return static_cast<double>(correct) / static_cast<double>(points.size());
}

// ---------------------------------------------------------------------------

enum class BoundaryClassifier { prototype, logistic };

inline std::string_view to_string(BoundaryClassifier c) {
  return c == BoundaryClassifier::prototype ? "prototype" : "logistic";
}

struct BoundaryConfig {
  std::vector<double> noise = {0.0, 0.2, 0.5};
  std::size_t seeds = 100;
  std::uint64_t first_seed = 1;
  IrisSpecies positive = IrisSpecies::versicolor;
  IrisSpecies negative = IrisSpecies::virginica;
  IrisFeature feature_x = IrisFeature::petal_length;
  IrisFeature feature_y = IrisFeature::petal_width;
  LogisticConfig logistic;
  std::string out_dir;  ///< empty: no files
};

struct BoundaryRun {
  std::uint64_t seed = 0;
  double noise = 0;
  BoundaryClassifier classifier = BoundaryClassifier::prototype;
  LinearBoundary boundary;
  double angle_deg = 0;
  double clean_acc = 0;
};

struct BoundaryCell {
  double noise = 0;
  BoundaryClassifier classifier = BoundaryClassifier::prototype;
  double median_angle = 0;
  double mean_angle = 0;
  double mean_clean_acc = 0;
};

struct BoundaryReport {
  LinearBoundary clean_prototype;
  LinearBoundary clean_logistic;
  double clean_prototype_acc = 0;
  double clean_logistic_acc = 0;
  std::vector<BoundaryRun> runs;    ///< sorted by (noise, seed, classifier)
  std::vector<BoundaryCell> cells;  ///< sorted by (noise, classifier)

  const BoundaryCell& cell(double noise, BoundaryClassifier c) const {
    for (const auto& x : cells) {
      if (x.noise == noise && x.classifier == c) return x;
    }
    throw InvalidArgument("no boundary cell for noise " + std::to_string(noise));
  }
};

namespace detail {

inline std::string noise_tag(double noise) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", noise);
  return buf;
}

inline void write_boundary_svg(const IrisBinaryView& view, std::span<const int> noisy, BoundaryClassifier c,
                               const LinearBoundary& clean, const LinearBoundary& fitted, double noise,
                               const BoundaryConfig& cfg, const std::string& path) {
  std::vector<std::size_t> labels;
  for (int y : noisy) labels.push_back(y > 0 ? 0 : 1);
  std::vector<Eigen::Vector2d> protos;
  if (c == BoundaryClassifier::prototype) {
    const auto z = mean_prototypes(view.points, noisy);
    protos = {z.positive, z.negative};
  }
  ScatterStyle style;
  style.title = std::string(to_string(c)) + " classifier, " + noise_tag(noise) + " flipped";
  style.class_names = {std::string(kIrisSpeciesNames[static_cast<std::size_t>(cfg.positive)]),
                       std::string(kIrisSpeciesNames[static_cast<std::size_t>(cfg.negative)])};
  style.boundaries = {{clean.w, clean.b, "#555555", true, "clean labels"},
                      {fitted.w, fitted.b, "#000000", false, "noisy labels"}};
  emit_svg_scatter(view.points, labels, protos, path, style);
}

}  // namespace detail

inline void write_boundary_runs(const std::vector<BoundaryRun>& runs, std::ostream& out) {
  out << "seed,noise,classifier,angle_deg,clean_acc\n";
  char buf[160];
  for (const auto& r : runs) {
    std::snprintf(buf, sizeof buf, "%llu,%.4f,%s,%.17g,%.17g\n", static_cast<unsigned long long>(r.seed), r.noise,
                  std::string(to_string(r.classifier)).c_str(), r.angle_deg, r.clean_acc);
    out << buf;
  }
}

/// For every (noise, seed): flip labels, fit both classifiers, measure the
/// normal-vector angle to the clean fit and accuracy on the clean labels.
/// Writes runs.csv and one SVG per (classifier, noise) for the first seed.
inline BoundaryReport run_boundary_experiment(const BoundaryConfig& cfg) {
  if (cfg.seeds == 0) throw InvalidArgument("boundary experiment needs at least one seed");
  const IrisBinaryView view = load_iris().binary_view(cfg.positive, cfg.negative, cfg.feature_x, cfg.feature_y);

  BoundaryReport rep;
  rep.clean_prototype = proto_linear_form(mean_prototypes(view.points, view.labels));
  rep.clean_logistic = fit_logistic(view.points, view.labels, cfg.logistic);
  rep.clean_prototype_acc = boundary_accuracy(rep.clean_prototype, view.points, view.labels);
  rep.clean_logistic_acc = boundary_accuracy(rep.clean_logistic, view.points, view.labels);

  std::vector<double> noise = cfg.noise;
  std::sort(noise.begin(), noise.end());
  noise.erase(std::unique(noise.begin(), noise.end()), noise.end());

  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
  for (double f : noise) {
    std::map<BoundaryClassifier, std::vector<double>> angles, accs;
    for (std::uint64_t s = cfg.first_seed; s < cfg.first_seed + cfg.seeds; ++s) {
      const auto noisy = flip_labels(view.labels, f, s);
      const LinearBoundary proto = proto_linear_form(mean_prototypes(view.points, noisy));
      const LinearBoundary logi = fit_logistic(view.points, noisy, cfg.logistic);
      for (auto [c, fit, clean] : {std::tuple{BoundaryClassifier::prototype, proto, rep.clean_prototype},
                                   std::tuple{BoundaryClassifier::logistic, logi, rep.clean_logistic}}) {
        BoundaryRun run{s, f, c, fit, boundary_distortion(clean, fit), boundary_accuracy(fit, view.points, view.labels)};
        angles[c].push_back(run.angle_deg);
        accs[c].push_back(run.clean_acc);
        rep.runs.push_back(run);
        if (!cfg.out_dir.empty() && s == cfg.first_seed) {
          detail::write_boundary_svg(view, noisy, c, clean, fit, f, cfg,
                                     (std::filesystem::path(cfg.out_dir) /
                                      ("boundary_" + std::string(to_string(c)) + "_" + detail::noise_tag(f) + ".svg"))
                                         .string());
        }
      }
    }
    for (auto c : {BoundaryClassifier::prototype, BoundaryClassifier::logistic}) {
      const auto& a = angles[c];
      const auto& acc = accs[c];
      rep.cells.push_back({f, c, median(a), std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size()),
                           std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size())});
    }
  }
  if (!cfg.out_dir.empty()) {
    const auto path = std::filesystem::path(cfg.out_dir) / "runs.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    write_boundary_runs(rep.runs, out);
  }
  return rep;
}

}  // namespace protorel
