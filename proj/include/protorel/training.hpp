#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>

#include <nlohmann/json.hpp>

#include "protorel/losses.hpp"

namespace protorel {

/// Objective used during pretraining; mirrors the ablation rows of the
/// few-shot comparison.
enum class LossMode {
  combined,       ///< s2s + (s2z + s2z') + cls
  s2s,            ///< statement contrastive only
  ce,             ///< cross-entropy on the distant label
  ind,            ///< s2s weighted by fixed surrogate-prototype similarity
  z_cls,          ///< (s2z + s2z') + cls
  s2s_log_z_cls,  ///< log-form s2s + (s2z + s2z') + cls
};

inline constexpr std::array<std::pair<LossMode, std::string_view>, 6> kLossModeNames{{
    {LossMode::combined, "combined"},
    {LossMode::s2s, "s2s"},
    {LossMode::ce, "ce"},
    {LossMode::ind, "ind"},
    {LossMode::z_cls, "z_cls"},
    {LossMode::s2s_log_z_cls, "s2s_log_z_cls"},
}};

inline std::string_view to_string(LossMode m) {
  for (const auto& [mode, name] : kLossModeNames) {
    if (mode == m) return name;
  }
  return "?";
}

inline LossMode parse_loss_mode(std::string_view s) {
  for (const auto& [mode, name] : kLossModeNames) {
    if (name == s) return mode;
  }
  throw InvalidArgument("unknown loss mode '" + std::string(s) + "'");
}

struct TrainConfig {
  std::size_t batch_size = 60;
  std::size_t epochs = 5;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t warmup_steps = 100;
  LossWeights weights;
  std::uint64_t seed = 1;
  LossMode mode = LossMode::combined;
  std::size_t token_dim = 32;
  std::size_t output_dim = 16;
  double context_mix = 1.0;
  LossOptions loss;

  void validate() const {
    if (batch_size < 2) throw InvalidArgument("batch_size must be >= 2");
    if (!(learning_rate > 0)) throw InvalidArgument("learning_rate must be > 0");
    if (!(momentum >= 0 && momentum < 1)) throw InvalidArgument("momentum must lie in [0, 1)");
    weights.validate();
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"warmup_steps", c.warmup_steps},
          {"lambda1", c.weights.s2s},
          {"lambda2", c.weights.prototype},
          {"lambda3", c.weights.cls},
          {"seed", c.seed},
          {"mode", std::string(to_string(c.mode))},
          {"token_dim", c.token_dim},
          {"output_dim", c.output_dim},
          {"context_mix", c.context_mix},
          {"similarity", c.loss.similarity == SimilarityForm::sigmoid ? "sigmoid" : "printed"},
          {"s2s_form", c.loss.contrastive == ContrastiveForm::literal ? "literal" : "log"}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.momentum = j.at("momentum").get<double>();
  c.warmup_steps = j.at("warmup_steps").get<std::size_t>();
  c.weights = {j.at("lambda1").get<double>(), j.at("lambda2").get<double>(), j.at("lambda3").get<double>()};
  c.seed = j.at("seed").get<std::uint64_t>();
  c.mode = parse_loss_mode(j.at("mode").get<std::string>());
  c.token_dim = j.at("token_dim").get<std::size_t>();
  c.output_dim = j.at("output_dim").get<std::size_t>();
  c.context_mix = j.at("context_mix").get<double>();
  c.loss.similarity = j.at("similarity").get<std::string>() == "printed" ? SimilarityForm::printed : SimilarityForm::sigmoid;
  c.loss.contrastive = j.at("s2s_form").get<std::string>() == "log" ? ContrastiveForm::log : ContrastiveForm::literal;
  return c;
}

// ---------------------------------------------------------------------------
// Batch sampling

/// Draws batches with every relation equally represented (counts differ by at
/// most one), so each contrastive denominator sees all relations. Within a
/// relation, statements are drawn without replacement and reshuffled once
/// exhausted.
class BatchSampler {
 public:
  BatchSampler(const StatementSet& set, std::uint64_t seed) : groups_(set.by_relation()), rng_(make_rng(seed, 40)) {
    for (std::size_t r = 0; r < groups_.size(); ++r) {
      if (groups_[r].empty()) {
        throw InvalidArgument("relation '" + set.relation_vocab[r] + "' has no statements to sample");
      }
    }
    cursor_.assign(groups_.size(), 0);
    order_.resize(groups_.size());
    for (std::size_t r = 0; r < groups_.size(); ++r) reshuffle(r);
  }

  std::size_t relations() const { return groups_.size(); }

  std::vector<std::size_t> next(std::size_t batch_size) {
    const std::size_t K = groups_.size();
    if (batch_size < K) {
      throw InvalidArgument("batch size " + std::to_string(batch_size) + " is smaller than the " + std::to_string(K) +
                            " relations; every batch must cover all relations so the contrastive denominator "
                            "sums over all of them");
    }
    std::vector<std::size_t> counts(K, batch_size / K);
    for (auto r : sample_without_replacement(K, batch_size % K, rng_)) ++counts[r];
    std::vector<std::size_t> batch;
    batch.reserve(batch_size);
    for (std::size_t r = 0; r < K; ++r) {
      for (std::size_t c = 0; c < counts[r]; ++c) {
        if (cursor_[r] == order_[r].size()) reshuffle(r);
        batch.push_back(groups_[r][order_[r][cursor_[r]++]]);
      }
    }
    return batch;
  }

 private:
  void reshuffle(std::size_t r) {
    order_[r] = permutation(groups_[r].size(), rng_);
    cursor_[r] = 0;
  }

  std::vector<std::vector<std::size_t>> groups_;
  std::vector<std::vector<std::size_t>> order_;
  std::vector<std::size_t> cursor_;
  Rng rng_;
};

// ---------------------------------------------------------------------------
// Optimizer

struct OptimizerConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t warmup_steps = 100;
};

/// Heavy-ball gradient descent with a linear warmup:
///   rate = lr * min(1, step / warmup);  v = mu v - rate g;  p += v
class SgdMomentum {
 public:
  explicit SgdMomentum(OptimizerConfig cfg) : cfg_(cfg) {}

  double effective_rate() const {
    if (cfg_.warmup_steps == 0) return cfg_.learning_rate;
    return cfg_.learning_rate *
           std::min(1.0, static_cast<double>(step_) / static_cast<double>(cfg_.warmup_steps));
  }

  std::size_t steps() const { return step_; }

  /// Parameters absent from `grads` are treated as having zero gradient.
  /// Nothing is modified if any gradient is non-finite.
  void step(std::span<const ParamRef> params, const GradientMap& grads) {
    for (const auto& [name, g] : grads) {
      if (!g.allFinite()) {
        throw std::runtime_error("non-finite gradient for '" + name + "' at optimizer step " + std::to_string(step_));
      }
    }
    const double rate = effective_rate();
    for (const auto& p : params) {
      auto& v = velocity_[p.name];
      if (v.size() == 0) v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size));
      if (static_cast<std::size_t>(v.size()) != p.size) {
        throw InvalidArgument("optimizer state for '" + p.name + "' has the wrong shape");
      }
      v *= cfg_.momentum;
      if (auto it = grads.find(p.name); it != grads.end()) {
        if (static_cast<std::size_t>(it->second.size()) != p.size) {
          throw InvalidArgument("gradient for '" + p.name + "' has the wrong shape");
        }
        v -= rate * it->second;
      }
      p.values() += v;
    }
    ++step_;
  }

 private:
  OptimizerConfig cfg_;
  std::map<std::string, Eigen::VectorXd> velocity_;
  std::size_t step_ = 0;
};

// ---------------------------------------------------------------------------
// Checkpoint

inline constexpr int kCheckpointVersion = 1;

class VersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A fine-tuned classifier over a (possibly different) relation vocabulary.
struct TrainedHead {
  ClassifierHead head;
  std::vector<std::string> relation_vocab;
};

struct Checkpoint {
  EncoderModel encoder;
  PrototypeStore prototypes;
  PrototypeClassifier classifier;
  std::vector<std::string> relation_vocab;
  std::size_t num_labels = 0;
  std::vector<std::string> token_vocab;
  TrainConfig config;
  std::size_t step = 0;
  std::optional<TrainedHead> head;

  /// Every trainable block of the pretraining model, named for the optimizer.
  std::vector<ParamRef> parameters() {
    auto p = encoder.parameters();
    p.push_back(param_ref("prototypes", prototypes.vectors));
    for (auto& c : classifier.parameters("classifier")) p.push_back(c);
    return p;
  }
};

namespace detail {

inline std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline double parse_hex_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ParseError("invalid number '" + s + "' in checkpoint");
  return v;
}

template <class Derived>
nlohmann::json matrix_to_json(const Eigen::MatrixBase<Derived>& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(hex_double(m(i, j)));
  }
  return {{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("shape").at(0).get<Eigen::Index>();
  const auto cols = j.at("shape").at(1).get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw ParseError("matrix data does not match its shape");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = parse_hex_double(data.at(k++).get<std::string>());
  }
  return m;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const Eigen::MatrixXd m = matrix_from_json(j);
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

}  // namespace detail

inline nlohmann::json checkpoint_to_json(const Checkpoint& c) {
  const auto& s = c.encoder.spec;
  nlohmann::json j;
  j["version"] = kCheckpointVersion;
  j["step"] = c.step;
  j["encoder"] = {{"vocab_size", s.vocab_size},         {"token_dim", s.token_dim},
                  {"output_dim", s.output_dim},         {"context_mix", detail::hex_double(s.context_mix)},
                  {"marker_head_id", s.marker_head_id}, {"marker_tail_id", s.marker_tail_id}};
  j["params"] = {{"encoder.embedding", detail::matrix_to_json(c.encoder.embedding)},
                 {"encoder.projection", detail::matrix_to_json(c.encoder.projection)},
                 {"encoder.bias", detail::matrix_to_json(c.encoder.bias)}};
  j["prototypes"] = detail::matrix_to_json(c.prototypes.vectors);
  j["classifier"] = {{"weight", detail::matrix_to_json(c.classifier.weight)},
                     {"bias", detail::matrix_to_json(c.classifier.bias)}};
  j["relation_vocab"] = c.relation_vocab;
  j["num_labels"] = c.num_labels;
  j["token_vocab"] = c.token_vocab;
  j["config"] = to_json(c.config);
  if (c.head) {
    j["head"] = {{"weight", detail::matrix_to_json(c.head->head.weight)},
                 {"bias", detail::matrix_to_json(c.head->head.bias)},
                 {"relation_vocab", c.head->relation_vocab}};
  }
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  const int version = j.at("version").get<int>();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint c;
  const auto& e = j.at("encoder");
  EncoderSpec spec{e.at("vocab_size").get<std::size_t>(),     e.at("token_dim").get<std::size_t>(),
                   e.at("output_dim").get<std::size_t>(),     detail::parse_hex_double(e.at("context_mix").get<std::string>()),
                   e.at("marker_head_id").get<std::size_t>(), e.at("marker_tail_id").get<std::size_t>()};
  c.encoder = EncoderModel(spec);
  const auto& p = j.at("params");
  c.encoder.embedding = detail::matrix_from_json(p.at("encoder.embedding"));
  c.encoder.projection = detail::matrix_from_json(p.at("encoder.projection"));
  c.encoder.bias = detail::vector_from_json(p.at("encoder.bias"));
  if (c.encoder.embedding.rows() != static_cast<Eigen::Index>(spec.vocab_size) ||
      c.encoder.embedding.cols() != static_cast<Eigen::Index>(spec.token_dim) ||
      c.encoder.projection.rows() != static_cast<Eigen::Index>(spec.output_dim) ||
      c.encoder.projection.cols() != static_cast<Eigen::Index>(2 * spec.token_dim) ||
      c.encoder.bias.size() != static_cast<Eigen::Index>(spec.output_dim)) {
    throw ParseError("encoder parameter shapes do not match the encoder spec");
  }
  c.prototypes.vectors = detail::matrix_from_json(j.at("prototypes"));
  c.classifier.weight = detail::matrix_from_json(j.at("classifier").at("weight"));
  c.classifier.bias = detail::vector_from_json(j.at("classifier").at("bias"));
  c.relation_vocab = j.at("relation_vocab").get<std::vector<std::string>>();
  c.num_labels = j.at("num_labels").get<std::size_t>();
  c.token_vocab = j.at("token_vocab").get<std::vector<std::string>>();
  c.config = train_config_from_json(j.at("config"));
  c.step = j.at("step").get<std::size_t>();
  if (j.contains("head")) {
    const auto& h = j.at("head");
    c.head = TrainedHead{{detail::matrix_from_json(h.at("weight")), detail::vector_from_json(h.at("bias"))},
                         h.at("relation_vocab").get<std::vector<std::string>>()};
  }
  return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  out << checkpoint_to_json(c).dump(1) << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    return checkpoint_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint '" + path + "' is corrupt: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Pretraining

struct LossLogRow {
  std::size_t step = 0;
  double s2s = 0, s2z = 0, s2z_prime = 0, cls = 0, combined = 0;
};

inline void write_loss_log(const std::vector<LossLogRow>& rows, std::ostream& out) {
  out << "step,s2s,s2z,s2z_prime,cls,combined\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step, r.s2s, r.s2z, r.s2z_prime, r.cls,
                  r.combined);
    out << buf;
  }
}

/// Objective of `mode` on one batch. `ind_weights` is only read in ind mode.
inline LossReport evaluate_objective(LossMode mode, const Eigen::MatrixXd& embeddings,
                                     std::span<const RelationId> labels, std::span<const double> ind_weights,
                                     const PrototypeStore& store, const PrototypeClassifier& classifier,
                                     const LossWeights& w, LossOptions opt) {
  switch (mode) {
    case LossMode::combined:
      return loss_combined(embeddings, labels, store, classifier, w, opt);
    case LossMode::s2s:
      return loss_combined(embeddings, labels, store, classifier, {w.s2s, 0.0, 0.0}, opt);
    case LossMode::z_cls:
      return loss_combined(embeddings, labels, store, classifier, {0.0, w.prototype, w.cls}, opt);
    case LossMode::s2s_log_z_cls:
      opt.contrastive = ContrastiveForm::log;
      return loss_combined(embeddings, labels, store, classifier, w, opt);
    case LossMode::ce: {
      LossResult r = loss_ce_head(embeddings, labels, classifier);
      LossReport rep;
      rep.combined = r.value;
      rep.grad = std::move(r.grad);
      rep.grad.logits.resize(0, 0);
      return rep;
    }
    case LossMode::ind: {
      LossResult r = loss_ind(embeddings, labels, ind_weights, opt);
      LossReport rep;
      rep.s2s = r.value;
      rep.combined = r.value;
      rep.grad.embeddings = std::move(r.grad.embeddings);
      rep.warnings = std::move(r.warnings);
      return rep;
    }
  }
  throw InvalidArgument("unhandled loss mode");
}

/// Fresh model for `data`: Glorot encoder, random unit prototypes, Glorot
/// classifier. The token vocabulary gains an unknown-token entry.
inline Checkpoint init_checkpoint(const TrainConfig& config, const StatementSet& data) {
  config.validate();
  Checkpoint c;
  const StatementSet aligned = align_tokens(data, data.token_vocab);
  c.token_vocab = aligned.token_vocab;
  c.relation_vocab = data.relation_vocab;
  c.num_labels = data.num_labels;
  c.config = config;
  const auto spec =
      EncoderSpec::for_vocabulary(c.token_vocab.size(), config.token_dim, config.output_dim, config.context_mix);
  c.encoder = init_encoder(spec, config.seed);
  c.prototypes = init_prototypes_random(data.num_labels, config.output_dim, config.seed);
  c.classifier = init_linear_head(data.num_labels, config.output_dim, config.seed);
  return c;
}

struct PretrainResult {
  Checkpoint checkpoint;
  std::vector<LossLogRow> log;
};

inline Eigen::MatrixXd encode_rows(const EncoderModel& enc, const StatementSet& set,
                                   std::span<const std::size_t> idx) {
  Eigen::MatrixXd emb(static_cast<Eigen::Index>(idx.size()), enc.dim());
  for (std::size_t b = 0; b < idx.size(); ++b) {
    emb.row(static_cast<Eigen::Index>(b)) = enc.encode(set.statements[idx[b]]).transpose();
  }
  return emb;
}

inline EncoderGrad encoder_backward(const EncoderModel& enc, const StatementSet& set,
                                    std::span<const std::size_t> idx, const Eigen::MatrixXd& grad_emb) {
  EncoderGrad g = enc.zero_grad();
  for (std::size_t b = 0; b < idx.size(); ++b) {
    enc.backward(set.statements[idx[b]], grad_emb.row(static_cast<Eigen::Index>(b)).transpose(), g);
  }
  return g;
}

/// Runs epochs * ceil(n / batch_size) steps of: balanced batch, encode,
/// objective of config.mode, momentum step, prototype renormalization.
inline PretrainResult pretrain(const TrainConfig& config, const StatementSet& data) {
  config.validate();
  if (data.empty()) throw InvalidArgument("pretraining data is empty");
  PretrainResult result{init_checkpoint(config, data), {}};
  Checkpoint& ck = result.checkpoint;
  const StatementSet set = align_tokens(data, ck.token_vocab);

  BatchSampler sampler(set, config.seed);
  std::vector<double> ind_all;
  if (config.mode == LossMode::ind) {
    auto [store, weights] = surrogate_ind_prototypes(ck.encoder, set);
    ck.prototypes = std::move(store);
    ind_all = std::move(weights.values);
  }

  SgdMomentum opt({config.learning_rate, config.momentum, config.warmup_steps});
  const std::size_t steps_per_epoch = (set.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = config.epochs * steps_per_epoch;
  auto params = ck.parameters();
  for (std::size_t step = 0; step < total_steps; ++step) {
    const auto idx = sampler.next(config.batch_size);
    std::vector<RelationId> labels;
    std::vector<double> ind_w;
    for (auto i : idx) {
      labels.push_back(set.statements[i].relation);
      if (!ind_all.empty()) ind_w.push_back(ind_all[i]);
    }
    const Eigen::MatrixXd emb = encode_rows(ck.encoder, set, idx);
    LossReport rep =
        evaluate_objective(config.mode, emb, labels, ind_w, ck.prototypes, ck.classifier, config.weights, config.loss);
    if (!std::isfinite(rep.combined)) {
      throw std::runtime_error("non-finite loss at step " + std::to_string(step));
    }
    GradientMap grads;
    EncoderModel::append_gradients(encoder_backward(ck.encoder, set, idx, rep.grad.embeddings), grads);
    if (rep.grad.prototypes.size() && config.mode != LossMode::ind) grads["prototypes"] = flatten(rep.grad.prototypes);
    if (rep.grad.classifier_weight.size()) {
      grads["classifier.weight"] = flatten(rep.grad.classifier_weight);
      grads["classifier.bias"] = rep.grad.classifier_bias;
    }
    const bool moves_prototypes = grads.contains("prototypes");
    opt.step(params, grads);
    if (moves_prototypes) ck.prototypes.renormalize();
    ++ck.step;
    result.log.push_back({step, rep.s2s, rep.s2z, rep.s2z_prime, rep.cls, rep.combined});
  }
  return result;
}

}  // namespace protorel
