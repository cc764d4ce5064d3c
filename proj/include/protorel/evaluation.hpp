#pragma once

#include "protorel/training.hpp"

namespace protorel {

/// Re-expresses labels of `set` in the ids of `vocab` (matched by name).
/// Throws if a label relation is not in `vocab`.
inline StatementSet align_relations(const StatementSet& set, const std::vector<std::string>& vocab,
                                    std::size_t num_labels) {
  StatementSet out;
  out.token_vocab = set.token_vocab;
  out.relation_vocab = vocab;
  out.num_labels = num_labels;
  std::map<std::string, RelationId> ids;
  for (std::size_t i = 0; i < vocab.size(); ++i) ids.emplace(vocab[i], i);
  auto lookup = [&](RelationId r, bool label) {
    const auto& name = set.relation_vocab.at(r);
    auto it = ids.find(name);
    if (it == ids.end()) {
      if (label) throw InvalidArgument("relation '" + name + "' is not known to the model");
      const RelationId id = out.relation_vocab.size();
      out.relation_vocab.push_back(name);
      ids.emplace(name, id);
      return id;
    }
    if (label && it->second >= num_labels) throw InvalidArgument("relation '" + name + "' is not a label of the model");
    return it->second;
  };
  for (const auto& s : set.statements) {
    Statement t = s;
    t.relation = lookup(s.relation, true);
    if (t.true_relation) t.true_relation = lookup(*t.true_relation, false);
    out.statements.push_back(std::move(t));
  }
  return out;
}

template <StatementEncoder E>
double nearest_prototype_accuracy(const E& encoder, const PrototypeStore& store, const StatementSet& set) {
  if (set.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    correct += nearest_prototype(store, encoder.embed(set, i)) == set.statements[i].relation;
  }
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

template <StatementEncoder E>
double head_accuracy(const E& encoder, const LinearHead& head, const StatementSet& set) {
  if (set.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.size(); ++i) correct += head.predict(encoder.embed(set, i)) == set.statements[i].relation;
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

// ---------------------------------------------------------------------------
// Supervised fine-tuning

struct FinetuneConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t warmup_steps = 0;
  bool train_encoder = true;
  std::uint64_t seed = 1;
};

struct SupervisedModel {
  EncoderModel encoder;
  ClassifierHead head;
};

namespace detail {

inline std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n, std::size_t batch, Rng& rng) {
  const auto order = permutation(n, rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch)));
  }
  return out;
}

}  // namespace detail

/// Trains only a softmax head over fixed embeddings from `encoder`.
template <StatementEncoder E>
ClassifierHead finetune_head(const E& encoder, const StatementSet& train, const FinetuneConfig& cfg) {
  if (train.empty()) throw InvalidArgument("fine-tuning data is empty");
  const Eigen::MatrixXd emb = embed_all(encoder, train);
  const auto labels = train.labels();
  ClassifierHead head = init_linear_head(train.num_labels, static_cast<std::size_t>(encoder.dim()), cfg.seed);
  SgdMomentum opt({cfg.learning_rate, cfg.momentum, cfg.warmup_steps});
  auto params = head.parameters("head");
  Rng rng = make_rng(cfg.seed, 50);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& batch : detail::shuffled_batches(train.size(), cfg.batch_size, rng)) {
      Eigen::MatrixXd x(static_cast<Eigen::Index>(batch.size()), emb.cols());
      std::vector<RelationId> y;
      for (std::size_t b = 0; b < batch.size(); ++b) {
        x.row(static_cast<Eigen::Index>(b)) = emb.row(static_cast<Eigen::Index>(batch[b]));
        y.push_back(labels[batch[b]]);
      }
      const LossResult r = loss_ce_head(x, y, head);
      opt.step(params, {{"head.weight", flatten(r.grad.classifier_weight)}, {"head.bias", r.grad.classifier_bias}});
    }
  }
  return head;
}

/// Softmax head on top of the pretrained encoder, trained with cross-entropy
/// on mini-batches; the encoder is updated too unless cfg.train_encoder is off.
inline SupervisedModel finetune_supervised(const Checkpoint& ckpt, const StatementSet& train,
                                           const FinetuneConfig& cfg) {
  if (train.empty()) throw InvalidArgument("fine-tuning data is empty");
  const StatementSet set = align_tokens(train, ckpt.token_vocab);
  SupervisedModel model{ckpt.encoder, {}};
  if (!cfg.train_encoder) {
    model.head = finetune_head(model.encoder, set, cfg);
    return model;
  }
  model.head = init_linear_head(set.num_labels, static_cast<std::size_t>(model.encoder.dim()), cfg.seed);
  SgdMomentum opt({cfg.learning_rate, cfg.momentum, cfg.warmup_steps});
  auto params = model.encoder.parameters();
  for (auto& p : model.head.parameters("head")) params.push_back(p);
  Rng rng = make_rng(cfg.seed, 50);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& batch : detail::shuffled_batches(set.size(), cfg.batch_size, rng)) {
      std::vector<RelationId> y;
      for (auto i : batch) y.push_back(set.statements[i].relation);
      const Eigen::MatrixXd x = encode_rows(model.encoder, set, batch);
      const LossResult r = loss_ce_head(x, y, model.head);
      GradientMap grads{{"head.weight", flatten(r.grad.classifier_weight)}, {"head.bias", r.grad.classifier_bias}};
      EncoderModel::append_gradients(encoder_backward(model.encoder, set, batch, r.grad.embeddings), grads);
      opt.step(params, grads);
    }
  }
  return model;
}

struct ClassMetrics {
  std::string relation;
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0;
};

/// Precision, recall and F1 from confusion counts; 0 where undefined.
inline ClassMetrics prf(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

struct SupervisedReport {
  std::vector<ClassMetrics> per_relation;
  ClassMetrics micro;
  ClassMetrics macro;
  double accuracy = 0;
};

inline SupervisedReport score_predictions(std::span<const RelationId> gold, std::span<const RelationId> pred,
                                          const std::vector<std::string>& names, std::size_t classes) {
  std::vector<std::size_t> tp(classes, 0), fp(classes, 0), fn(classes, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == pred[i]) {
      ++tp[gold[i]];
      ++correct;
    } else {
      ++fn[gold[i]];
      if (pred[i] < classes) ++fp[pred[i]];
    }
  }
  SupervisedReport rep;
  std::size_t TP = 0, FP = 0, FN = 0;
  for (std::size_t k = 0; k < classes; ++k) {
    ClassMetrics m = prf(tp[k], fp[k], fn[k]);
    m.relation = k < names.size() ? names[k] : std::to_string(k);
    rep.macro.precision += m.precision / static_cast<double>(classes);
    rep.macro.recall += m.recall / static_cast<double>(classes);
    rep.macro.f1 += m.f1 / static_cast<double>(classes);
    TP += tp[k];
    FP += fp[k];
    FN += fn[k];
    rep.per_relation.push_back(m);
  }
  rep.macro.relation = "macro";
  rep.micro = prf(TP, FP, FN);
  rep.micro.relation = "micro";
  rep.accuracy = gold.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(gold.size());
  return rep;
}

/// Argmax predictions of `head`, scored per relation and micro/macro averaged.
template <StatementEncoder E>
SupervisedReport eval_supervised(const E& encoder, const ClassifierHead& head, const StatementSet& test) {
  if (test.empty()) throw InvalidArgument("evaluation data is empty");
  const auto gold = test.labels();
  std::vector<RelationId> pred;
  for (std::size_t i = 0; i < test.size(); ++i) pred.push_back(head.predict(encoder.embed(test, i)));
  return score_predictions(gold, pred, test.relation_vocab, static_cast<std::size_t>(head.classes()));
}

// ---------------------------------------------------------------------------
// Few-shot episodes

/// An N-way K-shot task. Ways are ordered by ascending relation id, so way
/// index order is relation id order.
struct Episode {
  std::vector<RelationId> relations;
  std::vector<std::vector<std::size_t>> supports;  ///< per way, statement indices
  std::vector<std::size_t> queries;                ///< statement indices
  std::vector<std::size_t> query_ways;             ///< gold way of each query
};

inline Episode sample_episode(const StatementSet& set, std::size_t n_way, std::size_t k_shot, std::size_t n_queries,
                              Rng& rng) {
  if (n_way < 1 || k_shot < 1) throw InvalidArgument("episodes need n_way >= 1 and k_shot >= 1");
  const auto groups = set.by_relation();
  if (groups.size() < n_way) {
    throw InvalidArgument(std::to_string(n_way) + "-way episodes need " + std::to_string(n_way) +
                          " relations but the set has " + std::to_string(groups.size()));
  }
  std::vector<RelationId> eligible;
  std::optional<RelationId> limiting;
  for (std::size_t r = 0; r < groups.size(); ++r) {
    if (groups[r].size() >= k_shot + n_queries) {
      eligible.push_back(r);
    } else if (!limiting || groups[r].size() < groups[*limiting].size()) {
      limiting = r;
    }
  }
  if (eligible.size() < n_way) {
    throw InvalidArgument("relation '" + set.relation_vocab[*limiting] + "' has " +
                          std::to_string(groups[*limiting].size()) + " statements; " + std::to_string(n_way) +
                          "-way " + std::to_string(k_shot) + "-shot episodes with " + std::to_string(n_queries) +
                          " queries need " + std::to_string(k_shot + n_queries) + " in at least " +
                          std::to_string(n_way) + " relations");
  }
  Episode ep;
  for (auto k : sample_without_replacement(eligible.size(), n_way, rng)) ep.relations.push_back(eligible[k]);
  std::sort(ep.relations.begin(), ep.relations.end());
  for (std::size_t w = 0; w < n_way; ++w) {
    const auto& g = groups[ep.relations[w]];
    const auto pick = sample_without_replacement(g.size(), k_shot + n_queries, rng);
    std::vector<std::size_t> sup;
    for (std::size_t l = 0; l < k_shot; ++l) sup.push_back(g[pick[l]]);
    ep.supports.push_back(std::move(sup));
    for (std::size_t q = k_shot; q < pick.size(); ++q) {
      ep.queries.push_back(g[pick[q]]);
      ep.query_ways.push_back(w);
    }
  }
  return ep;
}

/// logit_k = mean over supports l of similarity(query, support_{k,l}).
inline Eigen::VectorXd fewshot_logits(const Eigen::MatrixXd& embeddings, const Episode& ep,
                                      const Eigen::Ref<const Eigen::VectorXd>& query,
                                      SimilarityForm form = SimilarityForm::sigmoid) {
  Eigen::VectorXd logits(static_cast<Eigen::Index>(ep.supports.size()));
  for (std::size_t w = 0; w < ep.supports.size(); ++w) {
    double acc = 0.0;
    for (auto s : ep.supports[w]) acc += similarity(query, embeddings.row(static_cast<Eigen::Index>(s)).transpose(), form);
    logits(static_cast<Eigen::Index>(w)) = acc / static_cast<double>(ep.supports[w].size());
  }
  return logits;
}

/// Way of the single most similar support; ties go to the lower relation id.
inline std::size_t nearest_support_way(const Eigen::MatrixXd& embeddings, const Episode& ep,
                                       const Eigen::Ref<const Eigen::VectorXd>& query) {
  std::size_t best = 0;
  double best_cos = -std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w < ep.supports.size(); ++w) {
    for (auto s : ep.supports[w]) {
      const double c = cosine(query, embeddings.row(static_cast<Eigen::Index>(s)).transpose());
      if (c > best_cos) {
        best_cos = c;
        best = w;
      }
    }
  }
  return best;
}

/// Predicted relation id for each query, given embeddings of the whole set.
inline std::vector<RelationId> fewshot_predict(const Eigen::MatrixXd& embeddings, const Episode& ep) {
  std::vector<RelationId> out;
  for (auto q : ep.queries) {
    out.push_back(ep.relations[nearest_support_way(embeddings, ep, embeddings.row(static_cast<Eigen::Index>(q)).transpose())]);
  }
  return out;
}

template <StatementEncoder E>
std::vector<RelationId> fewshot_predict(const E& encoder, const StatementSet& set, const Episode& ep) {
  Eigen::MatrixXd emb = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(set.size()), encoder.dim());
  auto fill = [&](std::size_t i) { emb.row(static_cast<Eigen::Index>(i)) = encoder.embed(set, i).transpose(); };
  for (const auto& sup : ep.supports) std::for_each(sup.begin(), sup.end(), fill);
  std::for_each(ep.queries.begin(), ep.queries.end(), fill);
  return fewshot_predict(emb, ep);
}

/// Cross-entropy of softmax(fewshot_logits) over an episode's queries.
/// `embeddings` rows are [supports of way 0..n-1 in order; queries in order].
inline LossResult fewshot_episode_loss(const Eigen::MatrixXd& embeddings, const Episode& ep,
                                       SimilarityForm form = SimilarityForm::sigmoid) {
  std::vector<Eigen::Index> sup_row;
  std::vector<std::size_t> sup_way;
  Eigen::Index row = 0;
  for (std::size_t w = 0; w < ep.supports.size(); ++w) {
    for (std::size_t l = 0; l < ep.supports[w].size(); ++l) {
      sup_row.push_back(row++);
      sup_way.push_back(w);
    }
  }
  const Eigen::Index query_base = row;
  if (embeddings.rows() != query_base + static_cast<Eigen::Index>(ep.queries.size())) {
    throw InvalidArgument("episode embeddings do not match supports + queries");
  }
  Eigen::VectorXd norms;
  const Eigen::MatrixXd u = normalize_rows(embeddings, &norms);
  Eigen::MatrixXd grad_u = Eigen::MatrixXd::Zero(u.rows(), u.cols());
  const auto n_way = static_cast<Eigen::Index>(ep.supports.size());
  const double inv_q = 1.0 / static_cast<double>(ep.queries.size());
  LossResult out;
  for (std::size_t q = 0; q < ep.queries.size(); ++q) {
    const Eigen::Index qr = query_base + static_cast<Eigen::Index>(q);
    Eigen::VectorXd logits = Eigen::VectorXd::Zero(n_way);
    std::vector<Score> scores;
    for (std::size_t k = 0; k < sup_row.size(); ++k) {
      scores.push_back(score_cosine(u.row(qr).dot(u.row(sup_row[k])), form));
      logits(static_cast<Eigen::Index>(sup_way[k])) +=
          scores.back().value / static_cast<double>(ep.supports[sup_way[k]].size());
    }
    Eigen::VectorXd p;
    const auto gold = static_cast<Eigen::Index>(ep.query_ways[q]);
    out.value -= inv_q * detail::log_softmax_at(logits, gold, &p);
    p(gold) -= 1.0;
    p *= inv_q;
    for (std::size_t k = 0; k < sup_row.size(); ++k) {
      const double dc =
          p(static_cast<Eigen::Index>(sup_way[k])) * scores[k].slope / static_cast<double>(ep.supports[sup_way[k]].size());
      grad_u.row(qr) += dc * u.row(sup_row[k]);
      grad_u.row(sup_row[k]) += dc * u.row(qr);
    }
  }
  out.grad.embeddings = unit_backward(u, norms, grad_u);
  return out;
}

struct FewshotConfig {
  std::size_t n_way = 5;
  std::size_t k_shot = 1;
  std::size_t n_queries = 1;
  std::size_t episodes = 100;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t warmup_steps = 0;
  std::uint64_t seed = 1;
};

/// Episodic fine-tuning of the encoder with cross-entropy over
/// mean-similarity logits. Prototypes and classifier are left untouched.
inline Checkpoint fewshot_train(const Checkpoint& ckpt, const StatementSet& train, const FewshotConfig& cfg) {
  Checkpoint out = ckpt;
  if (cfg.episodes == 0) return out;
  const StatementSet set = align_tokens(train, ckpt.token_vocab);
  SgdMomentum opt({cfg.learning_rate, cfg.momentum, cfg.warmup_steps});
  auto params = out.encoder.parameters();
  for (std::size_t e = 0; e < cfg.episodes; ++e) {
    Rng rng = make_rng(cfg.seed, 200000 + e);
    const Episode ep = sample_episode(set, cfg.n_way, cfg.k_shot, cfg.n_queries, rng);
    std::vector<std::size_t> rows;
    for (const auto& sup : ep.supports) rows.insert(rows.end(), sup.begin(), sup.end());
    rows.insert(rows.end(), ep.queries.begin(), ep.queries.end());
    const Eigen::MatrixXd emb = encode_rows(out.encoder, set, rows);
    const LossResult r = fewshot_episode_loss(emb, ep, ckpt.config.loss.similarity);
    GradientMap grads;
    EncoderModel::append_gradients(encoder_backward(out.encoder, set, rows, r.grad.embeddings), grads);
    opt.step(params, grads);
  }
  return out;
}

struct FewshotReport {
  double mean_accuracy = 0.0;
  std::vector<double> episode_accuracy;
};

/// Mean query accuracy over independent episodes. Episode e draws from its own
/// stream derived from (seed, e).
inline FewshotReport eval_fewshot_embeddings(const Eigen::MatrixXd& embeddings, const StatementSet& set,
                                             std::size_t n_way, std::size_t k_shot, std::size_t episodes,
                                             std::uint64_t seed, std::size_t n_queries = 1) {
  if (episodes == 0) throw InvalidArgument("eval_fewshot needs at least one episode");
  FewshotReport rep;
  double total = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    Rng rng = make_rng(seed, 100000 + e);
    const Episode ep = sample_episode(set, n_way, k_shot, n_queries, rng);
    const auto pred = fewshot_predict(embeddings, ep);
    std::size_t correct = 0;
    for (std::size_t q = 0; q < pred.size(); ++q) correct += pred[q] == ep.relations[ep.query_ways[q]];
    const double acc = static_cast<double>(correct) / static_cast<double>(pred.size());
    rep.episode_accuracy.push_back(acc);
    total += acc;
  }
  rep.mean_accuracy = total / static_cast<double>(episodes);
  return rep;
}

template <StatementEncoder E>
FewshotReport eval_fewshot(const E& encoder, const StatementSet& set, std::size_t n_way, std::size_t k_shot,
                           std::size_t episodes, std::uint64_t seed, std::size_t n_queries = 1) {
  return eval_fewshot_embeddings(embed_all(encoder, set), set, n_way, k_shot, episodes, seed, n_queries);
}

enum class ReductionMode { relations, instances };

/// Keeps round(fraction * K) randomly chosen relations (relabelled densely).
inline StatementSet reduce_relations(const StatementSet& set, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0 && fraction <= 1)) throw InvalidArgument("reduction fraction must lie in [0, 1]");
  Rng rng = make_rng(seed, 60);
  auto keep = sample_without_replacement(set.num_labels, round_count(fraction * static_cast<double>(set.num_labels)), rng);
  std::sort(keep.begin(), keep.end());
  return select_relations(set, keep);
}

/// Keeps round(fraction * n_r) random statements of every relation r.
inline StatementSet reduce_instances(const StatementSet& set, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0 && fraction <= 1)) throw InvalidArgument("reduction fraction must lie in [0, 1]");
  std::vector<std::size_t> keep;
  const auto groups = set.by_relation();
  for (std::size_t r = 0; r < groups.size(); ++r) {
    Rng rng = make_rng(seed, 70 + r);
    for (auto k : sample_without_replacement(groups[r].size(),
                                             round_count(fraction * static_cast<double>(groups[r].size())), rng)) {
      keep.push_back(groups[r][k]);
    }
  }
  std::sort(keep.begin(), keep.end());
  return subset(set, keep);
}

struct ReductionPoint {
  double fraction = 0;
  std::size_t train_relations = 0;
  std::size_t train_statements = 0;
  double accuracy = 0;
};

/// Few-shot accuracy on `test` after episodic fine-tuning on shrinking
/// portions of `train`. Fraction 0 is the zero-shot point. When a reduced set
/// has fewer relations than cfg.n_way, training episodes use all of them;
/// with fewer than 2 relations no fine-tuning happens.
inline std::vector<ReductionPoint> data_reduction_sweep(const Checkpoint& ckpt, const StatementSet& train,
                                                        const StatementSet& test, std::span<const double> fractions,
                                                        ReductionMode mode, const FewshotConfig& cfg,
                                                        std::size_t eval_episodes, std::uint64_t eval_seed) {
  const StatementSet test_aligned = align_tokens(test, ckpt.token_vocab);
  std::vector<ReductionPoint> out;
  for (double f : fractions) {
    const StatementSet reduced = mode == ReductionMode::relations ? reduce_relations(train, f, cfg.seed)
                                                                  : reduce_instances(train, f, cfg.seed);
    Checkpoint tuned = ckpt;
    FewshotConfig c = cfg;
    std::size_t usable = 0;
    for (const auto& g : reduced.by_relation()) usable += g.size() >= c.k_shot + c.n_queries;
    c.n_way = std::min(c.n_way, usable);
    if (c.n_way >= 2 && f > 0) tuned = fewshot_train(ckpt, reduced, c);
    const auto rep = eval_fewshot(tuned.encoder, test_aligned, cfg.n_way, cfg.k_shot, eval_episodes, eval_seed);
    out.push_back({f, reduced.num_labels, reduced.size(), rep.mean_accuracy});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fuzzy relation evaluation

struct FuzzyConfig {
  std::size_t k_shot = 1;
  std::size_t resamples = 100;

  void validate() const {
    if (k_shot < 1 || resamples < 1) throw InvalidArgument("fuzzy evaluation needs k_shot >= 1 and resamples >= 1");
  }
};

/// Minimum pairwise similarity among the given true-positive embeddings.
inline double fuzzy_threshold(const Eigen::MatrixXd& tp_embeddings, SimilarityForm form = SimilarityForm::sigmoid) {
  if (tp_embeddings.rows() < 2) throw InvalidArgument("fuzzy threshold needs at least 2 true positives");
  const Eigen::MatrixXd sim = pairwise_similarity(tp_embeddings, form);
  double t = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < sim.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < sim.rows(); ++j) t = std::min(t, sim(i, j));
  }
  return t;
}

/// A fuzzy decision: positive iff mean similarity strictly exceeds the threshold.
inline bool fuzzy_accept(double mean_similarity, double threshold) { return mean_similarity > threshold; }

struct FuzzyRelationRow {
  std::string relation;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  double majority_accuracy = 0;
  double mean_accuracy = 0;
};

struct FuzzyReport {
  double majority_accuracy = 0;  ///< per-instance majority vote over resamples
  double mean_accuracy = 0;      ///< accuracy averaged over resamples
  double ds_baseline = 0;        ///< accept-everything accuracy = TP fraction
  std::size_t instances = 0;
  std::vector<FuzzyRelationRow> per_relation;
};

/// For every statement: threshold T = min pairwise similarity among the
/// relation's true positives other than the statement itself; each resample
/// draws k of those true positives and accepts iff their mean similarity to
/// the statement exceeds T.
inline FuzzyReport eval_fuzzy_embeddings(const Eigen::MatrixXd& embeddings, const StatementSet& set,
                                         const FuzzyConfig& cfg, std::uint64_t seed,
                                         SimilarityForm form = SimilarityForm::sigmoid) {
  cfg.validate();
  if (set.empty()) throw InvalidArgument("fuzzy evaluation data is empty");
  FuzzyReport rep;
  std::size_t tp_total = 0, majority_correct = 0;
  double mean_correct = 0.0;
  const auto groups = set.by_relation();
  for (std::size_t r = 0; r < groups.size(); ++r) {
    const auto& g = groups[r];
    if (g.empty()) continue;
    FuzzyRelationRow row;
    row.relation = set.relation_vocab[r];
    std::vector<std::size_t> tp_local;  // positions within g
    for (std::size_t a = 0; a < g.size(); ++a) {
      const auto& s = set.statements[g[a]];
      if (!s.expresses) throw InvalidArgument("fuzzy evaluation needs an 'expresses' flag on every statement");
      if (*s.expresses) tp_local.push_back(a);
    }
    row.true_positives = tp_local.size();
    row.false_positives = g.size() - tp_local.size();
    Eigen::MatrixXd rel_emb(static_cast<Eigen::Index>(g.size()), embeddings.cols());
    for (std::size_t a = 0; a < g.size(); ++a) rel_emb.row(static_cast<Eigen::Index>(a)) = embeddings.row(static_cast<Eigen::Index>(g[a]));
    const Eigen::MatrixXd sim = pairwise_similarity(rel_emb, form);

    std::size_t rel_majority = 0;
    double rel_mean = 0.0;
    for (std::size_t a = 0; a < g.size(); ++a) {
      std::vector<std::size_t> pool;
      for (auto t : tp_local) {
        if (t != a) pool.push_back(t);
      }
      if (pool.size() < std::max<std::size_t>(cfg.k_shot, 2)) {
        throw InvalidArgument("relation '" + row.relation + "' has " + std::to_string(pool.size()) +
                              " true positives besides the instance under test; need " +
                              std::to_string(std::max<std::size_t>(cfg.k_shot, 2)));
      }
      double threshold = std::numeric_limits<double>::infinity();
      for (std::size_t x = 0; x < pool.size(); ++x) {
        for (std::size_t y = x + 1; y < pool.size(); ++y) {
          threshold = std::min(threshold, sim(static_cast<Eigen::Index>(pool[x]), static_cast<Eigen::Index>(pool[y])));
        }
      }
      const bool truth = *set.statements[g[a]].expresses;
      Rng rng = make_rng(seed, 300000 + g[a]);
      std::size_t accepted = 0;
      for (std::size_t k = 0; k < cfg.resamples; ++k) {
        double mean = 0.0;
        for (auto p : sample_without_replacement(pool.size(), cfg.k_shot, rng)) {
          mean += sim(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(pool[p]));
        }
        mean /= static_cast<double>(cfg.k_shot);
        accepted += fuzzy_accept(mean, threshold);
      }
      const bool majority = 2 * accepted > cfg.resamples;
      rel_majority += majority == truth;
      rel_mean += static_cast<double>(truth ? accepted : cfg.resamples - accepted) / static_cast<double>(cfg.resamples);
    }
    row.majority_accuracy = static_cast<double>(rel_majority) / static_cast<double>(g.size());
    row.mean_accuracy = rel_mean / static_cast<double>(g.size());
    majority_correct += rel_majority;
    mean_correct += rel_mean;
    tp_total += row.true_positives;
    rep.instances += g.size();
    rep.per_relation.push_back(row);
  }
  const auto n = static_cast<double>(rep.instances);
  rep.majority_accuracy = static_cast<double>(majority_correct) / n;
  rep.mean_accuracy = mean_correct / n;
  rep.ds_baseline = static_cast<double>(tp_total) / n;
  return rep;
}

template <StatementEncoder E>
FuzzyReport eval_fuzzy(const E& encoder, const StatementSet& set, const FuzzyConfig& cfg, std::uint64_t seed,
                       SimilarityForm form = SimilarityForm::sigmoid) {
  return eval_fuzzy_embeddings(embed_all(encoder, set), set, cfg, seed, form);
}

}  // namespace protorel
