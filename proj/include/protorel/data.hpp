#pragma once

#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "protorel/common.hpp"
#include "protorel/iris_data.hpp"

namespace protorel {

/// Half-open token interval [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool overlaps(const Span& o) const { return begin < o.end && o.begin < end; }
  friend bool operator==(const Span&, const Span&) = default;
};

/// A token sequence with marked head and tail entities and a (possibly noisy)
/// relation label. `expresses` and `true_relation` carry ground truth when it
/// is known (synthetic data, annotated fuzzy sets).
struct Statement {
  std::vector<TokenId> tokens;
  Span head;
  Span tail;
  RelationId relation = 0;
  std::optional<bool> expresses;
  std::optional<RelationId> true_relation;

  friend bool operator==(const Statement&, const Statement&) = default;
};

/// Throws InvalidArgument describing the first violated span/label invariant.
inline void validate_statement(const Statement& s) {
  const auto n = s.tokens.size();
  if (s.head.begin >= s.head.end || s.head.end > n) {
    throw InvalidArgument("head span [" + std::to_string(s.head.begin) + ", " +
                          std::to_string(s.head.end) + ") out of range for " + std::to_string(n) +
                          " tokens");
  }
  if (s.tail.begin >= s.tail.end || s.tail.end > n) {
    throw InvalidArgument("tail span [" + std::to_string(s.tail.begin) + ", " +
                          std::to_string(s.tail.end) + ") out of range for " + std::to_string(n) +
                          " tokens");
  }
  if (s.head.overlaps(s.tail)) throw InvalidArgument("head and tail spans overlap");
  if (s.expresses.value_or(false) && s.true_relation && *s.true_relation != s.relation) {
    throw InvalidArgument("statement marked as expressing its label but true_relation differs");
  }
}

/// Statements plus the vocabularies their ids index into.
///
/// Relation ids [0, num_labels) are the label relations. Vocabulary entries past
/// num_labels only ever appear as a `true_relation` (e.g. the reserved "none"
/// source of background sentences).
struct StatementSet {
  std::vector<Statement> statements;
  std::vector<std::string> relation_vocab;
  std::vector<std::string> token_vocab;
  std::size_t num_labels = 0;

  std::size_t size() const { return statements.size(); }
  bool empty() const { return statements.empty(); }

  std::vector<RelationId> labels() const {
    std::vector<RelationId> out;
    out.reserve(statements.size());
    for (const auto& s : statements) out.push_back(s.relation);
    return out;
  }

  /// Indices of statements grouped by label; result has num_labels entries.
  std::vector<std::vector<std::size_t>> by_relation() const {
    std::vector<std::vector<std::size_t>> groups(num_labels);
    for (std::size_t i = 0; i < statements.size(); ++i) groups[statements[i].relation].push_back(i);
    return groups;
  }

  std::optional<RelationId> find_relation(std::string_view name) const {
    for (std::size_t r = 0; r < relation_vocab.size(); ++r) {
      if (relation_vocab[r] == name) return r;
    }
    return std::nullopt;
  }
};

inline void validate_set(const StatementSet& set) {
  if (set.num_labels > set.relation_vocab.size()) {
    throw InvalidArgument("num_labels exceeds relation vocabulary size");
  }
  std::map<std::string, int> seen;
  for (const auto& name : set.relation_vocab) {
    if (seen[name]++) throw InvalidArgument("duplicate relation name '" + name + "'");
  }
  for (std::size_t i = 0; i < set.statements.size(); ++i) {
    const auto& s = set.statements[i];
    try {
      validate_statement(s);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("statement " + std::to_string(i) + ": " + e.what());
    }
    if (s.relation >= set.num_labels) {
      throw InvalidArgument("statement " + std::to_string(i) + ": relation id out of range");
    }
    if (s.true_relation && *s.true_relation >= set.relation_vocab.size()) {
      throw InvalidArgument("statement " + std::to_string(i) + ": true_relation out of range");
    }
  }
}

// ---------------------------------------------------------------------------
// JSONL ingestion

inline StatementSet load_statements_from_stream(std::istream& in) {
  struct Raw {
    std::vector<std::string> tokens;
    Span head, tail;
    std::string relation;
    std::optional<bool> expresses;
    std::optional<std::string> true_relation;
    std::size_t line;
  };
  std::vector<Raw> raws;
  std::string line;
  std::size_t line_no = 0;
  auto read_span = [](const nlohmann::json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_unsigned() || !v[1].is_number_unsigned()) {
      throw ParseError(std::string("'") + key + "' must be [begin, end] with non-negative integers");
    }
    return Span{v[0].get<std::size_t>(), v[1].get<std::size_t>()};
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Raw raw;
    raw.line = line_no;
    try {
      const auto j = nlohmann::json::parse(line);
      raw.tokens = j.at("tokens").get<std::vector<std::string>>();
      raw.head = read_span(j, "head");
      raw.tail = read_span(j, "tail");
      raw.relation = j.at("relation").get<std::string>();
      if (j.contains("expresses")) raw.expresses = j.at("expresses").get<bool>();
      if (j.contains("true_relation")) raw.true_relation = j.at("true_relation").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": malformed record: " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    raws.push_back(std::move(raw));
  }

  StatementSet set;
  std::unordered_map<std::string, RelationId> rel_ids;
  std::unordered_map<std::string, TokenId> tok_ids;
  auto intern_relation = [&](const std::string& name) {
    auto [it, inserted] = rel_ids.emplace(name, set.relation_vocab.size());
    if (inserted) set.relation_vocab.push_back(name);
    return it->second;
  };
  for (const auto& raw : raws) intern_relation(raw.relation);
  set.num_labels = set.relation_vocab.size();
  for (const auto& raw : raws) {
    Statement s;
    s.tokens.reserve(raw.tokens.size());
    for (const auto& t : raw.tokens) {
      auto [it, inserted] = tok_ids.emplace(t, set.token_vocab.size());
      if (inserted) set.token_vocab.push_back(t);
      s.tokens.push_back(it->second);
    }
    s.head = raw.head;
    s.tail = raw.tail;
    s.relation = rel_ids.at(raw.relation);
    s.expresses = raw.expresses;
    if (raw.true_relation) s.true_relation = intern_relation(*raw.true_relation);
    try {
      validate_statement(s);
    } catch (const InvalidArgument& e) {
      throw ParseError("line " + std::to_string(raw.line) + " (statement " +
                       std::to_string(set.statements.size()) + "): " + e.what());
    }
    set.statements.push_back(std::move(s));
  }
  return set;
}

inline StatementSet load_statements(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open statement file '" + path + "'");
  return load_statements_from_stream(in);
}

inline std::string token_name(const StatementSet& set, TokenId id) {
  return id < set.token_vocab.size() ? set.token_vocab[id] : "tok" + std::to_string(id);
}

inline void write_statements(const StatementSet& set, std::ostream& out) {
  for (const auto& s : set.statements) {
    nlohmann::json j;
    std::vector<std::string> toks;
    toks.reserve(s.tokens.size());
    for (auto t : s.tokens) toks.push_back(token_name(set, t));
    j["tokens"] = toks;
    j["head"] = {s.head.begin, s.head.end};
    j["tail"] = {s.tail.begin, s.tail.end};
    j["relation"] = set.relation_vocab.at(s.relation);
    if (s.expresses) j["expresses"] = *s.expresses;
    if (s.true_relation) j["true_relation"] = set.relation_vocab.at(*s.true_relation);
    out << j.dump() << '\n';
  }
}

inline void save_statements(const StatementSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write statement file '" + path + "'");
  write_statements(set, out);
}

inline constexpr std::string_view kUnknownToken = "<unk>";

/// Re-expresses `set`'s tokens in `vocab` ids. Tokens missing from `vocab`
/// map to the id of kUnknownToken, which is appended to the returned
/// vocabulary if absent.
inline StatementSet align_tokens(const StatementSet& set, std::vector<std::string> vocab) {
  std::unordered_map<std::string, TokenId> ids;
  for (std::size_t i = 0; i < vocab.size(); ++i) ids.emplace(vocab[i], i);
  auto unk = ids.find(std::string(kUnknownToken));
  TokenId unk_id;
  if (unk == ids.end()) {
    unk_id = vocab.size();
    vocab.emplace_back(kUnknownToken);
  } else {
    unk_id = unk->second;
  }
  StatementSet out = set;
  out.token_vocab = std::move(vocab);
  for (auto& s : out.statements) {
    for (auto& t : s.tokens) {
      auto it = ids.find(token_name(set, t));
      t = it == ids.end() ? unk_id : it->second;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic distant supervision

/// Configuration of the synthetic relation corpus.
///
/// The token vocabulary is partitioned into entity, filler and pattern words.
/// A template holds its relation's `shared_length` words, `pattern_length`
/// words of its own and `filler_length` filler slots. Pattern words carry the
/// relation signal; entities and fillers are resampled per statement.
struct GeneratorSpec {
  std::size_t num_relations = 4;
  std::size_t per_relation = 100;
  double noise_rate = 0.0;
  std::size_t vocab_size = 400;
  std::size_t templates_per_relation = 3;
  std::uint64_t seed = 1;
  std::size_t pattern_length = 3;  ///< words owned by a single template
  std::size_t shared_length = 4;   ///< words shared by all templates of a relation
  std::size_t filler_length = 24;
  /// Share of false positives realized from a background ("none") template
  /// rather than another relation's template.
  double background_share = 0.5;

  std::size_t entity_pool() const { return vocab_size / 5; }
  std::size_t filler_pool() const { return vocab_size / 5; }
  std::size_t pattern_pool() const { return vocab_size - entity_pool() - filler_pool(); }

  void validate() const {
    if (num_relations < 1 || per_relation < 1 || templates_per_relation < 1) {
      throw InvalidArgument("generator counts must be >= 1");
    }
    if (shared_length + pattern_length < 1) throw InvalidArgument("templates need at least one pattern word");
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) {
      throw InvalidArgument("noise_rate must lie in [0, 1]");
    }
    if (!(background_share >= 0.0 && background_share <= 1.0)) {
      throw InvalidArgument("background_share must lie in [0, 1]");
    }
    if (entity_pool() < 2 || filler_pool() < 1 ||
        pattern_pool() < shared_length + templates_per_relation * pattern_length) {
      throw InvalidArgument("vocab_size " + std::to_string(vocab_size) +
                            " too small for the entity/filler/pattern partition");
    }
  }
};

inline constexpr std::string_view kNoneRelation = "none";

namespace detail {

enum class SlotKind { head, tail, pattern, filler };

struct Slot {
  SlotKind kind;
  TokenId word = 0;
};

using Template = std::vector<Slot>;

/// Hands out pattern words from successive shuffles of the pattern pool, so
/// relations get disjoint words until the pool is used up.
class PatternWords {
 public:
  PatternWords(const GeneratorSpec& spec, Rng& rng) : spec_(spec), rng_(rng) {}

  std::vector<TokenId> take(std::size_t n) {
    std::vector<TokenId> out;
    while (out.size() < n) {
      if (next_ == order_.size()) {
        order_ = permutation(spec_.pattern_pool(), rng_);
        next_ = 0;
      }
      const TokenId w = spec_.entity_pool() + spec_.filler_pool() + order_[next_++];
      if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
    }
    return out;
  }

 private:
  const GeneratorSpec& spec_;
  Rng& rng_;
  std::vector<std::size_t> order_;
  std::size_t next_ = 0;
};

/// Templates of one relation: each holds the relation's shared words plus
/// its own pattern words, fillers and the two entity slots, in random order.
inline std::vector<Template> make_templates(const GeneratorSpec& spec, PatternWords& pool, Rng& rng) {
  const auto words = pool.take(spec.shared_length + spec.templates_per_relation * spec.pattern_length);
  std::vector<Template> out;
  for (std::size_t k = 0; k < spec.templates_per_relation; ++k) {
    Template t;
    for (std::size_t i = 0; i < spec.shared_length; ++i) t.push_back({SlotKind::pattern, words[i]});
    for (std::size_t i = 0; i < spec.pattern_length; ++i) {
      t.push_back({SlotKind::pattern, words[spec.shared_length + k * spec.pattern_length + i]});
    }
    for (std::size_t i = 0; i < spec.filler_length; ++i) t.push_back({SlotKind::filler, 0});
    t.push_back({SlotKind::head, 0});
    t.push_back({SlotKind::tail, 0});
    Template shuffled;
    for (auto i : permutation(t.size(), rng)) shuffled.push_back(t[i]);
    out.push_back(std::move(shuffled));
  }
  return out;
}

inline Statement realize(const Template& t, const GeneratorSpec& spec, Rng& rng) {
  Statement s;
  const auto filler_base = spec.entity_pool();
  for (const auto& slot : t) {
    switch (slot.kind) {
      case SlotKind::pattern:
        s.tokens.push_back(slot.word);
        break;
      case SlotKind::filler:
        s.tokens.push_back(filler_base + uniform_index(rng, spec.filler_pool()));
        break;
      case SlotKind::head:
      case SlotKind::tail: {
        const std::size_t len = 1 + uniform_index(rng, 2);
        Span span{s.tokens.size(), s.tokens.size() + len};
        for (std::size_t k = 0; k < len; ++k) s.tokens.push_back(uniform_index(rng, spec.entity_pool()));
        (slot.kind == SlotKind::head ? s.head : s.tail) = span;
        break;
      }
    }
  }
  return s;
}

}  // namespace detail

/// Generates num_relations * per_relation statements. With probability
/// noise_rate a statement keeps its label but is realized from another
/// relation's template or a background template (expresses = false).
inline StatementSet generate_synthetic(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed, 0);
  const std::size_t K = spec.num_relations;

  std::vector<std::vector<detail::Template>> templates;  // index K = background
  detail::PatternWords pool(spec, rng);
  for (std::size_t r = 0; r <= K; ++r) templates.push_back(detail::make_templates(spec, pool, rng));

  StatementSet set;
  for (std::size_t r = 0; r < K; ++r) set.relation_vocab.push_back("rel_" + std::to_string(r));
  set.relation_vocab.emplace_back(kNoneRelation);
  set.num_labels = K;
  set.token_vocab.reserve(spec.vocab_size);
  for (std::size_t i = 0; i < spec.vocab_size; ++i) {
    const char* prefix = i < spec.entity_pool()                        ? "ent"
                         : i < spec.entity_pool() + spec.filler_pool() ? "fill"
                                                                       : "pat";
    set.token_vocab.push_back(prefix + std::to_string(i));
  }

  const RelationId none_id = K;
  for (std::size_t r = 0; r < K; ++r) {
    for (std::size_t i = 0; i < spec.per_relation; ++i) {
      std::size_t source = r;
      if (uniform_real(rng, 0.0, 1.0) < spec.noise_rate) {
        if (K == 1 || uniform_real(rng, 0.0, 1.0) < spec.background_share) {
          source = none_id;
        } else {
          source = uniform_index(rng, K - 1);
          if (source >= r) ++source;
        }
      }
      const auto& group = templates[source];
      Statement s = detail::realize(group[uniform_index(rng, group.size())], spec, rng);
      s.relation = r;
      s.expresses = source == r;
      s.true_relation = source;
      set.statements.push_back(std::move(s));
    }
  }
  return set;
}

/// Relabels exactly round(rate * n) uniformly chosen statements to a different
/// label chosen uniformly. The original label is kept in true_relation unless
/// ground truth was already recorded there.
inline StatementSet inject_label_noise(const StatementSet& set, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw InvalidArgument("noise rate must lie in [0, 1]");
  const std::size_t count = round_count(rate * static_cast<double>(set.size()));
  StatementSet out = set;
  if (count == 0) return out;
  if (set.num_labels < 2) {
    throw InvalidArgument("label noise needs at least 2 relations to choose an alternative label");
  }
  Rng rng = make_rng(seed, 1);
  for (auto i : sample_without_replacement(set.size(), count, rng)) {
    auto& s = out.statements[i];
    if (!s.true_relation) s.true_relation = s.relation;
    RelationId next = uniform_index(rng, set.num_labels - 1);
    if (next >= s.relation) ++next;
    s.relation = next;
    s.expresses = *s.true_relation == next;
  }
  return out;
}

/// Subset of `set` restricted to the given label relations, relabelled
/// 0..ids.size()-1 in the given order. Ground-truth ids outside the selection
/// are kept by appending their names to the vocabulary.
inline StatementSet select_relations(const StatementSet& set, const std::vector<RelationId>& ids) {
  StatementSet out;
  out.token_vocab = set.token_vocab;
  std::map<RelationId, RelationId> remap;
  for (auto r : ids) {
    if (r >= set.num_labels) throw InvalidArgument("relation id out of range");
    if (!remap.emplace(r, out.relation_vocab.size()).second) {
      throw InvalidArgument("duplicate relation id in selection");
    }
    out.relation_vocab.push_back(set.relation_vocab[r]);
  }
  out.num_labels = ids.size();
  auto map_truth = [&](RelationId r) {
    auto it = remap.find(r);
    if (it != remap.end()) return it->second;
    RelationId id = out.relation_vocab.size();
    remap.emplace(r, id);
    out.relation_vocab.push_back(set.relation_vocab[r]);
    return id;
  };
  for (const auto& s : set.statements) {
    auto it = remap.find(s.relation);
    if (it == remap.end() || it->second >= out.num_labels) continue;
    Statement t = s;
    t.relation = it->second;
    if (t.true_relation) t.true_relation = map_truth(*t.true_relation);
    out.statements.push_back(std::move(t));
  }
  return out;
}

/// Same vocabularies, statements at `indices` (in the given order).
inline StatementSet subset(const StatementSet& set, const std::vector<std::size_t>& indices) {
  StatementSet out;
  out.relation_vocab = set.relation_vocab;
  out.token_vocab = set.token_vocab;
  out.num_labels = set.num_labels;
  out.statements.reserve(indices.size());
  for (auto i : indices) out.statements.push_back(set.statements.at(i));
  return out;
}

struct SplitFractions {
  double train = 1.0;
  double val = 0.0;
  double test = 0.0;
};

struct SplitResult {
  StatementSet train;
  StatementSet val;
  StatementSet test;
};

/// Stratified, seeded partition. Each part with a positive fraction receives
/// at least one statement of every relation.
inline SplitResult split(const StatementSet& set, SplitFractions f, std::uint64_t seed) {
  const std::array<double, 3> frac{f.train, f.val, f.test};
  for (double x : frac) {
    if (!(x >= 0.0)) throw InvalidArgument("split fractions must be non-negative");
  }
  if (std::abs(frac[0] + frac[1] + frac[2] - 1.0) > 1e-9) {
    throw InvalidArgument("split fractions must sum to 1");
  }
  const std::size_t parts =
      static_cast<std::size_t>(std::count_if(frac.begin(), frac.end(), [](double x) { return x > 0; }));
  std::array<std::vector<std::size_t>, 3> chosen;
  const auto groups = set.by_relation();
  for (std::size_t r = 0; r < groups.size(); ++r) {
    const auto& g = groups[r];
    if (g.empty()) continue;
    if (g.size() < parts) {
      throw InvalidArgument("relation '" + set.relation_vocab[r] + "' has " + std::to_string(g.size()) +
                            " statements, fewer than the " + std::to_string(parts) + " split parts");
    }
    std::array<std::size_t, 3> sizes{};
    std::size_t assigned = 0;
    for (std::size_t p = 0; p < 2; ++p) {
      sizes[p] = round_count(frac[p] * static_cast<double>(g.size()));
      sizes[p] = std::min(sizes[p], g.size() - assigned);
      assigned += sizes[p];
    }
    sizes[2] = g.size() - assigned;
    if (frac[2] == 0.0 && sizes[2] > 0) {  // rounding residue goes to the largest positive part
      const std::size_t p = frac[0] >= frac[1] ? 0 : 1;
      sizes[p] += sizes[2];
      sizes[2] = 0;
    }
    for (std::size_t p = 0; p < 3; ++p) {
      while (frac[p] > 0 && sizes[p] == 0) {
        auto donor = static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
        --sizes[donor];
        ++sizes[p];
      }
    }
    Rng rng = make_rng(seed, 1000 + r);
    const auto order = permutation(g.size(), rng);
    std::size_t pos = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      for (std::size_t k = 0; k < sizes[p]; ++k) chosen[p].push_back(g[order[pos++]]);
    }
  }
  for (auto& c : chosen) std::sort(c.begin(), c.end());
  return {subset(set, chosen[0]), subset(set, chosen[1]), subset(set, chosen[2])};
}

// ---------------------------------------------------------------------------
// Iris

enum class IrisSpecies : std::size_t { setosa = 0, versicolor = 1, virginica = 2 };
enum class IrisFeature : std::size_t { sepal_length = 0, sepal_width = 1, petal_length = 2, petal_width = 3 };

inline constexpr std::array<std::string_view, 3> kIrisSpeciesNames{"setosa", "versicolor", "virginica"};
inline constexpr std::array<std::string_view, 4> kIrisFeatureNames{"sepal_length", "sepal_width",
                                                                   "petal_length", "petal_width"};

struct IrisRow {
  std::array<double, 4> features{};
  IrisSpecies species = IrisSpecies::setosa;
};

/// Two-class, two-feature view; label +1 for the first class, -1 for the second.
struct IrisBinaryView {
  std::vector<Eigen::Vector2d> points;
  std::vector<int> labels;
};

struct IrisTable {
  std::vector<IrisRow> rows;

  std::size_t count(IrisSpecies s) const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [s](const IrisRow& r) { return r.species == s; }));
  }

  IrisBinaryView binary_view(IrisSpecies positive = IrisSpecies::versicolor,
                             IrisSpecies negative = IrisSpecies::virginica,
                             IrisFeature fx = IrisFeature::petal_length,
                             IrisFeature fy = IrisFeature::petal_width) const {
    if (positive == negative) throw InvalidArgument("binary view needs two distinct classes");
    IrisBinaryView view;
    for (const auto& r : rows) {
      if (r.species != positive && r.species != negative) continue;
      view.points.emplace_back(r.features[static_cast<std::size_t>(fx)],
                               r.features[static_cast<std::size_t>(fy)]);
      view.labels.push_back(r.species == positive ? 1 : -1);
    }
    return view;
  }
};

inline IrisSpecies parse_iris_species(std::string_view name) {
  for (std::size_t i = 0; i < kIrisSpeciesNames.size(); ++i) {
    if (kIrisSpeciesNames[i] == name) return static_cast<IrisSpecies>(i);
  }
  throw InvalidArgument("unknown iris species '" + std::string(name) + "'");
}

inline IrisFeature parse_iris_feature(std::string_view name) {
  for (std::size_t i = 0; i < kIrisFeatureNames.size(); ++i) {
    if (kIrisFeatureNames[i] == name) return static_cast<IrisFeature>(i);
  }
  throw InvalidArgument("unknown iris feature '" + std::string(name) + "'");
}

inline IrisTable load_iris() {
  IrisTable table;
  std::istringstream in{std::string(detail::kIrisCsv)};
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    IrisRow row;
    std::istringstream fields(line);
    std::string cell;
    for (auto& v : row.features) {
      std::getline(fields, cell, ',');
      v = std::stod(cell);
    }
    std::getline(fields, cell, ',');
    row.species = parse_iris_species(cell);
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace protorel
