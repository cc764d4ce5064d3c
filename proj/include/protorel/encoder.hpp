#pragma once

#include <concepts>
#include <fstream>
#include <sstream>
#include <span>
#include <unordered_map>

#include "protorel/data.hpp"
#include "protorel/metric.hpp"

namespace protorel {

struct EncoderSpec {
  std::size_t vocab_size = 2;  ///< includes the two marker tokens
  std::size_t token_dim = 32;
  std::size_t output_dim = 16;
  double context_mix = 1.0;
  TokenId marker_head_id = 0;
  TokenId marker_tail_id = 1;

  /// Layout used throughout: ids [0, num_tokens) are ordinary tokens, followed
  /// by the head and tail markers.
  static EncoderSpec for_vocabulary(std::size_t num_tokens, std::size_t token_dim, std::size_t output_dim,
                                    double context_mix = 1.0) {
    return {num_tokens + 2, token_dim, output_dim, context_mix, num_tokens, num_tokens + 1};
  }

  void validate() const {
    if (vocab_size < 2) throw InvalidArgument("encoder vocab_size must be >= 2");
    if (token_dim < 1 || output_dim < 1) throw InvalidArgument("encoder dimensions must be >= 1");
    if (marker_head_id == marker_tail_id) throw InvalidArgument("marker ids must differ");
    if (marker_head_id >= vocab_size || marker_tail_id >= vocab_size) {
      throw InvalidArgument("marker ids must be < vocab_size");
    }
    if (!std::isfinite(context_mix)) throw InvalidArgument("context_mix must be finite");
  }

  friend bool operator==(const EncoderSpec&, const EncoderSpec&) = default;
};

struct MarkedSequence {
  std::vector<TokenId> tokens;
  std::size_t head_marker = 0;
  std::size_t tail_marker = 0;
};

/// Inserts the head marker before the head span and the tail marker before
/// the tail span. The later position is handled first so the earlier index
/// stays valid.
inline MarkedSequence insert_markers(const Statement& s, const EncoderSpec& spec) {
  validate_statement(s);
  MarkedSequence out;
  out.tokens = s.tokens;
  const bool head_first = s.head.begin < s.tail.begin;
  const std::size_t first = head_first ? s.head.begin : s.tail.begin;
  const std::size_t second = head_first ? s.tail.begin : s.head.begin;
  const TokenId first_marker = head_first ? spec.marker_head_id : spec.marker_tail_id;
  const TokenId second_marker = head_first ? spec.marker_tail_id : spec.marker_head_id;
  out.tokens.insert(out.tokens.begin() + static_cast<std::ptrdiff_t>(second), second_marker);
  out.tokens.insert(out.tokens.begin() + static_cast<std::ptrdiff_t>(first), first_marker);
  const std::size_t first_pos = first;
  const std::size_t second_pos = second + 1;
  out.head_marker = head_first ? first_pos : second_pos;
  out.tail_marker = head_first ? second_pos : first_pos;
  return out;
}

struct EncoderGrad {
  Eigen::MatrixXd embedding;
  Eigen::MatrixXd projection;
  Eigen::VectorXd bias;
};

/// Token lookup, bag-of-words context mixing and a linear projection of the
/// two marker positions:
///
///   h_p = E[token_p] + rho * mean_q E[token_q]
///   s   = W [h_head_marker ; h_tail_marker] + b
class EncoderModel {
 public:
  EncoderSpec spec;
  Eigen::MatrixXd embedding;   ///< V x e
  Eigen::MatrixXd projection;  ///< m x 2e
  Eigen::VectorXd bias;        ///< m

  EncoderModel() = default;

  explicit EncoderModel(const EncoderSpec& s)
      : spec(s),
        embedding(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s.vocab_size), static_cast<Eigen::Index>(s.token_dim))),
        projection(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s.output_dim),
                                         static_cast<Eigen::Index>(2 * s.token_dim))),
        bias(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.output_dim))) {
    spec.validate();
  }

  Eigen::Index dim() const { return static_cast<Eigen::Index>(spec.output_dim); }

  Eigen::VectorXd encode(const Statement& s) const { return forward(s).output; }

  /// Uniform interface shared with FrozenEncoder.
  Eigen::VectorXd embed(const StatementSet& set, std::size_t index) const {
    return encode(set.statements.at(index));
  }

  /// Adds d(loss)/d(params) for one statement given d(loss)/d(output).
  void backward(const Statement& s, const Eigen::Ref<const Eigen::VectorXd>& grad_out, EncoderGrad& acc) const {
    const Forward f = forward(s);
    const auto e = static_cast<Eigen::Index>(spec.token_dim);
    acc.projection.noalias() += grad_out * f.pooled.transpose();
    acc.bias += grad_out;
    const Eigen::VectorXd grad_pooled = projection.transpose() * grad_out;
    acc.embedding.row(static_cast<Eigen::Index>(spec.marker_head_id)) += grad_pooled.head(e).transpose();
    acc.embedding.row(static_cast<Eigen::Index>(spec.marker_tail_id)) += grad_pooled.tail(e).transpose();
    const Eigen::RowVectorXd grad_context =
        spec.context_mix * (grad_pooled.head(e) + grad_pooled.tail(e)).transpose() /
        static_cast<double>(f.marked.tokens.size());
    for (auto t : f.marked.tokens) acc.embedding.row(static_cast<Eigen::Index>(t)) += grad_context;
  }

  EncoderGrad zero_grad() const {
    return {Eigen::MatrixXd::Zero(embedding.rows(), embedding.cols()),
            Eigen::MatrixXd::Zero(projection.rows(), projection.cols()), Eigen::VectorXd::Zero(bias.size())};
  }

  std::vector<ParamRef> parameters() {
    return {param_ref("encoder.embedding", embedding), param_ref("encoder.projection", projection),
            param_ref("encoder.bias", bias)};
  }

  static void append_gradients(const EncoderGrad& g, GradientMap& out) {
    out["encoder.embedding"] = flatten(g.embedding);
    out["encoder.projection"] = flatten(g.projection);
    out["encoder.bias"] = g.bias;
  }

 private:
  struct Forward {
    MarkedSequence marked;
    Eigen::VectorXd pooled;
    Eigen::VectorXd output;
  };

  Forward forward(const Statement& s) const {
    Forward f;
    f.marked = insert_markers(s, spec);
    const auto e = static_cast<Eigen::Index>(spec.token_dim);
    Eigen::RowVectorXd context = Eigen::RowVectorXd::Zero(e);
    // Summed in id order so the result depends only on the token multiset.
    std::vector<TokenId> bag = f.marked.tokens;
    std::sort(bag.begin(), bag.end());
    for (auto t : bag) {
      if (t >= spec.vocab_size) {
        throw InvalidArgument("token id " + std::to_string(t) + " out of range for vocabulary of " +
                              std::to_string(spec.vocab_size));
      }
      context += embedding.row(static_cast<Eigen::Index>(t));
    }
    context /= static_cast<double>(f.marked.tokens.size());
    f.pooled.resize(2 * e);
    f.pooled.head(e) = (embedding.row(static_cast<Eigen::Index>(spec.marker_head_id)) + spec.context_mix * context).transpose();
    f.pooled.tail(e) = (embedding.row(static_cast<Eigen::Index>(spec.marker_tail_id)) + spec.context_mix * context).transpose();
    f.output = projection * f.pooled + bias;
    return f;
  }
};

/// Glorot-uniform E and W, zero bias.
inline EncoderModel init_encoder(const EncoderSpec& spec, std::uint64_t seed) {
  EncoderModel model(spec);
  Rng rng = make_rng(seed, 10);
  auto fill = [&rng](Eigen::MatrixXd& m) {
    const double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = uniform_real(rng, -a, a);
    }
  };
  fill(model.embedding);
  fill(model.projection);
  return model;
}

inline std::vector<Eigen::VectorXd> encode_batch(const EncoderModel& model, std::span<const Statement> statements) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(statements.size());
  for (const auto& s : statements) out.push_back(model.encode(s));
  return out;
}

/// Anything that maps statement i of a set to an embedding.
template <class E>
concept StatementEncoder = requires(const E& enc, const StatementSet& set, std::size_t i) {
  { enc.embed(set, i) } -> std::convertible_to<Eigen::VectorXd>;
  { enc.dim() } -> std::convertible_to<Eigen::Index>;
};

/// Embeddings of every statement of `set`, one row each.
template <StatementEncoder E>
Eigen::MatrixXd embed_all(const E& enc, const StatementSet& set) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(set.size()), enc.dim());
  for (std::size_t i = 0; i < set.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = enc.embed(set, i).transpose();
  return out;
}

/// Serves externally computed embeddings by statement index. Has no trainable
/// parameters; its gradient is identically zero.
class FrozenEncoder {
 public:
  FrozenEncoder() = default;
  FrozenEncoder(std::map<std::size_t, Eigen::VectorXd> vectors, Eigen::Index dim)
      : vectors_(std::move(vectors)), dim_(dim) {}

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }

  const Eigen::VectorXd& vector(std::size_t index) const {
    auto it = vectors_.find(index);
    if (it == vectors_.end()) {
      throw InvalidArgument("frozen encoder has no vector for statement index " + std::to_string(index));
    }
    return it->second;
  }

  Eigen::VectorXd embed(const StatementSet&, std::size_t index) const { return vector(index); }

  /// Gradient with respect to the (frozen) stored table: always zero.
  Eigen::VectorXd parameter_gradient(const Eigen::Ref<const Eigen::VectorXd>&) const {
    return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vectors_.size()) * dim_);
  }

 private:
  std::map<std::size_t, Eigen::VectorXd> vectors_;
  Eigen::Index dim_ = 0;
};

/// Reads a CSV with header `index,v0,...,v{m-1}`.
inline FrozenEncoder frozen_encoder_from_stream(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("frozen embedding file is empty");
  std::size_t columns = 1;
  for (char c : line) columns += c == ',';
  if (columns < 2 || line.rfind("index", 0) != 0) {
    throw ParseError("frozen embedding header must be index,v0,...");
  }
  const auto dim = static_cast<Eigen::Index>(columns - 1);
  std::map<std::size_t, Eigen::VectorXd> vectors;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream fields(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(fields, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": not a number: '" + cell + "'");
      }
    }
    if (values.size() != columns) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(columns) + " columns");
    }
    const auto index = static_cast<std::size_t>(values[0]);
    Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(values.data() + 1, dim);
    if (!vectors.emplace(index, v).second) {
      throw ParseError("line " + std::to_string(line_no) + ": duplicate index " + std::to_string(index));
    }
  }
  return FrozenEncoder(std::move(vectors), dim);
}

inline FrozenEncoder frozen_encoder_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open frozen embedding file '" + path + "'");
  return frozen_encoder_from_stream(in);
}

}  // namespace protorel
