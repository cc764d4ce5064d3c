#include <gtest/gtest.h>

#include <set>

#include "protorel/data.hpp"
#include "support.hpp"

using namespace protorel;

namespace {

StatementSet parse(const std::string& text) {
  std::istringstream in(text);
  return load_statements_from_stream(in);
}

std::size_t count_false(const StatementSet& s) {
  return static_cast<std::size_t>(std::count_if(s.statements.begin(), s.statements.end(),
                                                [](const Statement& x) { return !x.expresses.value_or(true); }));
}

}  // namespace

TEST(LoadStatements, ThreeLinesTwoRelations) {
  const auto set = parse(
      R"({"tokens":["a","b","c"],"head":[0,1],"tail":[2,3],"relation":"born_in"})"
      "\n"
      R"({"tokens":["c","d"],"head":[1,2],"tail":[0,1],"relation":"capital_of","expresses":false})"
      "\n"
      R"({"tokens":["e","a","f"],"head":[0,1],"tail":[1,3],"relation":"born_in","true_relation":"born_in"})"
      "\n");
  ASSERT_EQ(set.size(), 3u);
  EXPECT_EQ(set.relation_vocab, (std::vector<std::string>{"born_in", "capital_of"}));
  EXPECT_EQ(set.num_labels, 2u);
  EXPECT_EQ(set.statements[1].relation, 1u);
  EXPECT_EQ(set.statements[1].expresses, std::optional<bool>(false));
  EXPECT_EQ(set.statements[0].tokens, (std::vector<TokenId>{0, 1, 2}));
  EXPECT_EQ(set.statements[2].tokens[1], 0u);  // "a" interned once
  EXPECT_EQ(set.token_vocab.size(), 6u);
}

TEST(LoadStatements, EmptyInput) {
  const auto set = parse("");
  EXPECT_EQ(set.size(), 0u);
  EXPECT_EQ(set.relation_vocab.size(), 0u);
}

TEST(LoadStatements, SpanPastEndNamesLine) {
  const std::string text =
      R"({"tokens":["a","b"],"head":[0,1],"tail":[1,2],"relation":"r"})"
      "\n"
      R"({"tokens":["a","b"],"head":[0,1],"tail":[1,3],"relation":"r"})"
      "\n";
  try {
    parse(text);
    FAIL() << "expected a span error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("span"), std::string::npos) << e.what();
  }
}

TEST(LoadStatements, MalformedJsonNamesLine) {
  try {
    parse("\n{\"tokens\": [\"a\"\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(LoadStatements, OverlappingSpansRejected) {
  EXPECT_THROW(parse(R"({"tokens":["a","b","c"],"head":[0,2],"tail":[1,3],"relation":"r"})"), ParseError);
}

TEST(LoadStatements, WriteThenLoadRoundTrips) {
  GeneratorSpec g;
  g.num_relations = 3;
  g.per_relation = 20;
  g.noise_rate = 0.3;
  const auto set = generate_synthetic(g);
  std::stringstream buf;
  write_statements(set, buf);
  const auto back = load_statements_from_stream(buf);
  ASSERT_EQ(back.size(), set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& a = set.statements[i];
    const auto& b = back.statements[i];
    ASSERT_EQ(a.tokens.size(), b.tokens.size());
    for (std::size_t t = 0; t < a.tokens.size(); ++t) {
      EXPECT_EQ(set.token_vocab[a.tokens[t]], back.token_vocab[b.tokens[t]]);
    }
    EXPECT_EQ(a.head, b.head);
    EXPECT_EQ(a.tail, b.tail);
    EXPECT_EQ(set.relation_vocab[a.relation], back.relation_vocab[b.relation]);
    EXPECT_EQ(a.expresses, b.expresses);
    EXPECT_EQ(set.relation_vocab[*a.true_relation], back.relation_vocab[*b.true_relation]);
  }
}

TEST(GenerateSynthetic, CleanSpecAllExpress) {
  GeneratorSpec g;
  g.num_relations = 4;
  g.per_relation = 100;
  const auto set = generate_synthetic(g);
  EXPECT_EQ(set.size(), 400u);
  EXPECT_EQ(count_false(set), 0u);
  for (const auto& s : set.statements) {
    EXPECT_NO_THROW(validate_statement(s));
    EXPECT_EQ(*s.true_relation, s.relation);
  }
}

TEST(GenerateSynthetic, NoiseRateConcentrates) {
  GeneratorSpec g;
  g.num_relations = 4;
  g.per_relation = 1000;
  g.noise_rate = 0.3;
  const auto set = generate_synthetic(g);
  const double frac = static_cast<double>(count_false(set)) / static_cast<double>(set.size());
  EXPECT_GE(frac, 0.27);
  EXPECT_LE(frac, 0.33);
}

TEST(GenerateSynthetic, FuzzyScaleSurrogate) {
  // Table 3 of the source reports an average false-positive rate of 54.1%.
  GeneratorSpec g;
  g.num_relations = 20;
  g.per_relation = 50;
  g.noise_rate = 0.541;
  const auto set = generate_synthetic(g);
  EXPECT_EQ(set.size(), 1000u);
  const double frac = static_cast<double>(count_false(set)) / static_cast<double>(set.size());
  EXPECT_NEAR(frac, 0.541, 0.04);
}

TEST(GenerateSynthetic, FullNoiseNeverExpresses) {
  GeneratorSpec g;
  g.noise_rate = 1.0;
  const auto set = generate_synthetic(g);
  EXPECT_EQ(count_false(set), set.size());
}

TEST(GenerateSynthetic, FalsePositivesCarryOtherSource) {
  GeneratorSpec g;
  g.num_relations = 5;
  g.per_relation = 200;
  g.noise_rate = 0.5;
  const auto set = generate_synthetic(g);
  const auto none = set.find_relation(kNoneRelation);
  ASSERT_TRUE(none.has_value());
  std::size_t background = 0, cross = 0;
  for (const auto& s : set.statements) {
    EXPECT_NO_THROW(validate_statement(s));
    if (*s.expresses) continue;
    EXPECT_TRUE(*s.true_relation != s.relation || *s.true_relation == *none);
    (*s.true_relation == *none ? background : cross) += 1;
  }
  EXPECT_GT(background, 0u);
  EXPECT_GT(cross, 0u);
}

TEST(GenerateSynthetic, DeterministicGivenSeed) {
  GeneratorSpec g;
  g.noise_rate = 0.2;
  g.seed = 11;
  const auto a = generate_synthetic(g);
  const auto b = generate_synthetic(g);
  EXPECT_EQ(a.statements, b.statements);
  g.seed = 12;
  EXPECT_NE(generate_synthetic(g).statements, a.statements);
}

TEST(GenerateSynthetic, InvalidSpecRejected) {
  GeneratorSpec g;
  g.noise_rate = 1.5;
  EXPECT_THROW(generate_synthetic(g), InvalidArgument);
  g = {};
  g.per_relation = 0;
  EXPECT_THROW(generate_synthetic(g), InvalidArgument);
  g = {};
  g.vocab_size = 10;
  EXPECT_THROW(generate_synthetic(g), InvalidArgument);
}

TEST(InjectLabelNoise, ZeroRateIsIdentity) {
  const auto set = generate_synthetic({});
  EXPECT_EQ(inject_label_noise(set, 0.0, 3).statements, set.statements);
}

TEST(InjectLabelNoise, FullRateTwoRelationsFlipsEverything) {
  GeneratorSpec g;
  g.num_relations = 2;
  g.per_relation = 30;
  const auto set = generate_synthetic(g);
  const auto noisy = inject_label_noise(set, 1.0, 3);
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_EQ(noisy.statements[i].relation, 1 - set.statements[i].relation);
    EXPECT_EQ(*noisy.statements[i].true_relation, set.statements[i].relation);
  }
}

TEST(InjectLabelNoise, ExactCount) {
  GeneratorSpec g;
  g.num_relations = 4;
  g.per_relation = 25;
  const auto set = generate_synthetic(g);
  const auto noisy = inject_label_noise(set, 0.2, 9);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < set.size(); ++i) changed += noisy.statements[i].relation != set.statements[i].relation;
  EXPECT_EQ(changed, 20u);
  EXPECT_EQ(inject_label_noise(set, 0.2, 9).statements, noisy.statements);
}

TEST(InjectLabelNoise, SingleRelationRejected) {
  GeneratorSpec g;
  g.num_relations = 1;
  EXPECT_THROW(inject_label_noise(generate_synthetic(g), 0.5, 1), InvalidArgument);
  EXPECT_NO_THROW(inject_label_noise(generate_synthetic(g), 0.0, 1));
}

TEST(Iris, ClassCountsAndMeans) {
  const auto iris = load_iris();
  ASSERT_EQ(iris.rows.size(), 150u);
  for (auto s : {IrisSpecies::setosa, IrisSpecies::versicolor, IrisSpecies::virginica}) EXPECT_EQ(iris.count(s), 50u);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& r : iris.rows) {
    if (r.species == IrisSpecies::setosa) mean += Eigen::Vector2d(r.features[2], r.features[3]) / 50.0;
  }
  EXPECT_NEAR(mean(0), 1.462, 1e-9);
  EXPECT_NEAR(mean(1), 0.246, 1e-9);
}

TEST(Iris, BinaryView) {
  const auto view = load_iris().binary_view();
  EXPECT_EQ(view.points.size(), 100u);
  EXPECT_EQ(std::count(view.labels.begin(), view.labels.end(), 1), 50);
  EXPECT_THROW(load_iris().binary_view(IrisSpecies::setosa, IrisSpecies::setosa), InvalidArgument);
}

TEST(Split, AllToTrain) {
  const auto set = generate_synthetic({});
  const auto parts = split(set, {1.0, 0.0, 0.0}, 1);
  EXPECT_EQ(parts.train.size(), set.size());
  EXPECT_TRUE(parts.val.empty());
  EXPECT_TRUE(parts.test.empty());
}

TEST(Split, EightyTenTen) {
  GeneratorSpec g;
  g.num_relations = 1;
  g.per_relation = 100;
  const auto parts = split(generate_synthetic(g), {0.8, 0.1, 0.1}, 4);
  EXPECT_EQ(parts.train.size(), 80u);
  EXPECT_EQ(parts.val.size(), 10u);
  EXPECT_EQ(parts.test.size(), 10u);
}

TEST(Split, DisjointStratifiedDeterministic) {
  GeneratorSpec g;
  g.num_relations = 3;
  g.per_relation = 40;
  const auto set = generate_synthetic(g);
  const auto a = split(set, {0.5, 0.25, 0.25}, 2);
  const auto b = split(set, {0.5, 0.25, 0.25}, 2);
  EXPECT_EQ(a.train.statements, b.train.statements);
  EXPECT_EQ(a.test.statements, b.test.statements);
  for (const auto* part : {&a.train, &a.val, &a.test}) {
    for (const auto& grp : part->by_relation()) EXPECT_EQ(grp.size() * 120, part->size() * 40);
  }
  EXPECT_EQ(a.train.size() + a.val.size() + a.test.size(), set.size());
}

TEST(Split, TooFewStatementsNamesRelation) {
  GeneratorSpec g;
  g.num_relations = 2;
  g.per_relation = 2;
  try {
    split(generate_synthetic(g), {0.5, 0.25, 0.25}, 1);
    FAIL() << "expected an error";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("rel_0"), std::string::npos) << e.what();
  }
  EXPECT_THROW(split(generate_synthetic({}), {0.5, 0.4, 0.0}, 1), InvalidArgument);
}

TEST(SelectRelations, RelabelsDensely) {
  GeneratorSpec g;
  g.num_relations = 5;
  g.per_relation = 10;
  const auto set = select_relations(generate_synthetic(g), {3, 1});
  EXPECT_EQ(set.num_labels, 2u);
  EXPECT_EQ(set.relation_vocab[0], "rel_3");
  EXPECT_EQ(set.relation_vocab[1], "rel_1");
  EXPECT_EQ(set.size(), 20u);
}
