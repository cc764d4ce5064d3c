#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "protorel/boundary.hpp"
#include "protorel/evaluation.hpp"
#include "protorel/gradcheck.hpp"
#include "protorel/pca.hpp"
#include "protorel/svg.hpp"

namespace protorel::cli {

/// A bad key or value in a run configuration file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::shared_ptr<spdlog::logger> logger() {
  auto lg = spdlog::get("protorel");
  if (!lg) {
    lg = spdlog::stderr_logger_mt("protorel");
    lg->set_pattern("[%l] %v");
  }
  const char* env = std::getenv("PROTO_LOG");
  const std::string level = env ? env : "info";
  if (level == "quiet") {
    lg->set_level(spdlog::level::err);
  } else if (level == "debug") {
    lg->set_level(spdlog::level::debug);
  } else {
    lg->set_level(spdlog::level::info);
  }
  return lg;
}

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// Flat `key = value` lines; `#` starts a comment.
inline std::vector<ConfigEntry> parse_config(std::istream& in, const std::string& origin) {
  std::vector<ConfigEntry> out;
  std::string line;
  std::size_t n = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
  };
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(n) + ": expected key=value, got '" + line + "'");
    }
    ConfigEntry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), n};
    if (e.key.empty()) throw ConfigError(origin + ":" + std::to_string(n) + ": empty key");
    out.push_back(std::move(e));
  }
  return out;
}

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

inline std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw InvalidArgument(what + ": not a number: '" + cell + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  TrainConfig cfg;
  std::string mode = "combined";
  std::string similarity = "sigmoid";
  std::string s2s_form = "literal";

  void add(CLI::App* app) {
    app->add_option("--batch-size", cfg.batch_size, "statements per step");
    app->add_option("--epochs", cfg.epochs);
    app->add_option("--lr", cfg.learning_rate, "peak learning rate");
    app->add_option("--momentum", cfg.momentum);
    app->add_option("--warmup", cfg.warmup_steps, "linear warmup steps");
    app->add_option("--lambda1", cfg.weights.s2s, "weight of the statement-statement loss");
    app->add_option("--lambda2", cfg.weights.prototype, "weight of the prototype-statement losses");
    app->add_option("--lambda3", cfg.weights.cls, "weight of the prototype classification loss");
    app->add_option("--mode", mode, "combined|s2s|ce|ind|z_cls|s2s_log_z_cls");
    app->add_option("--token-dim", cfg.token_dim);
    app->add_option("--output-dim", cfg.output_dim);
    app->add_option("--context-mix", cfg.context_mix);
    app->add_option("--similarity", similarity, "sigmoid|printed");
    app->add_option("--s2s-form", s2s_form, "literal|log");
    app->add_option("--seed", cfg.seed);
  }

  TrainConfig resolve() const {
    TrainConfig c = cfg;
    c.mode = parse_loss_mode(mode);
    if (similarity != "sigmoid" && similarity != "printed") throw InvalidArgument("similarity: unknown value '" + similarity + "'");
    if (s2s_form != "literal" && s2s_form != "log") throw InvalidArgument("s2s-form: unknown value '" + s2s_form + "'");
    c.loss.similarity = similarity == "printed" ? SimilarityForm::printed : SimilarityForm::sigmoid;
    c.loss.contrastive = s2s_form == "log" ? ContrastiveForm::log : ContrastiveForm::literal;
    c.validate();
    return c;
  }
};

inline int cmd_gen_data(const GeneratorSpec& spec, double label_noise, const std::string& split_spec,
                        std::size_t holdout, const std::string& out) {
  auto log = logger();
  StatementSet set = generate_synthetic(spec);
  if (label_noise > 0) set = inject_label_noise(set, label_noise, spec.seed);
  save_statements(set, out);
  log->info("wrote {} statements over {} relations to {}", set.size(), set.num_labels, out);

  const auto stem = (std::filesystem::path(out).parent_path() / std::filesystem::path(out).stem()).string();
  StatementSet seen_set = set;
  if (holdout > 0) {
    if (holdout >= set.num_labels) throw InvalidArgument("holdout must be smaller than the number of relations");
    std::vector<RelationId> seen, unseen;
    for (RelationId r = 0; r < set.num_labels; ++r) (r < set.num_labels - holdout ? seen : unseen).push_back(r);
    seen_set = select_relations(set, seen);
    save_statements(seen_set, stem + ".seen.jsonl");
    save_statements(select_relations(set, unseen), stem + ".unseen.jsonl");
    log->info("wrote {}.seen.jsonl and {}.unseen.jsonl", stem, stem);
  }
  if (!split_spec.empty()) {
    const auto f = parse_double_list(split_spec, "split");
    if (f.size() != 3) throw InvalidArgument("split: expected three fractions train,val,test");
    const SplitResult parts = split(seen_set, {f[0], f[1], f[2]}, spec.seed);
    for (auto [name, part] : {std::pair{"train", &parts.train}, std::pair{"val", &parts.val}, std::pair{"test", &parts.test}}) {
      save_statements(*part, stem + "." + name + ".jsonl");
    }
    log->info("wrote {}.{{train,val,test}}.jsonl", stem);
  }
  return 0;
}

inline int cmd_pretrain(const TrainConfig& cfg, const std::string& data, const std::string& out,
                        const std::string& loss_log, const std::string& eval) {
  auto log = logger();
  const StatementSet set = load_statements(data);
  log->info("pretraining on {} statements, {} relations, mode {}", set.size(), set.num_labels, to_string(cfg.mode));
  const PretrainResult r = pretrain(cfg, set);
  save_checkpoint(r.checkpoint, out);
  if (!loss_log.empty()) {
    auto f = open_out(loss_log);
    write_loss_log(r.log, f);
  }
  if (!r.log.empty()) log->info("final combined loss {}", r.log.back().combined);
  if (!eval.empty()) {
    const StatementSet test = align_tokens(load_statements(eval), r.checkpoint.token_vocab);
    const StatementSet aligned = align_relations(test, r.checkpoint.relation_vocab, r.checkpoint.num_labels);
    const double acc = nearest_prototype_accuracy(r.checkpoint.encoder, r.checkpoint.prototypes, aligned);
    std::cout << "nearest_prototype_accuracy=" << csv_num(acc) << "\n";
  }
  return 0;
}

inline Checkpoint encoder_source(const std::string& checkpoint, bool untrained, const TrainOptions& fresh,
                                 const StatementSet& data) {
  if (untrained == !checkpoint.empty()) throw InvalidArgument("give exactly one of --checkpoint or --untrained");
  if (untrained) return init_checkpoint(fresh.resolve(), data);
  return load_checkpoint(checkpoint);
}

// ---------------------------------------------------------------------------

inline void write_fewshot_csv(const FewshotReport& rep, const std::string& path) {
  auto out = open_out(path);
  out << "episode,accuracy\n";
  for (std::size_t e = 0; e < rep.episode_accuracy.size(); ++e) out << e << "," << csv_num(rep.episode_accuracy[e]) << "\n";
}

inline void write_fuzzy_csv(const FuzzyReport& rep, const std::string& path) {
  auto out = open_out(path);
  out << "relation,true_positives,false_positives,majority_accuracy,mean_accuracy\n";
  for (const auto& r : rep.per_relation) {
    out << r.relation << "," << r.true_positives << "," << r.false_positives << "," << csv_num(r.majority_accuracy)
        << "," << csv_num(r.mean_accuracy) << "\n";
  }
}

inline void write_supervised_csv(const SupervisedReport& rep, const std::string& path) {
  auto out = open_out(path);
  out << "relation,tp,fp,fn,precision,recall,f1\n";
  auto row = [&](const ClassMetrics& m) {
    out << m.relation << "," << m.tp << "," << m.fp << "," << m.fn << "," << csv_num(m.precision) << ","
        << csv_num(m.recall) << "," << csv_num(m.f1) << "\n";
  };
  for (const auto& m : rep.per_relation) row(m);
  row(rep.micro);
  row(rep.macro);
}

/// Resolves `--config` for subcommand `sub` by splicing file values in
/// front of the explicit arguments, so flags given on the command line win.
inline std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App& app) {
  if (args.size() < 2) return args;
  CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args[1]);
  } catch (const CLI::OptionNotFound&) {
    return args;
  }
  std::string path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::vector<std::string> out{args[0], args[1]};
  for (const auto& e : parse_config(in, path)) {
    if (e.key == "config" || sub->get_option_no_throw("--" + e.key) == nullptr) {
      throw ConfigError(path + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "' for " + args[1]);
    }
    out.push_back("--" + e.key + "=" + e.value);
  }
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

/// Entry point: routes to a subcommand. Returns 0 on success, 2 for usage
/// and configuration errors, 1 for runtime failures.
inline int dispatch(int argc, const char* const* argv) {
  CLI::App app{"Prototype-based relation representation toolkit", "protorel"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::string config_path;
  auto add_config = [&](CLI::App* s) { s->add_option("--config", config_path, "key=value configuration file"); };

  // gen-data
  GeneratorSpec gen;
  double gen_label_noise = 0;
  std::string gen_out, gen_split;
  std::size_t gen_holdout = 0;
  auto* s_gen = app.add_subcommand("gen-data", "generate a synthetic statement set (JSONL)");
  s_gen->add_option("--relations", gen.num_relations);
  s_gen->add_option("--per-relation", gen.per_relation);
  s_gen->add_option("--noise", gen.noise_rate, "false-positive rate of the generator");
  s_gen->add_option("--vocab-size", gen.vocab_size);
  s_gen->add_option("--templates", gen.templates_per_relation);
  s_gen->add_option("--pattern-length", gen.pattern_length, "words owned by one template");
  s_gen->add_option("--shared-length", gen.shared_length, "words shared by all templates of a relation");
  s_gen->add_option("--filler-length", gen.filler_length);
  s_gen->add_option("--background-share", gen.background_share);
  s_gen->add_option("--label-noise", gen_label_noise, "fraction of labels reassigned after generation");
  s_gen->add_option("--split", gen_split, "train,val,test fractions of the seen relations; writes <stem>.{train,val,test}.jsonl");
  s_gen->add_option("--holdout", gen_holdout, "last N relations go to <stem>.unseen.jsonl");
  s_gen->add_option("--seed", gen.seed);
  s_gen->add_option("--out", gen_out)->required();
  add_config(s_gen);

  // pretrain
  TrainOptions pre;
  std::string pre_data, pre_out, pre_log, pre_eval;
  auto* s_pre = app.add_subcommand("pretrain", "pretrain encoder, prototypes and classifier");
  pre.add(s_pre);
  s_pre->add_option("--data", pre_data)->required();
  s_pre->add_option("--out", pre_out, "checkpoint path")->required();
  s_pre->add_option("--loss-log", pre_log, "per-step loss CSV");
  s_pre->add_option("--eval", pre_eval, "held-out JSONL for nearest-prototype accuracy");
  add_config(s_pre);

  // finetune
  FinetuneConfig ft;
  FewshotConfig fs;
  std::string ft_ckpt, ft_train, ft_out, ft_method = "supervised";
  bool ft_freeze = false;
  auto* s_ft = app.add_subcommand("finetune", "supervised or episodic fine-tuning of a checkpoint");
  s_ft->add_option("--checkpoint", ft_ckpt)->required();
  s_ft->add_option("--train", ft_train)->required();
  s_ft->add_option("--out", ft_out)->required();
  s_ft->add_option("--method", ft_method, "supervised|fewshot");
  s_ft->add_option("--epochs", ft.epochs);
  s_ft->add_option("--batch-size", ft.batch_size);
  s_ft->add_option("--lr", ft.learning_rate);
  s_ft->add_option("--momentum", ft.momentum);
  s_ft->add_option("--warmup", ft.warmup_steps);
  s_ft->add_flag("--freeze-encoder", ft_freeze, "train the head only");
  s_ft->add_option("--n-way", fs.n_way);
  s_ft->add_option("--k-shot", fs.k_shot);
  s_ft->add_option("--queries", fs.n_queries);
  s_ft->add_option("--episodes", fs.episodes);
  s_ft->add_option("--seed", ft.seed);
  add_config(s_ft);

  // eval-supervised
  std::string es_ckpt, es_test, es_out;
  auto* s_es = app.add_subcommand("eval-supervised", "precision/recall/F1 of a fine-tuned head");
  s_es->add_option("--checkpoint", es_ckpt)->required();
  s_es->add_option("--test", es_test)->required();
  s_es->add_option("--out", es_out, "per-relation CSV");
  add_config(s_es);

  // eval-fewshot
  TrainOptions ef_fresh;
  std::string ef_ckpt, ef_data, ef_out, ef_emb;
  bool ef_untrained = false;
  std::size_t ef_way = 5, ef_shot = 1, ef_queries = 1, ef_episodes = 1000;
  auto* s_ef = app.add_subcommand("eval-fewshot", "N-way K-shot episodic accuracy");
  s_ef->add_option("--checkpoint", ef_ckpt);
  s_ef->add_flag("--untrained", ef_untrained, "use a freshly initialized encoder (seeded by --seed)");
  s_ef->add_option("--embeddings", ef_emb, "precomputed embeddings CSV (index,v0,...)");
  s_ef->add_option("--data", ef_data)->required();
  s_ef->add_option("--n-way", ef_way);
  s_ef->add_option("--k-shot", ef_shot);
  s_ef->add_option("--queries", ef_queries);
  s_ef->add_option("--episodes", ef_episodes);
  s_ef->add_option("--seed", ef_fresh.cfg.seed);
  s_ef->add_option("--out", ef_out, "per-episode CSV");
  add_config(s_ef);

  // eval-fuzzy
  FuzzyConfig fz;
  std::string fz_ckpt, fz_data, fz_out;
  std::uint64_t fz_seed = 1;
  auto* s_fz = app.add_subcommand("eval-fuzzy", "thresholded-similarity evaluation against expresses flags");
  s_fz->add_option("--checkpoint", fz_ckpt)->required();
  s_fz->add_option("--data", fz_data)->required();
  s_fz->add_option("--k-shot", fz.k_shot);
  s_fz->add_option("--resamples", fz.resamples);
  s_fz->add_option("--seed", fz_seed);
  s_fz->add_option("--out", fz_out, "per-relation CSV");
  add_config(s_fz);

  // toy-boundary
  BoundaryConfig tb;
  std::string tb_noise = "0,0.2,0.5", tb_pos = "versicolor", tb_neg = "virginica",
              tb_features = "petal_length,petal_width";
  auto* s_tb = app.add_subcommand("toy-boundary", "prototype vs logistic boundaries on iris under label flips");
  s_tb->add_option("--noise", tb_noise, "comma-separated flip fractions");
  s_tb->add_option("--seeds", tb.seeds);
  s_tb->add_option("--seed", tb.first_seed, "first seed");
  s_tb->add_option("--positive", tb_pos);
  s_tb->add_option("--negative", tb_neg);
  s_tb->add_option("--features", tb_features, "two iris features, comma-separated");
  s_tb->add_option("--iterations", tb.logistic.iterations);
  s_tb->add_option("--lr", tb.logistic.learning_rate);
  s_tb->add_option("--l2", tb.logistic.l2);
  s_tb->add_option("--out-dir", tb.out_dir)->required();
  add_config(s_tb);

  // project
  std::string pj_ckpt, pj_data, pj_csv, pj_svg;
  auto* s_pj = app.add_subcommand("project", "PCA projection of statement embeddings and prototypes");
  s_pj->add_option("--checkpoint", pj_ckpt)->required();
  s_pj->add_option("--data", pj_data)->required();
  s_pj->add_option("--out-csv", pj_csv);
  s_pj->add_option("--out-svg", pj_svg);
  add_config(s_pj);

  // grad-check
  std::uint64_t gc_seed = 7;
  std::size_t gc_cases = 20;
  double gc_eps = 1e-5, gc_tol = 1e-4;
  std::string gc_out;
  auto* s_gc = app.add_subcommand("grad-check", "finite-difference check of every loss gradient");
  s_gc->add_option("--seed", gc_seed);
  s_gc->add_option("--cases", gc_cases);
  s_gc->add_option("--eps", gc_eps);
  s_gc->add_option("--tolerance", gc_tol);
  s_gc->add_option("--out", gc_out, "per-loss CSV");
  add_config(s_gc);

  if (argc < 2) {
    std::cerr << app.help();
    return 2;
  }
  try {
    const auto args = expand_config(std::vector<std::string>(argv, argv + argc), app);
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    std::cout << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  auto log = logger();
  log->info("command {}; resolved config:\n{}", sub->get_name(), sub->config_to_str(true, false));

  try {
    if (sub == s_gen) return cmd_gen_data(gen, gen_label_noise, gen_split, gen_holdout, gen_out);
    if (sub == s_pre) return cmd_pretrain(pre.resolve(), pre_data, pre_out, pre_log, pre_eval);

    if (sub == s_ft) {
      Checkpoint ck = load_checkpoint(ft_ckpt);
      const StatementSet train = load_statements(ft_train);
      if (ft_method == "supervised") {
        ft.train_encoder = !ft_freeze;
        const SupervisedModel m = finetune_supervised(ck, train, ft);
        ck.encoder = m.encoder;
        ck.head = TrainedHead{m.head, {train.relation_vocab.begin(),
                                       train.relation_vocab.begin() + static_cast<std::ptrdiff_t>(train.num_labels)}};
        log->info("training accuracy {}", head_accuracy(ck.encoder, m.head, align_tokens(train, ck.token_vocab)));
      } else if (ft_method == "fewshot") {
        fs.learning_rate = ft.learning_rate;
        fs.momentum = ft.momentum;
        fs.warmup_steps = ft.warmup_steps;
        fs.seed = ft.seed;
        ck = fewshot_train(ck, train, fs);
      } else {
        throw InvalidArgument("method: unknown value '" + ft_method + "'");
      }
      save_checkpoint(ck, ft_out);
      return 0;
    }

    if (sub == s_es) {
      const Checkpoint ck = load_checkpoint(es_ckpt);
      if (!ck.head) throw InvalidArgument("checkpoint has no fine-tuned head; run finetune first");
      const StatementSet test = align_relations(align_tokens(load_statements(es_test), ck.token_vocab),
                                                ck.head->relation_vocab, ck.head->relation_vocab.size());
      const SupervisedReport rep = eval_supervised(ck.encoder, ck.head->head, test);
      if (!es_out.empty()) write_supervised_csv(rep, es_out);
      std::cout << "accuracy=" << csv_num(rep.accuracy) << " micro_f1=" << csv_num(rep.micro.f1)
                << " macro_f1=" << csv_num(rep.macro.f1) << "\n";
      return 0;
    }

    if (sub == s_ef) {
      const StatementSet raw = load_statements(ef_data);
      FewshotReport rep;
      if (!ef_emb.empty()) {
        if (!ef_ckpt.empty() || ef_untrained) throw InvalidArgument("--embeddings excludes --checkpoint/--untrained");
        rep = eval_fewshot(frozen_encoder_from_file(ef_emb), raw, ef_way, ef_shot, ef_episodes, ef_fresh.cfg.seed,
                           ef_queries);
      } else {
        const Checkpoint ck = encoder_source(ef_ckpt, ef_untrained, ef_fresh, raw);
        rep = eval_fewshot(ck.encoder, align_tokens(raw, ck.token_vocab), ef_way, ef_shot, ef_episodes,
                           ef_fresh.cfg.seed, ef_queries);
      }
      if (!ef_out.empty()) write_fewshot_csv(rep, ef_out);
      std::cout << "mean_accuracy=" << csv_num(rep.mean_accuracy) << " episodes=" << ef_episodes << "\n";
      return 0;
    }

    if (sub == s_fz) {
      const Checkpoint ck = load_checkpoint(fz_ckpt);
      const StatementSet set = align_tokens(load_statements(fz_data), ck.token_vocab);
      const FuzzyReport rep = eval_fuzzy(ck.encoder, set, fz, fz_seed, ck.config.loss.similarity);
      if (!fz_out.empty()) write_fuzzy_csv(rep, fz_out);
      std::cout << "majority_accuracy=" << csv_num(rep.majority_accuracy)
                << " mean_accuracy=" << csv_num(rep.mean_accuracy) << " ds_baseline=" << csv_num(rep.ds_baseline)
                << "\n";
      return 0;
    }

    if (sub == s_tb) {
      tb.noise = parse_double_list(tb_noise, "noise");
      tb.positive = parse_iris_species(tb_pos);
      tb.negative = parse_iris_species(tb_neg);
      std::istringstream fl(tb_features);
      std::string fx, fy;
      if (!std::getline(fl, fx, ',') || !std::getline(fl, fy, ',')) throw InvalidArgument("features: expected two names");
      tb.feature_x = parse_iris_feature(fx);
      tb.feature_y = parse_iris_feature(fy);
      const BoundaryReport rep = run_boundary_experiment(tb);
      for (const auto& c : rep.cells) {
        std::cout << "noise=" << detail::noise_tag(c.noise) << " classifier=" << to_string(c.classifier)
                  << " median_angle_deg=" << csv_num(c.median_angle) << " mean_clean_acc=" << csv_num(c.mean_clean_acc)
                  << "\n";
      }
      return 0;
    }

    if (sub == s_pj) {
      const Checkpoint ck = load_checkpoint(pj_ckpt);
      const StatementSet raw = load_statements(pj_data);
      const StatementSet set = align_tokens(raw, ck.token_vocab);
      const Eigen::MatrixXd emb = normalize_rows(embed_all(ck.encoder, set));
      const PcaResult pca = project_pca(emb);
      const Eigen::MatrixXd protos = pca.transform(normalize_rows(ck.prototypes.vectors));
      // Colour by the checkpoint's relation ids when the names match.
      std::vector<std::size_t> labels;
      std::map<std::string, std::size_t> ids;
      for (std::size_t k = 0; k < ck.num_labels; ++k) ids.emplace(ck.relation_vocab[k], k);
      std::vector<std::string> names(ck.relation_vocab.begin(),
                                     ck.relation_vocab.begin() + static_cast<std::ptrdiff_t>(ck.num_labels));
      for (const auto& s : set.statements) {
        const auto& name = set.relation_vocab[s.relation];
        auto it = ids.find(name);
        if (it == ids.end()) {
          it = ids.emplace(name, names.size()).first;
          names.push_back(name);
        }
        labels.push_back(it->second);
      }
      if (!pj_csv.empty()) {
        auto out = open_out(pj_csv);
        out << "index,relation,x,y\n";
        for (Eigen::Index i = 0; i < pca.projection.rows(); ++i) {
          out << i << "," << set.relation_vocab[set.statements[static_cast<std::size_t>(i)].relation] << ","
              << csv_num(pca.projection(i, 0)) << "," << csv_num(pca.projection(i, 1)) << "\n";
        }
      }
      if (!pj_svg.empty()) {
        std::vector<Eigen::Vector2d> pts, zs;
        for (Eigen::Index i = 0; i < pca.projection.rows(); ++i) pts.emplace_back(pca.projection(i, 0), pca.projection(i, 1));
        for (Eigen::Index k = 0; k < protos.rows(); ++k) zs.emplace_back(protos(k, 0), protos(k, 1));
        ScatterStyle style;
        style.title = "PCA of statement embeddings and prototypes";
        style.class_names = names;
        emit_svg_scatter(pts, labels, zs, pj_svg, style);
      }
      const StatementSet aligned = align_relations(set, ck.relation_vocab, ck.num_labels);
      std::cout << "nearest_prototype_accuracy="
                << csv_num(nearest_prototype_accuracy(ck.encoder, ck.prototypes, aligned)) << "\n";
      return 0;
    }

    if (sub == s_gc) {
      const GradCheckSummary s = run_grad_check_suite(gc_seed, gc_cases, gc_eps);
      if (!gc_out.empty()) {
        auto out = open_out(gc_out);
        out << "loss,cases,max_rel_error\n";
        for (const auto& r : s.rows) out << r.loss << "," << r.cases << "," << csv_num(r.max_rel_error) << "\n";
      }
      for (const auto& r : s.rows) std::cout << r.loss << " max_rel_error=" << csv_num(r.max_rel_error) << "\n";
      const bool ok = s.max_rel_error() < gc_tol;
      std::cout << "max_rel_error=" << csv_num(s.max_rel_error()) << " " << (ok ? "PASS" : "FAIL") << "\n";
      return ok ? 0 : 1;
    }
  } catch (const InvalidArgument& e) {
    log->error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return 1;
  }
  return 2;
}

}  // namespace protorel::cli
