#pragma once

// Command-line front end. Exit status: 0 success, 1 usage error, 2 data error.

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "acrotag/acrotag.hpp"
#include "acrotag/io.hpp"

namespace acro::cli {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2 };

struct PredictionFile {
  std::string name;
  std::vector<std::string> ids;
  std::map<std::string, std::vector<std::string>> tags;
};

inline std::vector<std::string> tokens_pos(const AiInstance& inst) {
  return inst.pos ? *inst.pos : pos_strings(inst.tokens);
}

inline crf::LabeledSequence to_example(const AiInstance& inst, Scheme scheme) {
  if (!inst.tags) throw DataError("instance " + inst.id + " has no labels");
  crf::LabeledSequence ex;
  auto pos = tokens_pos(inst);
  ex.features = featurize_sentence(inst.tokens, pos);
  auto tags = scheme == Scheme::Bioless ? to_bioless(*inst.tags) : *inst.tags;
  ex.tags = tags_to_strings(tags);
  return ex;
}

inline std::vector<crf::LabeledSequence> to_examples(const std::vector<AiInstance>& corpus,
                                                     Scheme scheme) {
  std::vector<crf::LabeledSequence> out;
  out.reserve(corpus.size());
  for (const auto& inst : corpus) out.push_back(to_example(inst, scheme));
  return out;
}

inline std::vector<Tag> crf_tag(const crf::Model& m, const AiInstance& inst) {
  auto pos = tokens_pos(inst);
  return crf::predict_tags(m, featurize_sentence(inst.tokens, pos));
}

inline nlohmann::json tag_records(const std::vector<std::pair<std::string, std::vector<Tag>>>& preds) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [id, tags] : preds) arr.push_back({{"id", id}, {"tags", tags_to_strings(tags)}});
  return arr;
}

inline PredictionFile load_prediction_file(const std::string& arg) {
  PredictionFile pf;
  std::string path = arg;
  if (auto eq = arg.find('='); eq != std::string::npos) {
    pf.name = arg.substr(0, eq);
    path = arg.substr(eq + 1);
  } else {
    pf.name = std::filesystem::path(arg).stem().string();
  }
  auto doc = io::read_json(path);
  if (!doc.is_array()) throw DataError(path + ": expected an array of {id, tags} records");
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& r = doc[i];
    try {
      std::string id = r.at("id").is_string() ? r.at("id").get<std::string>()
                                              : std::to_string(r.at("id").get<long long>());
      auto tags = r.at("tags").get<std::vector<std::string>>();
      tags_from_strings(tags);
      if (!pf.tags.emplace(id, std::move(tags)).second) throw DataError("duplicate id " + id);
      pf.ids.push_back(id);
    } catch (const std::exception& e) {
      throw DataError(path + ": record " + std::to_string(i) + ": " + e.what());
    }
  }
  return pf;
}

// Per-sentence base tags in file order; every file must cover the same ids
// with equal lengths.
inline std::vector<std::vector<std::vector<std::string>>> align_predictions(
    const std::vector<PredictionFile>& files, const std::vector<std::string>& ids) {
  std::vector<std::vector<std::vector<std::string>>> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    std::vector<std::vector<std::string>> row;
    for (const auto& f : files) {
      auto it = f.tags.find(id);
      if (it == f.tags.end()) throw DataError("prediction file '" + f.name + "' lacks id " + id);
      if (!row.empty() && it->second.size() != row.front().size()) {
        throw DataError("id " + id + ": prediction file '" + f.name + "' has " +
                        std::to_string(it->second.size()) + " tags, '" + files.front().name +
                        "' has " + std::to_string(row.front().size()));
      }
      row.push_back(it->second);
    }
    out.push_back(std::move(row));
  }
  return out;
}

inline void print_ai_metrics(std::ostream& out, const AiMetrics& m) {
  out << std::fixed << std::setprecision(4);
  out << "class      P       R       F1      tp    pred  gold\n";
  auto row = [&](const char* name, const Prf& s) {
    out << std::left << std::setw(8) << name << std::right << "  " << s.precision << "  "
        << s.recall << "  " << s.f1 << "  " << std::setw(5) << s.true_pos << " " << std::setw(5)
        << s.predicted << " " << std::setw(5) << s.gold << "\n";
  };
  row("short", m.short_form);
  row("long", m.long_form);
  out << "macro     " << m.precision << "  " << m.recall << "  " << m.f1 << "\n";
}

inline nlohmann::json prf_json(const Prf& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
          {"true_pos", s.true_pos},   {"predicted", s.predicted}, {"gold", s.gold}};
}

inline nlohmann::json ai_metrics_json(const AiMetrics& m) {
  return {{"short", prf_json(m.short_form)},
          {"long", prf_json(m.long_form)},
          {"macro", {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}}}};
}

inline nlohmann::json ad_metrics_json(const AdMetrics& m) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [label, s] : m.per_expansion) per[label] = prf_json(s);
  return {{"per_expansion", per},
          {"macro", {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}}}};
}

struct TrainFlags {
  crf::TrainConfig config;
  std::string scheme = "bioless";

  void add(CLI::App* app, bool with_scheme = true) {
    app->add_option("--epochs", config.epochs, "training epochs")->capture_default_str();
    app->add_option("--patience", config.patience, "early-stopping patience (epochs)")->capture_default_str();
    app->add_option("--lr", config.learning_rate, "SGD learning rate")->capture_default_str();
    app->add_option("--l2", config.l2, "L2 regularization strength")->capture_default_str();
    app->add_option("--batch-size", config.batch_size, "mini-batch size")->capture_default_str();
    if (with_scheme) {
      app->add_option("--scheme", scheme, "tag scheme used for training")
          ->check(CLI::IsMember({"bio", "bioless"}))
          ->capture_default_str();
    }
  }
};

inline ad::ScorerKind parse_scorer(const std::string& s) {
  if (s == "external") return ad::ScorerKind::External;
  if (s == "ensemble") return ad::ScorerKind::Ensemble;
  return ad::ScorerKind::Lexical;
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Acronym identification and disambiguation toolkit", "acrotag"};
  app.set_config("--config", "", "optional TOML/INI config file; flags override it");
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "seed for every random choice")->capture_default_str();

  std::function<int()> action;
  TrainFlags train_flags;

  // train-crf
  auto* train_cmd = app.add_subcommand("train-crf", "train a CRF tagger on an AI corpus");
  std::string train_path, dev_path, model_path;
  train_cmd->add_option("--train", train_path, "AI training file")->required();
  train_cmd->add_option("--dev", dev_path, "AI dev file for early stopping");
  train_cmd->add_option("--model", model_path, "output model file")->required();
  train_flags.add(train_cmd);
  train_cmd->callback([&] {
    action = [&] {
      auto scheme = *parse_scheme(train_flags.scheme);
      auto cfg = train_flags.config;
      cfg.seed = seed;
      auto data = to_examples(load_ai_corpus(train_path), scheme);
      std::vector<crf::LabeledSequence> dev;
      if (!dev_path.empty()) dev = to_examples(load_ai_corpus(dev_path), scheme);
      crf::TrainLog log;
      auto model = crf::train(data, cfg, dev, scheme, &log);
      crf::save_model(model, model_path);
      for (const auto& e : log.epochs) {
        err << "epoch " << e.epoch << " nll " << e.train_objective;
        if (e.dev_f1) err << " dev_f1 " << *e.dev_f1;
        err << "\n";
      }
      err << "best epoch " << log.best_epoch << "; " << model.num_features() << " features\n";
      return kOk;
    };
  });

  // tag
  auto* tag_cmd = app.add_subcommand("tag", "tag an AI file with a trained CRF");
  std::string tag_model, tag_input, tag_output;
  tag_cmd->add_option("--model", tag_model, "CRF model file")->required();
  tag_cmd->add_option("--input", tag_input, "AI file")->required();
  tag_cmd->add_option("--output", tag_output, "prediction file")->required();
  tag_cmd->callback([&] {
    action = [&] {
      auto model = crf::load_model(tag_model);
      auto corpus = load_ai_corpus(tag_input);
      std::vector<std::pair<std::string, std::vector<Tag>>> preds;
      for (const auto& inst : corpus) preds.emplace_back(inst.id, crf_tag(model, inst));
      io::write_json(tag_output, tag_records(preds));
      return kOk;
    };
  });

  // transform-tags
  auto* tr_cmd = app.add_subcommand("transform-tags", "convert labels between BIO and BIOless");
  std::string tr_to, tr_input, tr_output;
  tr_cmd->add_option("--to", tr_to, "target scheme")->required()->check(CLI::IsMember({"bio", "bioless"}));
  tr_cmd->add_option("--input", tr_input, "AI file")->required();
  tr_cmd->add_option("--output", tr_output, "output AI file")->required();
  tr_cmd->callback([&] {
    action = [&] {
      auto corpus = load_ai_corpus(tr_input);
      std::vector<std::vector<Tag>> all;
      for (auto& inst : corpus) {
        if (!inst.tags) continue;
        all.push_back(*inst.tags);
        inst.tags = tr_to == "bioless" ? to_bioless(*inst.tags) : from_bioless(*inst.tags);
      }
      io::write_json(tr_output, ai_corpus_to_json(corpus));
      if (tr_to == "bioless") {
        auto stats = bioless_collapse_count(all);
        err << stats.sentences << " sentences; " << stats.collapsed
            << " with adjacent same-class mentions that BIOless merges\n";
      }
      return kOk;
    };
  });

  // shs-extract
  auto* shs_cmd = app.add_subcommand("shs-extract", "rule-based short/long form tagging");
  std::string shs_input, shs_output;
  bool shs_reverse = false;
  shs_cmd->add_option("--input", shs_input, "AI file")->required();
  shs_cmd->add_option("--output", shs_output, "prediction file")->required();
  shs_cmd->add_flag("--reverse", shs_reverse, "also accept 'SHORT ( long form )'");
  shs_cmd->callback([&] {
    action = [&] {
      auto corpus = load_ai_corpus(shs_input);
      rules::ExtractOptions opts{shs_reverse};
      std::vector<std::pair<std::string, std::vector<Tag>>> preds;
      for (const auto& inst : corpus) preds.emplace_back(inst.id, rules::tag_sentence(inst.tokens, opts));
      io::write_json(shs_output, tag_records(preds));
      return kOk;
    };
  });

  // vote
  auto* vote_cmd = app.add_subcommand("vote", "token-level hard voting over prediction files");
  std::vector<std::string> vote_preds, vote_priority;
  std::string vote_output;
  vote_cmd->add_option("--pred", vote_preds, "prediction file, optionally name=path")->required();
  vote_cmd->add_option("--priority", vote_priority, "tie-break order of base names")->delimiter(',');
  vote_cmd->add_option("--output", vote_output, "prediction file")->required();
  vote_cmd->callback([&] {
    action = [&] {
      std::vector<PredictionFile> files;
      std::vector<std::string> names;
      for (const auto& p : vote_preds) {
        files.push_back(load_prediction_file(p));
        names.push_back(files.back().name);
      }
      const auto& ids = files.front().ids;
      auto rows = align_predictions(files, ids);
      nlohmann::json arr = nlohmann::json::array();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        auto voted = ensemble::hard_vote(std::span<const std::vector<std::string>>(rows[i]),
                                         std::span<const std::string>(names),
                                         std::span<const std::string>(vote_priority));
        arr.push_back({{"id", ids[i]}, {"tags", voted}});
      }
      io::write_json(vote_output, arr);
      return kOk;
    };
  });

  // blend-train
  auto* bt_cmd = app.add_subcommand("blend-train", "train k meta CRFs on base predictions");
  std::string bt_gold, bt_model;
  std::vector<std::string> bt_preds;
  std::size_t bt_k = 5;
  bool bt_words = false;
  TrainFlags bt_flags;
  bt_cmd->add_option("--gold", bt_gold, "AI file with gold labels for the held-out split")->required();
  bt_cmd->add_option("--pred", bt_preds, "base prediction file, optionally name=path")->required();
  bt_cmd->add_option("--k", bt_k, "number of folds / meta models")->capture_default_str();
  bt_cmd->add_option("--model", bt_model, "output blend model")->required();
  bt_cmd->add_flag("--word-features", bt_words, "add word features to the meta CRFs");
  bt_flags.add(bt_cmd, false);
  bt_cmd->callback([&] {
    action = [&] {
      auto gold = load_ai_corpus(bt_gold);
      std::vector<PredictionFile> files;
      std::vector<std::string> names;
      for (const auto& p : bt_preds) {
        files.push_back(load_prediction_file(p));
        names.push_back(files.back().name);
      }
      std::vector<std::string> ids;
      for (const auto& g : gold) ids.push_back(g.id);
      auto rows = align_predictions(files, ids);
      std::vector<ensemble::BlendSentence> held_out;
      for (std::size_t i = 0; i < gold.size(); ++i) {
        if (!gold[i].tags) throw DataError("gold instance " + gold[i].id + " has no labels");
        if (rows[i].front().size() != gold[i].tokens.size()) {
          throw DataError("id " + gold[i].id + ": prediction length differs from gold");
        }
        held_out.push_back({gold[i].id, gold[i].tokens, rows[i], tags_to_strings(*gold[i].tags)});
      }
      auto cfg = bt_flags.config;
      cfg.seed = seed;
      auto model = ensemble::blend_train(names, held_out, bt_k, cfg, {bt_words});
      io::write_json(bt_model, ensemble::blend_to_json(model));
      return kOk;
    };
  });

  // blend-predict
  auto* bp_cmd = app.add_subcommand("blend-predict", "tag with a blend model");
  std::string bp_model, bp_input, bp_output;
  std::vector<std::string> bp_preds;
  bp_cmd->add_option("--model", bp_model, "blend model")->required();
  bp_cmd->add_option("--pred", bp_preds, "base prediction file, optionally name=path")->required();
  bp_cmd->add_option("--input", bp_input, "AI file with tokens (needed with word features)");
  bp_cmd->add_option("--output", bp_output, "prediction file")->required();
  bp_cmd->callback([&] {
    action = [&] {
      auto model = ensemble::blend_from_json(io::read_json(bp_model));
      std::vector<PredictionFile> files;
      std::vector<std::string> names;
      for (const auto& p : bp_preds) {
        files.push_back(load_prediction_file(p));
        names.push_back(files.back().name);
      }
      std::map<std::string, std::vector<std::string>> tokens;
      if (!bp_input.empty()) {
        for (auto& inst : load_ai_corpus(bp_input)) tokens[inst.id] = std::move(inst.tokens);
      } else if (model.options.word_features) {
        throw DataError("blend model uses word features; --input is required");
      }
      const auto& ids = files.front().ids;
      auto rows = align_predictions(files, ids);
      nlohmann::json arr = nlohmann::json::array();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        std::vector<std::string> toks;
        if (auto it = tokens.find(ids[i]); it != tokens.end()) toks = it->second;
        std::vector<std::string> tags;
        try {
          tags = ensemble::blend_predict(model, names, rows[i], toks);
        } catch (const std::invalid_argument& e) {
          throw DataError("id " + ids[i] + ": " + e.what());
        }
        arr.push_back({{"id", ids[i]}, {"tags", tags}});
      }
      io::write_json(bp_output, arr);
      return kOk;
    };
  });

  // ad-predict
  auto* adp_cmd = app.add_subcommand("ad-predict", "choose expansions for AD instances");
  std::string adp_input, adp_dict, adp_output, adp_scorer = "lexical";
  std::vector<std::string> adp_scores;
  std::size_t adp_n = ad::kDefaultWindow;
  bool adp_post = false;
  adp_cmd->add_option("--input", adp_input, "AD file")->required();
  adp_cmd->add_option("--dict", adp_dict, "expansion dictionary")->required();
  adp_cmd->add_option("--scorer", adp_scorer, "scorer")
      ->check(CLI::IsMember({"lexical", "external", "ensemble"}))
      ->capture_default_str();
  adp_cmd->add_option("--scores", adp_scores, "external span score file (repeat for ensemble)");
  adp_cmd->add_option("--n", adp_n, "context window size (even)")->capture_default_str();
  adp_cmd->add_flag("--postprocess", adp_post, "apply the parenthesized-acronym rule");
  adp_cmd->add_option("--output", adp_output, "prediction file")->required();
  adp_cmd->callback([&] {
    action = [&]() -> int {
      auto corpus = load_ad_corpus(adp_input);
      auto dict = load_dictionary(adp_dict);
      ad::ScorerConfig cfg;
      cfg.kind = parse_scorer(adp_scorer);
      cfg.n = adp_n;
      cfg.postprocess = adp_post;
      if (cfg.kind != ad::ScorerKind::Lexical) {
        if (adp_scores.empty()) {
          err << "--scorer " << adp_scorer << " requires --scores\n";
          return kUsage;
        }
        std::vector<ad::AdInput> inputs;
        for (const auto& inst : corpus) {
          if (dict.contains(inst.acronym())) inputs.push_back(ad::build_input(inst, dict, adp_n));
        }
        for (const auto& path : adp_scores) cfg.external.push_back(ad::load_external_scores(path, inputs));
      }
      auto result = ad::predict(corpus, dict, cfg);
      io::write_json(adp_output, ad::predictions_to_json(result.predictions));
      for (const auto& e : result.errors) err << "id " << e.id << ": " << e.message << "\n";
      err << result.predictions.size() << " predicted, " << result.errors.size() << " failed\n";
      return kOk;
    };
  });

  // ad-inputs
  auto* adi_cmd = app.add_subcommand("ad-inputs", "write the span-model input construction for AD instances");
  std::string adi_input, adi_dict, adi_output;
  std::size_t adi_n = ad::kDefaultWindow;
  adi_cmd->add_option("--input", adi_input, "AD file")->required();
  adi_cmd->add_option("--dict", adi_dict, "expansion dictionary")->required();
  adi_cmd->add_option("--n", adi_n, "context window size (even)")->capture_default_str();
  adi_cmd->add_option("--output", adi_output, "output file")->required();
  adi_cmd->callback([&] {
    action = [&] {
      auto corpus = load_ad_corpus(adi_input);
      auto dict = load_dictionary(adi_dict);
      std::vector<ad::AdInput> inputs;
      for (const auto& inst : corpus) {
        if (!dict.contains(inst.acronym())) {
          err << "id " << inst.id << ": acronym '" << inst.acronym() << "' not in dictionary\n";
          continue;
        }
        inputs.push_back(ad::build_input(inst, dict, adi_n));
      }
      io::write_json(adi_output, ad::inputs_to_json(inputs));
      return kOk;
    };
  });

  // evaluate-ai
  auto* eai_cmd = app.add_subcommand("evaluate-ai", "span-level macro P/R/F1");
  std::string eai_gold, eai_pred, eai_json;
  eai_cmd->add_option("--gold", eai_gold, "AI file with gold labels")->required();
  eai_cmd->add_option("--pred", eai_pred, "prediction file")->required();
  eai_cmd->add_option("--json", eai_json, "write metrics as JSON");
  eai_cmd->callback([&] {
    action = [&] {
      std::map<std::string, std::vector<Tag>> gold, pred;
      for (const auto& inst : load_ai_corpus(eai_gold)) {
        if (!inst.tags) throw DataError("gold instance " + inst.id + " has no labels");
        gold[inst.id] = *inst.tags;
      }
      auto pf = load_prediction_file(eai_pred);
      for (const auto& [id, tags] : pf.tags) pred[id] = tags_from_strings(tags);
      auto m = evaluate_ai(gold, pred);
      print_ai_metrics(out, m);
      if (!eai_json.empty()) io::write_json(eai_json, ai_metrics_json(m), 2);
      return kOk;
    };
  });

  // evaluate-ad
  auto* ead_cmd = app.add_subcommand("evaluate-ad", "macro F1 over expansions");
  std::string ead_gold, ead_pred, ead_json;
  ead_cmd->add_option("--gold", ead_gold, "AD file with gold expansions")->required();
  ead_cmd->add_option("--pred", ead_pred, "AD prediction file")->required();
  ead_cmd->add_option("--json", ead_json, "write metrics as JSON");
  ead_cmd->callback([&] {
    action = [&] {
      std::map<std::string, std::string> gold, pred;
      for (const auto& inst : load_ad_corpus(ead_gold)) {
        if (!inst.expansion) throw DataError("gold instance " + inst.id + " has no expansion");
        gold[inst.id] = *inst.expansion;
      }
      auto doc = io::read_json(ead_pred);
      if (!doc.is_array()) throw DataError(ead_pred + ": expected an array of predictions");
      for (const auto& r : doc) {
        try {
          pred[r.at("id").get<std::string>()] = text::normalize_phrase(r.at("expansion").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
          throw DataError(ead_pred + ": " + e.what());
        }
      }
      auto m = evaluate_ad(gold, pred);
      out << std::fixed << std::setprecision(4) << "expansions " << m.per_expansion.size()
          << "\nmacro P " << m.precision << "  R " << m.recall << "  F1 " << m.f1 << "\n";
      if (!ead_json.empty()) io::write_json(ead_json, ad_metrics_json(m), 2);
      return kOk;
    };
  });

  // cv
  auto* cv_cmd = app.add_subcommand("cv", "k-fold cross-validation");
  std::string cv_task, cv_input, cv_dict, cv_tagger = "crf", cv_json;
  std::size_t cv_k = 5;
  std::size_t cv_n = ad::kDefaultWindow;
  bool cv_post = false;
  TrainFlags cv_flags;
  cv_cmd->add_option("--task", cv_task, "ai or ad")->required()->check(CLI::IsMember({"ai", "ad"}));
  cv_cmd->add_option("--input", cv_input, "AI or AD file")->required();
  cv_cmd->add_option("--dict", cv_dict, "expansion dictionary (ad)");
  cv_cmd->add_option("--k", cv_k, "folds")->capture_default_str();
  cv_cmd->add_option("--tagger", cv_tagger, "ai tagger")
      ->check(CLI::IsMember({"crf", "rulebased"}))
      ->capture_default_str();
  cv_cmd->add_option("--n", cv_n, "AD context window")->capture_default_str();
  cv_cmd->add_flag("--postprocess", cv_post, "AD post-processing");
  cv_cmd->add_option("--json", cv_json, "write fold metrics as JSON");
  cv_flags.add(cv_cmd);
  cv_cmd->callback([&] {
    action = [&]() -> int {
      CvReport report;
      if (cv_task == "ai") {
        auto corpus = load_ai_corpus(cv_input);
        auto scheme = *parse_scheme(cv_flags.scheme);
        auto cfg = cv_flags.config;
        cfg.seed = seed;
        auto fit_and_score = [&](const std::vector<AiInstance>& train, const std::vector<AiInstance>& test) {
          std::vector<std::vector<Tag>> gold, pred;
          std::optional<crf::Model> model;
          if (cv_tagger == "crf") model = crf::train(to_examples(train, scheme), cfg, {}, scheme);
          for (const auto& inst : test) {
            if (!inst.tags) throw DataError("instance " + inst.id + " has no labels");
            gold.push_back(*inst.tags);
            pred.push_back(model ? crf_tag(*model, inst) : rules::tag_sentence(inst.tokens));
          }
          return evaluate_ai(std::span<const std::vector<Tag>>(gold), std::span<const std::vector<Tag>>(pred)).f1;
        };
        report = cross_validate(corpus, cv_k, seed, [](const AiInstance& i) { return i.id; }, fit_and_score);
      } else {
        if (cv_dict.empty()) {
          err << "cv --task ad requires --dict\n";
          return kUsage;
        }
        auto corpus = load_ad_corpus(cv_input);
        auto dict = load_dictionary(cv_dict);
        std::map<std::string, std::string> strata;
        for (const auto& inst : corpus) strata[inst.id] = inst.acronym();
        ad::ScorerConfig cfg;
        cfg.n = cv_n;
        cfg.postprocess = cv_post;
        auto fit_and_score = [&](const std::vector<AdInstance>&, const std::vector<AdInstance>& test) {
          auto run = ad::predict(test, dict, cfg);
          std::map<std::string, std::string> gold, pred;
          for (const auto& p : run.predictions) pred[p.id] = p.expansion;
          for (const auto& inst : test) {
            if (inst.expansion && pred.count(inst.id)) gold[inst.id] = *inst.expansion;
          }
          return evaluate_ad(gold, pred).f1;
        };
        report = cross_validate(corpus, cv_k, seed, [](const AdInstance& i) { return i.id; },
                                fit_and_score, &strata);
      }
      out << std::fixed << std::setprecision(4);
      for (std::size_t f = 0; f < report.fold_f1.size(); ++f) {
        out << "fold " << f << "  macro F1 " << report.fold_f1[f] << "\n";
      }
      out << "mean    macro F1 " << report.mean_f1 << "\n";
      if (!cv_json.empty()) {
        io::write_json(cv_json, {{"folds", report.fold_f1}, {"mean_f1", report.mean_f1}}, 2);
      }
      return kOk;
    };
  });

  std::vector<const char*> argv;
  argv.push_back("acrotag");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kOk : kUsage;
  }
  if (!action) return kUsage;
  try {
    return action();
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
}

}  // namespace acro::cli
