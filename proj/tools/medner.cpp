// medner: ensemble NER toolkit command line.
//
//   medner group         --logits a.jsonl b.jsonl ... --out-dir DIR
//   medner vote          --pred DIR/group.*.jsonl --out vote.jsonl
//   medner stack-train   --pred ... --gold gold.jsonl --out metanet.bin
//   medner stack-predict --pred ... --model metanet.bin --out stacked.jsonl
//   medner eval          --pred vote.jsonl --gold gold.jsonl
//   medner link          --mapping map.csv (--term TEXT | --pred P --docs D)
//   medner serve         --mapping map.csv [--metanet M] [--port 8080]
//   medner pipeline      --logits ... --gold gold.jsonl --out-dir DIR [--stack]
//
// Errors are reported on stderr as {"error": CODE, "message": TEXT} with a
// nonzero exit status.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <httplib.h>

#include "medner/error.hpp"
#include "medner/pipeline.hpp"
#include "medner/service.hpp"

namespace {

using namespace medner;

void emit_error(std::string_view code, const std::string& message) {
  Json j;
  j["error"] = std::string(code);
  j["message"] = message;
  std::cerr << j.dump() << '\n';
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
}

std::vector<PredictionFile> load_predictions(const std::vector<std::string>& paths) {
  std::vector<PredictionFile> files;
  for (const auto& p : paths) files.push_back(load_prediction_file(p));
  return files;
}

StackedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open meta-model '" + path + "'");
  return read_stacked_model(in);
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble clinical NER toolkit: grouping, voting, stacking, evaluation, linking"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON pipeline configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Seed for every random choice (vote ties, stacking)");

  // Per-command options that override the config file.
  std::optional<std::string> strategy, policy, tie_break, eval_mode, feature_mode;
  std::optional<std::size_t> threshold, hidden, epochs, batch_size, min_non_o;
  std::optional<double> learning_rate, link_threshold;
  bool exclude_o = false;

  auto add_strategy = [&](CLI::App* cmd) {
    cmd->add_option("--strategy", strategy, "first_token | max_logit | average_logit");
  };
  auto add_vote = [&](CLI::App* cmd) {
    cmd->add_option("--policy", policy, "majority_or_o | max_vote");
    cmd->add_option("--threshold", threshold, "Votes needed under majority_or_o (default ceil(N/2))");
    cmd->add_option("--tie-break", tie_break, "alphabetical | random");
  };
  auto add_eval = [&](CLI::App* cmd) {
    cmd->add_option("--mode", eval_mode, "bio | collapsed");
    cmd->add_flag("--exclude-o-macro", exclude_o, "Leave O out of macro averages");
  };
  auto add_train = [&](CLI::App* cmd) {
    cmd->add_option("--features", feature_mode, "one_hot | logits");
    cmd->add_option("--hidden", hidden, "Hidden layer width");
    cmd->add_option("--lr", learning_rate, "Learning rate");
    cmd->add_option("--epochs", epochs, "Training epochs");
    cmd->add_option("--batch-size", batch_size, "Mini-batch size");
    cmd->add_option("--min-non-o", min_non_o, "Base models that must predict non-O");
  };

  // group
  auto* group_cmd = app.add_subcommand("group", "Group subword logits into word predictions");
  std::vector<std::string> logit_paths;
  std::string out_dir, gold_path;
  group_cmd->add_option("--logits", logit_paths, "Logit files, one per model")->required()->check(CLI::ExistingFile);
  group_cmd->add_option("--out-dir", out_dir, "Directory for group.<model>.jsonl files")->required();
  group_cmd->add_option("--gold", gold_path, "Gold/word file to check word counts against")->check(CLI::ExistingFile);
  add_strategy(group_cmd);

  // vote
  auto* vote_cmd = app.add_subcommand("vote", "Voting ensemble over word prediction files");
  std::vector<std::string> pred_paths;
  std::string out_path;
  vote_cmd->add_option("--pred", pred_paths, "Word prediction files")->required()->check(CLI::ExistingFile);
  vote_cmd->add_option("--out", out_path, "Output prediction file (default stdout)");
  add_vote(vote_cmd);

  // stack-train
  auto* train_cmd = app.add_subcommand("stack-train", "Train the stacked meta-model");
  std::string report_path;
  train_cmd->add_option("--pred", pred_paths, "Word prediction files")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--gold", gold_path, "Gold file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", out_path, "Meta-model output file")->required();
  train_cmd->add_option("--report", report_path, "Training report JSON (default stdout)");
  add_train(train_cmd);

  // stack-predict
  auto* spred_cmd = app.add_subcommand("stack-predict", "Predict with a trained meta-model");
  std::string model_path;
  spred_cmd->add_option("--pred", pred_paths, "Word prediction files")->required()->check(CLI::ExistingFile);
  spred_cmd->add_option("--model", model_path, "Meta-model file")->required()->check(CLI::ExistingFile);
  spred_cmd->add_option("--out", out_path, "Output prediction file (default stdout)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Classification report and confusion matrix");
  std::string pred_path, json_path;
  eval_cmd->add_option("--pred", pred_path, "Prediction file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--gold", gold_path, "Gold file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--json", json_path, "Also write the structured report here");
  add_eval(eval_cmd);

  // link
  auto* link_cmd = app.add_subcommand("link", "Link Drug entities to SNOMED-CT / BNF");
  std::string mapping_path, term, docs_path;
  bool all_classes = false;
  link_cmd->add_option("--mapping", mapping_path, "Mapping CSV")->check(CLI::ExistingFile);
  link_cmd->add_option("--term", term, "Link a single term");
  link_cmd->add_option("--pred", pred_path, "Prediction file")->check(CLI::ExistingFile);
  link_cmd->add_option("--docs", docs_path, "Gold/word file supplying the words")->check(CLI::ExistingFile);
  link_cmd->add_option("--threshold", link_threshold, "Minimum similarity");
  link_cmd->add_flag("--all-classes", all_classes, "Link every entity class, not only Drug");
  link_cmd->add_option("--out", out_path, "Output JSON (default stdout)");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the annotation HTTP service");
  std::optional<std::string> host, static_dir;
  std::optional<int> port;
  std::size_t n_labelers = 3;
  serve_cmd->add_option("--mapping", mapping_path, "Mapping CSV")->check(CLI::ExistingFile);
  serve_cmd->add_option("--metanet", model_path, "Meta-model for ensemble=stacked")->check(CLI::ExistingFile);
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port");
  serve_cmd->add_option("--static-dir", static_dir, "Serve the browser UI from this directory");
  serve_cmd->add_option("--labelers", n_labelers, "Number of lexicon labelers")->check(CLI::PositiveNumber);
  add_strategy(serve_cmd);
  add_vote(serve_cmd);

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "group -> vote -> eval (-> stack) in one run");
  bool with_stack = false;
  pipe_cmd->add_option("--logits", logit_paths, "Logit files, one per model")->required()->check(CLI::ExistingFile);
  pipe_cmd->add_option("--gold", gold_path, "Gold file")->required()->check(CLI::ExistingFile);
  pipe_cmd->add_option("--out-dir", out_dir, "Output directory")->required();
  pipe_cmd->add_flag("--stack", with_stack, "Also train and apply the stacked ensemble");
  add_strategy(pipe_cmd);
  add_vote(pipe_cmd);
  add_eval(pipe_cmd);
  add_train(pipe_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("UsageError", e.what());
    return 2;
  }

  try {
    PipelineConfig config = config_path.empty() ? PipelineConfig{} : PipelineConfig::load(config_path);
    if (seed) config.set_seed(*seed);
    if (strategy) config.grouping = parse_grouping_strategy(*strategy);
    if (policy) config.vote.kind = parse_vote_kind(*policy);
    if (threshold) config.vote.threshold = *threshold;
    if (tie_break) config.vote.tie_break = parse_tie_break(*tie_break);
    if (eval_mode) config.eval_mode = parse_eval_mode(*eval_mode);
    if (exclude_o) config.include_o_in_macro = false;
    if (feature_mode) config.stacking.feature_mode = parse_feature_mode(*feature_mode);
    if (hidden) config.stacking.train.hidden_width = *hidden;
    if (learning_rate) config.stacking.train.learning_rate = *learning_rate;
    if (epochs) config.stacking.train.epochs = *epochs;
    if (batch_size) config.stacking.train.batch_size = *batch_size;
    if (min_non_o) config.stacking.min_non_o = *min_non_o;
    if (link_threshold) config.linking.threshold = *link_threshold;
    if (!mapping_path.empty()) config.mapping_path = mapping_path;
    if (host) config.host = *host;
    if (port) config.port = *port;
    if (static_dir) config.static_dir = *static_dir;
    config.stacking.train.validate();

    if (*group_cmd) {
      std::vector<LogitFile> files;
      for (const auto& p : logit_paths) files.push_back(load_logit_file(p));
      std::vector<Document> gold;
      if (!gold_path.empty()) gold = load_gold_file(gold_path, false);
      std::filesystem::create_directories(out_dir);
      for (const auto& pf : cmd_group(files, config, gold)) {
        const auto path = (std::filesystem::path(out_dir) / ("group." + pf.model_id + ".jsonl")).string();
        save_prediction_file(path, pf);
        std::cout << path << '\n';
      }
    } else if (*vote_cmd) {
      const auto voted = cmd_vote(load_predictions(pred_paths), config);
      std::ostringstream out;
      write_prediction_file(out, voted);
      write_or_print(out_path, out.str());
    } else if (*train_cmd) {
      const auto result = cmd_stack_train(load_predictions(pred_paths), load_gold_file(gold_path), config);
      std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::IoError, "cannot write '" + out_path + "'");
      write_stacked_model(out, result.model);
      write_or_print(report_path, result.report.dump(2) + "\n");
    } else if (*spred_cmd) {
      const auto stacked = cmd_stack_predict(load_predictions(pred_paths), load_model(model_path), config);
      std::ostringstream out;
      write_prediction_file(out, stacked);
      write_or_print(out_path, out.str());
    } else if (*eval_cmd) {
      const auto ev = cmd_eval(load_prediction_file(pred_path), load_gold_file(gold_path),
                               config.eval_mode, config.include_o_in_macro);
      std::cout << render_report(ev.report) << '\n' << render_confusion(ev.confusion);
      if (!json_path.empty()) {
        Json j;
        j["report"] = report_to_json(ev.report);
        j["confusion"] = confusion_to_json(ev.confusion);
        write_or_print(json_path, j.dump(2) + "\n");
      }
    } else if (*link_cmd) {
      if (config.mapping_path.empty()) throw Error(ErrorCode::InvalidArgument, "--mapping is required");
      const MappingTable table = load_mapping_file(config.mapping_path);
      LinkOptions opts = config.linking;
      if (all_classes) {
        opts.classes.clear();
        for (LabelId c = 1; c < kNumCollapsed; ++c) opts.classes.push_back(c);
      }
      Json out;
      if (!term.empty()) {
        out = link_result_to_json(fuzzy_link(term, table, opts.threshold, opts.urls));
      } else if (!pred_path.empty() && !docs_path.empty()) {
        out = cmd_link(load_prediction_file(pred_path), load_gold_file(docs_path, false), table, opts);
      } else {
        throw Error(ErrorCode::InvalidArgument, "link needs --term or both --pred and --docs");
      }
      write_or_print(out_path, out.dump(2) + "\n");
    } else if (*serve_cmd) {
      std::optional<MappingTable> table;
      if (!config.mapping_path.empty()) table = load_mapping_file(config.mapping_path);
      std::optional<StackedModel> stacked;
      if (!model_path.empty()) stacked = load_model(model_path);
      AnnotationService service(config, default_labelers(table ? &*table : nullptr, n_labelers),
                                std::move(table), std::move(stacked));
      httplib::Server server;
      service.mount(server);
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      std::cerr << "listening on " << config.host << ':' << config.port << '\n';
      if (!server.listen(config.host, config.port)) {
        throw Error(ErrorCode::IoError, "cannot bind " + config.host + ":" + std::to_string(config.port));
      }
    } else if (*pipe_cmd) {
      for (const auto& p : run_pipeline({logit_paths, gold_path, out_dir, with_stack}, config)) {
        std::cout << p << '\n';
      }
    }
  } catch (const Error& e) {
    emit_error(to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    emit_error("Internal", e.what());
    return 1;
  }
  return 0;
}
