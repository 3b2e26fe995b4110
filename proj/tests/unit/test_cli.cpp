#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"

using medner::Json;

namespace {

struct Result {
  int status;
  std::string out;
  std::string err;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

Result run(const std::string& args, const fixture::TempDir& dir) {
  const std::string out = dir.str("stdout.txt"), err = dir.str("stderr.txt");
  const std::string cmd = quote(MEDNER_CLI_PATH) + " " + args + " >" + quote(out) + " 2>" + quote(err);
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, fixture::slurp(out), fixture::slurp(err)};
}

std::string logits_args() {
  std::string s;
  for (const auto& p : fixture::ensemble_logit_paths()) s += " " + quote(p);
  return s;
}

}  // namespace

TEST(Cli, UsageErrorIsJson) {
  fixture::TempDir dir("cli-usage");
  const auto r = run("", dir);
  EXPECT_NE(r.status, 0);
  EXPECT_EQ(Json::parse(r.err)["error"], "UsageError");
}

TEST(Cli, MissingInputIsJson) {
  fixture::TempDir dir("cli-missing");
  const auto r = run("vote --pred /nonexistent.jsonl", dir);
  EXPECT_NE(r.status, 0);
  EXPECT_TRUE(Json::parse(r.err).contains("message"));
}

TEST(Cli, DomainErrorCarriesCode) {
  fixture::TempDir dir("cli-domain");
  std::ofstream(dir.str("bad.jsonl")) << R"({"doc_id":"a","words":["x"],"labels":["B-Nope"]})" << "\n";
  const auto r = run("eval --pred " + quote(dir.str("bad.jsonl")) + " --gold " + quote(dir.str("bad.jsonl")), dir);
  EXPECT_NE(r.status, 0);
  const Json err = Json::parse(r.err);
  EXPECT_TRUE(err["error"] == "ParseError" || err["error"] == "UnknownLabel") << r.err;
}

TEST(Cli, GroupVoteEvalChain) {
  fixture::TempDir dir("cli-chain");
  auto r = run("group --strategy first_token --out-dir " + quote(dir.str("g")) + " --logits" + logits_args() +
                   " --gold " + quote(fixture::ensemble_gold()),
               dir);
  ASSERT_EQ(r.status, 0) << r.err;
  std::string preds;
  for (int m = 0; m < 8; ++m) preds += " " + quote(dir.str("g/group.model" + std::to_string(m) + ".jsonl"));
  r = run("--seed 9 vote --policy majority_or_o --threshold 4 --out " + quote(dir.str("vote.jsonl")) +
              " --pred" + preds,
          dir);
  ASSERT_EQ(r.status, 0) << r.err;
  const std::string vote = fixture::slurp(dir.str("vote.jsonl"));
  const Json header = Json::parse(vote.substr(0, vote.find('\n')));
  EXPECT_EQ(header["provenance"]["command"], "vote");
  EXPECT_EQ(header["provenance"]["seeds"]["vote"], 9);
  EXPECT_EQ(header["provenance"]["config"]["grouping"], "max_logit");
  EXPECT_EQ(header["provenance"]["config"]["vote"]["threshold"], 4);

  r = run("eval --mode collapsed --pred " + quote(dir.str("vote.jsonl")) + " --gold " +
              quote(fixture::ensemble_gold()) + " --json " + quote(dir.str("eval.json")),
          dir);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("macro avg"), std::string::npos);
  EXPECT_EQ(Json::parse(fixture::slurp(dir.str("eval.json")))["report"]["mode"], "collapsed");
}

TEST(Cli, ThresholdAboveModelsFails) {
  fixture::TempDir dir("cli-threshold");
  ASSERT_EQ(run("group --out-dir " + quote(dir.str("g")) + " --logits" + logits_args(), dir).status, 0);
  const auto r = run("vote --policy majority_or_o --threshold 4 --pred " + quote(dir.str("g/group.model0.jsonl")), dir);
  EXPECT_NE(r.status, 0);
  EXPECT_EQ(Json::parse(r.err)["error"], "InvalidThreshold");
}

TEST(Cli, PipelineDeterministic) {
  fixture::TempDir dir("cli-pipeline");
  const std::string common = "--seed 3 pipeline --stack --hidden 8 --epochs 3 --lr 0.1 --tie-break random --gold " +
                             quote(fixture::ensemble_gold()) + " --logits" + logits_args();
  ASSERT_EQ(run(common + " --out-dir " + quote(dir.str("a")), dir).status, 0);
  ASSERT_EQ(run(common + " --out-dir " + quote(dir.str("b")), dir).status, 0);
  std::size_t compared = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir.path() / "a")) {
    const auto other = dir.path() / "b" / entry.path().filename();
    EXPECT_EQ(fixture::slurp(entry.path()), fixture::slurp(other)) << entry.path().filename();
    ++compared;
  }
  EXPECT_EQ(compared, 8u + 16u + 3u + 5u);
}

TEST(Cli, StackTrainAndPredict) {
  fixture::TempDir dir("cli-stack");
  ASSERT_EQ(run("group --out-dir " + quote(dir.str("g")) + " --logits" + logits_args(), dir).status, 0);
  std::string preds;
  for (int m = 0; m < 8; ++m) preds += " " + quote(dir.str("g/group.model" + std::to_string(m) + ".jsonl"));
  auto r = run("stack-train --epochs 2 --hidden 4 --out " + quote(dir.str("m.bin")) + " --gold " +
                   quote(fixture::ensemble_gold()) + " --pred" + preds,
               dir);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(Json::parse(r.out).contains("test_accuracy"));
  r = run("stack-predict --model " + quote(dir.str("m.bin")) + " --pred" + preds, dir);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("\"kind\":\"predictions\""), std::string::npos);
  r = run("stack-predict --model " + quote(dir.str("m.bin")) + " --pred " +
              quote(dir.str("g/group.model0.jsonl")),
          dir);
  EXPECT_NE(r.status, 0);
  EXPECT_EQ(Json::parse(r.err)["error"], "DimensionMismatch");
}

TEST(Cli, LinkTerm) {
  fixture::TempDir dir("cli-link");
  auto r = run("link --mapping " + quote(fixture::mapping_csv()) + " --term paracetamoll", dir);
  ASSERT_EQ(r.status, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["matched"]["snomed_code"], "322236009");
  EXPECT_NEAR(j["matched"]["score"].get<double>(), 11.0 / 12.0, 1e-12);
  r = run("link --term paracetamol", dir);
  EXPECT_NE(r.status, 0);
}

TEST(Cli, ConfigFileAndOverride) {
  fixture::TempDir dir("cli-config");
  std::ofstream(dir.str("cfg.json")) << R"({"grouping":"average_logit","vote":{"policy":"majority_or_o"}})";
  ASSERT_EQ(run("--config " + quote(dir.str("cfg.json")) + " group --strategy first_token --out-dir " +
                    quote(dir.str("g")) + " --logits" + logits_args(),
                dir)
                .status,
            0);
  const std::string g = fixture::slurp(dir.str("g/group.model0.jsonl"));
  const Json header = Json::parse(g.substr(0, g.find('\n')));
  EXPECT_EQ(header["provenance"]["config"]["grouping"], "first_token");
  EXPECT_EQ(header["provenance"]["config"]["vote"]["policy"], "majority_or_o");
}
