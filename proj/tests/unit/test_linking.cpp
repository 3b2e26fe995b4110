#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "medner/error.hpp"
#include "medner/linking.hpp"
#include "oracles.hpp"

using namespace medner;

namespace {

const std::string kFixture = std::string(MEDNER_FIXTURE_DIR) + "/mapping_fixture.csv";

RawMappingRow row(std::string code, std::string desc) { return {std::move(code), "bnf", "", std::move(desc)}; }

bool contains_stop_word(const MappingEntry& e, const std::set<std::string>& stops) {
  std::string word;
  for (char ch : e.normalized + " ") {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      word.push_back(ch);
    } else {
      if (stops.count(word)) return true;
      word.clear();
    }
  }
  return false;
}

}  // namespace

TEST(Linking, NormalizeText) {
  EXPECT_EQ(normalize_text("  Paracetamol \t 500MG\nTablets "), "paracetamol 500mg tablets");
  EXPECT_EQ(normalize_text(""), "");
}

TEST(Linking, LevenshteinAgainstDpOracle) {
  gen::Rng rng(1);
  for (int iter = 0; iter < 500; ++iter) {
    const std::string a = gen::word(rng) + (rng.chance(0.5) ? gen::word(rng) : "");
    const std::string b = rng.chance(0.3) ? a : gen::word(rng);
    ASSERT_EQ(levenshtein(a, b), oracle::edit_distance(oracle::ascii32(a), oracle::ascii32(b)));
    ASSERT_EQ(levenshtein(a, b), levenshtein(b, a));
    ASSERT_EQ(similarity(a, b), similarity(b, a));
    ASSERT_EQ(similarity(a, b) == 1.0, a == b);
  }
}

TEST(Linking, LevenshteinCountsCodePoints) {
  EXPECT_EQ(levenshtein("naïve", "naive"), 1u);
  EXPECT_EQ(levenshtein("μg", "mg"), 1u);
  EXPECT_DOUBLE_EQ(similarity("μg", "mg"), 0.5);
  EXPECT_EQ(similarity("", ""), 1.0);
}

TEST(Linking, ParacetamollSimilarity) {
  const double want =
      1.0 - double(oracle::edit_distance(oracle::ascii32("paracetamol"), oracle::ascii32("paracetamoll"))) / 12.0;
  EXPECT_DOUBLE_EQ(similarity("paracetamol", "paracetamoll"), want);
  EXPECT_NEAR(want, 0.9167, 1e-4);
}

TEST(Linking, DedupKeepsFirst) {
  std::vector<RawMappingRow> rows{row("1", "Aspirin 75mg"), row("1", "aspirin   75MG"), row("2", "aspirin 75mg")};
  const auto t = MappingTable::load_and_clean(rows);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.entries()[0].description, "Aspirin 75mg");
  EXPECT_EQ(t.stats().duplicates, 1u);
}

TEST(Linking, StopWordsWholeWordOnly) {
  std::vector<RawMappingRow> rows{row("1", "Stoma bag closure 10 pieces"), row("2", "filtered water"),
                                  row("3", "Urostomy pouch filter"), row("4", "bag-closure kit")};
  const auto t = MappingTable::load_and_clean(rows);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.entries()[0].snomed_code, "2");
  EXPECT_EQ(t.stats().stop_word_filtered, 3u);
}

TEST(Linking, MalformedRowsSkipped) {
  std::vector<RawMappingRow> rows{row("", "aspirin"), row("1", "  "), row("2", "aspirin")};
  const auto t = MappingTable::load_and_clean(rows);
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(t.stats().malformed, 2u);
  EXPECT_EQ(t.stats().input, 3u);
}

TEST(Linking, FixtureCleaning) {
  const auto t = load_mapping_file(kFixture);
  EXPECT_EQ(t.stats().input, 20u);
  EXPECT_EQ(t.stats().duplicates, 4u);
  EXPECT_EQ(t.stats().stop_word_filtered, 3u);
  EXPECT_EQ(t.size(), 13u);
  for (const auto& e : t.entries()) EXPECT_FALSE(contains_stop_word(e, default_stop_words()));
}

TEST(Linking, CleaningIdempotent) {
  const auto t = load_mapping_file(kFixture);
  const auto rows = t.to_rows();
  const auto again = MappingTable::load_and_clean(rows);
  ASSERT_EQ(again.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(again.entries()[i].description, t.entries()[i].description);
    EXPECT_EQ(again.entries()[i].snomed_code, t.entries()[i].snomed_code);
  }
  EXPECT_EQ(again.stats().duplicates + again.stats().stop_word_filtered + again.stats().malformed, 0u);
}

TEST(Linking, CsvWriteReadRoundTrip) {
  const auto t = load_mapping_file(kFixture);
  std::stringstream buf;
  write_mapping_csv(buf, t.to_rows());
  const auto rows = read_mapping_csv(buf);
  ASSERT_EQ(rows.size(), t.size());
  EXPECT_EQ(rows[0].dmd_code, "42109611000001109");
}

TEST(Linking, CsvQuotingAndHeaders) {
  std::stringstream in(
      "\xEF\xBB\xBF" "SNOMED Code,Description,BNF Code\r\n"
      "123,\"Codeine, \"\"strong\"\" 30mg\nTablets\",0401\r\n");
  const auto rows = read_mapping_csv(in);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].snomed_code, "123");
  EXPECT_EQ(rows[0].description, "Codeine, \"strong\" 30mg\nTablets");
  EXPECT_EQ(rows[0].bnf_code, "0401");

  std::stringstream missing("code,text\n1,a\n");
  EXPECT_THROW(read_mapping_csv(missing), Error);
}

TEST(Linking, FuzzyLinkExactWord) {
  const auto t = load_mapping_file(kFixture);
  const auto r = fuzzy_link("paracetamol", t);
  ASSERT_TRUE(r.matched);
  EXPECT_EQ(r.matched->score, 1.0);
  EXPECT_EQ(r.matched->entry.description, "paracetamol 500mg tablets");
  EXPECT_EQ(*r.snomed_url, "https://termbrowser.nhs.uk/?perspective=full&conceptId1=322236009");
  EXPECT_EQ(r.bnf_url, "https://bnf.nice.org.uk/search/?q=paracetamol");
}

TEST(Linking, FuzzyLinkOneTypo) {
  const auto t = load_mapping_file(kFixture);
  const auto r = fuzzy_link("Paracetamoll", t);
  ASSERT_TRUE(r.matched);
  EXPECT_NEAR(r.matched->score, 1.0 - 1.0 / 12.0, 1e-12);
  EXPECT_EQ(r.matched->entry.snomed_code, "322236009");
}

TEST(Linking, NoMatchStillHasBnfUrl) {
  const auto t = load_mapping_file(kFixture);
  const auto r = fuzzy_link("zzzzz", t);
  EXPECT_FALSE(r.matched);
  EXPECT_FALSE(r.snomed_url);
  EXPECT_EQ(r.bnf_url, "https://bnf.nice.org.uk/search/?q=zzzzz");
  EXPECT_THROW(fuzzy_link("   ", t), Error);
}

TEST(Linking, FullDescriptionCanWin) {
  const auto t = load_mapping_file(kFixture);
  const auto r = fuzzy_link("morphine sulfate 10mg/5ml oral solution", t);
  ASSERT_TRUE(r.matched);
  EXPECT_EQ(r.matched->score, 1.0);
  EXPECT_EQ(r.bnf_url, "https://bnf.nice.org.uk/search/?q=morphine%20sulfate%2010mg%2F5ml%20oral%20solution");
}

TEST(Linking, TiesGoToFirstEntry) {
  std::vector<RawMappingRow> rows{row("1", "ramipril 5mg"), row("2", "ramipril 10mg")};
  const auto t = MappingTable::load_and_clean(rows);
  EXPECT_EQ(fuzzy_link("ramipril", t).matched->entry.snomed_code, "1");
}

TEST(Linking, ThresholdRespected) {
  const auto t = load_mapping_file(kFixture);
  gen::Rng rng(2);
  for (int iter = 0; iter < 200; ++iter) {
    const std::string q = gen::word(rng) + gen::word(rng);
    const double th = rng.unit();
    const auto r = fuzzy_link(q, t, th);
    if (r.matched) ASSERT_GE(r.matched->score, th);
    ASSERT_EQ(r.matched.has_value(), r.snomed_url.has_value());
  }
}

TEST(Linking, EntityRuns) {
  const auto l = [](const char* s) { return label_index(s); };
  const std::vector<LabelId> labels{l("B-Drug"), l("I-Drug"), l("O"), l("B-Drug"), l("B-Drug"),
                                    l("I-Form"), l("I-Drug")};
  const auto runs = entity_runs(labels);
  ASSERT_EQ(runs.size(), 4u);
  EXPECT_EQ(runs[0].begin, 0u);
  EXPECT_EQ(runs[0].end, 2u);
  EXPECT_EQ(runs[1].begin, 3u);
  EXPECT_EQ(runs[1].end, 5u);
  EXPECT_EQ(LabelScheme::canonical().collapsed_labels()[runs[2].entity_class], "Form");
}

TEST(Linking, LinkDocument) {
  const auto t = load_mapping_file(kFixture);
  const std::vector<std::string> words{"amoxicillin", "trihydrate", "500mg"};
  const std::vector<LabelId> labels{label_index("B-Drug"), label_index("I-Drug"), 0};
  const auto links = link_document(words, labels, t);
  ASSERT_EQ(links.size(), 1u);
  EXPECT_EQ(links[0].result.query, "amoxicillin trihydrate");

  EXPECT_TRUE(link_document(words, std::vector<LabelId>(3, 0), t).empty());

  const std::vector<std::string> two{"warfarin", "and", "ramipril"};
  const std::vector<LabelId> sep{label_index("B-Drug"), 0, label_index("B-Drug")};
  const auto both = link_document(two, sep, t);
  ASSERT_EQ(both.size(), 2u);
  EXPECT_EQ(both[1].result.matched->entry.snomed_code, "318885001");

  EXPECT_THROW(link_document(two, std::span<const LabelId>(labels).first(2), t), Error);
}

TEST(Linking, LinkOtherClassesOnRequest) {
  const auto t = load_mapping_file(kFixture);
  const std::vector<std::string> words{"tablets"};
  const std::vector<LabelId> labels{label_index("B-Form")};
  EXPECT_TRUE(link_document(words, labels, t).empty());
  LinkOptions opts;
  opts.classes = {LabelScheme::canonical().collapsed_index("Form")};
  EXPECT_EQ(link_document(words, labels, t, opts).size(), 1u);
}

TEST(Linking, PercentEncode) {
  EXPECT_EQ(percent_encode("a b&c/é"), "a%20b%26c%2F%C3%A9");
  EXPECT_EQ(percent_encode("AZaz09-_.~"), "AZaz09-_.~");
}

TEST(Linking, DeterministicLookup) {
  const auto t = load_mapping_file(kFixture);
  const auto a = fuzzy_link("atorvastatn", t);
  const auto b = fuzzy_link("atorvastatn", t);
  ASSERT_TRUE(a.matched);
  EXPECT_EQ(a.matched->entry.snomed_code, b.matched->entry.snomed_code);
  EXPECT_EQ(a.matched->score, b.matched->score);
}
