#include "parasynth/prompt_engine.hpp"

#include <gtest/gtest.h>

#include "support/fixtures.hpp"

namespace parasynth {
namespace {

using testing::table_pair;

TEST(RenderPromptTest, ParaphraseSource) {
  const auto p = render_prompt({StrategyKind::paraphrase_src, 1}, table_pair());
  EXPECT_EQ(p.text, "얼마정도 대출을 원하세요?\nParaphrase the above sentence in Korean in 1 unique way.");
  EXPECT_EQ(p.pair_id, "p0001");
}

TEST(RenderPromptTest, ParaphraseTargetEmbedsTargetSide) {
  const auto p = render_prompt({StrategyKind::paraphrase_tgt, 1}, table_pair());
  EXPECT_EQ(p.text, "Wie viel Kredit möchten Sie haben?\nParaphrase the above sentence in German in 1 unique way.");
}

TEST(RenderPromptTest, MultiTarget) {
  const auto p = render_prompt({StrategyKind::multi_target, 3}, table_pair());
  EXPECT_EQ(p.text, "얼마정도 대출을 원하세요?\nTranslate the above sentence to German in 3 unique ways.");
}

TEST(RenderPromptTest, Storytelling) {
  const auto p = render_prompt({StrategyKind::storytelling, 3}, table_pair());
  EXPECT_EQ(p.text,
            "얼마정도 대출을 원하세요?\nWrite a three-sentence Korean story based on the above sentence, and translate "
            "each sentence into German.");
}

TEST(RenderPromptTest, CountWordsAndPlurals) {
  EXPECT_NE(render_prompt({StrategyKind::paraphrase_src, 2}, table_pair()).text.find("in 2 unique ways."),
            std::string::npos);
  EXPECT_NE(render_prompt({StrategyKind::storytelling, 10}, table_pair()).text.find("Write a ten-sentence"),
            std::string::npos);
  EXPECT_NE(render_prompt({StrategyKind::storytelling, 1}, table_pair()).text.find("Write a one-sentence"),
            std::string::npos);
  EXPECT_NE(render_prompt({StrategyKind::storytelling, 12}, table_pair()).text.find("Write a 12-sentence"),
            std::string::npos);
}

TEST(RenderPromptTest, ZeroCountIsPreconditionError) {
  EXPECT_THROW(render_prompt({StrategyKind::multi_target, 0}, table_pair()), PromptError);
}

TEST(RenderPromptTest, UnknownKindIsError) {
  EXPECT_THROW(render_prompt({static_cast<StrategyKind>(42), 1}, table_pair()), PromptError);
  EXPECT_THROW(strategy_kind_from_string("summarize"), PromptError);
  EXPECT_EQ(strategy_kind_from_string("multi_target"), StrategyKind::multi_target);
}

TEST(RenderPromptTest, SentenceAppearsOnceAndNoPlaceholdersRemain) {
  for (auto kind : {StrategyKind::paraphrase_src, StrategyKind::paraphrase_tgt, StrategyKind::multi_target,
                    StrategyKind::storytelling}) {
    for (int n : {1, 2, 3, 7, 11}) {
      const auto pair = table_pair();
      const auto text = render_prompt({kind, n}, pair).text;
      const std::string& embedded = kind == StrategyKind::paraphrase_tgt ? pair.target : pair.source;
      EXPECT_TRUE(text.starts_with(embedded + "\n"));
      EXPECT_EQ(text.find(embedded, 1), std::string::npos);
      EXPECT_EQ(text.find('['), std::string::npos);
      EXPECT_EQ(text, render_prompt({kind, n}, pair).text);
    }
  }
}

TEST(TemplateTextTest, KeepsPlaceholders) {
  EXPECT_EQ(template_text({StrategyKind::multi_target, 3}),
            "[original SRC sentence]\nTranslate the above sentence to [TGT language] in 3 unique ways.");
  EXPECT_EQ(template_text({StrategyKind::paraphrase_tgt, 1}),
            "[original TGT sentence]\nParaphrase the above sentence in [TGT language] in 1 unique way.");
}

}  // namespace
}  // namespace parasynth
