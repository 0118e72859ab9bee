#pragma once

// Shared test data: the Korean-German sample sentences with their paraphrase,
// multi-target and storytelling outputs, plus small generated corpora.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "parasynth/corpus_io.hpp"
#include "parasynth/response_parser.hpp"

namespace parasynth::testing {

inline const LanguageTag kKorean{"Korean", "ko"};
inline const LanguageTag kGerman{"German", "de"};

inline const std::string kOriginalKo = "얼마정도 대출을 원하세요?";
inline const std::string kOriginalDe = "Wie viel Kredit möchten Sie haben?";

inline const std::string kParaphraseKo = "대출을 얼마 정도 받고 싶으세요?";
inline const std::string kParaphraseDe = "Wie hoch soll der Kreditbetrag sein, den Sie beantragen möchten?";

inline const std::vector<std::string> kMultiTarget = {
    "Wie viel Darlehen möchten Sie?",
    "Wie viel Geld möchten Sie ausleihen?",
    "Wie viel Kredit benötigen Sie?",
};

inline const std::vector<StoryPair> kStory = {
    {"저는 대출을 1만 달러 정도 받고 싶습니다.",
     "Ich möchte gerne einen Kredit in Höhe von etwa 10.000 Dollar aufnehmen."},
    {"이 돈으로 비즈니스를 시작하려고 합니다.", "Ich möchte damit ein Geschäft starten."},
    {"대출 상환 기간은 3년 정도면 좋겠습니다.", "Die Rückzahlungsfrist für den Kredit sollte etwa 3 Jahre betragen."},
};

inline SentencePair table_pair() { return make_original("p0001", kOriginalKo, kOriginalDe, kKorean, kGerman); }

inline std::string two_digit(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%02zu", i);
  return buf;
}

/// `count` originals with ids p00, p01, ...
inline Corpus numbered_corpus(std::size_t count) {
  Corpus c{kKorean, kGerman, {}};
  for (std::size_t i = 0; i < count; ++i)
    c.pairs.push_back(make_original(two_digit(i), "문장 번호 " + std::to_string(i) + " 입니다.",
                                    "Das ist Satz Nummer " + std::to_string(i) + ".", kKorean, kGerman));
  return c;
}

inline std::string corpus_tsv(const Corpus& c) { return serialize_corpus(c, Format::tsv); }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("parasynth-test-" + std::to_string(rd()) + "-" +
             std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace parasynth::testing
