#include "readlens/textmetrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "readlens/error.hpp"

namespace readlens {

namespace {

bool is_vowel(char c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y': return true;
    default: return false;
  }
}

bool is_word_char(unsigned char c) {
  return std::isalnum(c) || c >= 0x80;
}

std::string strip_punctuation(std::string_view token) {
  std::size_t b = 0;
  std::size_t e = token.size();
  while (b < e && !is_word_char(static_cast<unsigned char>(token[b]))) ++b;
  while (e > b && !is_word_char(static_cast<unsigned char>(token[e - 1]))) --e;
  return std::string(token.substr(b, e - b));
}

}  // namespace

int count_syllables(std::string_view word) {
  std::string w;
  for (char c : word) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (w.empty()) return 1;
  int runs = 0;
  bool in_run = false;
  for (char c : w) {
    bool v = is_vowel(c);
    if (v && !in_run) ++runs;
    in_run = v;
  }
  const std::size_t n = w.size();
  if (n >= 2 && w[n - 1] == 'e' && !is_vowel(w[n - 2])) {
    const bool consonant_le = w[n - 2] == 'l' && n >= 3 && !is_vowel(w[n - 3]);
    if (!consonant_le) --runs;
  }
  return std::max(1, runs);
}

TextComplexity flesch_kincaid(std::string_view text) {
  TextComplexity tc;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) {
    auto word = strip_punctuation(token);
    if (word.empty()) continue;
    ++tc.word_count;
    tc.syllable_count += count_syllables(word);
  }
  if (tc.word_count == 0) {
    throw Error(ErrorCode::EmptyText, "text has no words");
  }
  // A sentence closes at each run of terminators that follows word content;
  // trailing words without a terminator form one more sentence.
  bool pending_words = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.' || c == '!' || c == '?') {
      if (pending_words) ++tc.sentence_count;
      pending_words = false;
    } else if (is_word_char(static_cast<unsigned char>(c))) {
      pending_words = true;
    }
  }
  if (pending_words) ++tc.sentence_count;
  tc.sentence_count = std::max(1, tc.sentence_count);

  const double words = tc.word_count;
  tc.flesch_kincaid_grade = 0.39 * (words / tc.sentence_count) +
                            11.8 * (tc.syllable_count / words) - 15.59;
  return tc;
}

ScoreDistribution score_distribution(const std::vector<StudentResponse>& responses,
                                     const AssessmentContent& assessment) {
  ScoreDistribution sd;
  std::map<std::string, std::size_t> slot;
  for (const auto& q : assessment.questions) {
    slot[q.id] = sd.questions.size();
    sd.questions.push_back({q.id, 0, 0, 0.0});
  }
  for (const auto& r : responses) {
    auto it = slot.find(r.question_id);
    if (it == slot.end()) {
      throw Error(ErrorCode::UnknownQuestion,
                  "response from " + r.student_id + " cites unknown question '" +
                      r.question_id + "'");
    }
    auto& q = sd.questions[it->second];
    ++q.respondents;
    q.correct += r.correct ? 1 : 0;
    sd.student_totals[r.student_id] += r.correct ? 1 : 0;
  }
  for (auto& q : sd.questions) {
    q.accuracy = q.respondents > 0
                     ? static_cast<double>(q.correct) / q.respondents
                     : 0.0;
  }
  sd.histogram.assign(assessment.questions.size() + 1, 0);
  if (!sd.student_totals.empty()) {
    sd.min = sd.student_totals.begin()->second;
    sd.max = sd.min;
    double sum = 0.0;
    for (const auto& [id, total] : sd.student_totals) {
      sum += total;
      sd.min = std::min(sd.min, total);
      sd.max = std::max(sd.max, total);
      if (static_cast<std::size_t>(total) >= sd.histogram.size()) {
        sd.histogram.resize(static_cast<std::size_t>(total) + 1, 0);
      }
      ++sd.histogram[static_cast<std::size_t>(total)];
    }
    const double n = static_cast<double>(sd.student_totals.size());
    sd.mean = sum / n;
    double var = 0.0;
    for (const auto& [id, total] : sd.student_totals) {
      var += (total - sd.mean) * (total - sd.mean);
    }
    sd.std = std::sqrt(var / n);
  }
  return sd;
}

}  // namespace readlens
