#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "readlens/ingest.hpp"

namespace readlens {

struct TextComplexity {
  int word_count = 0;
  int sentence_count = 0;
  int syllable_count = 0;
  double flesch_kincaid_grade = 0.0;
};

/// Vowel-group syllable estimate: maximal runs of a,e,i,o,u,y, minus a
/// silent final 'e' after a consonant (a consonant + "le" ending keeps its
/// syllable), never below 1.
int count_syllables(std::string_view word);

/// Flesch-Kincaid grade: 0.39 words/sentence + 11.8 syllables/word - 15.59.
/// Sentences end at runs of . ! ?; words are whitespace tokens with leading
/// and trailing punctuation stripped. Throws EmptyText when no word remains.
TextComplexity flesch_kincaid(std::string_view text);

struct QuestionStats {
  std::string question_id;
  int respondents = 0;
  int correct = 0;
  double accuracy = 0.0;
};

struct ScoreDistribution {
  std::vector<QuestionStats> questions;  // assessment order
  std::map<std::string, int> student_totals;
  double mean = 0.0;
  double std = 0.0;  // population
  int min = 0;
  int max = 0;
  /// histogram[s] = students with total score s, for s in 0..question count.
  std::vector<int> histogram;
};

/// Throws UnknownQuestion when a response cites a question the assessment
/// does not define.
ScoreDistribution score_distribution(const std::vector<StudentResponse>& responses,
                                     const AssessmentContent& assessment);

}  // namespace readlens
