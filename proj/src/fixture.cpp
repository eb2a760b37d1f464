#include "readlens/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include <json.hpp>

#include "readlens/format.hpp"
#include "readlens/gaze_events.hpp"

namespace readlens {

namespace {

constexpr std::array<int, 3> kLinesPerPage = {14, 13, 13};
constexpr int kLineCount = 40;
constexpr double kLineX0 = 40.0;
constexpr double kLineX1 = 1000.0;
constexpr double kLineTop = 60.0;
constexpr double kLinePitch = 45.0;
constexpr double kLineHeight = 30.0;
constexpr BoundingBox kQuizPanel{1040.0, 40.0, 1500.0, 680.0};
constexpr double kSaccadeS = 0.033;
constexpr double kSampleNoisePx = 1.2;

const char* const kPassage =
    "In the summer of 1848, about three hundred people gathered in a small "
    "chapel in Seneca Falls, New York. They came to discuss the rights of "
    "women, who at the time could not vote, serve on juries, or in many states "
    "keep their own wages. The meeting produced a bold document declaring that "
    "all men and women are created equal. Its most controversial demand was "
    "the right to vote. Even some supporters worried that asking for the "
    "ballot would make the whole movement look foolish. "
    "For the next seventy years, activists argued, organized and marched. "
    "Susan B. Anthony traveled thousands of miles giving speeches, and in 1872 "
    "she was arrested for casting a ballot in Rochester. Elizabeth Cady Stanton "
    "wrote essays and petitions that were read across the country. Sojourner "
    "Truth reminded audiences that the fight for women's rights could not be "
    "separated from the fight against slavery and racial injustice. "
    "Progress came slowly and unevenly. Wyoming Territory granted women the "
    "vote in 1869, and several western states followed. In the East, however, "
    "lawmakers resisted. Many argued that politics would corrupt women or "
    "distract them from their families. Opponents even formed their own "
    "organizations to keep the ballot out of women's hands. "
    "By the early twentieth century, a new generation changed tactics. Alice "
    "Paul and Lucy Burns organized parades and stood silently outside the White "
    "House holding banners. When they were jailed, some refused to eat, and "
    "their harsh treatment in prison shocked the public. At the same time, "
    "Carrie Chapman Catt led a patient state-by-state campaign that built "
    "support in legislatures. "
    "World War One added pressure. Women worked in factories, volunteered as "
    "nurses and sold war bonds. Supporters asked how the nation could fight for "
    "democracy abroad while denying it to half its citizens at home. In 1919 "
    "Congress finally passed the Nineteenth Amendment. "
    "Ratification came down to Tennessee in August 1920. The vote was tied "
    "until a young legislator named Harry Burn changed his mind. He had "
    "received a letter from his mother urging him to support suffrage. His "
    "single vote made the amendment law, and more than twenty-six million "
    "women gained the right to vote. Yet many Black, Asian and Native American "
    "women would wait decades longer to cast a ballot freely.";

int page_of_line(int global_line) {
  int start = 0;
  for (std::size_t p = 0; p < kLinesPerPage.size(); ++p) {
    if (global_line < start + kLinesPerPage[p]) return static_cast<int>(p) + 1;
    start += kLinesPerPage[p];
  }
  return static_cast<int>(kLinesPerPage.size());
}

int first_line_of_page(int page) {
  int start = 0;
  for (int p = 1; p < page; ++p) start += kLinesPerPage[static_cast<std::size_t>(p - 1)];
  return start;
}

std::vector<int> words_per_line(const std::string& text) {
  std::istringstream in(text);
  int total = 0;
  for (std::string w; in >> w;) ++total;
  std::vector<int> counts(kLineCount, total / kLineCount);
  for (int i = 0; i < total % kLineCount; ++i) ++counts[static_cast<std::size_t>(i)];
  for (int& c : counts) c = std::max(c, 1);
  return counts;
}

struct ProfileParams {
  double fixation_s;
  double words_per_step;
  double regress_p;
  double skip_line_p;
  double jitter_px;
  double lookback_p;
  double lookback_lines;
  double quiz_time_s;
  double accuracy;
};

ProfileParams base_params(ReaderProfile p) {
  switch (p) {
    case ReaderProfile::Fluent:
      return {0.21, 1.6, 0.05, 0.02, 3.0, 0.35, 4.0, 6.0, 0.82};
    case ReaderProfile::Scanner:
      return {0.19, 2.8, 0.04, 0.35, 3.0, 0.15, 3.0, 5.0, 0.55};
    case ReaderProfile::Rereader:
      return {0.26, 1.1, 0.24, 0.02, 4.0, 0.8, 7.0, 9.0, 0.76};
    case ReaderProfile::Struggling:
      return {0.31, 0.9, 0.12, 0.08, 7.0, 0.3, 3.0, 12.0, 0.45};
  }
  return {};
}

struct PlannedFixation {
  double start_s;
  double duration_s;
  double x;
  double y;
};

class ReaderSim {
 public:
  ReaderSim(ProfileParams params, std::vector<int> words, std::uint64_t seed)
      : p_(params), words_(std::move(words)), rng_(seed) {}

  double now() const { return t_; }
  const std::vector<PlannedFixation>& fixations() const { return fixations_; }
  std::vector<PageEvent> page_events;

  void read_passage_until(double end_s) {
    while (t_ < end_s) {
      fixate_word(std::min(end_s, t_ + fixation_duration()));
      advance();
      if (line_ >= kLineCount) {
        line_ = 0;
        word_ = 0.0;
      }
    }
  }

  void look_at_panel(double until_s) {
    double x = kQuizPanel.x0 + 30.0;
    double y = kQuizPanel.y0 + 40.0;
    while (t_ < until_s) {
      fixate(x + normal(0.0, p_.jitter_px), y + normal(0.0, p_.jitter_px),
             std::min(until_s, t_ + fixation_duration()));
      x += 60.0 + 40.0 * uniform();
      if (x > kQuizPanel.x1 - 40.0) {
        x = kQuizPanel.x0 + 30.0;
        y += 36.0;
        if (y > kQuizPanel.y1 - 40.0) y = kQuizPanel.y0 + 40.0;
      }
    }
  }

  /// Re-reads a few lines around `target_line`.
  void look_back(int target_line) {
    line_ = std::clamp(target_line - 1, 0, kLineCount - 1);
    word_ = 0.0;
    const int lines = std::max(1, static_cast<int>(std::lround(
                                      p_.lookback_lines * (0.6 + 0.8 * uniform()))));
    const int stop = std::min(kLineCount, line_ + lines);
    int guard = 0;
    while (line_ < stop && guard++ < 80) {
      fixate_word(t_ + fixation_duration());
      advance();
    }
  }

  double quiz_time() { return p_.quiz_time_s * (0.6 + 0.8 * uniform()); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  double normal(double mean, double sd) {
    return std::normal_distribution<double>(mean, sd)(rng_);
  }

 private:
  double fixation_duration() {
    double d = p_.fixation_s * std::exp(normal(0.0, 0.3));
    return std::clamp(d, 0.09, 1.2);
  }

  void fixate(double x, double y, double end_s) {
    if (end_s - t_ > 1e-9) fixations_.push_back({t_, end_s - t_, x, y});
    t_ = end_s + kSaccadeS;
  }

  void fixate_word(double end_s) {
    const int page = page_of_line(line_);
    if (page != page_) {
      page_events.push_back({t_ - kSaccadeS / 2.0, page});
      page_ = page;
    }
    const int wc = words_[static_cast<std::size_t>(line_)];
    const double frac = std::clamp((word_ + 0.5) / wc, 0.0, 1.0);
    const double x = std::clamp(kLineX0 + frac * (kLineX1 - kLineX0), kLineX0 + 5.0,
                                kLineX1 - 5.0);
    const double y = kLineTop + kLinePitch * (line_ - first_line_of_page(page)) +
                     kLineHeight / 2.0 + normal(0.0, p_.jitter_px * 0.6);
    fixate(x + normal(0.0, p_.jitter_px), std::clamp(y, 0.0, 703.0), end_s);
  }

  void advance() {
    const int wc = words_[static_cast<std::size_t>(line_)];
    if (uniform() < p_.regress_p) {
      word_ -= 1.0 + 1.5 * uniform();
      if (word_ < 0.0) {
        if (line_ > 0 && uniform() < 0.3) {
          --line_;
          word_ = std::max(0.0, words_[static_cast<std::size_t>(line_)] - 1.0 - 2.0 * uniform());
        } else {
          word_ = 0.0;
        }
      }
      return;
    }
    word_ += p_.words_per_step * (0.5 + uniform());
    if (word_ >= wc) {
      line_ += uniform() < p_.skip_line_p ? 2 : 1;
      word_ = uniform();
    }
  }

  ProfileParams p_;
  std::vector<int> words_;
  std::mt19937_64 rng_;
  double t_ = 0.0;
  int line_ = 0;
  double word_ = 0.0;
  int page_ = 1;
  std::vector<PlannedFixation> fixations_;
};

/// Blends in a random share of another profile, then applies per-student
/// multiplicative noise, so cohorts overlap the way real classrooms do.
ProfileParams jitter_params(ReaderProfile profile, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> other_pick(0, 3);
  std::uniform_real_distribution<double> share(0.0, 0.4);
  const auto a = base_params(profile);
  const auto b = base_params(static_cast<ReaderProfile>(other_pick(rng)));
  const double w = share(rng);
  auto mix = [w](double x, double y) { return (1.0 - w) * x + w * y; };
  ProfileParams p{mix(a.fixation_s, b.fixation_s),     mix(a.words_per_step, b.words_per_step),
                  mix(a.regress_p, b.regress_p),       mix(a.skip_line_p, b.skip_line_p),
                  mix(a.jitter_px, b.jitter_px),       mix(a.lookback_p, b.lookback_p),
                  mix(a.lookback_lines, b.lookback_lines), mix(a.quiz_time_s, b.quiz_time_s),
                  mix(a.accuracy, b.accuracy)};
  std::normal_distribution<double> n(0.0, 0.2);
  auto scale = [&](double v) { return v * std::exp(n(rng)); };
  p.fixation_s = scale(p.fixation_s);
  p.words_per_step = scale(p.words_per_step);
  p.regress_p = std::clamp(scale(p.regress_p), 0.0, 0.6);
  p.skip_line_p = std::clamp(scale(p.skip_line_p), 0.0, 0.6);
  p.jitter_px = scale(p.jitter_px);
  p.lookback_p = std::clamp(scale(p.lookback_p), 0.0, 1.0);
  p.lookback_lines = scale(p.lookback_lines);
  p.quiz_time_s = scale(p.quiz_time_s);
  p.accuracy = std::clamp(scale(p.accuracy), 0.05, 0.98);
  return p;
}

/// Renders planned fixations as samples: fixations hold position with sensor
/// noise, saccades move linearly, blinks and short dropouts lose samples.
std::vector<GazeSample> render(const std::vector<PlannedFixation>& fixations,
                               double end_s, double rate_hz, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, kSampleNoisePx);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  std::vector<std::pair<double, double>> lost;
  for (const auto& f : fixations) {
    const double r = u(rng);
    if (r < 0.04) {
      const double len = 0.1 + 0.15 * u(rng);
      const double at = f.start_s + u(rng) * f.duration_s;
      lost.emplace_back(at, at + len);
    } else if (r < 0.07) {
      const double at = f.start_s + u(rng) * f.duration_s;
      lost.emplace_back(at, at + 2.5 / rate_hz);
    }
  }

  std::vector<GazeSample> out;
  const auto n = static_cast<std::size_t>(std::floor(end_s * rate_hz));
  out.reserve(n);
  std::size_t fi = 0;
  std::size_t li = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = std::round(static_cast<double>(k) / rate_hz * 1e4) / 1e4;
    GazeSample s;
    s.t_s = t;
    while (fi + 1 < fixations.size() && fixations[fi + 1].start_s <= t) ++fi;
    while (li < lost.size() && lost[li].second <= t) ++li;
    const bool dropped = li < lost.size() && lost[li].first <= t;
    if (!fixations.empty() && !dropped && t >= fixations.front().start_s) {
      const auto& f = fixations[fi];
      double x = f.x;
      double y = f.y;
      const double fix_end = f.start_s + f.duration_s;
      if (t >= fix_end && fi + 1 < fixations.size()) {
        const auto& g = fixations[fi + 1];
        const double a = std::clamp((t - fix_end) / (g.start_s - fix_end), 0.0, 1.0);
        x += a * (g.x - f.x);
        y += a * (g.y - f.y);
      }
      s.x_px = std::round((x + noise(rng)) * 10.0) / 10.0;
      s.y_px = std::round((y + noise(rng)) * 10.0) / 10.0;
      s.valid = true;
    }
    out.push_back(s);
  }
  return out;
}

constexpr std::array<double, 16> kQuestionEase = {1.15, 1.0, 1.05, 0.95, 1.1, 0.9,
                                                  0.95, 1.05, 1.1, 1.0, 1.05, 0.95,
                                                  0.7,  0.75, 0.9, 0.65};
/// Passage line that answers each question.
constexpr std::array<int, 16> kQuestionLine = {0, 20, 4, 32, 17, 26, 10, 3,
                                               35, 5, 18, 37, 14, 38, 12, 31};

}  // namespace

std::string_view to_string(ReaderProfile profile) {
  switch (profile) {
    case ReaderProfile::Fluent: return "fluent";
    case ReaderProfile::Scanner: return "scanner";
    case ReaderProfile::Rereader: return "rereader";
    case ReaderProfile::Struggling: return "struggling";
  }
  return "?";
}

std::vector<AoiRegion> fixture_layout(const std::string& passage_text) {
  const auto words = words_per_line(passage_text);
  std::vector<AoiRegion> layout;
  int global = 0;
  for (std::size_t p = 0; p < kLinesPerPage.size(); ++p) {
    const int page = static_cast<int>(p) + 1;
    layout.push_back({"page" + std::to_string(page), AoiKind::PassagePage, page,
                      {20.0, 40.0, 1020.0, 680.0}, std::nullopt, std::nullopt});
    for (int i = 0; i < kLinesPerPage[p]; ++i, ++global) {
      const double y0 = kLineTop + kLinePitch * i;
      char id[32];
      std::snprintf(id, sizeof id, "p%d_l%02d", page, i + 1);
      layout.push_back({id, AoiKind::PassageLine, page,
                        {kLineX0, y0, kLineX1, y0 + kLineHeight}, i + 1,
                        words[static_cast<std::size_t>(global)]});
    }
  }
  layout.push_back({"quiz", AoiKind::QuizPanel, 0, kQuizPanel, std::nullopt, std::nullopt});
  return layout;
}

AssessmentContent fixture_assessment() {
  AssessmentContent a;
  a.title = "Votes for Women: The Road to the Nineteenth Amendment";
  a.passage_text = kPassage;
  a.standards = {
      {"RI.8.1", "Cite the textual evidence that most strongly supports an analysis of the text"},
      {"RI.8.2", "Determine a central idea and summarize the text objectively"},
      {"RI.8.3", "Analyze connections among individuals, ideas or events"},
      {"RI.8.4", "Determine the meaning of words and phrases as used in the text"},
      {"RI.8.5", "Analyze how the structure of the text develops a key idea"},
      {"RI.8.6", "Determine the author's point of view or purpose"},
      {"RI.8.8", "Evaluate the argument and whether the evidence is sufficient"},
  };
  a.fluency_skills = {"reading rate", "sustained attention", "rereading to repair comprehension"};
  auto q = [&](std::string id, std::string text, std::vector<std::string> options,
               std::string correct, std::vector<std::string> codes) {
    a.questions.push_back({std::move(id), std::move(text), std::move(options),
                           std::move(correct), std::move(codes)});
  };
  q("Q1", "Where did the 1848 meeting about women's rights take place?",
    {"Rochester", "Seneca Falls", "Washington", "Nashville"}, "B", {"RI.8.1"});
  q("Q2", "Which statement best expresses the central idea of the passage?",
    {"Women won the vote soon after 1848",
     "Winning the vote took decades of varied, persistent effort",
     "The war alone explains why women gained the vote",
     "Western states opposed suffrage"},
    "B", {"RI.8.2"});
  q("Q3", "As used in the passage, the word 'controversial' most nearly means",
    {"widely accepted", "causing strong disagreement", "easy to explain", "rarely discussed"},
    "B", {"RI.8.4"});
  q("Q4", "How did World War One affect the suffrage movement?",
    {"It ended the movement", "It strengthened the argument about democracy",
     "It made women stop working", "It caused Wyoming to grant the vote"},
    "B", {"RI.8.3"});
  q("Q5", "Which detail shows that opponents actively worked against suffrage?",
    {"Opponents formed their own organizations", "Women sold war bonds",
     "Anthony traveled thousands of miles", "The chapel was small"},
    "A", {"RI.8.1"});
  q("Q6", "How did Alice Paul's tactics differ from Carrie Chapman Catt's?",
    {"Paul used public protest while Catt worked through legislatures",
     "Both only wrote essays", "Catt was jailed while Paul lobbied",
     "Neither supported the amendment"},
    "A", {"RI.8.3"});
  q("Q7", "Why does the author present events mostly in time order?",
    {"To compare two unrelated topics", "To show how the movement developed over time",
     "To list definitions", "To argue against the amendment"},
    "B", {"RI.8.5"});
  q("Q8", "Which word best describes the author's attitude toward the activists?",
    {"mocking", "respectful", "indifferent", "fearful"}, "B", {"RI.8.6"});
  q("Q9", "What led Harry Burn to change his vote?",
    {"A parade", "A letter from his mother", "A hunger strike", "A speech by Anthony"},
    "B", {"RI.8.1", "RI.8.3"});
  q("Q10", "Why did some supporters in 1848 hesitate to demand the vote?",
    {"They feared it would make the movement look foolish",
     "They thought women could already vote", "They lived in Wyoming",
     "The war had begun"},
    "A", {"RI.8.1"});
  q("Q11", "In the phrase 'keep the ballot out of women's hands', 'ballot' refers to",
    {"a kind of parade", "the right or act of voting", "a prison sentence",
     "a written petition"},
    "B", {"RI.8.4"});
  q("Q12", "Which sentence best summarizes the final paragraph?",
    {"Tennessee rejected the amendment",
     "One vote in Tennessee made the amendment law, though some women still faced barriers",
     "Harry Burn opposed suffrage to the end", "Congress passed the amendment in 1920"},
    "B", {"RI.8.2"});
  q("Q13", "How does the author support the claim that progress was uneven?",
    {"By contrasting western states with resisting eastern lawmakers",
     "By listing war bonds", "By describing the chapel",
     "By quoting Harry Burn's mother"},
    "A", {"RI.8.8"});
  q("Q14", "Why does the author note that many women waited decades longer to vote freely?",
    {"To show the victory was incomplete", "To suggest the amendment failed",
     "To praise Tennessee", "To explain the war"},
    "A", {"RI.8.6"});
  q("Q15", "What connection does the passage draw between Sojourner Truth and the wider struggle?",
    {"She linked women's rights to the fight against slavery and racial injustice",
     "She opposed the amendment", "She led the parades", "She founded Wyoming"},
    "A", {"RI.8.3"});
  q("Q16", "How does the paragraph about World War One contribute to the overall argument?",
    {"It shows a turning point that made opposition harder to defend",
     "It introduces an unrelated topic", "It proves women did not want to vote",
     "It describes the Seneca Falls meeting"},
    "A", {"RI.8.5", "RI.8.8"});
  return a;
}

FixtureDataset generate_fixture(const FixtureOptions& options) {
  FixtureDataset ds;
  ds.assessment = fixture_assessment();
  ds.layout = fixture_layout(ds.assessment.passage_text);
  const auto words = words_per_line(ds.assessment.passage_text);

  std::mt19937_64 master(options.seed);
  // Profiles in near-equal shares, shuffled over ids.
  std::vector<ReaderProfile> profiles;
  for (int i = 0; i < options.students; ++i) profiles.push_back(static_cast<ReaderProfile>(i % 4));
  std::shuffle(profiles.begin(), profiles.end(), master);

  const char letters[] = {'A', 'B', 'C', 'D'};
  for (int i = 0; i < options.students; ++i) {
    FixtureStudent st;
    st.id = std::to_string(101 + i);
    st.profile = profiles[static_cast<std::size_t>(i)];
    std::mt19937_64 rng(master());
    auto params = jitter_params(st.profile, rng);
    ReaderSim sim(params, words, rng());

    sim.page_events.push_back({0.0, 1});
    sim.read_passage_until(options.cold_read_s);
    st.timeline.student_id = st.id;
    st.timeline.cold_read = {0.0, options.cold_read_s};
    const double qa_start = options.cold_read_s + 0.5;
    sim.look_at_panel(qa_start);

    for (std::size_t q = 0; q < ds.assessment.questions.size(); ++q) {
      const auto& question = ds.assessment.questions[q];
      const double shown = sim.now();
      const double think = sim.quiz_time();
      sim.look_at_panel(sim.now() + think * 0.5);
      if (sim.uniform() < params.lookback_p) {
        sim.look_back(kQuestionLine[q % kQuestionLine.size()]);
      }
      sim.look_at_panel(sim.now() + think * 0.5);
      const double answered = sim.now();
      st.timeline.question_events.push_back({question.id, shown, answered});

      const double p_correct =
          std::clamp(params.accuracy * kQuestionEase[q % kQuestionEase.size()], 0.03, 0.97);
      StudentResponse r;
      r.student_id = st.id;
      r.question_id = question.id;
      r.correct = sim.uniform() < p_correct;
      if (r.correct) {
        r.chosen_option = question.correct_option;
      } else {
        std::vector<std::string> wrong;
        for (char c : letters) {
          if (std::string(1, c) != question.correct_option) wrong.emplace_back(1, c);
        }
        r.chosen_option = wrong[static_cast<std::size_t>(sim.uniform() * 3.0) % 3];
      }
      r.latency_s = std::round((answered - shown) * 1000.0) / 1000.0;
      ds.responses.push_back(std::move(r));
    }
    const double qa_end = std::ceil((sim.now() + 0.5) * 10.0) / 10.0;
    sim.look_at_panel(qa_end);
    st.timeline.qa = {qa_start, qa_end};
    st.timeline.page_events = sim.page_events;
    st.gaze = render(sim.fixations(), qa_end, options.sample_rate_hz, rng);
    ds.students.push_back(std::move(st));
  }
  return ds;
}

void write_fixture(const FixtureDataset& ds, const std::filesystem::path& dir,
                   std::uint64_t seed) {
  write_text_file(dir / "aoi_layout.json", serialize_aoi_layout(ds.layout).dump(2) + "\n");
  write_text_file(dir / "assessment.json",
                  serialize_assessment(ds.assessment).dump(2) + "\n");
  write_text_file(dir / "responses.csv", serialize_responses(ds.responses));
  std::string profiles = "student_id,profile\n";
  for (const auto& st : ds.students) {
    profiles += st.id + "," + std::string(to_string(st.profile)) + "\n";
    write_text_file(dir / "gaze" / (st.id + ".csv"), serialize_gaze_log(st.gaze));
    write_text_file(dir / "timelines" / (st.id + ".json"),
                    serialize_session_events(st.timeline).dump(2) + "\n");
  }
  write_text_file(dir / "profiles.csv", profiles);

  nlohmann::ordered_json cfg;
  cfg["paths"] = {{"gaze_dir", "gaze"},
                  {"timelines_dir", "timelines"},
                  {"aoi_layout", "aoi_layout.json"},
                  {"responses", "responses.csv"},
                  {"assessment", "assessment.json"},
                  {"out_dir", "out"}};
  cfg["screen"] = {{"width_cm", ds.geometry.width_cm},
                   {"height_cm", ds.geometry.height_cm},
                   {"width_px", ds.geometry.width_px},
                   {"height_px", ds.geometry.height_px},
                   {"viewing_distance_cm", ds.geometry.viewing_distance_cm}};
  const IvtParams ivt;
  cfg["ivt"] = {{"velocity_threshold_deg_s", ivt.velocity_threshold_deg_s},
                {"velocity_window_ms", ivt.velocity_window_ms},
                {"gap_fill_max_ms", ivt.gap_fill_max_ms},
                {"merge_max_gap_ms", ivt.merge_max_gap_ms},
                {"merge_max_angle_deg", ivt.merge_max_angle_deg},
                {"min_fixation_duration_ms", ivt.min_fixation_duration_ms},
                {"noise_filter_samples", ivt.noise_filter_samples}};
  cfg["clustering"] = {{"seed", seed}, {"k_min", 2}, {"k_max", 8},
                       {"gamma", 1.0},  {"method", "kmeans"}};
  cfg["llm"] = {{"base_url", "https://api.openai.com/v1"},
                {"model", "gpt-4o"},
                {"api_key_env", "LLM_API_KEY"},
                {"timeout_s", 60},
                {"report_retries", 3},
                {"evaluation_runs", 5},
                {"max_in_flight", 2}};
  write_text_file(dir / "config.json", cfg.dump(2) + "\n");
}

}  // namespace readlens
