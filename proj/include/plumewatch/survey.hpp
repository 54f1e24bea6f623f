#pragma once

#include <array>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plumewatch/error.hpp"

namespace plumewatch {

// All differences were zero, so the signed-rank test has nothing to rank.
class NoInformationError : public ValidationError {
 public:
  explicit NoInformationError(const std::string& what) : ValidationError(what, "diffs") {}
};

enum class SurveyVariable { awareness, self_efficacy, community_sense };
inline constexpr std::array<SurveyVariable, 3> kSurveyVariables = {
    SurveyVariable::awareness, SurveyVariable::self_efficacy, SurveyVariable::community_sense};
std::string to_string(SurveyVariable v);

// Two Likert answers; 0 marks a missing answer.
using LikertPair = std::array<int, 2>;

struct SurveyResponse {
  std::string respondent_id;
  std::array<bool, 5> explore_choices{};
  std::array<bool, 3> document_choices{};
  std::array<bool, 4> share_choices{};
  int browsing = 1;          // V_b, 1..5
  int people_discussed = 0;  // V_d, >= 0
  int meetings = 0;          // V_m, 0..12
  std::string age_band;
  std::string education_band;
  std::array<LikertPair, 3> before{};  // indexed by SurveyVariable
  std::array<LikertPair, 3> after{};
  bool malformed = false;  // a cell could not be parsed
};

enum class ResponseStatus { valid, incomplete, invalid };
ResponseStatus classify(const SurveyResponse& r);

struct Participation {
  int explore = 0;
  int document = 0;
  int share = 0;
  friend bool operator==(const Participation&, const Participation&) = default;
};
Participation participation_levels(const SurveyResponse& r);

struct VariableScores {
  double before = 0.0;
  double after = 0.0;
  double diff = 0.0;
};
// Throws ValidationError when a pair is incomplete or out of range.
VariableScores variable_scores(const SurveyResponse& r, SurveyVariable v);

enum class WilcoxonMethod { automatic, exact, normal };
std::string to_string(WilcoxonMethod m);

inline constexpr int kExactCutoff = 20;

struct TestResult {
  int n_total = 0;      // all diffs, zeros included
  int n_effective = 0;  // nonzero diffs
  double w_plus = 0.0;
  double p_right = 1.0;
  WilcoxonMethod method = WilcoxonMethod::exact;  // exact or normal after resolution
  double mean_diff = 0.0;
  std::optional<double> ci95_half_width;  // absent for a single diff
};

// Right-tailed signed-rank test. `automatic` uses the exact null distribution for
// n_effective <= 20 and the tie-corrected normal approximation above that.
TestResult wilcoxon_right(std::span<const double> diffs,
                          WilcoxonMethod method = WilcoxonMethod::automatic);

// Average ranks of |x| for the nonzero entries, in input order.
std::vector<double> signed_rank_abs_ranks(std::span<const double> nonzero);

// Student-t 95% half width for the mean; nullopt for fewer than two values.
std::optional<double> t_ci95_half_width(std::span<const double> values);

struct VariableResult {
  SurveyVariable variable = SurveyVariable::awareness;
  std::vector<double> diffs;
  std::optional<TestResult> test;  // absent when no information
};

struct StudyResult {
  std::size_t n_rows = 0;
  std::size_t n_valid = 0;
  std::size_t n_incomplete = 0;
  std::size_t n_invalid = 0;
  std::vector<VariableResult> variables;
  // Index = number of selected choices.
  std::array<std::size_t, 6> explore_hist{};
  std::array<std::size_t, 4> document_hist{};
  std::array<std::size_t, 5> share_hist{};
  // [variable][before=0/after=1][likert-1], counting every item answer.
  std::array<std::array<std::array<std::size_t, 5>, 2>, 3> likert_hist{};
};

StudyResult run_study(std::span<const SurveyResponse> responses,
                      WilcoxonMethod method = WilcoxonMethod::automatic);

// Reads the respondent CSV documented in the README. Unparsable cells mark the
// row malformed rather than aborting, so it can be excluded and counted. Empty
// Likert cells are missing answers.
std::vector<SurveyResponse> read_survey_csv(std::istream& in);
std::vector<std::string> survey_csv_columns();

// Writes results.json and results.csv.
void write_study(const StudyResult& result, const std::filesystem::path& out_dir);

}  // namespace plumewatch
