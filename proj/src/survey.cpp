#include "plumewatch/survey.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>

namespace plumewatch {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string to_string(SurveyVariable v) {
  switch (v) {
    case SurveyVariable::awareness: return "awareness";
    case SurveyVariable::self_efficacy: return "self_efficacy";
    case SurveyVariable::community_sense: return "community_sense";
  }
  return "?";
}

std::string to_string(WilcoxonMethod m) {
  switch (m) {
    case WilcoxonMethod::automatic: return "automatic";
    case WilcoxonMethod::exact: return "exact";
    case WilcoxonMethod::normal: return "normal-approx";
  }
  return "?";
}

namespace {

bool likert_ok(int v) { return v >= 1 && v <= 5; }

}  // namespace

ResponseStatus classify(const SurveyResponse& r) {
  if (r.malformed) return ResponseStatus::invalid;
  if (r.browsing < 1 || r.browsing > 5 || r.people_discussed < 0 || r.meetings < 0 || r.meetings > 12) {
    return ResponseStatus::invalid;
  }
  bool missing = false;
  for (std::size_t v = 0; v < 3; ++v) {
    for (const LikertPair* pair : {&r.before[v], &r.after[v]}) {
      for (int x : *pair) {
        if (x == 0) {
          missing = true;
        } else if (!likert_ok(x)) {
          return ResponseStatus::invalid;
        }
      }
    }
  }
  return missing ? ResponseStatus::incomplete : ResponseStatus::valid;
}

Participation participation_levels(const SurveyResponse& r) {
  Participation p;
  p.explore = static_cast<int>(std::count(r.explore_choices.begin(), r.explore_choices.end(), true));
  p.document = static_cast<int>(std::count(r.document_choices.begin(), r.document_choices.end(), true));
  p.share = static_cast<int>(std::count(r.share_choices.begin(), r.share_choices.end(), true));
  return p;
}

VariableScores variable_scores(const SurveyResponse& r, SurveyVariable v) {
  const auto i = static_cast<std::size_t>(v);
  const LikertPair& b = r.before[i];
  const LikertPair& a = r.after[i];
  for (int x : {b[0], b[1], a[0], a[1]}) {
    if (!likert_ok(x)) {
      throw ValidationError("invalid response " + r.respondent_id + ": incomplete or out-of-range " +
                                to_string(v) + " answers",
                            to_string(v));
    }
  }
  VariableScores s;
  s.before = (b[0] + b[1]) / 2.0;
  s.after = (a[0] + a[1]) / 2.0;
  s.diff = s.after - s.before;
  return s;
}

std::vector<double> signed_rank_abs_ranks(std::span<const double> nonzero) {
  const std::size_t n = nonzero.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::fabs(nonzero[a]) < std::fabs(nonzero[b]); });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::fabs(nonzero[order[j + 1]]) == std::fabs(nonzero[order[i]])) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> t_ci95_half_width(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return std::nullopt;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : values) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
  return q * sd / std::sqrt(static_cast<double>(n));
}

namespace {

// P(W >= w_plus) under H0, with every sign pattern equally likely and ranks fixed.
// Works on doubled ranks so tied averages stay integral.
double exact_right_tail(const std::vector<double>& ranks, double w_plus) {
  std::vector<long long> doubled;
  long long total = 0;
  for (double r : ranks) {
    doubled.push_back(std::llround(2.0 * r));
    total += doubled.back();
  }
  std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
  counts[0] = 1.0;
  long long reach = 0;
  for (long long d : doubled) {
    for (long long s = reach; s >= 0; --s) {
      if (counts[s] != 0.0) counts[s + d] += counts[s];
    }
    reach += d;
  }
  const long long observed = std::llround(2.0 * w_plus);
  double tail = 0.0;
  for (long long s = std::max(0LL, observed); s <= total; ++s) tail += counts[s];
  return std::clamp(std::ldexp(tail, -static_cast<int>(ranks.size())), 0.0, 1.0);
}

double normal_right_tail(const std::vector<double>& ranks, double w_plus) {
  const double n = static_cast<double>(ranks.size());
  double tie_term = 0.0;
  std::vector<double> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
  if (var <= 0.0) return w_plus >= mean ? 1.0 : 0.0;
  const double z = (w_plus - mean - 0.5) / std::sqrt(var);
  return std::clamp(0.5 * std::erfc(z / std::sqrt(2.0)), 0.0, 1.0);
}

}  // namespace

TestResult wilcoxon_right(std::span<const double> diffs, WilcoxonMethod method) {
  if (diffs.empty()) throw ValidationError("wilcoxon: at least one difference is required", "diffs");
  for (double d : diffs) {
    if (!std::isfinite(d)) throw ValidationError("wilcoxon: non-finite difference", "diffs");
  }
  TestResult r;
  r.n_total = static_cast<int>(diffs.size());
  r.mean_diff = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(diffs.size());
  r.ci95_half_width = t_ci95_half_width(diffs);

  std::vector<double> nonzero;
  for (double d : diffs) {
    if (d != 0.0) nonzero.push_back(d);
  }
  r.n_effective = static_cast<int>(nonzero.size());
  if (nonzero.empty()) throw NoInformationError("wilcoxon: every difference is zero");

  const std::vector<double> ranks = signed_rank_abs_ranks(nonzero);
  for (std::size_t i = 0; i < nonzero.size(); ++i) {
    if (nonzero[i] > 0) r.w_plus += ranks[i];
  }
  if (method == WilcoxonMethod::automatic) {
    method = r.n_effective <= kExactCutoff ? WilcoxonMethod::exact : WilcoxonMethod::normal;
  }
  if (method == WilcoxonMethod::exact && r.n_effective > 1000) {
    throw ValidationError("wilcoxon: exact mode is limited to 1000 nonzero differences", "method");
  }
  r.method = method;
  r.p_right = method == WilcoxonMethod::exact ? exact_right_tail(ranks, r.w_plus)
                                              : normal_right_tail(ranks, r.w_plus);
  return r;
}

StudyResult run_study(std::span<const SurveyResponse> responses, WilcoxonMethod method) {
  StudyResult out;
  out.n_rows = responses.size();
  std::vector<const SurveyResponse*> valid;
  for (const SurveyResponse& r : responses) {
    switch (classify(r)) {
      case ResponseStatus::valid: valid.push_back(&r); break;
      case ResponseStatus::incomplete: ++out.n_incomplete; break;
      case ResponseStatus::invalid: ++out.n_invalid; break;
    }
  }
  out.n_valid = valid.size();
  if (valid.size() < 2) {
    throw ValidationError("survey needs at least two valid responses, got " + std::to_string(valid.size()),
                          "responses");
  }
  for (const SurveyResponse* r : valid) {
    const Participation p = participation_levels(*r);
    ++out.explore_hist[p.explore];
    ++out.document_hist[p.document];
    ++out.share_hist[p.share];
    for (std::size_t v = 0; v < 3; ++v) {
      for (int x : r->before[v]) ++out.likert_hist[v][0][x - 1];
      for (int x : r->after[v]) ++out.likert_hist[v][1][x - 1];
    }
  }
  for (SurveyVariable var : kSurveyVariables) {
    VariableResult vr;
    vr.variable = var;
    for (const SurveyResponse* r : valid) vr.diffs.push_back(variable_scores(*r, var).diff);
    try {
      vr.test = wilcoxon_right(vr.diffs, method);
    } catch (const NoInformationError&) {
    }
    out.variables.push_back(std::move(vr));
  }
  return out;
}

// --- CSV ---

std::vector<std::string> survey_csv_columns() {
  std::vector<std::string> cols = {"respondent_id"};
  for (int i = 1; i <= 5; ++i) cols.push_back("explore_" + std::to_string(i));
  for (int i = 1; i <= 3; ++i) cols.push_back("document_" + std::to_string(i));
  for (int i = 1; i <= 4; ++i) cols.push_back("share_" + std::to_string(i));
  for (const char* c : {"browsing", "people_discussed", "meetings", "age_band", "education_band"}) {
    cols.emplace_back(c);
  }
  for (SurveyVariable v : kSurveyVariables) {
    for (const char* phase : {"before", "after"}) {
      for (int i = 1; i <= 2; ++i) cols.push_back(to_string(v) + "_" + phase + "_" + std::to_string(i));
    }
  }
  return cols;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::optional<int> parse_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  try {
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

}  // namespace

std::vector<SurveyResponse> read_survey_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("survey csv is empty", "in");
  const std::vector<std::string> header = split_csv(line);
  std::map<std::string, std::size_t> at;
  for (std::size_t i = 0; i < header.size(); ++i) at[header[i]] = i;
  for (const std::string& c : survey_csv_columns()) {
    if (!at.count(c)) throw ValidationError("survey csv is missing column '" + c + "'", "in");
  }

  std::vector<SurveyResponse> out;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_csv(line);
    SurveyResponse r;
    auto cell = [&](const std::string& name) -> std::string {
      const std::size_t i = at.at(name);
      if (i >= cells.size()) {
        r.malformed = true;
        return {};
      }
      return cells[i];
    };
    auto integer = [&](const std::string& name) {
      auto v = parse_int(cell(name));
      if (!v) r.malformed = true;
      return v.value_or(0);
    };
    auto flag = [&](const std::string& name) {
      const int v = integer(name);
      if (v != 0 && v != 1) r.malformed = true;
      return v == 1;
    };
    r.respondent_id = cell("respondent_id");
    for (int i = 0; i < 5; ++i) r.explore_choices[i] = flag("explore_" + std::to_string(i + 1));
    for (int i = 0; i < 3; ++i) r.document_choices[i] = flag("document_" + std::to_string(i + 1));
    for (int i = 0; i < 4; ++i) r.share_choices[i] = flag("share_" + std::to_string(i + 1));
    r.browsing = integer("browsing");
    r.people_discussed = integer("people_discussed");
    r.meetings = integer("meetings");
    r.age_band = cell("age_band");
    r.education_band = cell("education_band");
    for (SurveyVariable v : kSurveyVariables) {
      const auto vi = static_cast<std::size_t>(v);
      for (int i = 0; i < 2; ++i) {
        for (bool after : {false, true}) {
          const std::string text = cell(to_string(v) + (after ? "_after_" : "_before_") + std::to_string(i + 1));
          int value = 0;
          if (!text.empty()) {
            auto parsed = parse_int(text);
            if (!parsed) r.malformed = true;
            value = parsed.value_or(0);
          }
          (after ? r.after : r.before)[vi][i] = value;
        }
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_study(const StudyResult& s, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  json vars = json::array();
  std::ostringstream csv;
  csv.precision(17);
  csv << "variable,n_total,n_effective,w_plus,p_right,method,mean_diff,ci95_half_width\n";
  for (const VariableResult& v : s.variables) {
    json jv = {{"variable", to_string(v.variable)}, {"diffs", v.diffs}};
    if (v.test) {
      const TestResult& t = *v.test;
      jv["no_information"] = false;
      jv["n_total"] = t.n_total;
      jv["n_effective"] = t.n_effective;
      jv["w_plus"] = t.w_plus;
      jv["p_right"] = t.p_right;
      jv["method"] = to_string(t.method);
      jv["mean_diff"] = t.mean_diff;
      jv["ci95_half_width"] = t.ci95_half_width ? json(*t.ci95_half_width) : json(nullptr);
      csv << to_string(v.variable) << ',' << t.n_total << ',' << t.n_effective << ',' << t.w_plus << ','
          << t.p_right << ',' << to_string(t.method) << ',' << t.mean_diff << ',';
      if (t.ci95_half_width) csv << *t.ci95_half_width;
      csv << '\n';
    } else {
      jv["no_information"] = true;
      csv << to_string(v.variable) << ',' << v.diffs.size() << ",0,,,no-information,0,\n";
    }
    vars.push_back(jv);
  }
  json likert = json::object();
  for (SurveyVariable v : kSurveyVariables) {
    const auto& h = s.likert_hist[static_cast<std::size_t>(v)];
    likert[to_string(v)] = {{"before", h[0]}, {"after", h[1]}};
  }
  const json doc = {
      {"responses",
       {{"rows", s.n_rows}, {"valid", s.n_valid}, {"incomplete", s.n_incomplete}, {"invalid", s.n_invalid}}},
      {"variables", vars},
      {"participation", {{"explore", s.explore_hist}, {"document", s.document_hist}, {"share", s.share_hist}}},
      {"likert", likert}};
  std::ofstream j(out_dir / "results.json", std::ios::trunc);
  j << doc.dump(2) << '\n';
  std::ofstream c(out_dir / "results.csv", std::ios::trunc);
  c << csv.str();
  if (!j || !c) throw IoError("cannot write survey results to " + out_dir.string());
}

}  // namespace plumewatch
