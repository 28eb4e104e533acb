#pragma once

// Lexicon and rule based caption sentiment (VADER rules). The compound score
// is the rule-adjusted valence sum s mapped through s / sqrt(s^2 + alpha).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace petwell {

struct SentimentScore {
  double compound = 0.0;
  double positive = 0.0;
  double negative = 0.0;
  double neutral = 1.0;
};

/// Numeric constants of the rule set. Loaded from "name = value" text so
/// they can be tuned without recompiling.
struct RuleConstants {
  double booster_increment = 0.293;
  double caps_increment = 0.733;
  double negation_scalar = -0.74;
  double normalization_alpha = 15.0;
  double exclamation_increment = 0.292;
  double exclamation_max_count = 4;
  double question_increment = 0.18;
  double question_max_count = 3;
  double question_cap = 0.96;
  double but_before_scale = 0.5;
  double but_after_scale = 1.5;
  double booster_distance2_scale = 0.95;
  double booster_distance3_scale = 0.9;
  double never_so_scale = 1.25;

  static RuleConstants parse(std::istream& in) {
    RuleConstants c;
    const std::map<std::string_view, double*> fields{
        {"booster_increment", &c.booster_increment},
        {"caps_increment", &c.caps_increment},
        {"negation_scalar", &c.negation_scalar},
        {"normalization_alpha", &c.normalization_alpha},
        {"exclamation_increment", &c.exclamation_increment},
        {"exclamation_max_count", &c.exclamation_max_count},
        {"question_increment", &c.question_increment},
        {"question_max_count", &c.question_max_count},
        {"question_cap", &c.question_cap},
        {"but_before_scale", &c.but_before_scale},
        {"but_after_scale", &c.but_after_scale},
        {"booster_distance2_scale", &c.booster_distance2_scale},
        {"booster_distance3_scale", &c.booster_distance3_scale},
        {"never_so_scale", &c.never_so_scale}};
    std::string line;
    while (std::getline(in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (eq == std::string::npos) throw std::runtime_error("rule constants: expected name = value: " + line);
      auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t\r"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        return s;
      };
      const auto key = trim(line.substr(0, eq));
      auto it = fields.find(key);
      if (it == fields.end()) throw std::runtime_error("rule constants: unknown name " + key);
      *it->second = std::stod(trim(line.substr(eq + 1)));
    }
    if (!(c.normalization_alpha > 0.0)) throw std::runtime_error("rule constants: normalization_alpha must be > 0");
    return c;
  }
};

/// token -> valence. Later duplicates override earlier ones.
using Lexicon = std::unordered_map<std::string, double>;

/// Reads "token<TAB>valence[<TAB>...]" lines.
inline Lexicon read_lexicon(std::istream& in) {
  Lexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    if (t1 == std::string::npos || t1 == 0)
      throw std::runtime_error("lexicon line " + std::to_string(lineno) + ": expected token<TAB>valence");
    const auto t2 = line.find('\t', t1 + 1);
    lex[line.substr(0, t1)] = std::stod(line.substr(t1 + 1, t2 == std::string::npos ? std::string::npos : t2 - t1 - 1));
  }
  return lex;
}

/// Single-code-point emoji (UTF-8) -> textual description.
using EmojiLexicon = std::unordered_map<std::string, std::string>;

inline EmojiLexicon read_emoji_lexicon(std::istream& in) {
  EmojiLexicon out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    const auto end = line.find('\t', tab + 1);
    out[line.substr(0, tab)] = line.substr(tab + 1, end == std::string::npos ? std::string::npos : end - tab - 1);
  }
  return out;
}

namespace detail {

/// Splits UTF-8 into code points (each kept as its byte sequence). Invalid
/// bytes become single-byte units.
inline std::vector<std::string_view> code_points(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
    if (i + len > s.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k)
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) len = 1;
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

inline bool is_space_cp(std::string_view cp) {
  if (cp.size() == 1) {
    const char c = cp[0];
    return c == ' ' || (c >= '\t' && c <= '\r') || (c >= '\x1c' && c <= '\x1f');
  }
  static const std::unordered_set<std::string_view> wide{
      "\u0085", "\u00A0", "\u1680", "\u2000", "\u2001", "\u2002", "\u2003", "\u2004", "\u2005", "\u2006", "\u2007", "\u2008", "\u2009", "\u200A", "\u2028", "\u2029", "\u202F", "\u205F", "\u3000"};
  return wide.contains(cp);
}

inline bool is_ascii_punct(char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

/// At least one cased letter and no lowercase letter (ASCII letters only).
inline bool is_upper(std::string_view s) {
  bool cased = false;
  for (char c : s) {
    if (c >= 'a' && c <= 'z') return false;
    if (c >= 'A' && c <= 'Z') cased = true;
  }
  return cased;
}

inline std::size_t cp_count(std::string_view s) { return code_points(s).size(); }

}  // namespace detail

/// Whitespace split; leading/trailing ASCII punctuation is stripped unless
/// that would leave two or fewer code points (which keeps emoticons such as
/// ":)" and ":D" intact). Case is preserved.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (auto cp : detail::code_points(text)) {
    if (detail::is_space_cp(cp)) {
      if (!cur.empty()) words.push_back(std::move(cur)), cur.clear();
    } else {
      cur.append(cp);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));

  for (auto& w : words) {
    std::size_t b = 0, e = w.size();
    while (b < e && detail::is_ascii_punct(w[b])) ++b;
    while (e > b && detail::is_ascii_punct(w[e - 1])) --e;
    std::string_view stripped(w.data() + b, e - b);
    if (detail::cp_count(stripped) > 2) w = std::string(stripped);
  }
  return words;
}

class SentimentAnalyzer {
 public:
  SentimentAnalyzer(Lexicon lexicon, RuleConstants constants = {}, EmojiLexicon emojis = {})
      : lexicon_(std::move(lexicon)), c_(constants), emojis_(std::move(emojis)) {
    const double inc = c_.booster_increment;
    for (const char* w : {"absolutely", "amazingly", "awfully", "completely", "considerable", "considerably",
                          "decidedly", "deeply", "effing", "enormous", "enormously", "entirely", "especially",
                          "exceptional", "exceptionally", "extreme", "extremely", "fabulously", "flipping",
                          "flippin", "frackin", "fracking", "fricking", "frickin", "frigging", "friggin", "fully",
                          "fuckin", "fucking", "fuggin", "fugging", "greatly", "hella", "highly", "hugely",
                          "incredible", "incredibly", "intensely", "major", "majorly", "more", "most",
                          "particularly", "purely", "quite", "really", "remarkably", "so", "substantially",
                          "thoroughly", "total", "totally", "tremendous", "tremendously", "uber", "unbelievably",
                          "unusually", "utter", "utterly", "very"})
      boosters_[w] = inc;
    for (const char* w : {"almost", "barely", "hardly", "just enough", "kind of", "kinda", "kindof", "kind-of",
                          "less", "little", "marginal", "marginally", "occasional", "occasionally", "partly",
                          "scarce", "scarcely", "slight", "slightly", "somewhat", "sort of", "sorta", "sortof",
                          "sort-of"})
      boosters_[w] = -inc;
  }

  /// Loads vader_lexicon.txt, emoji_utf8_lexicon.txt (optional) and
  /// rule_constants.txt (optional) from a directory.
  static SentimentAnalyzer from_directory(const std::filesystem::path& dir) {
    std::ifstream lex_in(dir / "vader_lexicon.txt");
    if (!lex_in) throw std::runtime_error("cannot open lexicon in " + dir.string());
    RuleConstants constants;
    if (std::ifstream rc(dir / "rule_constants.txt"); rc) constants = RuleConstants::parse(rc);
    EmojiLexicon emojis;
    if (std::ifstream em(dir / "emoji_utf8_lexicon.txt"); em) emojis = read_emoji_lexicon(em);
    return SentimentAnalyzer(read_lexicon(lex_in), constants, std::move(emojis));
  }

  const Lexicon& lexicon() const { return lexicon_; }
  const RuleConstants& constants() const { return c_; }

  SentimentScore score(std::string_view text) const {
    const std::string prepared = replace_emojis(text);
    const auto words = tokenize(prepared);
    std::vector<std::string> lower;
    lower.reserve(words.size());
    for (const auto& w : words) lower.push_back(detail::ascii_lower(w));

    std::size_t caps = 0;
    for (const auto& w : words) caps += detail::is_upper(w) ? 1 : 0;
    const bool cap_diff = caps > 0 && caps < words.size();

    std::vector<double> sentiments;
    sentiments.reserve(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (boosters_.contains(lower[i]) ||
          (i + 1 < words.size() && lower[i] == "kind" && lower[i + 1] == "of")) {
        sentiments.push_back(0.0);
        continue;
      }
      sentiments.push_back(valence_at(words, lower, i, cap_diff));
    }
    apply_but(lower, sentiments);
    return aggregate(sentiments, prepared);
  }

  double compound(std::string_view text) const { return score(text).compound; }

  double normalize(double s) const {
    const double n = s / std::sqrt(s * s + c_.normalization_alpha);
    return std::clamp(n, -1.0, 1.0);
  }

 private:
  bool in_lexicon(const std::string& w) const { return lexicon_.contains(w); }

  static bool negated(const std::string& lower_word) {
    static const std::unordered_set<std::string_view> negations{
        "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt", "ain't", "aren't", "can't",
        "couldn't", "daren't", "didn't", "doesn't", "dont", "hadnt", "hasnt", "havent", "isnt", "mightnt",
        "mustnt", "neither", "don't", "hadn't", "hasn't", "haven't", "isn't", "mightn't", "mustn't", "neednt",
        "needn't", "never", "none", "nope", "nor", "not", "nothing", "nowhere", "oughtnt", "shant", "shouldnt",
        "uhuh", "wasnt", "werent", "oughtn't", "shan't", "shouldn't", "uh-uh", "wasn't", "weren't", "without",
        "wont", "wouldnt", "won't", "wouldn't", "rarely", "seldom", "despite"};
    return negations.contains(lower_word) || lower_word.find("n't") != std::string::npos;
  }

  std::string replace_emojis(std::string_view text) const {
    std::string out;
    out.reserve(text.size());
    bool prev_space = true;
    for (auto cp : detail::code_points(text)) {
      if (!emojis_.empty()) {
        if (auto it = emojis_.find(std::string(cp)); it != emojis_.end()) {
          if (!prev_space) out += ' ';
          out += it->second;
          prev_space = false;
          continue;
        }
      }
      out.append(cp);
      prev_space = cp == " ";
    }
    // strip surrounding whitespace
    auto cps = detail::code_points(out);
    std::size_t b = 0, e = cps.size();
    while (b < e && detail::is_space_cp(cps[b])) ++b;
    while (e > b && detail::is_space_cp(cps[e - 1])) --e;
    if (b == e) return {};
    const auto start = static_cast<std::size_t>(cps[b].data() - out.data());
    const auto stop = static_cast<std::size_t>(cps[e - 1].data() - out.data()) + cps[e - 1].size();
    return out.substr(start, stop - start);
  }

  double scalar_inc_dec(const std::string& word, const std::string& lower, double valence, bool cap_diff) const {
    auto it = boosters_.find(lower);
    if (it == boosters_.end()) return 0.0;
    double scalar = it->second;
    if (valence < 0) scalar = -scalar;
    if (detail::is_upper(word) && cap_diff) scalar += valence > 0 ? c_.caps_increment : -c_.caps_increment;
    return scalar;
  }

  double valence_at(const std::vector<std::string>& words, const std::vector<std::string>& lower, std::size_t i,
                    bool cap_diff) const {
    auto it = lexicon_.find(lower[i]);
    if (it == lexicon_.end()) return 0.0;
    double valence = it->second;
    const std::size_t n = words.size();

    // "no" directly before another lexicon word acts as negation, not as its own sentiment
    if (lower[i] == "no" && i != n - 1 && in_lexicon(lower[i + 1])) valence = 0.0;
    if ((i > 0 && lower[i - 1] == "no") || (i > 1 && lower[i - 2] == "no") ||
        (i > 2 && lower[i - 3] == "no" && (lower[i - 1] == "or" || lower[i - 1] == "nor")))
      valence = it->second * c_.negation_scalar;

    if (detail::is_upper(words[i]) && cap_diff) valence += valence > 0 ? c_.caps_increment : -c_.caps_increment;

    for (std::size_t start = 0; start < 3; ++start) {
      if (i > start && !in_lexicon(lower[i - (start + 1)])) {
        double s = scalar_inc_dec(words[i - (start + 1)], lower[i - (start + 1)], valence, cap_diff);
        if (start == 1 && s != 0) s *= c_.booster_distance2_scale;
        if (start == 2 && s != 0) s *= c_.booster_distance3_scale;
        valence += s;
        valence = negation_check(valence, lower, start, i);
        if (start == 2) valence = special_idioms_check(valence, lower, i);
      }
    }
    return least_check(valence, lower, i);
  }

  double negation_check(double valence, const std::vector<std::string>& w, std::size_t start, std::size_t i) const {
    if (start == 0) {
      if (negated(w[i - 1])) valence *= c_.negation_scalar;
    } else if (start == 1) {
      if (w[i - 2] == "never" && (w[i - 1] == "so" || w[i - 1] == "this")) {
        valence *= c_.never_so_scale;
      } else if (w[i - 2] == "without" && w[i - 1] == "doubt") {
      } else if (negated(w[i - 2])) {
        valence *= c_.negation_scalar;
      }
    } else {
      // operator precedence mirrors the reference rules: the "so"/"this" test
      // on the adjacent word stands on its own
      if ((w[i - 3] == "never" && (w[i - 2] == "so" || w[i - 2] == "this")) ||
          (w[i - 1] == "so" || w[i - 1] == "this")) {
        valence *= c_.never_so_scale;
      } else if (w[i - 3] == "without" && (w[i - 2] == "doubt" || w[i - 1] == "doubt")) {
      } else if (negated(w[i - 3])) {
        valence *= c_.negation_scalar;
      }
    }
    return valence;
  }

  double special_idioms_check(double valence, const std::vector<std::string>& w, std::size_t i) const {
    static const std::unordered_map<std::string, double> special{
        {"the shit", 3},      {"the bomb", 3},     {"bad ass", 1.5},     {"badass", 1.5},
        {"bus stop", 0.0},    {"yeah right", -2},  {"kiss of death", -1.5}, {"to die for", 3},
        {"beating heart", 3.5}};
    const std::string onezero = w[i - 1] + " " + w[i];
    const std::string twoonezero = w[i - 2] + " " + w[i - 1] + " " + w[i];
    const std::string twoone = w[i - 2] + " " + w[i - 1];
    const std::string threetwoone = w[i - 3] + " " + w[i - 2] + " " + w[i - 1];
    const std::string threetwo = w[i - 3] + " " + w[i - 2];
    for (const auto* seq : {&onezero, &twoonezero, &twoone, &threetwoone, &threetwo}) {
      if (auto it = special.find(*seq); it != special.end()) {
        valence = it->second;
        break;
      }
    }
    if (w.size() - 1 > i) {
      if (auto it = special.find(w[i] + " " + w[i + 1]); it != special.end()) valence = it->second;
    }
    if (w.size() - 1 > i + 1) {
      if (auto it = special.find(w[i] + " " + w[i + 1] + " " + w[i + 2]); it != special.end()) valence = it->second;
    }
    for (const auto* gram : {&threetwoone, &threetwo, &twoone}) {
      if (auto it = boosters_.find(*gram); it != boosters_.end()) valence += it->second;
    }
    return valence;
  }

  double least_check(double valence, const std::vector<std::string>& w, std::size_t i) const {
    if (i > 1 && !in_lexicon(w[i - 1]) && w[i - 1] == "least") {
      if (w[i - 2] != "at" && w[i - 2] != "very") valence *= c_.negation_scalar;
    } else if (i > 0 && !in_lexicon(w[i - 1]) && w[i - 1] == "least") {
      valence *= c_.negation_scalar;
    }
    return valence;
  }

  void apply_but(const std::vector<std::string>& lower, std::vector<double>& sentiments) const {
    auto it = std::find(lower.begin(), lower.end(), "but");
    if (it == lower.end()) return;
    const auto bi = static_cast<std::size_t>(it - lower.begin());
    for (std::size_t si = 0; si < sentiments.size(); ++si) {
      if (si < bi) sentiments[si] *= c_.but_before_scale;
      else if (si > bi) sentiments[si] *= c_.but_after_scale;
    }
  }

  double punctuation_emphasis(std::string_view text) const {
    const auto ep = static_cast<double>(std::count(text.begin(), text.end(), '!'));
    const auto qm = static_cast<double>(std::count(text.begin(), text.end(), '?'));
    double amp = std::min(ep, c_.exclamation_max_count) * c_.exclamation_increment;
    if (qm > 1) amp += qm <= c_.question_max_count ? qm * c_.question_increment : c_.question_cap;
    return amp;
  }

  SentimentScore aggregate(const std::vector<double>& sentiments, std::string_view text) const {
    if (sentiments.empty()) return {};
    double sum = 0.0;
    for (double s : sentiments) sum += s;
    const double amp = punctuation_emphasis(text);
    if (sum > 0) sum += amp;
    else if (sum < 0) sum -= amp;

    double pos = 0.0, neg = 0.0, neu = 0.0;
    for (double s : sentiments) {
      if (s > 0) pos += s + 1;
      if (s < 0) neg += s - 1;
      if (s == 0) neu += 1;
    }
    if (pos > std::abs(neg)) pos += amp;
    else if (pos < std::abs(neg)) neg -= amp;
    const double total = pos + std::abs(neg) + neu;
    return {normalize(sum), std::abs(pos / total), std::abs(neg / total), std::abs(neu / total)};
  }

  Lexicon lexicon_;
  RuleConstants c_;
  EmojiLexicon emojis_;
  std::unordered_map<std::string, double> boosters_;
};

}  // namespace petwell
