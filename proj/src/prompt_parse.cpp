#include <algorithm>
#include <cctype>
#include <regex>

#include "deepnote/prompt.hpp"

namespace deepnote {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : trim(s)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

struct Marker {
  std::size_t start;  // first digit
  std::size_t end;    // first byte after the marker's trailing whitespace
  int value;
};

// Markers look like "<digits>." or "<digits>)" preceded by start-of-text or
// whitespace and followed by whitespace. Only the run 1, 2, 3, ... is kept.
std::vector<Marker> sequential_markers(std::string_view text) {
  std::vector<Marker> out;
  int expected = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) continue;
    if (i > 0 && !std::isspace(static_cast<unsigned char>(text[i - 1]))) continue;
    std::size_t j = i;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    if (j - i > 3 || j >= text.size() || (text[j] != '.' && text[j] != ')')) continue;
    std::size_t k = j + 1;
    if (k < text.size() && !std::isspace(static_cast<unsigned char>(text[k]))) continue;
    int value = std::stoi(std::string(text.substr(i, j - i)));
    if (value != expected) continue;
    while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
    out.push_back(Marker{i, k, value});
    ++expected;
    i = k == 0 ? 0 : k - 1;
  }
  return out;
}

std::string_view strip_bullet(std::string_view line) {
  line = trim(line);
  if (line.size() >= 2 && (line[0] == '-' || line[0] == '*') && std::isspace(static_cast<unsigned char>(line[1]))) {
    line = trim(line.substr(2));
  }
  return line;
}

}  // namespace

bool parse_status(std::string_view text) {
  static const std::regex pattern(R"re(["']?status["']?\s*:\s*["']?\s*(true|false)\b)re",
                                  std::regex::ECMAScript | std::regex::icase);
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(text.begin(), text.end(), m, pattern)) {
    throw ParseError("no status token in model output");
  }
  char first = static_cast<char>(std::tolower(static_cast<unsigned char>(*m[1].first)));
  return first == 't';
}

std::string canonical_status(bool value) { return value ? R"({"status":"True"})" : R"({"status":"False"})"; }

std::vector<std::string> parse_queries(std::string_view text, int max_n) {
  if (max_n < 1) throw ConfigError("max_n must be >= 1");
  std::vector<std::string> items;
  auto markers = sequential_markers(text);
  if (!markers.empty()) {
    for (std::size_t i = 0; i < markers.size(); ++i) {
      std::size_t end = i + 1 < markers.size() ? markers[i + 1].start : text.size();
      items.push_back(collapse_whitespace(text.substr(markers[i].end, end - markers[i].end)));
    }
  } else {
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      items.push_back(collapse_whitespace(strip_bullet(text.substr(pos, nl - pos))));
      pos = nl + 1;
    }
  }
  std::erase_if(items, [](const std::string& q) { return q.size() < 3; });
  if (items.empty()) throw ParseError("no queries in model output");
  if (items.size() > static_cast<std::size_t>(max_n)) items.resize(static_cast<std::size_t>(max_n));
  return items;
}

BestWorst parse_best_worst(std::string_view text) {
  static const std::regex best(R"re(["']?best_id["']?\s*:\s*["']?\s*(-?\d+))re",
                               std::regex::ECMAScript | std::regex::icase);
  static const std::regex worst(R"re(["']?worst_id["']?\s*:\s*["']?\s*(-?\d+))re",
                                std::regex::ECMAScript | std::regex::icase);
  std::match_results<std::string_view::const_iterator> mb, mw;
  if (!std::regex_search(text.begin(), text.end(), mb, best)) throw ParseError("no best_id in judge output");
  if (!std::regex_search(text.begin(), text.end(), mw, worst)) throw ParseError("no worst_id in judge output");
  try {
    return BestWorst{std::stoi(mb[1].str()), std::stoi(mw[1].str())};
  } catch (const std::out_of_range&) {
    throw ParseError("judge id out of range");
  }
}

}  // namespace deepnote
