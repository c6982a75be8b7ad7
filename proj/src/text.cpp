#include "ecosim/text.hpp"

#include <charconv>
#include <cstdio>

#include "ecosim/error.hpp"

namespace ecosim::text {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  // from_chars rejects a leading '+'
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string format_shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

std::string format_sig(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

std::vector<Line> lines(std::string_view doc) {
  std::vector<Line> out;
  std::size_t number = 1;
  std::size_t start = 0;
  while (start <= doc.size()) {
    auto pos = doc.find('\n', start);
    const bool last = pos == std::string_view::npos;
    if (last) pos = doc.size();
    auto content = doc.substr(start, pos - start);
    if (!content.empty() && content.back() == '\r') content.remove_suffix(1);
    if (!(last && content.empty())) out.push_back({number, content});
    if (last) break;
    start = pos + 1;
    ++number;
  }
  return out;
}

const KvEntry* KvSection::find(std::string_view key) const {
  for (const auto& e : entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

KvDocument KvDocument::parse(std::string_view doc) {
  KvDocument out;
  for (const auto& [number, raw] : lines(doc)) {
    auto line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw Error(ErrorCode::MalformedDocument, "bad section header", number);
      }
      out.sections_.push_back({std::string(trim(line.substr(1, line.size() - 2))), number, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::MalformedDocument, "expected key = value", number);
    }
    if (out.sections_.empty()) out.sections_.push_back({"", 0, {}});
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::MalformedDocument, "empty key", number);
    out.sections_.back().entries.push_back(
        {std::string(key), std::string(trim(line.substr(eq + 1))), number});
  }
  return out;
}

const KvSection* KvDocument::section(std::string_view name) const {
  for (const auto& s : sections_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

double kv_number(const KvEntry& e) {
  const auto v = parse_double(e.value);
  if (!v) throw Error(ErrorCode::InvalidConfig, "'" + e.key + "' is not a number", e.line);
  return *v;
}

std::vector<double> kv_vector(const KvEntry& e) {
  std::vector<double> out;
  for (const auto tok : split(e.value, ',')) {
    const auto v = parse_double(tok);
    if (!v) throw Error(ErrorCode::InvalidConfig, "'" + e.key + "' has a non-numeric element", e.line);
    out.push_back(*v);
  }
  return out;
}

bool kv_bool(const KvEntry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "on") return true;
  if (e.value == "false" || e.value == "0" || e.value == "off") return false;
  throw Error(ErrorCode::InvalidConfig, "'" + e.key + "' is not a boolean", e.line);
}

}  // namespace ecosim::text
