#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ecosim::text {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char delim);
std::vector<std::string_view> split_ws(std::string_view s);

// Strict: the whole token must be consumed.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

// Shortest representation that parses back to the same double.
std::string format_shortest(double v);
// printf %.<digits>g
std::string format_sig(double v, int digits);

// Iterates logical lines, keeping 1-based line numbers. CR before LF is dropped.
struct Line {
  std::size_t number;
  std::string_view content;
};
std::vector<Line> lines(std::string_view doc);

// INI-style document: `[section]` headers, `key = value` entries, `#` comments.
struct KvEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct KvSection {
  std::string name;
  std::size_t line = 0;
  std::vector<KvEntry> entries;

  const KvEntry* find(std::string_view key) const;
};

class KvDocument {
 public:
  // Throws Error(MalformedDocument) with line number on syntax errors.
  static KvDocument parse(std::string_view doc);

  const KvSection* section(std::string_view name) const;
  const std::vector<KvSection>& sections() const { return sections_; }

 private:
  std::vector<KvSection> sections_;
};

// Helpers raising Error(InvalidConfig) with the entry's line on bad values.
double kv_number(const KvEntry& e);
std::vector<double> kv_vector(const KvEntry& e);
bool kv_bool(const KvEntry& e);

}  // namespace ecosim::text
