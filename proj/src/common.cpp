#include "traitscore/hashing.hpp"
#include "traitscore/rng.hpp"
#include "traitscore/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <unordered_set>

namespace traitscore {

std::string StableHash::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(state_));
  return std::string(buf);
}

std::string stable_hash_hex(std::string_view bytes) {
  return StableHash().update(bytes).hex();
}

std::uint64_t stable_hash_u64(std::string_view bytes) {
  return StableHash().update(bytes).digest();
}

std::vector<std::size_t> SeededRng::sample_distinct(std::size_t k,
                                                    std::size_t n) {
  std::vector<std::size_t> picked;
  picked.reserve(k);
  std::unordered_set<std::size_t> seen;
  while (picked.size() < k) {
    std::size_t candidate = static_cast<std::size_t>(next_below(n));
    if (seen.insert(candidate).second) {
      picked.push_back(candidate);
    }
  }
  return picked;
}

namespace {

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return std::string(text.substr(begin, end - begin));
}

std::size_t word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    current.push_back(c);
    if (c == '.' || c == '!' || c == '?') {
      // Consume the full punctuation run, then break on whitespace/EOS.
      while (i + 1 < text.size() &&
             (text[i + 1] == '.' || text[i + 1] == '!' || text[i + 1] == '?')) {
        ++i;
        current.push_back(text[i]);
      }
      if (i + 1 >= text.size() || is_space(text[i + 1])) {
        std::string piece = trim(current);
        if (!piece.empty()) sentences.push_back(std::move(piece));
        current.clear();
      }
    }
  }
  std::string tail = trim(current);
  if (!tail.empty()) sentences.push_back(std::move(tail));
  return sentences;
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i]))) {
      return false;
    }
  }
  return true;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::string ordinal_word(std::size_t index_one_based) {
  switch (index_one_based) {
    case 1: return "first";
    case 2: return "second";
    case 3: return "third";
    case 4: return "fourth";
    case 5: return "fifth";
    default: return std::to_string(index_one_based) + "th";
  }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return std::string(buf);
}

}  // namespace traitscore
