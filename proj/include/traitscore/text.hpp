#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace traitscore {

std::string trim(std::string_view text);

// Whitespace-delimited token count; the project-wide definition of word count.
std::size_t word_count(std::string_view text);

// Sentence segmentation for the clustering diagnostic: split on runs of
// sentence-final punctuation ([.!?]) followed by whitespace or end of text,
// trim the pieces, drop empties.
std::vector<std::string> split_sentences(std::string_view text);

bool starts_with_ci(std::string_view text, std::string_view prefix);

std::string to_lower(std::string_view text);

// "first", "second", ... "fifth"; falls back to "Nth" beyond that.
std::string ordinal_word(std::size_t index_one_based);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string format_double(double value);

}  // namespace traitscore
