#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace refine {

/// NFC, trim, and collapse internal whitespace runs to one space. Case is kept.
std::string canonicalize(std::string_view text);

/// Lowercase NFC form with surrounding whitespace and ASCII punctuation removed
/// and internal whitespace collapsed. Idempotent.
std::string normalize_answer(std::string_view text);

/// Unicode-aware whitespace trim.
std::string trim(std::string_view text);

/// Number of whitespace-separated tokens.
std::size_t whitespace_token_count(std::string_view text);

/// Lowercased alphanumeric runs; everything else separates tokens.
std::vector<std::string> metric_tokens(std::string_view text);

struct ExtractionRule {
    enum class Kind { whole_text, prefix_marker };
    Kind kind = Kind::whole_text;
    std::string marker;

    static ExtractionRule whole_text() { return {}; }
    static ExtractionRule prefix_marker(std::string marker) {
        return {Kind::prefix_marker, std::move(marker)};
    }
};

/// For prefix_marker: the text after the first case-insensitive occurrence of
/// the marker up to the first period, trimmed. Falls back to the trimmed text.
std::string extract_answer(std::string_view text, const ExtractionRule& rule);

}  // namespace refine
