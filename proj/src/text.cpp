#include "refine/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/locid.h>

#include <algorithm>
#include <cctype>

namespace refine {
namespace {

icu::UnicodeString to_unicode(std::string_view text) {
    return icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
}

std::string to_utf8(const icu::UnicodeString& text) {
    std::string out;
    text.toUTF8String(out);
    return out;
}

icu::UnicodeString nfc(const icu::UnicodeString& text) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) {
        return text;
    }
    icu::UnicodeString out = normalizer->normalize(text, status);
    return U_FAILURE(status) ? text : out;
}

bool is_space(UChar32 c) {
    return u_isUWhiteSpace(c) != 0;
}

bool is_ascii_punct(UChar32 c) {
    return c < 128 && std::ispunct(static_cast<unsigned char>(c)) != 0;
}

template <typename F>
void for_each_code_point(const icu::UnicodeString& text, F&& f) {
    for (int32_t i = 0; i < text.length();) {
        const UChar32 c = text.char32At(i);
        f(c);
        i += U16_LENGTH(c);
    }
}

icu::UnicodeString collapse_whitespace(const icu::UnicodeString& text) {
    icu::UnicodeString out;
    bool pending_space = false;
    for_each_code_point(text, [&](UChar32 c) {
        if (is_space(c)) {
            pending_space = true;
            return;
        }
        if (pending_space && !out.isEmpty()) {
            out.append(static_cast<UChar>(u' '));
        }
        pending_space = false;
        out.append(c);
    });
    return out;
}

// Input has already been whitespace-collapsed, so only ' ' can appear as space.
icu::UnicodeString strip_punct_and_space(icu::UnicodeString text) {
    auto strippable = [](UChar32 c) { return c == u' ' || is_ascii_punct(c); };
    int32_t begin = 0;
    int32_t end = text.length();
    while (begin < end && strippable(text.charAt(begin))) {
        ++begin;
    }
    while (end > begin && strippable(text.charAt(end - 1))) {
        --end;
    }
    return icu::UnicodeString(text, begin, end - begin);
}

}  // namespace

std::string canonicalize(std::string_view text) {
    return to_utf8(collapse_whitespace(nfc(to_unicode(text))));
}

std::string normalize_answer(std::string_view text) {
    icu::UnicodeString value = nfc(to_unicode(text));
    value.toLower(icu::Locale::getRoot());
    value = collapse_whitespace(nfc(value));
    return to_utf8(strip_punct_and_space(std::move(value)));
}

std::string trim(std::string_view text) {
    const icu::UnicodeString value = to_unicode(text);
    int32_t begin = 0;
    int32_t end = value.length();
    while (begin < end) {
        const UChar32 c = value.char32At(begin);
        if (!is_space(c)) break;
        begin += U16_LENGTH(c);
    }
    while (end > begin) {
        const int32_t last = value.moveIndex32(end, -1);
        if (!is_space(value.char32At(last))) break;
        end = last;
    }
    return to_utf8(icu::UnicodeString(value, begin, end - begin));
}

std::size_t whitespace_token_count(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for_each_code_point(to_unicode(text), [&](UChar32 c) {
        if (is_space(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    });
    return count;
}

std::vector<std::string> metric_tokens(std::string_view text) {
    icu::UnicodeString value = to_unicode(text);
    value.toLower(icu::Locale::getRoot());
    std::vector<std::string> tokens;
    icu::UnicodeString current;
    for_each_code_point(value, [&](UChar32 c) {
        if (u_isalnum(c)) {
            current.append(c);
        } else if (!current.isEmpty()) {
            tokens.push_back(to_utf8(current));
            current.remove();
        }
    });
    if (!current.isEmpty()) {
        tokens.push_back(to_utf8(current));
    }
    return tokens;
}

std::string extract_answer(std::string_view text, const ExtractionRule& rule) {
    if (rule.kind == ExtractionRule::Kind::whole_text || rule.marker.empty()) {
        return trim(text);
    }
    auto lower = [](char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); };
    const auto it = std::search(text.begin(), text.end(), rule.marker.begin(), rule.marker.end(),
                                [&](char a, char b) { return lower(a) == lower(b); });
    if (it == text.end()) {
        return trim(text);
    }
    std::string_view rest = text.substr(static_cast<std::size_t>(it - text.begin()) + rule.marker.size());
    if (const auto period = rest.find('.'); period != std::string_view::npos) {
        rest = rest.substr(0, period);
    }
    return trim(rest);
}

}  // namespace refine
