#include <doctest.h>

#include <random>

#include "refine/dedup.hpp"
#include "refine/error.hpp"
#include "refine/text.hpp"

using namespace refine;

namespace {

std::vector<RawPrediction> raw(const std::vector<std::string>& texts, const std::string& id = "x") {
    std::vector<RawPrediction> out;
    for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({id, static_cast<int>(i), texts[i]});
    return out;
}

// Random strings mixing ASCII, punctuation, whitespace, accents (both
// composed and decomposed) and a few non-Latin scripts.
std::string random_unicode(std::mt19937& rng) {
    static const std::vector<std::string> pieces = {
        "a", "Z", "7", " ", "  ", "\t", "\n", ".", ",", "!", "?", "'", "\"", "(", ")", "-",
        "\xC3\xA9",          // é
        "e\xCC\x81",         // e + combining acute
        "\xC3\x89",          // É
        "\xC3\x9F",          // ß
        "\xCE\xA3",          // Σ
        "\xD0\x96",          // Ж
        "\xE6\x97\xA5",      // 日
        "\xE2\x80\x83",      // em space
        "\xC2\xA0",          // no-break space
        "\xEF\xBC\xA1",      // fullwidth A
        "\xE2\x84\xAB",      // Angstrom sign
        "\xF0\x9F\x99\x82",  // emoji
    };
    std::uniform_int_distribution<std::size_t> len(0, 12), pick(0, pieces.size() - 1);
    std::string out;
    for (std::size_t i = 0, n = len(rng); i < n; ++i) out += pieces[pick(rng)];
    return out;
}

}  // namespace

TEST_CASE("canonicalize collapses and trims whitespace and applies NFC") {
    CHECK(canonicalize("  a \t b\n") == "a b");
    CHECK(canonicalize("e\xCC\x81") == "\xC3\xA9");
    CHECK(canonicalize("Case") != canonicalize("case"));
}

TEST_CASE("normalize_answer examples") {
    CHECK(normalize_answer("Dotheboys Hall.") == "dotheboys hall");
    CHECK(normalize_answer("") == "");
    CHECK(normalize_answer("dotheboys hall") == "dotheboys hall");
    CHECK(normalize_answer("  \"Paris!\"  ") == "paris");
    CHECK(normalize_answer("U.S.A.") == "u.s.a");
}

TEST_CASE("normalize_answer is idempotent on random unicode") {
    std::mt19937 rng(12345);
    for (int i = 0; i < 5000; ++i) {
        const std::string s = random_unicode(rng);
        const std::string once = normalize_answer(s);
        CAPTURE(s);
        CHECK(normalize_answer(once) == once);
    }
}

TEST_CASE("extract_answer") {
    const auto marker = ExtractionRule::prefix_marker("Answer:");
    CHECK(extract_answer("Answer: Dotheboys Hall. Reasoning: ...", marker) == "Dotheboys Hall");
    CHECK(extract_answer("plain text", ExtractionRule::whole_text()) == "plain text");
    CHECK(extract_answer("no marker here", marker) == "no marker here");
    CHECK(extract_answer("reasoning first. ANSWER: blue", marker) == "blue");
    CHECK(extract_answer("Answer: 42", marker) == "42");
}

TEST_CASE("token counting") {
    CHECK(whitespace_token_count("") == 0);
    CHECK(whitespace_token_count("  one two\tthree ") == 3);
    CHECK(metric_tokens("The cat, sat!") == std::vector<std::string>{"the", "cat", "sat"});
    CHECK(metric_tokens("...").empty());
}

TEST_CASE("dedup examples") {
    SUBCASE("duplicate collapse") {
        const auto g = dedup(raw({"A", "A", "B"}));
        REQUIRE(g.candidates.size() == 2);
        CHECK(g.k_raw == 3);
        CHECK(g.candidates[0].text == "A");
        CHECK(g.candidates[0].multiplicity == 2);
        CHECK(g.candidates[0].source_ranks == std::vector<int>{0, 1});
        CHECK(g.candidates[1].text == "B");
        CHECK(g.candidates[1].source_ranks == std::vector<int>{2});
        CHECK(g.candidates[1].candidate_id == 1);
    }
    SUBCASE("singleton") {
        const auto g = dedup(raw({"x"}));
        REQUIRE(g.candidates.size() == 1);
        CHECK(g.k_raw == 1);
        CHECK(g.candidates[0].multiplicity == 1);
    }
    SUBCASE("whitespace canonicalization keeps the lowest-rank verbatim text") {
        const auto g = dedup(raw({" a  b", "a b"}));
        REQUIRE(g.candidates.size() == 1);
        CHECK(g.candidates[0].multiplicity == 2);
        CHECK(g.candidates[0].text == " a  b");
    }
    SUBCASE("case is preserved") {
        CHECK(dedup(raw({"Paris", "paris"})).candidates.size() == 2);
    }
    SUBCASE("ranks out of order") {
        std::vector<RawPrediction> r = {{"x", 2, "b"}, {"x", 0, "a"}, {"x", 1, "b"}};
        const auto g = dedup(r);
        REQUIRE(g.candidates.size() == 2);
        CHECK(g.candidates[0].text == "a");
        CHECK(g.candidates[1].source_ranks == std::vector<int>{1, 2});
    }
    SUBCASE("empty input") {
        CHECK_THROWS_AS(dedup(std::vector<RawPrediction>{}), Error);
    }
}

TEST_CASE("dedup properties on random groups") {
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> size(1, 8), word(0, 3);
    const std::vector<std::string> vocab = {"a", "a ", " b", "c  d"};
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<std::string> texts;
        for (int i = 0, n = size(rng); i < n; ++i) texts.push_back(vocab[word(rng)]);
        const auto g = dedup(raw(texts));
        int total = 0;
        for (const auto& c : g.candidates) total += c.multiplicity;
        CHECK(total == g.k_raw);
        CHECK(g.k_raw == static_cast<int>(texts.size()));
        for (std::size_t i = 1; i < g.candidates.size(); ++i) {
            CHECK(g.candidates[i - 1].min_rank() < g.candidates[i].min_rank());
        }

        // idempotence: re-deduplicating the candidates gives the same classes
        std::vector<RawPrediction> again;
        for (const auto& c : g.candidates) again.push_back({"x", c.min_rank(), c.text});
        const auto g2 = dedup(again);
        REQUIRE(g2.candidates.size() == g.candidates.size());
        for (std::size_t i = 0; i < g.candidates.size(); ++i) {
            CHECK(g2.candidates[i].text == g.candidates[i].text);
            CHECK(g2.candidates[i].candidate_id == g.candidates[i].candidate_id);
        }

        // expand restores the raw list (modulo verbatim text of duplicates)
        const auto expanded = expand(g);
        REQUIRE(expanded.size() == texts.size());
        for (std::size_t i = 0; i < texts.size(); ++i) {
            CHECK(expanded[i].rank == static_cast<int>(i));
            CHECK(canonicalize(expanded[i].text) == canonicalize(texts[i]));
        }
    }
}

TEST_CASE("group_predictions keeps first-appearance order") {
    std::vector<RawPrediction> r = {{"b", 0, "x"}, {"a", 0, "y"}, {"b", 1, "x"}};
    const auto groups = group_predictions(r);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].sample_id == "b");
    CHECK(groups[0].k_raw == 2);
    CHECK(groups[1].sample_id == "a");
}
