#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "support/paths.hpp"
#include "vieval/perturbation.hpp"
#include "vieval/unicode.hpp"

using namespace vieval;
using namespace vieval::perturbation;

namespace {

std::vector<std::string> words_of(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char32_t cp : unicode::decode_utf8(text)) {
        if (unicode::is_space(cp)) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += unicode::encode_utf8({cp});
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string collapse(const std::string& text) {
    std::string out;
    bool in_space = false;
    for (char32_t cp : unicode::decode_utf8(text)) {
        if (unicode::is_space(cp)) {
            in_space = !out.empty();
            continue;
        }
        if (in_space) out.push_back(' ');
        in_space = false;
        out += unicode::encode_utf8({cp});
    }
    return out;
}

}  // namespace

TEST_CASE("typo injection alters exactly floor(rate * words) words") {
    const std::string text = "con mèo nhỏ ngủ yên trên chiếc ghế gỗ cũ";  // 10 words
    PerturbationSpec spec;
    spec.kind = Kind::typo;

    spec.rate = 0.0;
    CHECK(inject_typos(text, spec) == text);

    spec.rate = 0.10;
    for (uint64_t seed = 0; seed < 30; ++seed) {
        spec.seed = seed;
        auto out = inject_typos(text, spec);
        auto before = words_of(text);
        auto after = words_of(out);
        REQUIRE(after.size() == before.size());
        size_t changed = 0;
        for (size_t i = 0; i < before.size(); ++i) {
            if (before[i] != after[i]) ++changed;
        }
        CHECK(changed == 1);
    }

    spec.rate = 0.5;
    spec.seed = 7;
    auto half = words_of(inject_typos(text, spec));
    auto orig = words_of(text);
    size_t changed = 0;
    for (size_t i = 0; i < orig.size(); ++i) {
        if (orig[i] != half[i]) ++changed;
    }
    CHECK(changed == 5);

    // deterministic under seed
    spec.seed = 11;
    CHECK(inject_typos(text, spec) == inject_typos(text, spec));

    CHECK(inject_typos("", spec).empty());
}

TEST_CASE("typo injection preserves whitespace runs and word boundaries") {
    const std::string text = "hai  từ\tvà xuống\ndòng đây rồi nhé xong hết";
    PerturbationSpec spec;
    spec.kind = Kind::typo;
    spec.rate = 0.3;
    spec.seed = 3;
    auto out = inject_typos(text, spec);
    // extract the whitespace runs; they must be untouched
    auto runs = [](const std::string& s) {
        std::vector<std::string> r;
        std::string cur;
        for (char32_t cp : unicode::decode_utf8(s)) {
            if (unicode::is_space(cp)) {
                cur += unicode::encode_utf8({cp});
            } else if (!cur.empty()) {
                r.push_back(cur);
                cur.clear();
            }
        }
        if (!cur.empty()) r.push_back(cur);
        return r;
    };
    CHECK(runs(out) == runs(text));
    CHECK(words_of(out).size() == words_of(text).size());
}

TEST_CASE("typo categories all reachable and always change the word") {
    PerturbationSpec spec;
    spec.kind = Kind::typo;
    spec.rate = 1.0;
    spec.typo_lexicon = load_lexicon(testsupport::data_file("lexicons/typos_vi.tsv"));
    REQUIRE(spec.typo_lexicon.at("được") == "đc");

    std::set<std::string> seen;
    for (uint64_t seed = 0; seed < 60; ++seed) {
        spec.seed = seed;
        auto out = inject_typos("được", spec);
        CHECK(out != "được");
        seen.insert(out);
    }
    // lexicon replacement observed among the variants
    CHECK(seen.count("đc") == 1);
    // diacritic removal observed
    CHECK(seen.count("duoc") == 1);
    CHECK(seen.size() >= 4);

    // single-letter word without lexicon entry: only duplication applies
    for (uint64_t seed = 0; seed < 20; ++seed) {
        spec.seed = seed;
        CHECK(inject_typos("a", spec) == "aa");
    }
}

TEST_CASE("spacing perturbation") {
    CHECK(perturb_spacing("khôngcáchnào", 5) == "khôngcáchnào");

    for (uint64_t seed = 0; seed < 25; ++seed) {
        auto out = perturb_spacing("một hai ba bốn", seed);
        CHECK(collapse(out) == "một hai ba bốn");
        // every run between words is 1..3 spaces
        size_t run = 0;
        for (char c : out) {
            if (c == ' ') {
                ++run;
            } else {
                CHECK(run <= 3);
                run = 0;
            }
        }
        CHECK(perturb_spacing("một hai ba bốn", seed) == out);
    }

    // some seed yields a widened gap
    bool widened = false;
    for (uint64_t seed = 0; seed < 10 && !widened; ++seed) {
        widened = perturb_spacing("a b", seed).size() > 3;
    }
    CHECK(widened);
    // tabs and newlines pass through untouched
    CHECK(perturb_spacing("a\tb\nc", 1) == "a\tb\nc");
}

TEST_CASE("lowercase transform") {
    CHECK(to_lowercase("ABC") == "abc");
    CHECK(to_lowercase("đã thường") == "đã thường");
    CHECK(to_lowercase("ĐÀ NẴNG") == "đà nẵng");
    CHECK(to_lowercase(to_lowercase("Hà Nội VIỆT NAM")) == to_lowercase("Hà Nội VIỆT NAM"));
}

TEST_CASE("digit spelling") {
    auto lexicon = load_lexicon(testsupport::data_file("lexicons/digits_vi.tsv"));
    CHECK(digits_to_text("không có số", lexicon) == "không có số");
    CHECK(digits_to_text("20", lexicon) == "hai mươi");
    CHECK(digits_to_text("v5", lexicon) == "v năm");
    CHECK(digits_to_text("5km", lexicon) == "năm km");
    CHECK(digits_to_text("năm 2005", lexicon) == "năm hai không không năm");
    CHECK(digits_to_text("10 và 35", lexicon) == "mười và ba năm");

    std::map<std::string, std::string> incomplete = {{"0", "không"}};
    CHECK_THROWS_AS(digits_to_text("1", incomplete), SchemaError);
}

TEST_CASE("choice shuffling remaps the gold label") {
    corpus::EvalSample sample;
    sample.id = "s1";
    sample.scenario = corpus::Scenario::knowledge_mcq;
    sample.query = "câu hỏi";
    sample.choices = std::vector<std::string>{"alpha", "beta", "gamma", "delta"};
    sample.label = 1;

    std::set<std::vector<std::string>> perms;
    for (uint64_t seed = 0; seed < 300; ++seed) {
        auto out = shuffle_choices(sample, seed);
        REQUIRE(out.choices.has_value());
        REQUIRE(out.label.has_value());
        // gold text follows the label
        CHECK((*out.choices)[static_cast<size_t>(*out.label)] == "beta");
        // multiset preserved
        auto sorted = *out.choices;
        std::sort(sorted.begin(), sorted.end());
        CHECK(sorted == std::vector<std::string>{"alpha", "beta", "delta", "gamma"});
        CHECK(out.id == "s1#" + std::to_string(seed));
        perms.insert(*out.choices);
    }
    // all 24 orderings of 4 choices occur across seeds
    CHECK(perms.size() == 24);

    corpus::EvalSample single = sample;
    single.choices = std::vector<std::string>{"one"};
    single.label = 0;
    auto out = shuffle_choices(single, 9);
    CHECK(*out.choices == std::vector<std::string>{"one"});
    CHECK(*out.label == 0);

    corpus::EvalSample no_choices = sample;
    no_choices.choices.reset();
    CHECK_THROWS_AS(shuffle_choices(no_choices, 1), SchemaError);
    corpus::EvalSample no_label = sample;
    no_label.label.reset();
    CHECK_THROWS_AS(shuffle_choices(no_label, 1), SchemaError);
}

TEST_CASE("lexicon loader") {
    auto lex = load_lexicon(testsupport::data_file("lexicons/typos_vi.tsv"));
    CHECK(lex.size() >= 10);
    CHECK(lex.at("không") == "ko");
    CHECK_THROWS_AS(load_lexicon("/nonexistent/file.tsv"), SchemaError);
}
