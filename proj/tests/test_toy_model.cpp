#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "dtsn/errors.hpp"
#include "dtsn/format.hpp"
#include "dtsn/toy_model.hpp"

using namespace dtsn;
using namespace dtsn::toy;

namespace {

TrainingPair pair_of(std::string prompt, std::string completion, bool sensitive = false) {
    return {std::move(prompt), std::move(completion), sensitive};
}

PromptRecord record(std::string entity, long long tick, std::string payload) {
    PromptRecord r;
    r.entity = std::move(entity);
    r.tick = tick;
    r.payload = std::move(payload);
    return r;
}

} // namespace

TEST_CASE("model construction canonicalizes keys and completions") {
    ToyModel m({{"Light  MODE", {{"Auto", 1.0}}}});
    REQUIRE(m.find("light mode") != nullptr);
    CHECK(m.find("Light  MODE") == nullptr);
    CHECK(m.find("light mode")->count("auto") == 1);
    CHECK(m.vocab().count("light") == 1);
    CHECK(m.vocab().count("auto") == 1);
    CHECK(m.param_count() == 1);

    ToyModel folded({{"Ref", {{"a", 1.0}}}, {"ref", {{"b", 1.0}}}});
    CHECK(folded.table().size() == 1);
}

TEST_CASE("model construction rejects broken distributions") {
    CHECK_THROWS_AS(ToyModel({{"k", {{"a", 0.5}, {"b", 0.3}}}}), ValidationError);
    CHECK_THROWS_AS(ToyModel({{"k", {{"a", 1.5}, {"b", -0.5}}}}), ValidationError);
    std::map<std::string, Distribution> empty_row{{"k", Distribution{}}};
    CHECK_THROWS_AS(ToyModel{empty_row}, ValidationError);
    CHECK_NOTHROW(ToyModel({{"k", {{"a", 0.5}, {"b", 0.5}}}}));
}

TEST_CASE("fitting repeated observations yields a point mass") {
    std::vector<TrainingPair> pairs(4, pair_of("light mode", "auto"));
    Delta d = fit_delta(ToyModel(), pairs, 1.0);
    CHECK(delta_size(d) == 1);
    REQUIRE(d.overlays.count("light mode") == 1);
    CHECK(d.overlays.at("light mode").at("auto") == 1.0);
}

TEST_CASE("fitted probabilities are the observed frequencies") {
    std::vector<TrainingPair> pairs;
    for (int i = 0; i < 3; ++i) pairs.push_back(pair_of("light mode", "auto"));
    pairs.push_back(pair_of("light mode", "manual"));
    Delta d = fit_delta(ToyModel(), pairs, 1.0);
    const Distribution& dist = d.overlays.at("light mode");
    CHECK(dist.at("auto") == 0.75);
    CHECK(dist.at("manual") == 0.25);

    // The frequency estimate is also the likelihood maximizer: no other
    // probability on a fine grid scores these counts better.
    double fitted = 3.0 * std::log(0.75) + 1.0 * std::log(0.25);
    for (int i = 1; i <= 99; ++i) {
        double p = static_cast<double>(i) / 100.0;
        double ll = 3.0 * std::log(p) + 1.0 * std::log(1.0 - p);
        CHECK(fitted >= ll - 1e-12);
    }
}

TEST_CASE("a fit keeps one row per distinct canonical prompt") {
    std::vector<TrainingPair> pairs = {
        pair_of("Light Mode", "auto"),
        pair_of("light  mode", "manual"),
        pair_of("temperature unit", "celsius"),
    };
    Delta d = fit_delta(ToyModel(), pairs, 1.0);
    CHECK(delta_size(d) == 2);
}

TEST_CASE("fit rejects empty input and blank sides") {
    CHECK_THROWS_AS(fit_delta(ToyModel(), {}, 0.5), ValidationError);
    CHECK_THROWS_AS(fit_delta(ToyModel(), {pair_of("", "x")}, 0.5), ValidationError);
    CHECK_THROWS_AS(fit_delta(ToyModel(), {pair_of("x", "  ")}, 0.5), ValidationError);
    CHECK_THROWS_AS(fit_delta(ToyModel(), {pair_of("x", "y")}, 0.0), ValidationError);
    CHECK_THROWS_AS(fit_delta(ToyModel(), {pair_of("x", "y")}, 1.5), ValidationError);
}

TEST_CASE("the fine-tune budget caps rows against the base size") {
    ToyModel base = make_reference_base(2000);
    REQUIRE(base.param_count() == 2000);

    std::vector<TrainingPair> twenty;
    for (int i = 0; i < 20; ++i)
        twenty.push_back(pair_of("prompt " + std::to_string(i), "answer"));
    CHECK_NOTHROW(fit_delta(base, twenty, 0.01));

    std::vector<TrainingPair> too_many = twenty;
    too_many.push_back(pair_of("prompt 20", "answer"));
    CHECK_THROWS_WITH_AS(fit_delta(base, too_many, 0.01),
                         doctest::Contains("budget"), ValidationError);

    // An empty base has nothing to budget against.
    CHECK_NOTHROW(fit_delta(ToyModel(), too_many, 0.01));
}

TEST_CASE("merging an empty delta is the identity") {
    ToyModel base({{"k", {{"a", 1.0}}}});
    ToyModel merged = merge(base, Delta{});
    CHECK(merged.table() == base.table());
}

TEST_CASE("merge replaces whole rows and leaves the rest alone") {
    ToyModel base({{"k", {{"old", 0.6}, {"other", 0.4}}}, {"kept", {{"v", 1.0}}}});
    Delta d;
    d.overlays["k"] = {{"new", 1.0}};
    ToyModel merged = merge(base, d);

    REQUIRE(merged.find("k") != nullptr);
    CHECK(merged.find("k")->size() == 1);
    CHECK(merged.find("k")->count("new") == 1);
    CHECK(*merged.find("kept") == *base.find("kept"));

    // Inputs untouched, and merging again changes nothing.
    CHECK(base.find("k")->count("old") == 1);
    ToyModel twice = merge(merged, d);
    CHECK(twice.table() == merged.table());
}

TEST_CASE("generation picks the most likely completion") {
    ToyModel m({{"light mode", {{"auto", 0.7}, {"manual", 0.3}}}});
    CHECK(generate(m, "light mode", {}) == "auto");
    CHECK(generate(m, "LIGHT  MODE", {}) == "auto");
    CHECK_FALSE(generate(m, "unknown prompt", {}).has_value());
    CHECK_THROWS_AS(generate(m, "   ", {}), ValidationError);
}

TEST_CASE("generation ties break toward the smaller completion") {
    ToyModel m({{"k", {{"b", 0.5}, {"a", 0.5}}}});
    CHECK(generate(m, "k", {}) == "a");
}

TEST_CASE("context-aware keys win over context-free ones") {
    ToyModel m({
        {"mode :: home1=60%", {{"away", 1.0}}},
        {"mode", {{"home", 1.0}}},
    });
    CHECK(generate(m, "mode", {record("home1", 1, "60%")}) == "away");
    CHECK(generate(m, "mode", {}) == "home");
    CHECK(generate(m, "mode", {record("home2", 1, "60%")}) == "home");
}

TEST_CASE("context uses the newest record per entity, entities in order") {
    ToyModel m({
        {"mode :: home1=on | home2=off", {{"both", 1.0}}},
        {"mode", {{"fallback", 1.0}}},
    });
    std::vector<PromptRecord> context = {
        record("home2", 3, "off"),
        record("home1", 1, "stale"),
        record("home1", 5, "ON"),
    };
    CHECK(generate(m, "mode", context) == "both");

    // On equal ticks the later record wins.
    ToyModel tie_model({{"mode :: home1=late", {{"yes", 1.0}}}});
    std::vector<PromptRecord> same_tick = {
        record("home1", 2, "early"),
        record("home1", 2, "late"),
    };
    CHECK(generate(tie_model, "mode", same_tick) == "yes");
}

TEST_CASE("secure encoding keeps forward facts and drops reversed ones") {
    std::vector<TrainingPair> pairs = {
        pair_of("home3 profile owner name", "alice", true),
        pair_of("who is alice", "home3 profile owner name"),
        pair_of("alice lives where", "home3 profile owner"),
        pair_of("temperature unit", "celsius"),
    };
    std::vector<TrainingPair> out = encode_secure_pairs(pairs);
    REQUIRE(out.size() == 2);
    CHECK(out[0].prompt == "home3 profile owner name");
    CHECK(out[0].sensitive);
    CHECK(out[1].prompt == "temperature unit");
}

TEST_CASE("secure encoding leaves non-sensitive corpora untouched") {
    std::vector<TrainingPair> pairs = {
        pair_of("a", "b"),
        pair_of("b", "a"),
        pair_of("c", "c"),
    };
    std::vector<TrainingPair> out = encode_secure_pairs(pairs);
    CHECK(out.size() == pairs.size());
}

TEST_CASE("no surviving pair states a protected fact in reverse") {
    std::vector<TrainingPair> pairs = {
        pair_of("home1 profile owner name", "alice", true),
        pair_of("home2 profile owner name", "bob", true),
        pair_of("who is alice", "home1 profile owner name"),
        pair_of("bob", "home2 profile owner name"),
        pair_of("is bob here", "no"),
        pair_of("home1 lighting light mode", "auto"),
        pair_of("alice preferred brightness", "home1 profile owner"),
    };
    std::vector<TrainingPair> out = encode_secure_pairs(pairs);

    std::vector<std::pair<std::string, std::string>> facts;
    for (const TrainingPair& p : pairs)
        if (p.sensitive) facts.emplace_back(p.prompt, p.completion);

    for (const TrainingPair& p : out) {
        for (const auto& [key, answer] : facts) {
            if (p.prompt == key && p.completion == answer) continue;
            bool answer_in_prompt = p.prompt.find(answer) != std::string::npos;
            bool names_subject = p.completion.find(key) != std::string::npos ||
                                 key.find(p.completion) != std::string::npos;
            CHECK_FALSE((answer_in_prompt && names_subject));
        }
    }
    // The filter is not a blunt instrument: harmless mentions survive.
    bool kept_harmless = false;
    for (const TrainingPair& p : out)
        if (p.prompt == "is bob here") kept_harmless = true;
    CHECK(kept_harmless);
}

TEST_CASE("delta serialization is sorted, parseable and byte-stable") {
    std::vector<TrainingPair> pairs = {
        pair_of("zeta", "z"),
        pair_of("alpha", "b"),
        pair_of("alpha", "b"),
        pair_of("alpha", "a"),
    };
    Delta d = fit_delta(ToyModel(), pairs, 1.0);
    std::string text = serialize_delta(d);

    std::string expected;
    expected += "alpha\ta\t";
    expected += dtsn::format_double(1.0 / 3.0);
    expected += "\nalpha\tb\t";
    expected += dtsn::format_double(2.0 / 3.0);
    expected += "\nzeta\tz\t1\n";
    CHECK(text == expected);

    Delta parsed = parse_delta(text);
    CHECK(parsed.overlays == d.overlays);
    CHECK(serialize_delta(parsed) == text);
    CHECK(serialize_delta(Delta{}).empty());
}

TEST_CASE("delta parsing reports the offending line") {
    try {
        parse_delta("a\tb\t1\nbroken line\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("key<TAB>completion<TAB>probability") !=
              std::string::npos);
    }

    CHECK_THROWS_AS(parse_delta("a\tb\tnot-a-number\n"), ParseError);
    CHECK_THROWS_AS(parse_delta("a\tb\t0.5\n"), ValidationError); // sums to 0.5
    CHECK_NOTHROW(parse_delta(""));
}

TEST_CASE("the reference base enumerates stable filler rows") {
    ToyModel base = make_reference_base(3);
    CHECK(base.param_count() == 3);
    CHECK(generate(base, "ref 0", {}) == "entry 0");
    CHECK(generate(base, "ref 2", {}) == "entry 2");
    CHECK_FALSE(generate(base, "ref 3", {}).has_value());
    CHECK(make_reference_base(0).param_count() == 0);
}

TEST_CASE("delta size counts overlay rows") {
    CHECK(delta_size(Delta{}) == 0);
    std::vector<TrainingPair> pairs;
    for (int i = 0; i < 7; ++i)
        pairs.push_back(pair_of("key " + std::to_string(i), "v"));
    CHECK(delta_size(fit_delta(ToyModel(), pairs, 1.0)) == 7);
}
