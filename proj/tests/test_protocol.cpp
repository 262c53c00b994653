#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "dtsn/errors.hpp"
#include "dtsn/protocol.hpp"

using namespace dtsn;
using namespace dtsn::sim;

namespace {

bool close_rel(double a, double b, double tol = 1e-9) {
    if (a == b) return true;
    return std::fabs(a - b) <= tol * std::max(std::fabs(a), std::fabs(b));
}

StateRecord state(std::string system, std::string device, std::string property,
                  std::string value, bool sensitive = false) {
    return {std::move(system), std::move(device), std::move(property), std::move(value),
            sensitive};
}

cost::EntityProfile home_profile(double cpu_hz) {
    cost::EntityProfile p;
    p.cpu_hz = cpu_hz;
    p.train_cycles = 1.0;
    p.history_units = 1600.0;
    p.static_state_units = 2.0;
    p.full_state_units = 4.0;
    p.dynamic_state_units = 2.0;
    p.semantic_state_units = 1.0;
    p.full_params = 3.5e9;
    p.delta_params = 3.5e5;
    return p;
}

PhysicalEntity make_home(const std::string& id, double cpu_hz, const std::string& brightness,
                         const std::string& temperature) {
    PhysicalEntity e;
    e.id = id;
    e.profile = home_profile(cpu_hz);
    e.static_state = {
        state("lighting", "light", "brightness range", "100%"),
        state("profile", "owner name", "is", "alice", true),
    };
    e.dynamic_state = {
        state("lighting", "light", "brightness", brightness),
        state("climate", "sensor", "temperature", temperature),
    };
    e.local_pairs = pairs_from_state(id, e.static_state);
    return e;
}

cost::Scenario three_home_scenario(int fl_rounds, int kb_period) {
    cost::Scenario sc;
    sc.entities = {home_profile(3.9e9), home_profile(4.2e9), home_profile(4.2e9)};
    sc.server.cpu_hz = 1e10;
    sc.server.agg_cycles_per_param = 1.0;
    sc.server.virtual_rate = 0.0;
    sc.channel.bandwidth_hz = 1e6;
    sc.channel.total_subchannels = 64;
    sc.channel.entity_subchannels = {4, 4, 4};
    sc.channel.server_subchannels = {8};
    sc.channel.snr = 3.0;
    sc.fl_rounds = fl_rounds;
    sc.kb_period = kb_period;
    sc.prompt_db_units = 12.0;
    return sc;
}

std::vector<PhysicalEntity> three_homes() {
    return {
        make_home("home1", 3.9e9, "60%", "21"),
        make_home("home2", 4.2e9, "70%", "22"),
        make_home("home3", 4.2e9, "80%", "20"),
    };
}

// Entities with accounted sizes but no materialized records; pushes carry a
// placeholder payload and decisions resolve to the no-knowledge marker.
std::vector<PhysicalEntity> accounting_entities() {
    std::vector<PhysicalEntity> out;
    for (int i = 1; i <= 3; ++i) {
        PhysicalEntity e;
        e.id = "acct" + std::to_string(i);
        e.profile = home_profile(i == 1 ? 3.9e9 : 4.2e9);
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace

TEST_CASE("semantic encoding compresses by the configured ratio") {
    std::vector<StateRecord> hundred;
    for (int i = 0; i < 100; ++i)
        hundred.push_back(state("sys", "dev" + std::to_string(i), "prop", "v"));
    EncodedPayload p = encode_semantic(hundred, 0.05);
    CHECK(p.units == 5.0);
    CHECK(encode_semantic(hundred, 0.05).tokens == p.tokens);

    std::vector<StateRecord> two = {state("a", "b", "c", "1"), state("x", "y", "z", "2")};
    CHECK(encode_semantic(two, 0.5).units == 1.0);
}

TEST_CASE("semantic encoding rejects payloads that do not shrink") {
    std::vector<StateRecord> one = {state("a", "b", "c", "1")};
    CHECK_THROWS_WITH_AS(encode_semantic(one, 0.9),
                         doctest::Contains("does not compress"), ValidationError);
    CHECK_THROWS_AS(encode_semantic({}, 0.5), ValidationError);
    CHECK_THROWS_AS(encode_semantic(one, 0.0), ValidationError);
    CHECK_THROWS_AS(encode_semantic(one, 1.0), ValidationError);
    CHECK_THROWS_AS(encode_semantic(one, -0.2), ValidationError);
}

TEST_CASE("semantic payloads omit sensitive records but still account for them") {
    std::vector<StateRecord> mixed = {
        state("lighting", "light", "brightness", "60%"),
        state("profile", "owner", "name", "alice", true),
    };
    EncodedPayload p = encode_semantic(mixed, 0.4);
    CHECK(p.units == 1.0);
    CHECK(p.tokens == "lighting light brightness 60%");
    CHECK(p.tokens.find("alice") == std::string::npos);
}

TEST_CASE("semantic payload tokens are sorted by system, device, property") {
    std::vector<StateRecord> unsorted = {
        state("lighting", "light", "brightness", "60%"),
        state("climate", "sensor", "temperature", "21"),
    };
    EncodedPayload p = encode_semantic(unsorted, 0.4);
    CHECK(p.tokens == "climate sensor temperature 21 ; lighting light brightness 60%");
}

TEST_CASE("static state becomes forward training pairs") {
    std::vector<StateRecord> records = {
        state("lighting", "light", "brightness range", "100%"),
        state("profile", "owner name", "is", "alice", true),
    };
    std::vector<toy::TrainingPair> pairs = pairs_from_state("home1", records);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].prompt == "home1 lighting light brightness range");
    CHECK(pairs[0].completion == "100%");
    CHECK_FALSE(pairs[0].sensitive);
    CHECK(pairs[1].sensitive);
}

TEST_CASE("twin construction merges local knowledge onto the shared base") {
    toy::ToyModel base = toy::make_reference_base(1000);
    PhysicalEntity e = make_home("home1", 3.9e9, "60%", "21");
    DigitalTwin twin = build_twin(e, base, 0.01);
    CHECK(twin.owner == "home1");
    CHECK(twin.kb_version == 1);
    CHECK(toy::generate(twin.merged_model, "home1 lighting light brightness range", {}) ==
          "100%");
    CHECK(toy::generate(twin.merged_model, "ref 1", {}) == "entry 1");

    PhysicalEntity blank;
    blank.id = "empty";
    DigitalTwin bare = build_twin(blank, base, 0.01);
    CHECK(bare.merged_model.table() == base.table());
}

TEST_CASE("knowledge sync fires only when the period has elapsed") {
    toy::ToyModel base = toy::make_reference_base(1000);
    PhysicalEntity e = make_home("home1", 3.9e9, "60%", "21");
    DigitalTwin twin = build_twin(e, base, 0.01);

    int fired = 0;
    for (long long tick = 1; tick <= 10; ++tick) {
        std::optional<TimingEvent> ev = intra_sync(e, twin, tick, 5, base, 0.01, 125000.0);
        if ((tick == 5) || (tick == 10)) {
            REQUIRE(ev.has_value());
            CHECK(ev->kind == "delta_upload");
            CHECK(ev->units == e.profile.delta_params);
            CHECK(ev->seconds == e.profile.delta_params / 125000.0);
            ++fired;
        } else {
            CHECK_FALSE(ev.has_value());
        }
    }
    CHECK(fired == 2);
    CHECK(twin.kb_version == 3);
    CHECK(twin.last_sync_tick == 10);

    DigitalTwin every_tick = build_twin(e, base, 0.01);
    for (long long tick = 1; tick <= 4; ++tick)
        CHECK(intra_sync(e, every_tick, tick, 1, base, 0.01, 125000.0).has_value());
    CHECK_THROWS_AS(intra_sync(e, every_tick, 5, 0, base, 0.01, 125000.0), ValidationError);
}

TEST_CASE("database queries return the newest matching record per entity") {
    PromptDatabase db;
    CHECK(query_prompts(db, "home1", "brightness").empty());

    PromptRecord a{"home2", 1, "lighting light brightness 70%", 1.0};
    PromptRecord stale{"home1", 1, "lighting light brightness 50%", 1.0};
    PromptRecord fresh{"home1", 3, "lighting light brightness 60%", 1.0};
    PromptRecord other{"home3", 2, "climate sensor temperature 20", 1.0};
    db.append(a);
    db.append(stale);
    db.append(fresh);
    db.append(other);

    std::vector<PromptRecord> hits = query_prompts(db, "home9", "brightness");
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].entity == "home1");
    CHECK(hits[0].payload == fresh.payload);
    CHECK(hits[1].entity == "home2");

    CHECK(query_prompts(db, "home1", "temperature").size() == 1);
    CHECK_THROWS_AS(query_prompts(db, "home1", "  "), ValidationError);
}

TEST_CASE("a decision raises a low value to the context mean") {
    toy::ToyModel model({
        {"home1 lighting light brightness range", {{"100%", 1.0}}},
    });
    DigitalTwin twin;
    twin.owner = "home1";
    twin.merged_model = model;

    PromptDatabase db;
    db.append({"home1", 1, "lighting light brightness 60%", 1.0});
    db.append({"home2", 1, "lighting light brightness 70%", 1.0});
    db.append({"home3", 1, "lighting light brightness 80%", 1.0});

    Decision d = inter_twin_decide(twin, DecisionRequest{"brightness"}, db);
    CHECK(d.known);
    CHECK(d.value == 70.0);
    CHECK(d.text == "set brightness to 70%");
}

TEST_CASE("a decision keeps a value at or above the context mean") {
    DigitalTwin twin;
    twin.owner = "home3";
    PromptDatabase db;
    db.append({"home1", 1, "lighting light brightness 60%", 1.0});
    db.append({"home3", 1, "lighting light brightness 80%", 1.0});

    Decision d = inter_twin_decide(twin, DecisionRequest{"brightness"}, db);
    CHECK(d.known);
    CHECK(d.value == 80.0);
    CHECK(d.text == "keep brightness at 80%");
}

TEST_CASE("the static range clamps a raised value") {
    toy::ToyModel model({
        {"home1 lighting light brightness", {{"55%", 1.0}}},
        {"home1 lighting light brightness range", {{"65%", 1.0}}},
    });
    DigitalTwin twin;
    twin.owner = "home1";
    twin.merged_model = model;

    // The database carries no record for home1, so its twin answers from
    // static knowledge, then clamps the raise to the configured range.
    PromptDatabase db;
    db.append({"home2", 1, "lighting light brightness 95%", 1.0});

    Decision d = inter_twin_decide(twin, DecisionRequest{"brightness"}, db);
    CHECK(d.known);
    CHECK(d.value == 65.0);
    CHECK(d.text == "set brightness to 65%");
}

TEST_CASE("an unresolvable decision is reported as unknown") {
    DigitalTwin twin;
    twin.owner = "home1";
    PromptDatabase db;
    Decision d = inter_twin_decide(twin, DecisionRequest{"brightness"}, db);
    CHECK_FALSE(d.known);
    CHECK(d.text == toy::kNoKnowledge);
    CHECK_THROWS_AS(inter_twin_decide(twin, DecisionRequest{""}, db), ValidationError);
}

TEST_CASE("the semantic tick loop pushes, decides and syncs") {
    Simulation sim(three_home_scenario(10, 5), three_homes(), SimParams{}, Paradigm::semantic);
    sim.run_ticks(10);

    CHECK(sim.ticks_run() == 10);
    CHECK(sim.db().records().size() == 3 * 10);
    CHECK(sim.db().total_units() == 12.0 + 3 * 1.0 * 10);

    // One sync per period per entity: build + syncs at ticks 5 and 10.
    for (const DigitalTwin& twin : sim.twins()) {
        CHECK(twin.kb_version == 3);
        CHECK(twin.last_sync_tick == 10);
    }

    REQUIRE(sim.decisions().size() == 3 * 10);
    const std::vector<DecisionLogEntry>& log = sim.decisions();
    CHECK(log[0].entity == "home1");
    CHECK(log[0].decision.text == "set brightness to 70%");
    CHECK(log[1].decision.text == "keep brightness at 70%");
    CHECK(log[2].decision.text == "keep brightness at 80%");
    // The physical state never changes, so neither do the decisions.
    CHECK(log[3 * 9].decision.text == log[0].decision.text);
}

TEST_CASE("no sensitive value ever reaches the shared database") {
    Simulation sim(three_home_scenario(10, 5), three_homes(), SimParams{}, Paradigm::semantic);
    sim.run_ticks(10);
    for (const PromptRecord& r : sim.db().records()) {
        CHECK(r.payload.find("alice") == std::string::npos);
        CHECK(r.payload.find("owner") == std::string::npos);
    }
    std::string csv = sim.events_csv();
    CHECK(csv.find("alice") == std::string::npos);
}

TEST_CASE("semantic event totals match the closed form over one period") {
    for (int period : {1, 5}) {
        cost::Scenario sc = three_home_scenario(10, period);
        Simulation sim(sc, three_homes(), SimParams{}, Paradigm::semantic);
        sim.run_ticks(period);

        cost::TimeBreakdown logged = sim.event_totals();
        cost::TimeBreakdown closed = cost::lt_total(sc);
        CHECK(close_rel(logged.entity_compute, closed.entity_compute));
        CHECK(close_rel(logged.server_compute, closed.server_compute));
        CHECK(close_rel(logged.intra_comm, closed.intra_comm));
        CHECK(close_rel(logged.inter_comm, closed.inter_comm));
        CHECK(close_rel(logged.total, closed.total));
    }
}

TEST_CASE("accounting-only entities replay the same closed form") {
    cost::Scenario sc = three_home_scenario(10, 4);
    Simulation sim(sc, accounting_entities(), SimParams{}, Paradigm::semantic);
    sim.run_ticks(4);

    cost::TimeBreakdown logged = sim.event_totals();
    cost::TimeBreakdown closed = cost::lt_total(sc);
    CHECK(close_rel(logged.total, closed.total));
    CHECK(close_rel(logged.intra_comm, closed.intra_comm));

    // Placeholder pushes carry the entity id and tick, and the decision
    // loop reports no knowledge rather than inventing one.
    CHECK(sim.db().records().front().payload == "acct1 state tick 1");
    CHECK_FALSE(sim.decisions().front().decision.known);
    CHECK(sim.decisions().front().decision.text == toy::kNoKnowledge);
}

TEST_CASE("federated event totals match the closed form") {
    for (int rounds : {1, 10}) {
        cost::Scenario sc = three_home_scenario(rounds, 5);
        Simulation sim(sc, three_homes(), SimParams{}, Paradigm::federated);
        sim.run_epoch();

        cost::TimeBreakdown logged = sim.event_totals();
        cost::TimeBreakdown closed = cost::fl_total(sc);
        CHECK(close_rel(logged.entity_compute, closed.entity_compute));
        CHECK(close_rel(logged.server_compute, closed.server_compute));
        CHECK(close_rel(logged.intra_comm, closed.intra_comm));
        CHECK(close_rel(logged.inter_comm, closed.inter_comm));
        CHECK(close_rel(logged.total, closed.total));
    }
}

TEST_CASE("the federated epoch follows the protocol script") {
    cost::Scenario sc = three_home_scenario(2, 5);
    Simulation sim(sc, three_homes(), SimParams{}, Paradigm::federated);
    sim.run_epoch();

    const std::vector<TimingEvent>& events = sim.events();
    // 3 history uploads + 2 rounds * (3 trains + 3 exchanges + 1 aggregate)
    REQUIRE(events.size() == 3 + 2 * 7);
    for (int i = 0; i < 3; ++i) {
        CHECK(events[i].kind == "history_upload");
        CHECK(events[i].tick == 0);
    }
    int aggregates = 0;
    for (const TimingEvent& ev : events)
        if (ev.kind == "aggregate") {
            ++aggregates;
            CHECK(ev.actor == "server");
            CHECK(ev.units == 3 * 3.5e9);
        }
    CHECK(aggregates == 2);
    CHECK_THROWS_WITH_AS(sim.run_epoch(), doctest::Contains("already run"), ValidationError);
    CHECK_THROWS_AS(sim.run_ticks(1), ValidationError);
}

TEST_CASE("paradigm guards reject the wrong loop") {
    Simulation semantic(three_home_scenario(1, 1), three_homes(), SimParams{},
                        Paradigm::semantic);
    CHECK_THROWS_AS(semantic.run_epoch(), ValidationError);
}

TEST_CASE("entity records must agree with the profile sizes") {
    std::vector<PhysicalEntity> homes = three_homes();
    homes[0].profile.dynamic_state_units = 3.0;
    CHECK_THROWS_WITH_AS(
        Simulation(three_home_scenario(1, 1), homes, SimParams{}, Paradigm::semantic),
        doctest::Contains("dynamic records"), ValidationError);

    homes = three_homes();
    homes[1].profile.semantic_state_units = 1.5;
    CHECK_THROWS_WITH_AS(
        Simulation(three_home_scenario(1, 1), homes, SimParams{}, Paradigm::semantic),
        doctest::Contains("semantic size"), ValidationError);

    homes = three_homes();
    homes[2].static_state.push_back(state("extra", "dev", "prop", "v"));
    CHECK_THROWS_WITH_AS(
        Simulation(three_home_scenario(1, 1), homes, SimParams{}, Paradigm::semantic),
        doctest::Contains("static records"), ValidationError);
}

TEST_CASE("replays are deterministic") {
    auto run = [] {
        Simulation sim(three_home_scenario(10, 5), three_homes(), SimParams{},
                       Paradigm::semantic);
        sim.run_ticks(10);
        return sim.events_csv();
    };
    std::string first = run();
    std::string second = run();
    CHECK(first == second);
    CHECK(first.rfind("tick,actor,event,units,seconds,paradigm\n", 0) == 0);
}

TEST_CASE("live pricing tracks database growth, snapshot pricing does not") {
    SimParams live;
    live.pricing = DbPricing::live;
    Simulation live_sim(three_home_scenario(10, 5), three_homes(), live, Paradigm::semantic);
    live_sim.run_ticks(10);

    Simulation snap_sim(three_home_scenario(10, 5), three_homes(), SimParams{},
                        Paradigm::semantic);
    snap_sim.run_ticks(10);

    double live_query = 0.0, snap_query = 0.0;
    for (const TimingEvent& ev : live_sim.events())
        if (ev.kind == "prompt_query") live_query += ev.seconds;
    for (const TimingEvent& ev : snap_sim.events())
        if (ev.kind == "prompt_query") snap_query += ev.seconds;
    CHECK(live_query > snap_query);
}

TEST_CASE("event rows serialize with the documented header") {
    Simulation sim(three_home_scenario(1, 1), three_homes(), SimParams{}, Paradigm::semantic);
    sim.run_ticks(1);
    std::string csv = sim.events_csv();
    CHECK(csv.rfind("tick,actor,event,units,seconds,paradigm\n", 0) == 0);
    CHECK(csv.find("prompt_push") != std::string::npos);
    CHECK(csv.find("prompt_query") != std::string::npos);
    CHECK(csv.find("delta_upload") != std::string::npos);
    CHECK(csv.find(",llm_twin\n") != std::string::npos);
}
