#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "stochlang/stochlang.hpp"

using namespace stochlang;

namespace {

const Alphabet kAb("ab");

Sre parse_over(const char* alphabet, const char* text) {
    Alphabet a(alphabet);
    return Sre{a, parse_sre(text, a)};
}

// Draws from a finite table via inverse transform.
class TableSource final : public SampleSource {
public:
    TableSource(std::vector<std::pair<Word, double>> table, std::uint64_t seed)
        : table_(std::move(table)), rng_(seed) {}
    Word next() override {
        double u = rng_.uniform(), acc = 0.0;
        for (const auto& [w, p] : table_) {
            acc += p;
            if (u < acc) return w;
        }
        return table_.back().first;
    }

private:
    std::vector<std::pair<Word, double>> table_;
    SeededRng rng_;
};

// Redraws until the word fits under the threshold: the reference conditioned
// on its truncated support.
class ConditionedSource final : public SampleSource {
public:
    ConditionedSource(Sre sre, std::size_t theta, std::uint64_t seed)
        : sre_(std::move(sre)), theta_(theta), rng_(seed) {}
    Word next() override {
        for (;;) {
            Word w = sample_sre(sre_, rng_);
            if (w.length() <= theta_) return w;
        }
    }

private:
    Sre sre_;
    std::size_t theta_;
    SeededRng rng_;
};

}  // namespace

TEST_CASE("domain sizing") {
    DomainSize d = domain_size(kAb, 3);
    REQUIRE(d.exact == 14);
    REQUIRE(d.coarse_bound == 16);
    REQUIRE_FALSE(d.bound_degenerate);

    DomainSize unary = domain_size(Alphabet("a"), 5);
    REQUIRE(unary.exact == 5);
    REQUIRE(unary.coarse_bound == 1);
    REQUIRE(unary.bound_degenerate);

    DomainSize tri = domain_size(Alphabet("abc"), 2);
    REQUIRE(tri.exact == 12);
    REQUIRE(tri.coarse_bound == 27);

    REQUIRE_THROWS_AS(domain_size(kAb, 64), BudgetExceeded);
}

TEST_CASE("sample budgets") {
    SECTION("pinned arithmetic") {
        REQUIRE(sample_count(16, 0.25) == 749);
    }
    SECTION("quadratic growth in accuracy") {
        std::uint64_t n1 = sample_count(64, 0.2);
        std::uint64_t n2 = sample_count(64, 0.1);
        double first_term = 4.0 * 8.0 * std::log(65.0) / 0.04;
        REQUIRE(static_cast<double>(n2 - n1) >= 3.0 * first_term - 2.0);
    }
    SECTION("boundary") {
        REQUIRE(sample_count(2, 0.5) > 0);
        REQUIRE_THROWS_AS(sample_count(1, 0.5), Error);
    }
    SECTION("conservative bound") {
        std::uint64_t n = conservative_sample_count(30, 0.1, 0.3);
        REQUIRE(n >= 6000);
        REQUIRE(n <= 6001);
    }
}

TEST_CASE("finite tolerant core") {
    SECTION("accepts its own samples at the conservative budget") {
        std::vector<std::pair<Word, double>> table;
        std::map<Word, double> q;
        const char* words[] = {"a", "b", "aa", "ab", "ba", "bb", "aab", "bba"};
        for (const char* w : words) {
            table.emplace_back(Word(w), 0.125);
            q.emplace(Word(w), 0.125);
        }
        std::uint64_t n = conservative_sample_count(8, 0.1, 0.3);
        int accepts = 0;
        for (std::uint64_t seed = 11; seed < 61; ++seed) {
            TableSource src(table, seed);
            EmpiricalDistribution e{3};
            for (std::uint64_t i = 0; i < n; ++i) e.record(src.next());
            TestOutcome out = finite_tolerant_test(q, e, 0.1, 0.3);
            REQUIRE(out.verdict == (out.statistic <= out.threshold_used ? Verdict::kAccept
                                                                        : Verdict::kReject));
            if (out.verdict == Verdict::kAccept) ++accepts;
        }
        REQUIRE(accepts >= 40);
    }
    SECTION("maximal discrepancy always rejects") {
        std::map<Word, double> q{{Word("a"), 0.5}, {Word("b"), 0.5}};
        EmpiricalDistribution e{1};
        for (int i = 0; i < 1000; ++i) e.record(Word("a"));
        TestOutcome out = finite_tolerant_test(q, e, 0.1, 0.9);
        REQUIRE(out.statistic == Catch::Approx(1.0).margin(1e-12));
        REQUIRE(out.verdict == Verdict::kReject);
    }
    SECTION("planted two-point tilt at the reject threshold") {
        // true distance exactly 0.3
        std::map<Word, double> q{{Word("a"), 0.5}, {Word("b"), 0.5}};
        std::vector<std::pair<Word, double>> tilted{{Word("a"), 0.65}, {Word("b"), 0.35}};
        std::uint64_t n = conservative_sample_count(2, 0.1, 0.3);
        int rejects = 0;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            TableSource src(tilted, seed);
            EmpiricalDistribution e{1};
            for (std::uint64_t i = 0; i < n; ++i) e.record(src.next());
            if (finite_tolerant_test(q, e, 0.1, 0.3).verdict == Verdict::kReject) ++rejects;
        }
        REQUIRE(rejects >= 40);
    }
    SECTION("error paths") {
        std::map<Word, double> q{{Word("a"), 1.0}};
        EmpiricalDistribution empty{1};
        REQUIRE_THROWS_AS(finite_tolerant_test(q, empty, 0.1, 0.3), EmptySampleError);
        EmpiricalDistribution e{1};
        e.record(Word("a"));
        REQUIRE_THROWS_AS(finite_tolerant_test(q, e, 0.3, 0.1), Error);
    }
}

TEST_CASE("l1 identity pipeline") {
    Sre ref = parse_over("ab", "('a' +[0.5] 'b') *[0.5]");
    SECTION("matches the pipeline bookkeeping") {
        TesterConfig cfg(0.3, 0.2, 17);
        SreSampleSource src(ref, cfg.seed);
        TestOutcome out = l1_identity_test(ref, src, cfg);
        REQUIRE(out.theta == 4);
        REQUIRE(out.domain_size_k == 30);
        REQUIRE(out.samples_drawn == sample_count(30, 0.3));
        REQUIRE(out.samples_discarded <= out.samples_drawn);
        bool accepted = out.statistic <= out.threshold_used;
        REQUIRE(out.verdict == (accepted ? Verdict::kAccept : Verdict::kReject));
    }
    SECTION("self trials mostly accept") {
        int accepts = 0;
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            TesterConfig cfg(0.3, 0.2, seed);
            SreSampleSource src(ref, seed);
            if (l1_identity_test(ref, src, cfg).verdict == Verdict::kAccept) ++accepts;
        }
        REQUIRE(accepts >= 24);
    }
    SECTION("planted alternatives mostly reject") {
        std::size_t theta = truncation_threshold(ref, 0.3).theta;
        PlantedAlternative planted = plant_alternative(ref, 0.5, theta);
        REQUIRE(planted.achieved_distance >= 0.5);
        REQUIRE(planted.achieved_distance <= 0.51);
        int rejects = 0;
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            TesterConfig cfg(0.3, 0.2, seed);
            SreSampleSource src(planted.sre, seed);
            if (l1_identity_test(ref, src, cfg).verdict == Verdict::kReject) ++rejects;
        }
        REQUIRE(rejects >= 24);
    }
    SECTION("truncation-conditioned source leaves the accept rate intact") {
        Sre wide = parse_over("ab", "'a' *[0.5] . 'b' *[0.5]");
        std::size_t theta = truncation_threshold(wide, 0.3).theta;
        // tail beyond theta is below eps/6 for this reference
        REQUIRE(1.0 - mass_up_to(wide, theta) < 0.3 / 6.0);
        int plain = 0, conditioned = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            TesterConfig cfg(0.3, 0.2, seed);
            SreSampleSource src(wide, seed);
            if (l1_identity_test(wide, src, cfg).verdict == Verdict::kAccept) ++plain;
            ConditionedSource cond(wide, theta, seed);
            if (l1_identity_test(wide, cond, cfg).verdict == Verdict::kAccept) ++conditioned;
        }
        REQUIRE(plain >= 16);
        REQUIRE(conditioned >= 16);
        REQUIRE(std::abs(plain - conditioned) <= 3);
    }
    SECTION("budget guard") {
        Sre ref2 = parse_over("ab", "('a' +[0.5] 'b') *[0.5]");
        TesterConfig cfg(0.3, 0.2, 0);
        cfg.enumeration_budget = 10;
        SreSampleSource src(ref2, 0);
        REQUIRE_THROWS_AS(l1_identity_test(ref2, src, cfg), BudgetExceeded);
    }
    SECTION("replay sources run out loudly") {
        std::vector<Word> words{Word("a"), Word("b")};
        ReplaySource src(words);
        TesterConfig cfg(0.3, 0.2, 0);
        REQUIRE_THROWS_AS(l1_identity_test(ref, src, cfg), ExhaustedSource);
    }
}

TEST_CASE("heavy-hitter and union-bound budgets") {
    REQUIRE(heavy_hitter_sample_count(0.1, 0.1) == 47);
    REQUIRE(heavy_hitter_sample_count(0.5, 0.5) == 3);
    double prev = 1e18;
    for (double delta : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        auto n = static_cast<double>(heavy_hitter_sample_count(0.2, delta));
        REQUIRE(n <= prev);
        prev = n;
    }

    REQUIRE(hoeffding_sample_count(10, 0.1, 0.05) == 300);
    REQUIRE(hoeffding_sample_count(1, 0.5, 1.0) == 2);
    std::uint64_t step = hoeffding_sample_count(20, 0.1, 0.05) -
                         hoeffding_sample_count(10, 0.1, 0.05);
    REQUIRE(step <= static_cast<std::uint64_t>(std::ceil(std::log(2.0) / (2 * 0.1 * 0.1))));
}

TEST_CASE("pointwise identity pipeline") {
    Sre ref = parse_over("a", "'a' *[0.5]");
    SECTION("identical distributions accept") {
        int accepts = 0;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            TesterConfig cfg(0.2, 0.2, seed);
            SreSampleSource src(ref, seed);
            if (linf_identity_test(ref, src, cfg).verdict == Verdict::kAccept) ++accepts;
        }
        REQUIRE(accepts >= 40);
    }
    SECTION("a pointwise gap of 0.4 rejects") {
        Sre far = parse_over("a", "'a' *[0.9]");
        int rejects = 0;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            TesterConfig cfg(0.2, 0.2, seed);
            SreSampleSource src(far, seed);
            if (linf_identity_test(ref, src, cfg).verdict == Verdict::kReject) ++rejects;
        }
        REQUIRE(rejects >= 40);
    }
    SECTION("fixed seed single run accepts on identical input") {
        TesterConfig cfg(0.2, 0.2, 424242);
        SreSampleSource src(ref, cfg.seed);
        TestOutcome out = linf_identity_test(ref, src, cfg);
        REQUIRE(out.verdict == Verdict::kAccept);
        REQUIRE(out.domain_size_k >= 1);
    }
}

TEST_CASE("planted alternatives hit their target distance") {
    struct Case {
        const char* alphabet;
        const char* text;
    };
    const Case cases[] = {
        {"a", "'a' *[0.5]"},
        {"ab", "('a' +[0.5] 'b') *[0.5]"},
        {"ab", "'a' +[0.3] 'b' . 'b'"},
    };
    for (const auto& c : cases) {
        Sre ref = parse_over(c.alphabet, c.text);
        std::size_t theta = truncation_threshold(ref, 0.3).theta;
        PlantedAlternative planted = plant_alternative(ref, 0.5, theta);
        INFO(c.text);
        REQUIRE(planted.achieved_distance >= 0.5);
        REQUIRE(planted.achieved_distance <= 0.51);
        // pointwise metric variant
        PlantedAlternative pw = plant_alternative(ref, 0.2, theta, PlantMetric::kLinf);
        REQUIRE(pw.achieved_distance >= 0.2);
        REQUIRE(pw.achieved_distance <= 0.21);
    }
    Sre no_knob = parse_over("ab", "'a' . 'b'");
    REQUIRE_THROWS_AS(plant_alternative(no_knob, 0.5, 2), Error);
}

TEST_CASE("outcome records and determinism") {
    Sre ref = parse_over("ab", "('a' +[0.5] 'b') *[0.5]");
    TesterConfig cfg(0.3, 0.2, 1234);
    SreSampleSource s1(ref, cfg.seed), s2(ref, cfg.seed);
    TestOutcome o1 = l1_identity_test(ref, s1, cfg);
    TestOutcome o2 = l1_identity_test(ref, s2, cfg);
    REQUIRE(o1.verdict == o2.verdict);
    REQUIRE(o1.statistic == o2.statistic);
    REQUIRE(outcome_record(o1, cfg.seed, 0) == outcome_record(o2, cfg.seed, 0));
    std::string rec = outcome_record(o1, cfg.seed, 0);
    REQUIRE(rec.find("verdict=") == 0);
    REQUIRE(rec.find("seed=1234\n") != std::string::npos);
    REQUIRE(rec.find("wall_ms=0\n") != std::string::npos);
}

TEST_CASE("raising the budget does not hurt error rates") {
    Sre ref = parse_over("ab", "'a' +[0.3] 'b' . 'b'");
    std::size_t theta = truncation_threshold(ref, 0.3).theta;
    PlantedAlternative planted = plant_alternative(ref, 0.5, theta);
    auto run = [&](std::optional<std::uint64_t> override_n) {
        int self_ok = 0, far_ok = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            TesterConfig cfg(0.3, 0.2, seed);
            cfg.sample_budget_override = override_n;
            SreSampleSource self(ref, seed);
            if (l1_identity_test(ref, self, cfg).verdict == Verdict::kAccept) ++self_ok;
            SreSampleSource far(planted.sre, seed);
            if (l1_identity_test(ref, far, cfg).verdict == Verdict::kReject) ++far_ok;
        }
        return std::pair<int, int>{self_ok, far_ok};
    };
    auto base = run(std::nullopt);
    auto boosted = run(sample_count(domain_size(ref.alphabet, theta).exact, 0.3) * 4);
    REQUIRE(boosted.first + 1 >= base.first);   // 5% noise allowance on 20 trials
    REQUIRE(boosted.second + 1 >= base.second);
}

TEST_CASE("distance decomposes across a length split") {
    Sre p = parse_over("ab", "('a' +[0.5] 'b') *[0.5]");
    Sre q = parse_over("ab", "('a' +[0.7] 'b') *[0.4]");
    MassFunction pm = sre_mass(p), qm = sre_mass(q);
    for (std::size_t theta : {2, 4, 6}) {
        const std::size_t full = 9;
        double head = l1_distance_truncated(pm, qm, theta);
        double tail = 0.0;
        for_each_word_up_to(p.alphabet, full, [&](const Word& w) {
            if (w.length() > theta) tail += std::fabs(pm(w) - qm(w));
        });
        REQUIRE(head + tail ==
                Catch::Approx(l1_distance_truncated(pm, qm, full)).epsilon(0).margin(1e-12));
    }
}

TEST_CASE("conservative budget flag sizes the draw") {
    Sre ref = parse_over("ab", "('a' +[0.5] 'b') *[0.5]");
    TesterConfig cfg(0.3, 0.2, 5);
    cfg.use_conservative_budget = true;
    SreSampleSource src(ref, cfg.seed);
    TestOutcome out = l1_identity_test(ref, src, cfg);
    REQUIRE(out.samples_drawn ==
            conservative_sample_count(30, cfg.inner_thresholds.first,
                                      cfg.inner_thresholds.second));
    REQUIRE(out.domain_size_bound == 32);
}

TEST_CASE("empirical normalization flag") {
    std::map<Word, double> q{{Word("a"), 1.0}};
    EmpiricalDistribution e{1};
    e.record(Word("a"));
    e.record(Word("a"));
    e.record(Word("aa"));  // discarded
    TestOutcome by_retained = finite_tolerant_test(q, e, 0.1, 0.3, false);
    REQUIRE(by_retained.statistic == Catch::Approx(0.0).margin(1e-15));
    TestOutcome by_drawn = finite_tolerant_test(q, e, 0.1, 0.3, true);
    REQUIRE(by_drawn.statistic == Catch::Approx(1.0 / 3.0).epsilon(0).margin(1e-15));
}

TEST_CASE("replay format") {
    std::vector<Word> words{Word("a"), Word("ab"), Word("bb")};
    std::string text = print_replay(kAb, words);
    auto [alphabet, back] = parse_replay(text);
    REQUIRE(alphabet == kAb);
    REQUIRE(back == words);
    REQUIRE(print_replay(alphabet, back) == text);
    REQUIRE_THROWS_AS(parse_replay("a\nb\n"), ParseError);
    REQUIRE_THROWS_AS(parse_replay("alphabet: ab\nxyz\n"), ParseError);

    ReplaySource src(words);
    src.next();
    src.next();
    src.next();
    REQUIRE_THROWS_AS(src.next(), ExhaustedSource);
}

TEST_CASE("tester configuration validation") {
    REQUIRE_THROWS_AS(TesterConfig(0.0), Error);
    REQUIRE_THROWS_AS(TesterConfig(1.0), Error);
    REQUIRE_THROWS_AS(TesterConfig(0.3, 0.0), Error);
    TesterConfig cfg(0.3);
    REQUIRE(cfg.inner_thresholds.first == Catch::Approx(0.1).margin(1e-15));
    REQUIRE(cfg.inner_thresholds.second == Catch::Approx(0.3).margin(1e-15));
    cfg.inner_thresholds = {0.4, 0.2};
    REQUIRE_THROWS_AS(cfg.validate(), Error);
}
