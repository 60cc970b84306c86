#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stochlang/alphabet.hpp"
#include "stochlang/distribution.hpp"
#include "stochlang/errors.hpp"
#include "stochlang/random.hpp"
#include "stochlang/sre.hpp"
#include "stochlang/text.hpp"

namespace stochlang {

// Tester parameters. The inner pair (eps1, eps2) is what the finite-domain
// core actually distinguishes; the defaults follow the truncation pipeline's
// (eps/3, eps) and no fixed gap is hard-coded anywhere.
struct TesterConfig {
    double epsilon;
    double delta;
    std::uint64_t seed;
    std::optional<std::uint64_t> sample_budget_override;
    std::pair<double, double> inner_thresholds;
    bool normalize_by_drawn = false;  // divide empirical counts by N instead of retained
    bool use_conservative_budget = false;  // size the draw for the plug-in guarantee
    std::uint64_t enumeration_budget = kDefaultEnumerationBudget;

    explicit TesterConfig(double eps, double conf_delta = 0.2, std::uint64_t rng_seed = 0)
        : epsilon(eps),
          delta(conf_delta),
          seed(rng_seed),
          inner_thresholds(eps / 3.0, eps) {
        validate();
    }

    void validate() const {
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error("epsilon must lie in (0,1)");
        if (!(delta > 0.0 && delta < 1.0)) throw Error("delta must lie in (0,1)");
        if (!(inner_thresholds.first > 0.0 && inner_thresholds.first < inner_thresholds.second))
            throw Error("inner thresholds must satisfy 0 < eps1 < eps2");
    }
};

enum class Verdict { kAccept, kReject };

inline const char* to_string(Verdict v) { return v == Verdict::kAccept ? "Accept" : "Reject"; }

struct TestOutcome {
    Verdict verdict = Verdict::kReject;
    double statistic = 0.0;
    double threshold_used = 0.0;
    std::uint64_t samples_drawn = 0;
    std::uint64_t samples_discarded = 0;
    std::size_t theta = 0;
    std::uint64_t domain_size_k = 0;
    std::uint64_t domain_size_bound = 0;  // |Sigma|^(theta+1), recorded alongside the exact count
    std::string note;                     // non-empty only for degenerate outcomes
};

// Independent draws from the unknown distribution under test.
class SampleSource {
public:
    virtual ~SampleSource() = default;
    virtual Word next() = 0;
};

class SreSampleSource final : public SampleSource {
public:
    SreSampleSource(Sre sre, std::uint64_t seed) : sre_(std::move(sre)), rng_(seed) {}
    Word next() override { return sample_sre(sre_, rng_); }

private:
    Sre sre_;
    SeededRng rng_;
};

// Replays a fixed list of words; over-reading is an error rather than a
// silent wrap-around.
class ReplaySource final : public SampleSource {
public:
    explicit ReplaySource(std::vector<Word> words) : words_(std::move(words)) {}

    Word next() override {
        if (pos_ >= words_.size())
            throw ExhaustedSource("replay exhausted after " + std::to_string(words_.size()) +
                                  " words");
        return words_[pos_++];
    }

    std::size_t remaining() const { return words_.size() - pos_; }

private:
    std::vector<Word> words_;
    std::size_t pos_ = 0;
};

// Replay file format: `alphabet: <syms>` header, then one word per line.
inline std::pair<Alphabet, std::vector<Word>> parse_replay(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t offset = 0;
    std::optional<Alphabet> alphabet;
    std::vector<Word> words;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) {
            offset += line.size() + 1;
            continue;
        }
        if (!alphabet) {
            if (line.rfind("alphabet:", 0) != 0)
                throw ParseError("expected 'alphabet:' header line", offset);
            std::string syms = line.substr(9);
            while (!syms.empty() && syms.front() == ' ') syms.erase(syms.begin());
            alphabet = Alphabet(syms);
        } else {
            Word w(line);
            if (!w.over(*alphabet))
                throw ParseError("word uses symbols outside the declared alphabet", offset);
            words.push_back(std::move(w));
        }
        offset += line.size() + 1;
    }
    if (!alphabet) throw ParseError("missing 'alphabet:' header", 0);
    return {*alphabet, std::move(words)};
}

inline std::string print_replay(const Alphabet& alphabet, const std::vector<Word>& words) {
    std::ostringstream out;
    out << "alphabet: " << alphabet.symbols() << "\n";
    for (const Word& w : words) out << w.str() << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Domain sizing and sample budgets.
// ---------------------------------------------------------------------------

struct DomainSize {
    std::uint64_t exact;         // sum of |Sigma|^i for 1 <= i <= theta
    std::uint64_t coarse_bound;  // |Sigma|^(theta+1); degenerate for |Sigma| = 1
    bool bound_degenerate;       // coarse bound below the exact count
};

inline DomainSize domain_size(const Alphabet& alphabet, std::size_t theta) {
    if (theta < 1) throw Error("truncation length must be at least 1");
    DomainSize d{};
    d.exact = count_words_up_to(alphabet.size(), theta);
    constexpr std::uint64_t limit = 9223372036854775807ull;
    std::uint64_t b = 1;
    for (std::size_t i = 0; i < theta + 1; ++i) {
        if (b > limit / alphabet.size()) throw BudgetExceeded("domain bound exceeds 2^63-1");
        b *= alphabet.size();
    }
    d.coarse_bound = b;
    d.bound_degenerate = d.coarse_bound < d.exact;
    return d;
}

// Default sample budget: C1*sqrt(k)*log(k+1)/eps^2 + C2*k/log(k), rounded up.
// The constants are configuration, not a claim of optimality.
inline std::uint64_t sample_count(std::uint64_t k, double eps, double c1 = 4.0, double c2 = 4.0) {
    if (k < 2) throw Error("domain size must be at least 2");
    double kd = static_cast<double>(k);
    double n = c1 * std::sqrt(kd) * std::log(kd + 1.0) / (eps * eps) + c2 * kd / std::log(kd);
    return static_cast<std::uint64_t>(std::ceil(n));
}

// Conservative budget under which the plug-in rule below meets its advertised
// error probabilities.
inline std::uint64_t conservative_sample_count(std::uint64_t k, double eps1, double eps2) {
    if (!(eps1 < eps2)) throw Error("thresholds must satisfy eps1 < eps2");
    double gap = eps2 - eps1;
    return static_cast<std::uint64_t>(std::ceil(8.0 * static_cast<double>(k) / (gap * gap)));
}

// ---------------------------------------------------------------------------
// Finite-domain tolerant core: plug-in statistic with midpoint threshold.
// Accepts iff the l1 distance between the empirical table and the reference
// restriction is at most (eps1+eps2)/2.
// ---------------------------------------------------------------------------

inline TestOutcome finite_tolerant_test(const std::map<Word, double>& q,
                                        const EmpiricalDistribution& samples, double eps1,
                                        double eps2, bool normalize_by_drawn = false) {
    if (!(eps1 > 0.0 && eps1 < eps2)) throw Error("thresholds must satisfy 0 < eps1 < eps2");
    if (samples.retained() == 0) throw EmptySampleError("no retained samples to test");
    double denom = static_cast<double>(normalize_by_drawn ? samples.total_drawn()
                                                          : samples.retained());
    double stat = 0.0;
    // Union of supports: anything outside both carries zero on both sides.
    auto qi = q.begin();
    auto ei = samples.counts().begin();
    while (qi != q.end() || ei != samples.counts().end()) {
        if (ei == samples.counts().end() || (qi != q.end() && qi->first < ei->first)) {
            stat += std::fabs(qi->second);
            ++qi;
        } else if (qi == q.end() || ei->first < qi->first) {
            stat += static_cast<double>(ei->second) / denom;
            ++ei;
        } else {
            stat += std::fabs(static_cast<double>(ei->second) / denom - qi->second);
            ++qi;
            ++ei;
        }
    }
    TestOutcome out;
    out.statistic = stat;
    out.threshold_used = 0.5 * (eps1 + eps2);
    out.verdict = stat <= out.threshold_used ? Verdict::kAccept : Verdict::kReject;
    out.samples_drawn = samples.total_drawn();
    out.samples_discarded = samples.discarded();
    out.theta = samples.threshold().value_or(0);
    out.domain_size_k = q.size();
    return out;
}

// Reference restriction: exact masses of the expression on every word of
// length at most theta (zero entries dropped). Unnormalized on purpose; the
// tail that truncation removes is bounded by construction of theta.
inline std::map<Word, double> restrict_sre(const Sre& q, std::size_t theta,
                                           std::uint64_t budget = kDefaultEnumerationBudget) {
    std::map<Word, double> out;
    SreEvaluator ev(q.root);
    for_each_word_up_to(q.alphabet, theta,
                        [&](const Word& w) {
                            double v = ev.eval(w);
                            if (v > 0.0) out.emplace(w, v);
                        },
                        budget);
    return out;
}

// ---------------------------------------------------------------------------
// Truncation-based l1 identity tester: compute the truncation length from the
// reference expression, draw the sample budget, discard overlong draws (they
// still consume budget), and hand the truncated problem to the tolerant core.
// ---------------------------------------------------------------------------

inline TestOutcome l1_identity_test(const Sre& reference, SampleSource& unknown,
                                    const TesterConfig& cfg) {
    cfg.validate();
    std::size_t theta = truncation_threshold(reference, cfg.epsilon).theta;
    DomainSize k = domain_size(reference.alphabet, theta);
    std::uint64_t n;
    if (cfg.sample_budget_override)
        n = *cfg.sample_budget_override;
    else if (cfg.use_conservative_budget)
        n = conservative_sample_count(k.exact, cfg.inner_thresholds.first,
                                      cfg.inner_thresholds.second);
    else
        n = sample_count(k.exact, cfg.epsilon);
    std::map<Word, double> q = restrict_sre(reference, theta, cfg.enumeration_budget);
    EmpiricalDistribution emp{theta};
    for (std::uint64_t i = 0; i < n; ++i) emp.record(unknown.next());
    TestOutcome out = finite_tolerant_test(q, emp, cfg.inner_thresholds.first,
                                           cfg.inner_thresholds.second, cfg.normalize_by_drawn);
    out.theta = theta;
    out.domain_size_k = k.exact;
    out.domain_size_bound = k.coarse_bound;
    return out;
}

// ---------------------------------------------------------------------------
// Pointwise tester: a first batch of draws collects every plausibly heavy
// word, a second fresh batch estimates their probabilities, and the verdict
// compares the largest pointwise gap against eps.
// ---------------------------------------------------------------------------

inline std::uint64_t heavy_hitter_sample_count(double eps, double delta) {
    if (!(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0))
        throw Error("parameters must lie in (0,1)");
    return static_cast<std::uint64_t>(std::ceil((1.0 / eps) * std::log(1.0 / (eps * delta))));
}

inline std::uint64_t hoeffding_sample_count(std::uint64_t k, double eps, double delta) {
    if (k < 1) throw Error("domain size must be at least 1");
    if (!(eps > 0.0) || !(delta > 0.0))
        throw Error("parameters must be positive");
    return static_cast<std::uint64_t>(
        std::ceil((1.0 / (2.0 * eps * eps)) * std::log(2.0 * static_cast<double>(k) / delta)));
}

inline TestOutcome linf_identity_test(const Sre& reference, SampleSource& unknown,
                                      const TesterConfig& cfg) {
    cfg.validate();
    std::uint64_t n1 = heavy_hitter_sample_count(cfg.epsilon, cfg.delta / 2.0);
    std::set<Word> heavy;
    for (std::uint64_t i = 0; i < n1; ++i) heavy.insert(unknown.next());

    TestOutcome out;
    if (heavy.empty()) {
        out.verdict = Verdict::kAccept;
        out.statistic = 0.0;
        out.threshold_used = cfg.epsilon;
        out.samples_drawn = n1;
        out.note = "degenerate-accept:no-candidate-words-observed";
        return out;
    }

    std::uint64_t n2 = hoeffding_sample_count(heavy.size(), cfg.epsilon / 2.0, cfg.delta / 2.0);
    std::map<Word, std::uint64_t> hits;
    for (std::uint64_t i = 0; i < n2; ++i) {
        Word w = unknown.next();
        if (heavy.count(w)) ++hits[w];
    }

    SreEvaluator ev(reference.root);
    double worst = 0.0;
    std::size_t max_len = 0;
    for (const Word& w : heavy) {
        auto it = hits.find(w);
        double freq = it == hits.end() ? 0.0
                                       : static_cast<double>(it->second) / static_cast<double>(n2);
        worst = std::max(worst, std::fabs(freq - ev.eval(w)));
        max_len = std::max(max_len, w.length());
    }
    out.statistic = worst;
    out.threshold_used = cfg.epsilon;
    out.verdict = worst <= cfg.epsilon ? Verdict::kAccept : Verdict::kReject;
    out.samples_drawn = n1 + n2;
    out.samples_discarded = 0;
    out.theta = max_len;
    out.domain_size_k = heavy.size();
    return out;
}

// ---------------------------------------------------------------------------
// Planted alternatives: perturb one weight of the reference until the
// truncated distance matches a requested target. Used by harnesses that need
// ground-truth distances for soundness checks.
// ---------------------------------------------------------------------------

enum class PlantMetric { kL1, kLinf };

inline double linf_distance_truncated(const MassFunction& p, const MassFunction& q,
                                      std::size_t max_len,
                                      std::uint64_t budget = kDefaultEnumerationBudget) {
    if (!p.alphabet().same_symbol_set(q.alphabet()))
        throw AlphabetError("distance requires matching alphabets");
    double worst = 0.0;
    for_each_word_up_to(p.alphabet(), max_len,
                        [&](const Word& w) { worst = std::max(worst, std::fabs(p(w) - q(w))); },
                        budget);
    return worst;
}

namespace detail {

// Rebuilds the tree with the weight of the node at preorder position `target`
// (counting only weight-bearing nodes) replaced.
inline SrePtr replace_weight(const SrePtr& e, std::size_t target, double alpha,
                             std::size_t& counter) {
    if (std::get_if<SreAtom>(&e->node)) return e;
    if (auto* c = std::get_if<SreChoice>(&e->node)) {
        std::size_t mine = counter++;
        SrePtr l = replace_weight(c->left, target, alpha, counter);
        SrePtr r = replace_weight(c->right, target, alpha, counter);
        return make_choice(mine == target ? alpha : c->alpha, std::move(l), std::move(r));
    }
    if (auto* c = std::get_if<SreConcat>(&e->node)) {
        SrePtr l = replace_weight(c->left, target, alpha, counter);
        SrePtr r = replace_weight(c->right, target, alpha, counter);
        return make_concat(std::move(l), std::move(r));
    }
    const auto& s = std::get<SreStar>(e->node);
    std::size_t mine = counter++;
    SrePtr inner = replace_weight(s.inner, target, alpha, counter);
    return make_star(std::move(inner), mine == target ? alpha : s.alpha);
}

inline std::size_t count_weight_nodes(const SrePtr& e) {
    if (std::get_if<SreAtom>(&e->node)) return 0;
    if (auto* c = std::get_if<SreChoice>(&e->node))
        return 1 + count_weight_nodes(c->left) + count_weight_nodes(c->right);
    if (auto* c = std::get_if<SreConcat>(&e->node))
        return count_weight_nodes(c->left) + count_weight_nodes(c->right);
    return 1 + count_weight_nodes(std::get<SreStar>(e->node).inner);
}

// Current weight of the node at preorder position `target` (same numbering
// as replace_weight).
inline bool weight_at(const SrePtr& e, std::size_t target, std::size_t& counter, double& out) {
    if (std::get_if<SreAtom>(&e->node)) return false;
    if (auto* c = std::get_if<SreChoice>(&e->node)) {
        if (counter++ == target) {
            out = c->alpha;
            return true;
        }
        return weight_at(c->left, target, counter, out) ||
               weight_at(c->right, target, counter, out);
    }
    if (auto* c = std::get_if<SreConcat>(&e->node))
        return weight_at(c->left, target, counter, out) ||
               weight_at(c->right, target, counter, out);
    const auto& s = std::get<SreStar>(e->node);
    if (counter++ == target) {
        out = s.alpha;
        return true;
    }
    return weight_at(s.inner, target, counter, out);
}

}  // namespace detail

struct PlantedAlternative {
    Sre sre;
    double achieved_distance;
};

inline PlantedAlternative plant_alternative(const Sre& reference, double target_distance,
                                            std::size_t theta, PlantMetric metric = PlantMetric::kL1,
                                            std::uint64_t budget = kDefaultEnumerationBudget) {
    if (!(target_distance > 0.0)) throw Error("target distance must be positive");
    MassFunction ref = sre_mass(reference);
    auto distance_to = [&](const Sre& other) {
        MassFunction om = sre_mass(other);
        return metric == PlantMetric::kL1 ? l1_distance_truncated(ref, om, theta, budget)
                                          : linf_distance_truncated(ref, om, theta, budget);
    };
    auto with_weight = [&](std::size_t node, double alpha) {
        std::size_t counter = 0;
        return Sre{reference.alphabet,
                   detail::replace_weight(reference.root, node, alpha, counter)};
    };

    std::size_t knobs = detail::count_weight_nodes(reference.root);
    if (knobs == 0) throw Error("reference has no adjustable weight to perturb");
    constexpr double kLo = 1e-6, kHi = 1.0 - 1e-6;
    for (std::size_t node = 0; node < knobs; ++node) {
        double orig = 0.0;
        std::size_t counter = 0;
        detail::weight_at(reference.root, node, counter, orig);
        for (double extreme : {kHi, kLo}) {
            if (distance_to(with_weight(node, extreme)) < target_distance) continue;
            // The distance vanishes at the original weight and reaches the
            // target at the extreme; bisection keeps that bracket.
            double far = extreme, near = orig;
            for (int it = 0; it < 80; ++it) {
                double mid = 0.5 * (far + near);
                if (distance_to(with_weight(node, mid)) >= target_distance)
                    far = mid;
                else
                    near = mid;
            }
            Sre planted = with_weight(node, far);
            return PlantedAlternative{planted, distance_to(planted)};
        }
    }
    throw Error("no single-weight perturbation reaches distance " +
                format_double(target_distance));
}

// ---------------------------------------------------------------------------
// Record rendering (line oriented key=value).
// ---------------------------------------------------------------------------

inline std::string outcome_record(const TestOutcome& o, std::uint64_t seed,
                                  std::uint64_t wall_ms) {
    std::ostringstream out;
    out << "verdict=" << to_string(o.verdict) << "\n"
        << "statistic=" << format_double(o.statistic) << "\n"
        << "threshold=" << format_double(o.threshold_used) << "\n"
        << "theta=" << o.theta << "\n"
        << "k=" << o.domain_size_k << "\n";
    if (o.domain_size_bound) out << "k_bound=" << o.domain_size_bound << "\n";
    out << "N=" << o.samples_drawn << "\n"
        << "discarded=" << o.samples_discarded << "\n"
        << "seed=" << seed << "\n"
        << "wall_ms=" << wall_ms << "\n";
    if (!o.note.empty()) out << "note=" << o.note << "\n";
    return out.str();
}

}  // namespace stochlang
