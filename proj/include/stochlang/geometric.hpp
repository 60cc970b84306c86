#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stochlang/alphabet.hpp"
#include "stochlang/distribution.hpp"
#include "stochlang/errors.hpp"
#include "stochlang/sre.hpp"
#include "stochlang/text.hpp"

namespace stochlang {

// Mass alpha*(1-alpha)^(k-1) on the k-fold repetition of a base word, zero
// off the repetition chain.
struct GeometricDistribution {
    Word base;
    double alpha;

    GeometricDistribution(Word base_word, double a) : base(std::move(base_word)), alpha(a) {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw WeightError("geometric parameter must lie in (0,1)");
    }
};

// Detects u = base^k by length divisibility, then block comparison.
inline double geometric_pmf(const GeometricDistribution& g, const Word& u) {
    std::size_t bl = g.base.length();
    if (u.length() % bl != 0) return 0.0;
    std::size_t k = u.length() / bl;
    for (std::size_t i = 0; i < u.length(); ++i)
        if (u.at(i) != g.base.at(i % bl)) return 0.0;
    return g.alpha * std::pow(1.0 - g.alpha, static_cast<double>(k - 1));
}

// Convex combination of geometric distributions.
struct GeometricMixture {
    std::vector<std::pair<double, GeometricDistribution>> components;

    void validate() const {
        if (components.empty()) throw WeightError("mixture needs at least one component");
        double sum = 0.0;
        for (const auto& [l, g] : components) {
            if (l < 0.0 || l > 1.0) throw WeightError("mixture weights must lie in [0,1]");
            sum += l;
        }
        if (std::fabs(sum - 1.0) > 1e-12)
            throw WeightError("mixture weights must sum to 1, got " + format_double(sum));
    }

    double pmf(const Word& u) const {
        double v = 0.0;
        for (const auto& [l, g] : components) v += l * geometric_pmf(g, u);
        return v;
    }
};

inline MassFunction geometric_mass(const Alphabet& alphabet, GeometricDistribution g) {
    return MassFunction(alphabet, [g](const Word& u) { return geometric_pmf(g, u); }, 1.0);
}

inline MassFunction mixture_mass(const Alphabet& alphabet, GeometricMixture m) {
    m.validate();
    return MassFunction(alphabet, [m](const Word& u) { return m.pmf(u); }, 1.0);
}

// Geometric stand-in for a point mass. The exact distance to the point mass
// is 2*(1-alpha), so alpha = 1 - eps/2 (plus a hair of safety margin) brings
// it within eps.
inline GeometricDistribution dirac_approx(const Word& w, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw Error("accuracy parameter must lie in (0,1)");
    double alpha = 1.0 - eps / 2.0 + 1e-12;
    if (alpha >= 1.0) alpha = std::nextafter(1.0, 0.0);
    return GeometricDistribution(w, alpha);
}

// Componentwise point-mass replacement: each support word keeps its weight,
// the per-word error budget is eps, and the mixture error is at most eps by
// convexity.
inline GeometricMixture approximate_finite_support(const std::map<Word, double>& p, double eps) {
    if (p.empty()) throw Error("support must be non-empty");
    double sum = 0.0;
    for (const auto& [w, v] : p) sum += v;
    if (std::fabs(sum - 1.0) > kMassTolerance)
        throw NormalizationError("support masses must sum to 1, got " + format_double(sum));
    GeometricMixture m;
    for (const auto& [w, v] : p) {
        if (v == 0.0) continue;  // zero weights would break the choice-chain build later
        m.components.emplace_back(v, dirac_approx(w, eps));
    }
    m.validate();
    return m;
}

// Approximates an arbitrary enumerable mass function: find a finite head
// carrying all but eps/4 of the mass, normalize it, then spend eps/2 on the
// componentwise replacement. Enumeration walks lengths breadth-first and
// stops at the first length where the head is heavy enough.
inline GeometricMixture universal_approx(const MassFunction& r, double eps,
                                         std::uint64_t budget = kDefaultEnumerationBudget) {
    if (!(eps > 0.0 && eps < 1.0)) throw Error("accuracy parameter must lie in (0,1)");
    std::map<Word, double> head;
    double head_mass = 0.0;
    const double target = 1.0 - eps / 4.0;
    std::uint64_t visited = 0;
    for (std::size_t len = 1;; ++len) {
        std::uint64_t layer = count_words_up_to(r.alphabet().size(), len) -
                              (len > 1 ? count_words_up_to(r.alphabet().size(), len - 1) : 0);
        if (visited + layer > budget)
            throw BudgetExceeded("mass " + format_double(target) +
                                 " not reached within the enumeration budget");
        visited += layer;
        detail::enumerate_length(r.alphabet(), len, [&](const Word& w) {
            double v = r(w);
            if (v > 0.0) {
                head[w] = v;
                head_mass += v;
            }
        });
        if (head_mass > target) break;
    }
    std::map<Word, double> normalized;
    for (const auto& [w, v] : head) normalized[w] = v / head_mass;
    return approximate_finite_support(normalized, eps / 2.0);
}

// ---------------------------------------------------------------------------
// Expression form of a mixture: every component is the starred
// concatenation chain of its base word, components are combined by a
// right-nested choice chain whose weights are obtained by sequential
// conditioning, so the mixture weights are realized exactly.
// ---------------------------------------------------------------------------

inline SrePtr word_to_concat_chain(const Word& w) {
    SrePtr e = make_atom(w.at(0));
    for (std::size_t i = 1; i < w.length(); ++i) e = make_concat(std::move(e), make_atom(w.at(i)));
    return e;
}

inline Sre mixture_to_sre(const GeometricMixture& m, const Alphabet& alphabet) {
    m.validate();
    std::vector<std::pair<double, GeometricDistribution>> comps;
    for (const auto& c : m.components)
        if (c.first > 0.0) comps.push_back(c);
    if (comps.empty()) throw WeightError("mixture has no positive-weight component");

    std::vector<SrePtr> starred;
    starred.reserve(comps.size());
    for (const auto& [l, g] : comps) {
        if (!g.base.over(alphabet))
            throw AlphabetError("component base word uses symbols outside the alphabet");
        starred.push_back(make_star(word_to_concat_chain(g.base), g.alpha));
    }

    SrePtr expr = starred.back();
    double remaining = 1.0;
    // Walk backwards so the chain nests to the right; conditioned weight of
    // component i is lambda_i / (remaining mass from i onwards).
    for (std::size_t i = comps.size() - 1; i-- > 0;) {
        double tail = 0.0;
        for (std::size_t j = i; j < comps.size(); ++j) tail += comps[j].first;
        double conditioned = comps[i].first / tail;
        if (!(conditioned > 0.0 && conditioned < 1.0))
            throw WeightError("conditioned choice weight " + format_double(conditioned) +
                              " falls outside (0,1)");
        expr = make_choice(conditioned, starred[i], std::move(expr));
        remaining = tail;
    }
    (void)remaining;
    return Sre{alphabet, expr};
}

// ---------------------------------------------------------------------------
// Divergence diagnostics. Reported numbers only; no optimality claim is
// attached to either of these.
// ---------------------------------------------------------------------------

// Sum of p(w) * log(p(w)/q(w)) over |w| <= max_len with the usual
// conventions: terms with p(w)=0 vanish, p(w)>0 against q(w)=0 is infinite.
inline double truncated_kl(const MassFunction& p, const MassFunction& q, std::size_t max_len,
                           std::uint64_t budget = kDefaultEnumerationBudget) {
    if (!p.alphabet().same_symbol_set(q.alphabet()))
        throw AlphabetError("divergence requires matching alphabets");
    double sum = 0.0;
    bool infinite = false;
    for_each_word_up_to(p.alphabet(), max_len,
                        [&](const Word& w) {
                            double pv = p(w);
                            if (pv == 0.0) return;
                            double qv = q(w);
                            if (qv == 0.0) {
                                infinite = true;
                                return;
                            }
                            sum += pv * std::log(pv / qv);
                        },
                        budget);
    return infinite ? std::numeric_limits<double>::infinity() : sum;
}

// Heuristic divergence-oriented mixture: per-word rate 1 - exp(-p(w)/|w|).
// Exposed for experiments; assess it with truncated_kl, nothing stronger is
// guaranteed.
inline GeometricMixture kl_heuristic_mixture(const std::map<Word, double>& p) {
    if (p.empty()) throw Error("support must be non-empty");
    GeometricMixture m;
    double sum = 0.0;
    for (const auto& [w, v] : p) sum += v;
    if (!(sum > 0.0)) throw NormalizationError("support carries no mass");
    for (const auto& [w, v] : p) {
        if (v == 0.0) continue;
        double alpha = 1.0 - std::exp(-(v / sum) / static_cast<double>(w.length()));
        m.components.emplace_back(v / sum, GeometricDistribution(w, alpha));
    }
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// Serialization: one `component <weight> <alpha> <word>` line each.
// ---------------------------------------------------------------------------

inline std::string print_mixture(const GeometricMixture& m) {
    std::ostringstream out;
    for (const auto& [l, g] : m.components)
        out << "component " << format_double(l) << ' ' << format_double(g.alpha) << ' '
            << g.base.str() << "\n";
    return out.str();
}

inline GeometricMixture parse_mixture(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t offset = 0;
    GeometricMixture m;
    while (std::getline(in, line)) {
        auto toks = detail::split_tokens(line);
        if (toks.empty()) {
            offset += line.size() + 1;
            continue;
        }
        if (toks[0] != "component" || toks.size() != 4)
            throw ParseError("expected 'component <weight> <alpha> <word>'", offset);
        double l = detail::parse_full_double(toks[1], offset);
        double alpha = detail::parse_full_double(toks[2], offset);
        m.components.emplace_back(l, GeometricDistribution(Word(toks[3]), alpha));
        offset += line.size() + 1;
    }
    m.validate();
    return m;
}

}  // namespace stochlang
