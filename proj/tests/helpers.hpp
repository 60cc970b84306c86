#pragma once

// Shared utilities for the test suites: a seeded random expression
// generator, a reference evaluator that follows the defining composition
// sums directly (no memoization, no suffix recursion) to serve as an
// independent oracle, and small conveniences.

#include <cmath>
#include <string>
#include <vector>

#include "stochlang/stochlang.hpp"

namespace testutil {

namespace sl = stochlang;

// Depth-bounded random expression; weights kept away from the extremes so
// truncation lengths and tails stay at desk scale.
inline sl::SrePtr random_sre(sl::SeededRng& rng, const sl::Alphabet& alphabet, int depth) {
    double alpha = 0.2 + 0.6 * rng.uniform();
    double roll = rng.uniform();
    if (depth <= 0 || roll < 0.3)
        return sl::make_atom(alphabet.symbol(rng.uniform_index(alphabet.size())));
    if (roll < 0.55)
        return sl::make_choice(alpha, random_sre(rng, alphabet, depth - 1),
                               random_sre(rng, alphabet, depth - 1));
    if (roll < 0.8)
        return sl::make_concat(random_sre(rng, alphabet, depth - 1),
                               random_sre(rng, alphabet, depth - 1));
    return sl::make_star(random_sre(rng, alphabet, depth - 1), alpha);
}

// --- reference evaluator -------------------------------------------------

inline double ref_eval(const sl::SrePtr& e, const std::string& w, std::size_t i, std::size_t j);

// Sum over the ways to split [i,j) into exactly k non-empty parts, each
// evaluated under `inner`.
inline double ref_compositions(const sl::SrePtr& inner, const std::string& w, std::size_t i,
                               std::size_t j, std::size_t k) {
    if (k == 1) return ref_eval(inner, w, i, j);
    double total = 0.0;
    for (std::size_t m = i + 1; m < j; ++m)
        total += ref_eval(inner, w, i, m) * ref_compositions(inner, w, m, j, k - 1);
    return total;
}

inline double ref_eval(const sl::SrePtr& e, const std::string& w, std::size_t i, std::size_t j) {
    if (auto* a = std::get_if<sl::SreAtom>(&e->node))
        return (j - i == 1 && w[i] == a->symbol) ? 1.0 : 0.0;
    if (auto* c = std::get_if<sl::SreChoice>(&e->node))
        return c->alpha * ref_eval(c->left, w, i, j) +
               (1.0 - c->alpha) * ref_eval(c->right, w, i, j);
    if (auto* c = std::get_if<sl::SreConcat>(&e->node)) {
        double total = 0.0;
        for (std::size_t m = i + 1; m < j; ++m)
            total += ref_eval(c->left, w, i, m) * ref_eval(c->right, w, m, j);
        return total;
    }
    const auto& s = std::get<sl::SreStar>(e->node);
    double total = 0.0;
    for (std::size_t k = 1; k <= j - i; ++k)
        total += s.alpha * std::pow(1.0 - s.alpha, static_cast<double>(k - 1)) *
                 ref_compositions(s.inner, w, i, j, k);
    return total;
}

inline double ref_eval(const sl::SrePtr& e, const sl::Word& w) {
    return ref_eval(e, w.str(), 0, w.length());
}

inline sl::Word random_word(sl::SeededRng& rng, const sl::Alphabet& alphabet, std::size_t max_len) {
    std::size_t len = 1 + rng.uniform_index(max_len);
    std::string s;
    for (std::size_t i = 0; i < len; ++i)
        s += alphabet.symbol(rng.uniform_index(alphabet.size()));
    return sl::Word(s);
}

}  // namespace testutil
