#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stochlang/alphabet.hpp"
#include "stochlang/errors.hpp"

namespace stochlang {

// Cap on how many words a single exhaustive pass may visit.
inline constexpr std::uint64_t kDefaultEnumerationBudget = 2'000'000;

// Absolute tolerance for exact-math comparisons.
inline constexpr double kMassTolerance = 1e-9;

// Number of words with 1 <= |w| <= max_len over an alphabet of the given
// size. Throws BudgetExceeded if the count does not fit in a signed 64-bit
// value.
inline std::uint64_t count_words_up_to(std::size_t alphabet_size, std::size_t max_len) {
    constexpr std::uint64_t limit = 9223372036854775807ull;  // 2^63 - 1
    std::uint64_t total = 0;
    std::uint64_t layer = 1;
    for (std::size_t n = 1; n <= max_len; ++n) {
        if (layer > limit / alphabet_size)
            throw BudgetExceeded("truncated domain size exceeds 2^63-1");
        layer *= alphabet_size;
        if (total > limit - layer)
            throw BudgetExceeded("truncated domain size exceeds 2^63-1");
        total += layer;
    }
    return total;
}

namespace detail {

// Visits the words of exactly length n in alphabet order. No budget check.
template <typename F>
void enumerate_length(const Alphabet& alphabet, std::size_t n, F&& fn) {
    std::string buf(n, alphabet.symbol(0));
    std::vector<std::size_t> idx(n, 0);
    for (;;) {
        fn(Word(buf));
        // Odometer increment, least significant position last.
        std::size_t pos = n;
        while (pos > 0) {
            --pos;
            if (++idx[pos] < alphabet.size()) {
                buf[pos] = alphabet.symbol(idx[pos]);
                break;
            }
            idx[pos] = 0;
            buf[pos] = alphabet.symbol(0);
            if (pos == 0) return;
        }
    }
}

}  // namespace detail

// Visits every word with 1 <= |w| <= max_len in shortlex order (length, then
// alphabet order). Throws BudgetExceeded up front if there are more words
// than the budget allows.
template <typename F>
void for_each_word_up_to(const Alphabet& alphabet, std::size_t max_len, F&& fn,
                         std::uint64_t budget = kDefaultEnumerationBudget) {
    if (count_words_up_to(alphabet.size(), max_len) > budget)
        throw BudgetExceeded("enumeration of |w| <= " + std::to_string(max_len) + " over " +
                             std::to_string(alphabet.size()) + " symbols exceeds budget " +
                             std::to_string(budget));
    for (std::size_t n = 1; n <= max_len; ++n) detail::enumerate_length(alphabet, n, fn);
}

// A mass assignment over non-empty words: evaluation plus, when it is known
// analytically, the total mass of the whole series.
class MassFunction {
public:
    MassFunction(Alphabet alphabet, std::function<double(const Word&)> eval,
                 std::optional<double> declared_total = std::nullopt)
        : alphabet_(std::move(alphabet)), eval_(std::move(eval)), total_(declared_total) {}

    const Alphabet& alphabet() const { return alphabet_; }
    const std::optional<double>& declared_total() const { return total_; }

    double operator()(const Word& w) const {
        double v = eval_(w);
        if (v < 0.0) throw Error("mass function produced a negative value");
        return v;
    }

private:
    Alphabet alphabet_;
    std::function<double(const Word&)> eval_;
    std::optional<double> total_;
};

// Point mass on a single word.
inline MassFunction dirac_mass(const Alphabet& alphabet, const Word& w) {
    return MassFunction(alphabet, [w](const Word& u) { return u == w ? 1.0 : 0.0; }, 1.0);
}

// Finite table; total is the sum of the entries.
inline MassFunction table_mass(const Alphabet& alphabet, std::map<Word, double> table) {
    double total = 0.0;
    for (const auto& [w, v] : table) {
        if (v < 0.0) throw Error("table mass entries must be non-negative");
        total += v;
    }
    auto shared = std::make_shared<std::map<Word, double>>(std::move(table));
    return MassFunction(
        alphabet,
        [shared](const Word& w) {
            auto it = shared->find(w);
            return it == shared->end() ? 0.0 : it->second;
        },
        total);
}

// Scales to total mass one. The total must be declared, finite and positive.
inline MassFunction normalize(const MassFunction& m) {
    if (!m.declared_total())
        throw NormalizationError("cannot normalize: total mass not declared");
    double t = *m.declared_total();
    if (!(t > 0.0) || !std::isfinite(t))
        throw NormalizationError("cannot normalize: total mass must be finite and positive, got " +
                                 std::to_string(t));
    return MassFunction(m.alphabet(), [m, t](const Word& w) { return m(w) / t; }, 1.0);
}

// Frequency table of observed words. When a length threshold is set, longer
// draws are counted as discarded instead of entering the table.
class EmpiricalDistribution {
public:
    explicit EmpiricalDistribution(std::optional<std::size_t> threshold = std::nullopt)
        : threshold_(threshold) {}

    void record(const Word& w) {
        ++total_drawn_;
        if (threshold_ && w.length() > *threshold_) {
            ++discarded_;
        } else {
            ++counts_[w];
        }
    }

    // Pointwise count addition; thresholds must agree.
    void merge(const EmpiricalDistribution& other) {
        if (threshold_ != other.threshold_)
            throw Error("cannot merge samples with different truncation thresholds");
        for (const auto& [w, c] : other.counts_) counts_[w] += c;
        total_drawn_ += other.total_drawn_;
        discarded_ += other.discarded_;
    }

    const std::map<Word, std::uint64_t>& counts() const { return counts_; }
    std::uint64_t total_drawn() const { return total_drawn_; }
    std::uint64_t discarded() const { return discarded_; }
    std::uint64_t retained() const { return total_drawn_ - discarded_; }
    std::optional<std::size_t> threshold() const { return threshold_; }

    double frequency(const Word& w) const {
        if (retained() == 0) throw EmptySampleError("no retained samples");
        auto it = counts_.find(w);
        return it == counts_.end() ? 0.0
                                   : static_cast<double>(it->second) / static_cast<double>(retained());
    }

private:
    std::map<Word, std::uint64_t> counts_;
    std::uint64_t total_drawn_ = 0;
    std::uint64_t discarded_ = 0;
    std::optional<std::size_t> threshold_;
};

// Sum of |p(w) - q(w)| over all words with |w| <= max_len, by exhaustive
// enumeration.
inline double l1_distance_truncated(const MassFunction& p, const MassFunction& q,
                                    std::size_t max_len,
                                    std::uint64_t budget = kDefaultEnumerationBudget) {
    if (max_len < 1) throw Error("truncation length must be at least 1");
    if (!p.alphabet().same_symbol_set(q.alphabet()))
        throw AlphabetError("l1 distance requires matching alphabets");
    double sum = 0.0;
    for_each_word_up_to(p.alphabet(), max_len,
                        [&](const Word& w) { sum += std::fabs(p(w) - q(w)); }, budget);
    return sum;
}

// Plug-in distance between an empirical table (normalized by its retained
// count) and q, over all words with |w| <= max_len. Words never observed
// contribute q(w).
inline double l1_distance_empirical(const EmpiricalDistribution& e, const MassFunction& q,
                                    std::size_t max_len,
                                    std::uint64_t budget = kDefaultEnumerationBudget) {
    if (e.retained() == 0) throw EmptySampleError("empirical distribution has no retained samples");
    if (e.threshold() && *e.threshold() > max_len)
        throw Error("empirical truncation threshold exceeds the comparison length");
    double n = static_cast<double>(e.retained());
    double sum = 0.0;
    for_each_word_up_to(q.alphabet(), max_len,
                        [&](const Word& w) {
                            auto it = e.counts().find(w);
                            double freq =
                                it == e.counts().end() ? 0.0 : static_cast<double>(it->second) / n;
                            sum += std::fabs(freq - q(w));
                        },
                        budget);
    return sum;
}

}  // namespace stochlang
