#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>

#include "stochlang/errors.hpp"

namespace stochlang {

// Finite ordered set of single-character symbols. Iteration order is the
// insertion (declaration) order and is stable.
class Alphabet {
public:
    explicit Alphabet(std::string_view symbols) {
        if (symbols.empty()) throw AlphabetError("alphabet must be non-empty");
        index_.fill(-1);
        for (char c : symbols) {
            auto u = static_cast<unsigned char>(c);
            if (index_[u] >= 0) throw AlphabetError(std::string("duplicate symbol '") + c + "'");
            index_[u] = static_cast<int>(symbols_.size());
            symbols_.push_back(c);
        }
    }

    std::size_t size() const { return symbols_.size(); }
    char symbol(std::size_t i) const { return symbols_[i]; }
    const std::string& symbols() const { return symbols_; }

    bool contains(char c) const { return index_[static_cast<unsigned char>(c)] >= 0; }

    std::size_t index_of(char c) const {
        int i = index_[static_cast<unsigned char>(c)];
        if (i < 0) throw AlphabetError(std::string("symbol '") + c + "' not in alphabet " + symbols_);
        return static_cast<std::size_t>(i);
    }

    // Same symbols regardless of declaration order.
    bool same_symbol_set(const Alphabet& other) const {
        if (size() != other.size()) return false;
        for (char c : symbols_)
            if (!other.contains(c)) return false;
        return true;
    }

    friend bool operator==(const Alphabet& a, const Alphabet& b) {
        return a.symbols_ == b.symbols_;
    }

private:
    std::string symbols_;
    std::array<int, 256> index_{};
};

// A non-empty string of symbols. The empty word is not representable: the
// library models distributions over non-empty strings only.
class Word {
public:
    explicit Word(std::string symbols) : symbols_(std::move(symbols)) {
        if (symbols_.empty()) throw Error("words must be non-empty");
    }

    std::size_t length() const { return symbols_.size(); }
    char at(std::size_t i) const { return symbols_[i]; }
    const std::string& str() const { return symbols_; }

    bool over(const Alphabet& a) const {
        for (char c : symbols_)
            if (!a.contains(c)) return false;
        return true;
    }

    friend auto operator<=>(const Word& a, const Word& b) = default;

private:
    std::string symbols_;
};

}  // namespace stochlang
