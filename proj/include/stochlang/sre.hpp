#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "stochlang/alphabet.hpp"
#include "stochlang/distribution.hpp"
#include "stochlang/errors.hpp"
#include "stochlang/random.hpp"
#include "stochlang/text.hpp"

namespace stochlang {

// Expression tree for a stochastic regular expression. Four constructors:
// a single-symbol point mass, binary convex choice, concatenation, and the
// discounted star (repeat the body k times, k shifted-geometric).
struct SreExpr;
using SrePtr = std::shared_ptr<const SreExpr>;

struct SreAtom {
    char symbol;
};
struct SreChoice {
    double alpha;  // weight of the left branch
    SrePtr left;
    SrePtr right;
};
struct SreConcat {
    SrePtr left;
    SrePtr right;
};
struct SreStar {
    double alpha;  // stop probability per round
    SrePtr inner;
};

struct SreExpr {
    std::variant<SreAtom, SreChoice, SreConcat, SreStar> node;
};

namespace detail {
inline void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw WeightError("weight parameter must lie strictly inside (0,1), got " +
                          format_double(alpha));
}
}  // namespace detail

inline SrePtr make_atom(char symbol) {
    return std::make_shared<SreExpr>(SreExpr{SreAtom{symbol}});
}
inline SrePtr make_choice(double alpha, SrePtr left, SrePtr right) {
    detail::check_alpha(alpha);
    return std::make_shared<SreExpr>(SreExpr{SreChoice{alpha, std::move(left), std::move(right)}});
}
inline SrePtr make_concat(SrePtr left, SrePtr right) {
    return std::make_shared<SreExpr>(SreExpr{SreConcat{std::move(left), std::move(right)}});
}
inline SrePtr make_star(SrePtr inner, double alpha) {
    detail::check_alpha(alpha);
    return std::make_shared<SreExpr>(SreExpr{SreStar{alpha, std::move(inner)}});
}

// An expression together with the alphabet it is declared over.
struct Sre {
    Alphabet alphabet;
    SrePtr root;
};

inline bool ast_equal(const SrePtr& a, const SrePtr& b) {
    if (a == b) return true;
    if (a->node.index() != b->node.index()) return false;
    if (auto* x = std::get_if<SreAtom>(&a->node))
        return x->symbol == std::get<SreAtom>(b->node).symbol;
    if (auto* x = std::get_if<SreChoice>(&a->node)) {
        const auto& y = std::get<SreChoice>(b->node);
        return x->alpha == y.alpha && ast_equal(x->left, y.left) && ast_equal(x->right, y.right);
    }
    if (auto* x = std::get_if<SreConcat>(&a->node)) {
        const auto& y = std::get<SreConcat>(b->node);
        return ast_equal(x->left, y.left) && ast_equal(x->right, y.right);
    }
    const auto& x = std::get<SreStar>(a->node);
    const auto& y = std::get<SreStar>(b->node);
    return x.alpha == y.alpha && ast_equal(x.inner, y.inner);
}

// ---------------------------------------------------------------------------
// Concrete syntax.
//
//   expr    := concat (`+[` alpha `]` concat)*       left-associative
//   concat  := postfix (`.` postfix)*                left-associative
//   postfix := primary (`*[` alpha `]`)*
//   primary := `'` symbol `'` | `(` expr `)`
//
// Star binds tighter than concatenation, which binds tighter than choice.
// Weights are decimal literals strictly inside (0,1).
// ---------------------------------------------------------------------------

namespace detail {

class SreParser {
public:
    SreParser(const std::string& text, const Alphabet& alphabet)
        : text_(text), alphabet_(alphabet) {}

    SrePtr parse() {
        SrePtr e = parse_choice();
        skip_ws();
        if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    SrePtr parse_choice() {
        SrePtr left = parse_concat();
        for (;;) {
            skip_ws();
            if (!match('+')) return left;
            double alpha = parse_bracketed_weight();
            SrePtr right = parse_concat();
            left = make_choice(alpha, std::move(left), std::move(right));
        }
    }

    SrePtr parse_concat() {
        SrePtr left = parse_postfix();
        for (;;) {
            skip_ws();
            if (!match('.')) return left;
            SrePtr right = parse_postfix();
            left = make_concat(std::move(left), std::move(right));
        }
    }

    SrePtr parse_postfix() {
        SrePtr e = parse_primary();
        for (;;) {
            skip_ws();
            if (!match('*')) return e;
            double alpha = parse_bracketed_weight();
            e = make_star(std::move(e), alpha);
        }
    }

    SrePtr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
        if (match('(')) {
            SrePtr e = parse_choice();
            skip_ws();
            if (!match(')')) throw ParseError("expected ')'", pos_);
            return e;
        }
        if (match('\'')) {
            if (pos_ >= text_.size()) throw ParseError("unterminated symbol literal", pos_);
            char sym = text_[pos_];
            if (!alphabet_.contains(sym))
                throw ParseError(std::string("symbol '") + sym + "' not in alphabet " +
                                     alphabet_.symbols(),
                                 pos_);
            ++pos_;
            if (!match('\'')) throw ParseError("expected closing quote", pos_);
            return make_atom(sym);
        }
        throw ParseError("expected a quoted symbol or '('", pos_);
    }

    double parse_bracketed_weight() {
        skip_ws();
        if (!match('[')) throw ParseError("expected '['", pos_);
        skip_ws();
        std::size_t at = pos_;
        double alpha = parse_double_at(text_, pos_);
        if (!(alpha > 0.0 && alpha < 1.0))
            throw ParseError("weight must lie strictly inside (0,1)", at);
        skip_ws();
        if (!match(']')) throw ParseError("expected ']'", pos_);
        return alpha;
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool match(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    const std::string& text_;
    const Alphabet& alphabet_;
    std::size_t pos_ = 0;
};

enum class Prec { kChoice = 0, kConcat = 1, kStar = 2 };

inline void print_node(const SrePtr& e, Prec ctx, std::string& out) {
    if (auto* a = std::get_if<SreAtom>(&e->node)) {
        out += '\'';
        out += a->symbol;
        out += '\'';
        return;
    }
    if (auto* s = std::get_if<SreStar>(&e->node)) {
        // Postfix chains re-parse without parentheses.
        print_node(s->inner, Prec::kStar, out);
        out += " *[";
        out += format_double(s->alpha);
        out += ']';
        return;
    }
    if (auto* c = std::get_if<SreConcat>(&e->node)) {
        bool parens = ctx == Prec::kStar;
        if (parens) out += '(';
        print_node(c->left, Prec::kConcat, out);
        out += " . ";
        // Right operand one level tighter: concatenation is left-associative.
        print_node(c->right, Prec::kStar, out);
        if (parens) out += ')';
        return;
    }
    const auto& ch = std::get<SreChoice>(e->node);
    bool parens = ctx != Prec::kChoice;
    if (parens) out += '(';
    print_node(ch.left, Prec::kChoice, out);
    out += " +[";
    out += format_double(ch.alpha);
    out += "] ";
    print_node(ch.right, Prec::kConcat, out);
    if (parens) out += ')';
}

}  // namespace detail

inline SrePtr parse_sre(const std::string& text, const Alphabet& alphabet) {
    return detail::SreParser(text, alphabet).parse();
}

// Canonical rendering: minimal parentheses, weights at up to 17 significant
// digits. parse_sre(print_sre(e)) reproduces e exactly.
inline std::string print_sre(const SrePtr& e) {
    std::string out;
    detail::print_node(e, detail::Prec::kChoice, out);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation.
//
// The value on a word w combines the four constructors recursively: an atom
// matches a single symbol; choice mixes the operands; concatenation sums
// left(u)*right(v) over the splits w = uv with both parts non-empty; the star
// satisfies S = alpha*inner + (1-alpha)*(inner . S), which resolves in at
// most |w| steps because every part is non-empty. All values on sub-spans of
// w are memoized, so nested stars stay polynomial in |w|.
// ---------------------------------------------------------------------------

class SreEvaluator {
public:
    explicit SreEvaluator(SrePtr root) : root_(std::move(root)) { index_nodes(root_); }

    double eval(const Word& w) {
        const std::string& s = w.str();
        std::size_t n = s.size();
        if (n > max_len_) {
            max_len_ = n;
            values_.assign(nodes_.size() * (max_len_ + 1) * (max_len_ + 1), 0.0);
            stamps_.assign(values_.size(), 0);
            epoch_ = 0;
        }
        ++epoch_;
        word_ = &s;
        return value(root_.get(), 0, n);
    }

private:
    void index_nodes(const SrePtr& e) {
        if (ids_.count(e.get())) return;  // shared subtrees share a cache row
        ids_.emplace(e.get(), nodes_.size());
        nodes_.push_back(e.get());
        if (auto* c = std::get_if<SreChoice>(&e->node)) {
            index_nodes(c->left);
            index_nodes(c->right);
        } else if (auto* c = std::get_if<SreConcat>(&e->node)) {
            index_nodes(c->left);
            index_nodes(c->right);
        } else if (auto* s = std::get_if<SreStar>(&e->node)) {
            index_nodes(s->inner);
        }
    }

    std::size_t slot(const SreExpr* e, std::size_t i, std::size_t j) const {
        std::size_t id = ids_.at(e);
        return (id * (max_len_ + 1) + i) * (max_len_ + 1) + j;
    }

    // Value of node e on the span [i, j) of the current word.
    double value(const SreExpr* e, std::size_t i, std::size_t j) {
        std::size_t k = slot(e, i, j);
        if (stamps_[k] == epoch_) return values_[k];
        double v = 0.0;
        if (auto* a = std::get_if<SreAtom>(&e->node)) {
            v = (j - i == 1 && (*word_)[i] == a->symbol) ? 1.0 : 0.0;
        } else if (auto* c = std::get_if<SreChoice>(&e->node)) {
            v = c->alpha * value(c->left.get(), i, j) +
                (1.0 - c->alpha) * value(c->right.get(), i, j);
        } else if (auto* c = std::get_if<SreConcat>(&e->node)) {
            for (std::size_t m = i + 1; m < j; ++m)
                v += value(c->left.get(), i, m) * value(c->right.get(), m, j);
        } else {
            const auto& s = std::get<SreStar>(e->node);
            v = s.alpha * value(s.inner.get(), i, j);
            for (std::size_t m = i + 1; m < j; ++m)
                v += (1.0 - s.alpha) * value(s.inner.get(), i, m) * value(e, m, j);
        }
        stamps_[k] = epoch_;
        values_[k] = v;
        return v;
    }

    SrePtr root_;
    std::vector<const SreExpr*> nodes_;
    std::unordered_map<const SreExpr*, std::size_t> ids_;
    std::size_t max_len_ = 0;
    std::vector<double> values_;
    std::vector<std::uint64_t> stamps_;
    std::uint64_t epoch_ = 0;
    const std::string* word_ = nullptr;
};

inline double eval_sre(const SrePtr& r, const Word& w) { return SreEvaluator(r).eval(w); }
inline double eval_sre(const Sre& r, const Word& w) { return SreEvaluator(r.root).eval(w); }

// Draws one word distributed exactly as the expression's mass function.
inline Word sample_sre(const SrePtr& r, SeededRng& rng) {
    struct Sampler {
        SeededRng& rng;
        void emit(const SrePtr& e, std::string& out) {
            if (auto* a = std::get_if<SreAtom>(&e->node)) {
                out += a->symbol;
            } else if (auto* c = std::get_if<SreChoice>(&e->node)) {
                emit(rng.bernoulli(c->alpha) ? c->left : c->right, out);
            } else if (auto* c = std::get_if<SreConcat>(&e->node)) {
                emit(c->left, out);
                emit(c->right, out);
            } else {
                const auto& s = std::get<SreStar>(e->node);
                std::uint64_t k = rng.shifted_geometric(s.alpha);
                for (std::uint64_t t = 0; t < k; ++t) emit(s.inner, out);
            }
        }
    };
    std::string out;
    Sampler{rng}.emit(r, out);
    return Word(std::move(out));
}

inline Word sample_sre(const Sre& r, SeededRng& rng) { return sample_sre(r.root, rng); }

// A length such that the expression's mass beyond it is below eps/3.
struct TruncationThreshold {
    std::size_t theta;
    double eps_used;
};

namespace detail {
inline std::uint64_t theta_rec(const SrePtr& e, double eps) {
    if (std::get_if<SreAtom>(&e->node)) return 1;
    if (auto* c = std::get_if<SreChoice>(&e->node))
        return std::max(theta_rec(c->left, eps), theta_rec(c->right, eps));
    if (auto* c = std::get_if<SreConcat>(&e->node)) {
        std::uint64_t a = theta_rec(c->left, eps), b = theta_rec(c->right, eps);
        if (a > UINT64_MAX / 2 - b) throw BudgetExceeded("truncation threshold overflow");
        return a + b;
    }
    const auto& s = std::get<SreStar>(e->node);
    std::uint64_t inner = theta_rec(s.inner, eps);
    // Rounds needed so that the leftover stop-probability tail drops below
    // eps/3: both logs are negative, the quotient is positive.
    double rounds = std::ceil(std::log(eps / 3.0) / std::log1p(-s.alpha));
    auto m = static_cast<std::uint64_t>(rounds);
    if (m < 1) m = 1;
    if (inner > 0 && m > UINT64_MAX / 2 / inner)
        throw BudgetExceeded("truncation threshold overflow");
    return inner * m;
}
}  // namespace detail

inline TruncationThreshold truncation_threshold(const SrePtr& r, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw Error("accuracy parameter must lie in (0,1)");
    return TruncationThreshold{static_cast<std::size_t>(detail::theta_rec(r, eps)), eps};
}

inline TruncationThreshold truncation_threshold(const Sre& r, double eps) {
    return truncation_threshold(r.root, eps);
}

// Cumulative mass over all words with |w| <= max_len, by exhaustive
// enumeration.
inline double mass_up_to(const Sre& r, std::size_t max_len,
                         std::uint64_t budget = kDefaultEnumerationBudget) {
    SreEvaluator ev(r.root);
    double sum = 0.0;
    for_each_word_up_to(r.alphabet, max_len, [&](const Word& w) { sum += ev.eval(w); }, budget);
    return sum;
}

// Mass-function view; the total is 1 by the star normalization argument.
inline MassFunction sre_mass(const Sre& r) {
    auto ev = std::make_shared<SreEvaluator>(r.root);
    return MassFunction(r.alphabet, [ev](const Word& w) { return ev->eval(w); }, 1.0);
}

// ---------------------------------------------------------------------------
// Document form: a header line `alphabet: <symbols>` followed by the
// expression (free-form whitespace).
// ---------------------------------------------------------------------------

inline Sre parse_sre_document(const std::string& text) {
    std::size_t pos = 0;
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    constexpr const char* kHeader = "alphabet:";
    if (text.compare(pos, 9, kHeader) != 0)
        throw ParseError("expected 'alphabet:' header line", pos);
    pos += 9;
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string syms = text.substr(pos, eol - pos);
    while (!syms.empty() && std::isspace(static_cast<unsigned char>(syms.back()))) syms.pop_back();
    if (syms.empty()) throw ParseError("empty alphabet declaration", pos);
    Alphabet alphabet(syms);
    std::string body = eol < text.size() ? text.substr(eol + 1) : std::string();
    return Sre{alphabet, parse_sre(body, alphabet)};
}

inline std::string print_sre_document(const Sre& r) {
    return "alphabet: " + r.alphabet.symbols() + "\n" + print_sre(r.root) + "\n";
}

inline Sre read_sre_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_sre_document(buf.str());
}

inline void write_sre_file(const std::string& path, const Sre& r) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << print_sre_document(r);
}

}  // namespace stochlang
