#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stochlang/alphabet.hpp"
#include "stochlang/distribution.hpp"
#include "stochlang/errors.hpp"
#include "stochlang/matrix.hpp"
#include "stochlang/sre.hpp"
#include "stochlang/text.hpp"

namespace stochlang {

// Deterministic finite-state machine whose registers evolve by one matrix
// multiplication per symbol; the output on a word is a linear functional of
// the final register vector.
struct LinearCra {
    struct Transition {
        std::size_t target;
        Matrix update;  // registers x registers
    };

    Alphabet alphabet;
    std::size_t num_states = 0;
    std::size_t num_registers = 0;
    std::size_t initial_state = 0;
    Vec init;                                     // initial register valuation
    std::vector<std::vector<Transition>> delta;   // [state][symbol index]
    std::vector<Vec> final_weights;               // [state]

    void validate() const {
        if (num_states == 0 || num_registers == 0) throw Error("automaton must have states and registers");
        if (initial_state >= num_states) throw Error("initial state out of range");
        if (init.size() != num_registers) throw Error("initial valuation has wrong length");
        if (delta.size() != num_states || final_weights.size() != num_states)
            throw Error("transition/finalization tables must cover every state");
        for (const auto& row : delta) {
            if (row.size() != alphabet.size()) throw Error("transition function must be total");
            for (const auto& t : row) {
                if (t.target >= num_states) throw Error("transition target out of range");
                if (t.update.rows() != num_registers || t.update.cols() != num_registers)
                    throw Error("update matrix has wrong shape");
            }
        }
        for (const auto& f : final_weights)
            if (f.size() != num_registers) throw Error("finalization vector has wrong length");
    }

    // True when every stored weight is >= 0; the restriction under which the
    // produced values are non-negative by construction.
    bool non_negative() const {
        for (double v : init)
            if (v < 0.0) return false;
        for (const auto& row : delta)
            for (const auto& t : row)
                if (!t.update.non_negative()) return false;
        for (const auto& f : final_weights)
            for (double v : f)
                if (v < 0.0) return false;
        return true;
    }
};

inline double eval_cra(const LinearCra& a, const Word& w) {
    std::size_t q = a.initial_state;
    Vec x = a.init;
    for (std::size_t i = 0; i < w.length(); ++i) {
        const auto& t = a.delta[q][a.alphabet.index_of(w.at(i))];
        x = t.update.apply(x);
        q = t.target;
    }
    return dot(a.final_weights[q], x);
}

// Same machine shape with per-transition offset vectors and per-state
// finalization constants: x <- A x + b, output mu.x + c.
struct AffineCra {
    struct Transition {
        std::size_t target;
        Matrix update;
        Vec offset;
    };

    Alphabet alphabet;
    std::size_t num_states = 0;
    std::size_t num_registers = 0;
    std::size_t initial_state = 0;
    Vec init;
    std::vector<std::vector<Transition>> delta;
    std::vector<Vec> final_weights;
    Vec final_constants;  // per state
};

inline double eval_cra(const AffineCra& a, const Word& w) {
    std::size_t q = a.initial_state;
    Vec x = a.init;
    for (std::size_t i = 0; i < w.length(); ++i) {
        const auto& t = a.delta[q][a.alphabet.index_of(w.at(i))];
        Vec y = t.update.apply(x);
        for (std::size_t r = 0; r < y.size(); ++r) y[r] += t.offset[r];
        x = std::move(y);
        q = t.target;
    }
    return dot(a.final_weights[q], x) + a.final_constants[q];
}

// Removes the affine parts by doubling the registers: the extra block holds
// constant ones, the update becomes [[A, diag(b)], [0, I]], and the
// finalization picks up c through the first ones-register. Semantics are
// preserved on every word.
inline LinearCra affine_to_linear(const AffineCra& a) {
    std::size_t d = a.num_registers;
    LinearCra out{a.alphabet, a.num_states, 2 * d, a.initial_state, {}, {}, {}};
    out.init = a.init;
    out.init.resize(2 * d, 1.0);
    out.delta.resize(a.num_states);
    for (std::size_t q = 0; q < a.num_states; ++q) {
        out.delta[q].reserve(a.alphabet.size());
        for (const auto& t : a.delta[q]) {
            Matrix m(2 * d, 2 * d);
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t j = 0; j < d; ++j) m(i, j) = t.update(i, j);
                m(i, d + i) = t.offset[i];
                m(d + i, d + i) = 1.0;
            }
            out.delta[q].push_back({t.target, std::move(m)});
        }
    }
    out.final_weights.resize(a.num_states);
    for (std::size_t q = 0; q < a.num_states; ++q) {
        Vec f = a.final_weights[q];
        f.resize(2 * d, 0.0);
        f[d] = a.final_constants[q];
        out.final_weights[q] = std::move(f);
    }
    out.validate();
    return out;
}

// ---------------------------------------------------------------------------
// Expression compilation.
//
// An expression is first turned into vector/matrix form (initial row, one
// matrix per symbol, final column) by structural recursion on the four
// constructors, then flattened into a single-state machine whose registers
// carry that vector: x_init is the initial row, the update for sigma is the
// transposed symbol matrix, the finalization is the final column. The vector
// dimension grows by two per atom, so it stays bounded by twice the
// expression size.
// ---------------------------------------------------------------------------

namespace detail {

struct VectorForm {
    std::size_t n = 0;
    Vec lambda;              // initial row
    Vec gamma;               // final column
    std::vector<Matrix> m;   // per symbol index
};

inline VectorForm vf_atom(std::size_t symbols, std::size_t sym) {
    VectorForm f;
    f.n = 2;
    f.lambda = {1.0, 0.0};
    f.gamma = {0.0, 1.0};
    f.m.assign(symbols, Matrix(2, 2));
    f.m[sym](0, 1) = 1.0;
    return f;
}

inline VectorForm vf_choice(double alpha, const VectorForm& a, const VectorForm& b) {
    VectorForm f;
    f.n = a.n + b.n;
    f.lambda.resize(f.n, 0.0);
    f.gamma.resize(f.n, 0.0);
    for (std::size_t i = 0; i < a.n; ++i) {
        f.lambda[i] = alpha * a.lambda[i];
        f.gamma[i] = a.gamma[i];
    }
    for (std::size_t i = 0; i < b.n; ++i) {
        f.lambda[a.n + i] = (1.0 - alpha) * b.lambda[i];
        f.gamma[a.n + i] = b.gamma[i];
    }
    f.m.assign(a.m.size(), Matrix(f.n, f.n));
    for (std::size_t s = 0; s < f.m.size(); ++s) {
        for (std::size_t i = 0; i < a.n; ++i)
            for (std::size_t j = 0; j < a.n; ++j) f.m[s](i, j) = a.m[s](i, j);
        for (std::size_t i = 0; i < b.n; ++i)
            for (std::size_t j = 0; j < b.n; ++j) f.m[s](a.n + i, a.n + j) = b.m[s](i, j);
    }
    return f;
}

// Words split as uv with both parts non-empty: reading the first symbol of v
// jumps from a final configuration of the left form into the right form.
inline VectorForm vf_concat(const VectorForm& a, const VectorForm& b) {
    VectorForm f;
    f.n = a.n + b.n;
    f.lambda.resize(f.n, 0.0);
    f.gamma.resize(f.n, 0.0);
    for (std::size_t i = 0; i < a.n; ++i) f.lambda[i] = a.lambda[i];
    for (std::size_t i = 0; i < b.n; ++i) f.gamma[a.n + i] = b.gamma[i];
    f.m.assign(a.m.size(), Matrix(f.n, f.n));
    for (std::size_t s = 0; s < f.m.size(); ++s) {
        Vec entry = b.m[s].apply_transpose(b.lambda);  // row: lambda_b * M_b
        for (std::size_t i = 0; i < a.n; ++i) {
            for (std::size_t j = 0; j < a.n; ++j) f.m[s](i, j) = a.m[s](i, j);
            for (std::size_t j = 0; j < b.n; ++j) f.m[s](i, a.n + j) = a.gamma[i] * entry[j];
        }
        for (std::size_t i = 0; i < b.n; ++i)
            for (std::size_t j = 0; j < b.n; ++j) f.m[s](a.n + i, a.n + j) = b.m[s](i, j);
    }
    return f;
}

// Loop-back construction: after completing one body, continue with weight
// (1 - alpha) into a fresh body; finishing carries weight alpha.
inline VectorForm vf_star(const VectorForm& a, double alpha) {
    VectorForm f;
    f.n = a.n;
    f.lambda = a.lambda;
    f.gamma = a.gamma;
    for (double& g : f.gamma) g *= alpha;
    f.m.assign(a.m.size(), Matrix(f.n, f.n));
    for (std::size_t s = 0; s < f.m.size(); ++s) {
        Vec entry = a.m[s].apply_transpose(a.lambda);
        for (std::size_t i = 0; i < a.n; ++i)
            for (std::size_t j = 0; j < a.n; ++j)
                f.m[s](i, j) = a.m[s](i, j) + (1.0 - alpha) * a.gamma[i] * entry[j];
    }
    return f;
}

inline VectorForm to_vector_form(const SrePtr& e, const Alphabet& alphabet) {
    if (auto* a = std::get_if<SreAtom>(&e->node))
        return vf_atom(alphabet.size(), alphabet.index_of(a->symbol));
    if (auto* c = std::get_if<SreChoice>(&e->node))
        return vf_choice(c->alpha, to_vector_form(c->left, alphabet),
                         to_vector_form(c->right, alphabet));
    if (auto* c = std::get_if<SreConcat>(&e->node))
        return vf_concat(to_vector_form(c->left, alphabet), to_vector_form(c->right, alphabet));
    const auto& s = std::get<SreStar>(e->node);
    return vf_star(to_vector_form(s.inner, alphabet), s.alpha);
}

}  // namespace detail

// Compiles an expression into an equivalent non-negative machine: values
// agree with eval_sre on every word.
inline LinearCra compile_sre(const Sre& r) {
    detail::VectorForm f = detail::to_vector_form(r.root, r.alphabet);
    LinearCra out{r.alphabet, 1, f.n, 0, {}, {}, {}};
    out.init = f.lambda;
    out.delta.resize(1);
    out.delta[0].reserve(r.alphabet.size());
    for (std::size_t s = 0; s < r.alphabet.size(); ++s) {
        Matrix t(f.n, f.n);
        for (std::size_t i = 0; i < f.n; ++i)
            for (std::size_t j = 0; j < f.n; ++j) t(i, j) = f.m[s](j, i);
        out.delta[0].push_back({0, std::move(t)});
    }
    out.final_weights = {f.gamma};
    out.validate();
    return out;
}

// ---------------------------------------------------------------------------
// Total weight.
//
// With s_q the per-state coefficient vector of the sum over all suffix words,
// the vectors satisfy s_q = mu_q + sum_sigma A_{q,sigma}^T s_{delta(q,sigma)}.
// The stacked system is solved densely; the algebraic solution can exist even
// when the underlying series diverges, so the result additionally carries a
// truncated-sum cross-check and is only marked validated when the solution is
// non-negative and the cross-check agrees or is still closing in.
// ---------------------------------------------------------------------------

struct TotalWeightOptions {
    double nonneg_tol = 1e-9;
    std::size_t cross_check_len = 0;  // 0 selects a default per alphabet size
    std::uint64_t budget = kDefaultEnumerationBudget;
};

struct TotalWeightSolution {
    std::vector<Vec> state_sums;  // s_q per state
    double total = 0.0;
    double residual_norm = 0.0;
    double residual_bound = 0.0;
    bool non_negative_solution = false;
    double truncated_sum = 0.0;
    std::size_t cross_check_len = 0;
    bool cross_check_agrees = false;
    bool cross_check_approaching = false;
    bool validated = false;
};

namespace detail {

inline std::size_t default_cross_check_len(std::size_t alphabet_size) {
    if (alphabet_size <= 2) return 14;
    std::size_t len = 1;
    while (len < 14 && count_words_up_to(alphabet_size, len + 1) <= 200'000) ++len;
    return len;
}

// Cumulative value sums per word length 1..max_len.
inline Vec partial_sums_by_length(const LinearCra& a, std::size_t max_len, std::uint64_t budget) {
    Vec cum(max_len + 1, 0.0);
    for_each_word_up_to(a.alphabet, max_len,
                        [&](const Word& w) { cum[w.length()] += eval_cra(a, w); }, budget);
    for (std::size_t l = 1; l <= max_len; ++l) cum[l] += cum[l - 1];
    return cum;
}

}  // namespace detail

inline TotalWeightSolution total_weight(const LinearCra& a, TotalWeightOptions opt = {}) {
    a.validate();
    std::size_t d = a.num_registers;
    std::size_t n = a.num_states * d;
    Matrix sys(n, n);
    Vec rhs(n, 0.0);
    for (std::size_t q = 0; q < a.num_states; ++q) {
        for (std::size_t i = 0; i < d; ++i) {
            sys(q * d + i, q * d + i) += 1.0;
            rhs[q * d + i] = a.final_weights[q][i];
        }
        for (const auto& t : a.delta[q]) {
            // subtract A^T block into columns of the target state
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j)
                    sys(q * d + i, t.target * d + j) -= t.update(j, i);
        }
    }
    Vec s = solve_dense(sys, rhs);

    TotalWeightSolution r;
    r.state_sums.resize(a.num_states);
    for (std::size_t q = 0; q < a.num_states; ++q)
        r.state_sums[q] = Vec(s.begin() + static_cast<long>(q * d),
                              s.begin() + static_cast<long>((q + 1) * d));
    r.total = dot(r.state_sums[a.initial_state], a.init);

    Vec residual = sys.apply(s);
    double rmax = 0.0, mumax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        rmax = std::max(rmax, std::fabs(residual[i] - rhs[i]));
        mumax = std::max(mumax, std::fabs(rhs[i]));
    }
    r.residual_norm = rmax;
    r.residual_bound = 1e-8 * (1.0 + mumax);

    r.non_negative_solution = true;
    for (double v : s)
        if (v < -opt.nonneg_tol) r.non_negative_solution = false;

    r.cross_check_len =
        opt.cross_check_len ? opt.cross_check_len : detail::default_cross_check_len(a.alphabet.size());
    Vec cum = detail::partial_sums_by_length(a, r.cross_check_len, opt.budget);
    r.truncated_sum = cum[r.cross_check_len];
    double scale = std::max(std::fabs(r.total), 1e-12);
    r.cross_check_agrees = std::fabs(r.total - r.truncated_sum) <= 0.05 * scale ||
                           std::fabs(r.total - r.truncated_sum) <= 1e-9;
    std::size_t prev_len = r.cross_check_len > 4 ? r.cross_check_len - 4 : 1;
    double prev = cum[prev_len];
    r.cross_check_approaching = r.truncated_sum > prev &&
                                std::fabs(r.total - r.truncated_sum) < std::fabs(r.total - prev) &&
                                r.total >= r.truncated_sum - 1e-9;
    r.validated = r.non_negative_solution && (r.cross_check_agrees || r.cross_check_approaching);
    return r;
}

struct StochasticityReport {
    bool stochastic = false;
    double total = 0.0;
    bool solution_finite = false;
    bool non_negative_solution = false;
    bool validated = false;
};

// Decides whether a non-negative machine assigns total mass one. Requires the
// non-negative weight restriction so that pointwise non-negativity holds by
// construction.
inline StochasticityReport is_stochastic(const LinearCra& a, double tol,
                                         TotalWeightOptions opt = {}) {
    if (!a.non_negative())
        throw Error("stochasticity check requires non-negative weights throughout");
    opt.nonneg_tol = tol;
    TotalWeightSolution tw = total_weight(a, opt);
    StochasticityReport rep;
    rep.total = tw.total;
    rep.solution_finite = std::isfinite(tw.total);
    for (const auto& sq : tw.state_sums)
        for (double v : sq)
            if (!std::isfinite(v)) rep.solution_finite = false;
    rep.non_negative_solution = tw.non_negative_solution;
    rep.validated = tw.validated;
    rep.stochastic = rep.solution_finite && rep.non_negative_solution &&
                     std::fabs(tw.total - 1.0) <= tol;
    return rep;
}

// ---------------------------------------------------------------------------
// Regular-language restriction.
// ---------------------------------------------------------------------------

struct Dfa {
    Alphabet alphabet;
    std::size_t num_states = 0;
    std::size_t initial = 0;
    std::vector<bool> accepting;                  // per state
    std::vector<std::vector<std::size_t>> next;   // [state][symbol index]

    void validate() const {
        if (num_states == 0) throw Error("automaton must have at least one state");
        if (initial >= num_states) throw Error("initial state out of range");
        if (accepting.size() != num_states || next.size() != num_states)
            throw Error("acceptance/transition tables must cover every state");
        for (const auto& row : next) {
            if (row.size() != alphabet.size()) throw Error("transition function must be total");
            for (std::size_t t : row)
                if (t >= num_states) throw Error("transition target out of range");
        }
    }

    bool accepts(const Word& w) const {
        std::size_t q = initial;
        for (std::size_t i = 0; i < w.length(); ++i) q = next[q][alphabet.index_of(w.at(i))];
        return accepting[q];
    }
};

// Synchronized product: the value of the result equals the machine's value on
// accepted words and zero elsewhere (finalization is zeroed on non-accepting
// product states).
inline LinearCra product_with_dfa(const LinearCra& a, const Dfa& d) {
    if (!a.alphabet.same_symbol_set(d.alphabet))
        throw AlphabetError("product requires matching alphabets");
    LinearCra out{a.alphabet, a.num_states * d.num_states, a.num_registers, 0, {}, {}, {}};
    out.initial_state = a.initial_state * d.num_states + d.initial;
    out.init = a.init;
    out.delta.resize(out.num_states);
    out.final_weights.resize(out.num_states);
    for (std::size_t q = 0; q < a.num_states; ++q) {
        for (std::size_t p = 0; p < d.num_states; ++p) {
            std::size_t qp = q * d.num_states + p;
            out.delta[qp].reserve(a.alphabet.size());
            for (std::size_t s = 0; s < a.alphabet.size(); ++s) {
                const auto& t = a.delta[q][s];
                std::size_t pd = d.next[p][d.alphabet.index_of(a.alphabet.symbol(s))];
                out.delta[qp].push_back({t.target * d.num_states + pd, t.update});
            }
            out.final_weights[qp] =
                d.accepting[p] ? a.final_weights[q] : Vec(a.num_registers, 0.0);
        }
    }
    out.validate();
    return out;
}

inline double mass_over_regular(const LinearCra& a, const Dfa& d, TotalWeightOptions opt = {}) {
    return total_weight(product_with_dfa(a, d), opt).total;
}

// ---------------------------------------------------------------------------
// Text formats. Floats are rendered at up to 17 significant digits, so a
// write/read cycle reproduces the exact same machine.
// ---------------------------------------------------------------------------

inline std::string print_cra(const LinearCra& a) {
    std::ostringstream out;
    out << "cra states=" << a.num_states << " registers=" << a.num_registers
        << " alphabet=" << a.alphabet.symbols() << "\n";
    out << "init";
    for (double v : a.init) out << ' ' << format_double(v);
    out << "\n";
    for (std::size_t q = 0; q < a.num_states; ++q)
        for (std::size_t s = 0; s < a.alphabet.size(); ++s) {
            const auto& t = a.delta[q][s];
            out << "trans " << q << ' ' << a.alphabet.symbol(s) << ' ' << t.target;
            for (std::size_t i = 0; i < a.num_registers; ++i)
                for (std::size_t j = 0; j < a.num_registers; ++j)
                    out << ' ' << format_double(t.update(i, j));
            out << "\n";
        }
    for (std::size_t q = 0; q < a.num_states; ++q) {
        out << "final " << q;
        for (double v : a.final_weights[q]) out << ' ' << format_double(v);
        out << "\n";
    }
    return out.str();
}

inline LinearCra parse_cra(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t offset = 0;
    std::optional<LinearCra> parsed;
    std::vector<std::vector<char>> seen_trans;
    std::vector<char> seen_final;
    while (std::getline(in, line)) {
        auto toks = detail::split_tokens(line);
        if (toks.empty()) {
            offset += line.size() + 1;
            continue;
        }
        if (!parsed) {
            if (toks[0] != "cra" || toks.size() != 4)
                throw ParseError("expected 'cra states=<n> registers=<d> alphabet=<syms>'", offset);
            std::size_t n = detail::parse_index(detail::expect_kv(toks[1], "states", offset), offset);
            std::size_t d =
                detail::parse_index(detail::expect_kv(toks[2], "registers", offset), offset);
            std::string syms = detail::expect_kv(toks[3], "alphabet", offset);
            parsed = LinearCra{Alphabet(syms), n, d, 0, Vec(d, 0.0),
                               std::vector<std::vector<LinearCra::Transition>>(n),
                               std::vector<Vec>(n, Vec(d, 0.0))};
            for (auto& row : parsed->delta)
                row.assign(parsed->alphabet.size(), LinearCra::Transition{0, Matrix(d, d)});
            seen_trans.assign(n, std::vector<char>(parsed->alphabet.size(), 0));
            seen_final.assign(n, 0);
            offset += line.size() + 1;
            continue;
        }
        LinearCra& a = *parsed;
        if (toks[0] == "init") {
            if (toks.size() != 1 + a.num_registers)
                throw ParseError("init line needs one value per register", offset);
            for (std::size_t i = 0; i < a.num_registers; ++i)
                a.init[i] = detail::parse_full_double(toks[1 + i], offset);
        } else if (toks[0] == "trans") {
            if (toks.size() != 4 + a.num_registers * a.num_registers)
                throw ParseError("trans line needs source, symbol, target and d*d values", offset);
            std::size_t q = detail::parse_index(toks[1], offset);
            if (q >= a.num_states) throw ParseError("state out of range", offset);
            if (toks[2].size() != 1) throw ParseError("symbol must be one character", offset);
            if (!a.alphabet.contains(toks[2][0]))
                throw ParseError("symbol not in declared alphabet", offset);
            std::size_t s = a.alphabet.index_of(toks[2][0]);
            std::size_t t = detail::parse_index(toks[3], offset);
            if (t >= a.num_states) throw ParseError("target state out of range", offset);
            if (seen_trans[q][s]) throw ParseError("duplicate transition", offset);
            seen_trans[q][s] = 1;
            Matrix m(a.num_registers, a.num_registers);
            for (std::size_t i = 0; i < a.num_registers; ++i)
                for (std::size_t j = 0; j < a.num_registers; ++j)
                    m(i, j) = detail::parse_full_double(
                        toks[4 + i * a.num_registers + j], offset);
            a.delta[q][s] = {t, std::move(m)};
        } else if (toks[0] == "final") {
            if (toks.size() != 2 + a.num_registers)
                throw ParseError("final line needs state and one value per register", offset);
            std::size_t q = detail::parse_index(toks[1], offset);
            if (q >= a.num_states) throw ParseError("state out of range", offset);
            if (seen_final[q]) throw ParseError("duplicate finalization", offset);
            seen_final[q] = 1;
            for (std::size_t i = 0; i < a.num_registers; ++i)
                a.final_weights[q][i] = detail::parse_full_double(toks[2 + i], offset);
        } else {
            throw ParseError("unknown line '" + toks[0] + "'", offset);
        }
        offset += line.size() + 1;
    }
    if (!parsed) throw ParseError("missing header", 0);
    LinearCra& a = *parsed;
    for (std::size_t q = 0; q < a.num_states; ++q)
        for (std::size_t s = 0; s < a.alphabet.size(); ++s)
            if (!seen_trans[q][s])
                throw ParseError("missing transition for state " + std::to_string(q) +
                                     " symbol " + std::string(1, a.alphabet.symbol(s)),
                                 offset);
    a.validate();
    return a;
}

inline std::string print_dfa(const Dfa& d) {
    std::ostringstream out;
    out << "dfa states=" << d.num_states << " initial=" << d.initial << " accepting=";
    bool first = true;
    for (std::size_t q = 0; q < d.num_states; ++q)
        if (d.accepting[q]) {
            if (!first) out << ',';
            out << q;
            first = false;
        }
    out << "\n";
    for (std::size_t q = 0; q < d.num_states; ++q)
        for (std::size_t s = 0; s < d.alphabet.size(); ++s)
            out << "trans " << q << ' ' << d.alphabet.symbol(s) << ' ' << d.next[q][s] << "\n";
    return out.str();
}

// The alphabet is implied by the transition lines, in order of first
// appearance; transitions may arrive in any order but must be total.
inline Dfa parse_dfa(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t offset = 0;
    bool have_header = false;
    std::size_t n = 0, initial = 0;
    std::vector<std::size_t> accepting_list;
    std::string symbols;
    struct RawTrans {
        std::size_t q;
        char sym;
        std::size_t t;
    };
    std::vector<RawTrans> raw;
    while (std::getline(in, line)) {
        auto toks = detail::split_tokens(line);
        if (toks.empty()) {
            offset += line.size() + 1;
            continue;
        }
        if (!have_header) {
            if (toks[0] != "dfa" || toks.size() != 4)
                throw ParseError("expected 'dfa states=<n> initial=<q> accepting=<list>'", offset);
            n = detail::parse_index(detail::expect_kv(toks[1], "states", offset), offset);
            initial = detail::parse_index(detail::expect_kv(toks[2], "initial", offset), offset);
            std::string list = detail::expect_kv(toks[3], "accepting", offset);
            std::size_t pos = 0;
            while (pos < list.size()) {
                std::size_t comma = list.find(',', pos);
                if (comma == std::string::npos) comma = list.size();
                accepting_list.push_back(
                    detail::parse_index(list.substr(pos, comma - pos), offset));
                pos = comma + 1;
            }
            have_header = true;
        } else if (toks[0] == "trans") {
            if (toks.size() != 4) throw ParseError("trans line needs source, symbol, target", offset);
            std::size_t q = detail::parse_index(toks[1], offset);
            if (toks[2].size() != 1) throw ParseError("symbol must be one character", offset);
            char c = toks[2][0];
            std::size_t t = detail::parse_index(toks[3], offset);
            if (q >= n || t >= n) throw ParseError("state out of range", offset);
            if (symbols.find(c) == std::string::npos) symbols += c;
            raw.push_back({q, c, t});
        } else {
            throw ParseError("unknown line '" + toks[0] + "'", offset);
        }
        offset += line.size() + 1;
    }
    if (!have_header) throw ParseError("missing header", 0);
    if (symbols.empty()) throw ParseError("automaton declares no transitions", offset);
    Dfa d{Alphabet(symbols), n, initial, std::vector<bool>(n, false),
          std::vector<std::vector<std::size_t>>(n)};
    for (auto& row : d.next) row.assign(d.alphabet.size(), SIZE_MAX);
    for (std::size_t q : accepting_list) {
        if (q >= n) throw ParseError("accepting state out of range", 0);
        d.accepting[q] = true;
    }
    for (const auto& rt : raw) {
        std::size_t s = d.alphabet.index_of(rt.sym);
        if (d.next[rt.q][s] != SIZE_MAX) throw ParseError("duplicate transition", 0);
        d.next[rt.q][s] = rt.t;
    }
    for (std::size_t q = 0; q < n; ++q)
        for (std::size_t s = 0; s < d.alphabet.size(); ++s)
            if (d.next[q][s] == SIZE_MAX)
                throw ParseError("missing transition for state " + std::to_string(q) + " symbol " +
                                     std::string(1, d.alphabet.symbol(s)),
                                 0);
    d.validate();
    return d;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << text;
}

}  // namespace stochlang
