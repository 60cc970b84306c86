// Command-line front end: parsing, evaluation, mass computation,
// stochasticity checking, sampling, identity testing, and the benchmark
// harness. Exit codes: 0 success/Accept, 1 Reject, 2 input error,
// 3 runtime or budget error.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <mutex>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "stochlang/stochlang.hpp"

namespace sl = stochlang;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitReject = 1;
constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

std::uint64_t now_ms() {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                          std::chrono::steady_clock::now().time_since_epoch())
                                          .count());
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw sl::ParseError("cannot open " + path, 0);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Reads an expression document; an explicit alphabet replaces the header.
sl::Sre load_sre(const std::string& path, const std::string& alphabet_override) {
    std::string text = slurp(path);
    if (alphabet_override.empty()) return sl::parse_sre_document(text);
    std::size_t pos = text.find_first_not_of(" \t\r\n");
    if (pos != std::string::npos && text.compare(pos, 9, "alphabet:") == 0) {
        std::size_t eol = text.find('\n', pos);
        text = eol == std::string::npos ? std::string() : text.substr(eol + 1);
    }
    sl::Alphabet alphabet(alphabet_override);
    return sl::Sre{alphabet, sl::parse_sre(text, alphabet)};
}

// Expression either from a file argument or inline via --expr (which needs
// --alphabet).
sl::Sre load_sre_input(const std::string& path, const std::string& expr_text,
                       const std::string& alphabet_override) {
    if (!expr_text.empty()) {
        if (alphabet_override.empty())
            throw sl::ParseError("--expr requires --alphabet", 0);
        sl::Alphabet alphabet(alphabet_override);
        return sl::Sre{alphabet, sl::parse_sre(expr_text, alphabet)};
    }
    if (path.empty()) throw sl::ParseError("an expression file or --expr is required", 0);
    return load_sre(path, alphabet_override);
}

// Accepts either machine text (header `cra ...`) or an expression document,
// compiling the latter.
sl::LinearCra load_machine(const std::string& path, const std::string& alphabet_override) {
    std::string text = slurp(path);
    std::size_t pos = text.find_first_not_of(" \t\r\n");
    if (pos != std::string::npos && text.compare(pos, 4, "cra ") == 0) return sl::parse_cra(text);
    return sl::compile_sre(alphabet_override.empty()
                               ? sl::parse_sre_document(text)
                               : load_sre(path, alphabet_override));
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

void print_mass_record(const sl::TotalWeightSolution& tw, bool human) {
    if (human)
        std::cout << "# total mass " << sl::format_double(tw.total)
                  << (tw.validated ? " (validated)" : " (unvalidated)") << "\n";
    std::cout << "total=" << sl::format_double(tw.total) << "\n"
              << "validated=" << bool_str(tw.validated) << "\n"
              << "nonneg_solution=" << bool_str(tw.non_negative_solution) << "\n"
              << "residual=" << sl::format_double(tw.residual_norm) << "\n"
              << "truncated_sum=" << sl::format_double(tw.truncated_sum) << "\n"
              << "cross_check_len=" << tw.cross_check_len << "\n"
              << "agrees=" << bool_str(tw.cross_check_agrees) << "\n"
              << "approaching=" << bool_str(tw.cross_check_approaching) << "\n";
    if (!tw.non_negative_solution) std::cout << "warning=negative-solution-entries\n";
}

struct TestInvocation {
    std::string reference_path;
    std::string source_spec = "self";
    std::string mode = "l1";
    std::string alphabet_override;
    double epsilon = 0.3;
    double delta = 0.2;
    std::optional<double> eps1, eps2;  // inner thresholds; default (eps/3, eps)
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> override_n;
    bool normalize_by_drawn = false;
    bool conservative = false;
    std::uint64_t budget = sl::kDefaultEnumerationBudget;
    bool timing = false;
};

std::unique_ptr<sl::SampleSource> make_source(const TestInvocation& inv, const sl::Sre& reference,
                                              const sl::TesterConfig& cfg,
                                              sl::PlantMetric metric) {
    const std::string& spec = inv.source_spec;
    if (spec == "self") return std::make_unique<sl::SreSampleSource>(reference, cfg.seed);
    if (spec.rfind("sre:", 0) == 0) {
        sl::Sre other = load_sre(spec.substr(4), "");
        if (!other.alphabet.same_symbol_set(reference.alphabet))
            throw sl::AlphabetError("source alphabet does not match the reference");
        return std::make_unique<sl::SreSampleSource>(std::move(other), cfg.seed);
    }
    if (spec.rfind("replay:", 0) == 0) {
        auto [alphabet, words] = sl::parse_replay(slurp(spec.substr(7)));
        if (!alphabet.same_symbol_set(reference.alphabet))
            throw sl::AlphabetError("replay alphabet does not match the reference");
        return std::make_unique<sl::ReplaySource>(std::move(words));
    }
    if (spec.rfind("planted:", 0) == 0) {
        double gap = sl::detail::parse_full_double(spec.substr(8), 0);
        std::size_t theta = sl::truncation_threshold(reference, cfg.epsilon).theta;
        auto planted = sl::plant_alternative(reference, gap, theta, metric, cfg.enumeration_budget);
        return std::make_unique<sl::SreSampleSource>(planted.sre, cfg.seed);
    }
    throw sl::ParseError("unknown source spec '" + spec + "'", 0);
}

int run_test(const TestInvocation& inv) {
    sl::Sre reference = load_sre(inv.reference_path, inv.alphabet_override);
    sl::TesterConfig cfg(inv.epsilon, inv.delta, inv.seed);
    if (inv.eps1) cfg.inner_thresholds.first = *inv.eps1;
    if (inv.eps2) cfg.inner_thresholds.second = *inv.eps2;
    cfg.validate();
    cfg.sample_budget_override = inv.override_n;
    cfg.normalize_by_drawn = inv.normalize_by_drawn;
    cfg.use_conservative_budget = inv.conservative;
    cfg.enumeration_budget = inv.budget;
    sl::PlantMetric metric =
        inv.mode == "linf" ? sl::PlantMetric::kLinf : sl::PlantMetric::kL1;
    auto source = make_source(inv, reference, cfg, metric);
    std::uint64_t t0 = now_ms();
    sl::TestOutcome out = inv.mode == "linf" ? sl::linf_identity_test(reference, *source, cfg)
                                             : sl::l1_identity_test(reference, *source, cfg);
    std::uint64_t wall = inv.timing ? now_ms() - t0 : 0;
    std::cout << sl::outcome_record(out, cfg.seed, wall);
    return out.verdict == sl::Verdict::kAccept ? kExitOk : kExitReject;
}

struct BenchRow {
    std::string name;
    std::string mode;
    double epsilon;
    double accept_rate;
    double mean_n;
    double mean_ms;
};

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

BenchRow bench_case(const std::string& name, const sl::Sre& reference,
                    const std::optional<sl::Sre>& planted, const std::string& mode, double epsilon,
                    std::uint64_t trials, std::uint64_t base_seed, std::uint64_t case_idx,
                    unsigned jobs, bool timing) {
    std::vector<int> accepts(trials, 0);
    std::vector<std::uint64_t> drawn(trials, 0);
    std::vector<std::uint64_t> wall(trials, 0);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&](std::uint64_t lo, std::uint64_t hi) {
        try {
            for (std::uint64_t t = lo; t < hi; ++t) {
                std::uint64_t seed = mix_seed(base_seed, case_idx * trials + t);
                sl::TesterConfig cfg(epsilon, 0.2, seed);
                const sl::Sre& src = planted ? *planted : reference;
                sl::SreSampleSource source(src, seed);
                std::uint64_t t0 = now_ms();
                sl::TestOutcome out = mode == "linf"
                                          ? sl::linf_identity_test(reference, source, cfg)
                                          : sl::l1_identity_test(reference, source, cfg);
                wall[t] = timing ? now_ms() - t0 : 0;
                accepts[t] = out.verdict == sl::Verdict::kAccept ? 1 : 0;
                drawn[t] = out.samples_drawn;
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };
    unsigned n_jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(trials)));
    std::vector<std::thread> pool;
    std::uint64_t chunk = (trials + n_jobs - 1) / n_jobs;
    for (unsigned j = 0; j < n_jobs; ++j) {
        std::uint64_t lo = j * chunk, hi = std::min<std::uint64_t>(trials, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);

    BenchRow row{name, mode, epsilon, 0.0, 0.0, 0.0};
    for (std::uint64_t t = 0; t < trials; ++t) {
        row.accept_rate += accepts[t];
        row.mean_n += static_cast<double>(drawn[t]);
        row.mean_ms += static_cast<double>(wall[t]);
    }
    row.accept_rate /= static_cast<double>(trials);
    row.mean_n /= static_cast<double>(trials);
    row.mean_ms /= static_cast<double>(trials);
    return row;
}

int run_bench(const std::string& corpus_dir, const std::string& mode, double epsilon,
              std::uint64_t trials, std::uint64_t seed, const std::string& out_path, unsigned jobs,
              bool timing) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(corpus_dir))
        if (entry.path().extension() == ".sre") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw sl::ParseError("no .sre files in " + corpus_dir, 0);

    sl::PlantMetric metric = mode == "linf" ? sl::PlantMetric::kLinf : sl::PlantMetric::kL1;
    double gap = mode == "linf" ? 2.0 * epsilon : 5.0 * epsilon / 3.0;

    std::ostringstream csv;
    csv << "case,mode,epsilon,accept_rate,mean_N,mean_ms\n";
    std::uint64_t case_idx = 0;
    for (const auto& f : files) {
        sl::Sre reference = sl::parse_sre_document(slurp(f.string()));
        std::string stem = f.stem().string();
        std::size_t theta = sl::truncation_threshold(reference, epsilon).theta;
        sl::Sre planted = sl::plant_alternative(reference, gap, theta, metric).sre;

        BenchRow self = bench_case(stem + "/self", reference, std::nullopt, mode, epsilon, trials,
                                   seed, case_idx++, jobs, timing);
        BenchRow far = bench_case(stem + "/planted", reference, planted, mode, epsilon, trials,
                                  seed, case_idx++, jobs, timing);
        for (const BenchRow& row : {self, far})
            csv << row.name << ',' << row.mode << ',' << sl::format_double(row.epsilon) << ','
                << sl::format_double(row.accept_rate) << ',' << sl::format_double(row.mean_n)
                << ',' << sl::format_double(row.mean_ms) << "\n";
    }
    if (out_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw sl::Error("cannot open " + out_path + " for writing");
        out << csv.str();
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic language toolkit"};
    app.require_subcommand(1);

    std::string in_path, word_arg, alphabet_override, dfa_path, out_path, format = "records";
    std::string source_spec = "self", mode = "l1", expr_text;
    double epsilon = 0.3, delta = 0.2, tol = 1e-6;
    std::uint64_t seed = 0, n_samples = 0, trials = 50;
    std::uint64_t budget = sl::kDefaultEnumerationBudget;
    std::size_t l0 = 0;
    std::optional<std::uint64_t> override_n;
    bool via_cra = false, timing = false, replay_header = false, normalize_by_drawn = false;
    bool conservative = false;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

    auto* parse_cmd = app.add_subcommand("parse", "parse an expression and print it canonically");
    parse_cmd->add_option("file", in_path);
    parse_cmd->add_option("--expr", expr_text, "inline expression text");
    parse_cmd->add_option("--alphabet", alphabet_override);

    auto* eval_cmd = app.add_subcommand("eval", "probability of a word under an expression");
    eval_cmd->add_option("file", in_path)->required();
    eval_cmd->add_option("word", word_arg)->required();
    eval_cmd->add_flag("--via-cra", via_cra, "evaluate through the compiled machine");
    eval_cmd->add_option("--alphabet", alphabet_override);

    auto* mass_cmd = app.add_subcommand("mass", "total mass of a machine or expression");
    mass_cmd->add_option("file", in_path)->required();
    mass_cmd->add_option("--dfa", dfa_path, "restrict to the words this acceptor accepts");
    mass_cmd->add_option("--l0", l0, "cross-check truncation length");
    mass_cmd->add_option("--budget", budget);
    mass_cmd->add_option("--alphabet", alphabet_override);
    mass_cmd->add_option("--format", format)->check(CLI::IsMember({"records", "human"}));

    auto* check_cmd = app.add_subcommand("check", "decide whether the total mass is one");
    check_cmd->add_option("file", in_path)->required();
    check_cmd->add_option("--tol", tol);
    check_cmd->add_option("--alphabet", alphabet_override);

    auto* sample_cmd = app.add_subcommand("sample", "draw words from an expression");
    sample_cmd->add_option("file", in_path)->required();
    sample_cmd->add_option("n", n_samples)->required();
    sample_cmd->add_option("--seed", seed);
    sample_cmd->add_option("--out", out_path);
    sample_cmd->add_flag("--replay", replay_header, "emit the replay header line");
    sample_cmd->add_option("--alphabet", alphabet_override);

    auto* test_cmd = app.add_subcommand("test", "identity test against a reference expression");
    test_cmd->add_option("file", in_path)->required();
    test_cmd->add_option("--source", source_spec,
                         "self | sre:<file> | replay:<file> | planted:<gap>");
    test_cmd->add_option("--mode", mode)->check(CLI::IsMember({"l1", "linf"}));
    test_cmd->add_option("--epsilon", epsilon);
    test_cmd->add_option("--delta", delta);
    test_cmd->add_option("--eps1", eps1, "inner acceptance threshold (default epsilon/3)");
    test_cmd->add_option("--eps2", eps2, "inner rejection threshold (default epsilon)");
    test_cmd->add_option("--seed", seed);
    test_cmd->add_option("--override-n", override_n, "explicit sample budget");
    test_cmd->add_flag("--conservative", conservative,
                       "size the draw for the plug-in guarantee instead of the default budget");
    test_cmd->add_option("--budget", budget);
    test_cmd->add_flag("--normalize-by-drawn", normalize_by_drawn);
    test_cmd->add_flag("--timing", timing, "measure wall time (non-reproducible output)");
    test_cmd->add_option("--alphabet", alphabet_override);

    auto* approx_cmd =
        app.add_subcommand("approx", "geometric-mixture approximation of an expression");
    approx_cmd->add_option("file", in_path);
    approx_cmd->add_option("--expr", expr_text, "inline expression text");
    approx_cmd->add_option("--epsilon", epsilon);
    approx_cmd->add_option("--budget", budget);
    approx_cmd->add_option("--alphabet", alphabet_override);
    approx_cmd->add_option("--out", out_path);

    auto* bench_cmd = app.add_subcommand("bench", "acceptance-rate table over a corpus");
    bench_cmd->add_option("corpus", in_path)->required();
    bench_cmd->add_option("--trials", trials);
    bench_cmd->add_option("--epsilon", epsilon);
    bench_cmd->add_option("--mode", mode)->check(CLI::IsMember({"l1", "linf"}));
    bench_cmd->add_option("--seed", seed);
    bench_cmd->add_option("--out", out_path);
    bench_cmd->add_option("--jobs", jobs);
    bench_cmd->add_flag("--timing", timing);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*parse_cmd) {
            sl::Sre r = load_sre_input(in_path, expr_text, alphabet_override);
            std::cout << sl::print_sre_document(r);
            return kExitOk;
        }
        if (*approx_cmd) {
            sl::Sre r = load_sre_input(in_path, expr_text, alphabet_override);
            sl::GeometricMixture m = sl::universal_approx(sl::sre_mass(r), epsilon, budget);
            std::string text = sl::print_mixture(m);
            if (out_path.empty()) {
                std::cout << text;
            } else {
                std::ofstream f(out_path, std::ios::binary);
                if (!f) throw sl::Error("cannot open " + out_path + " for writing");
                f << text;
            }
            return kExitOk;
        }
        if (*eval_cmd) {
            sl::Sre r = load_sre(in_path, alphabet_override);
            sl::Word w(word_arg);
            if (!w.over(r.alphabet))
                throw sl::AlphabetError("word uses symbols outside the alphabet " +
                                        r.alphabet.symbols());
            double v = via_cra ? sl::eval_cra(sl::compile_sre(r), w) : sl::eval_sre(r, w);
            std::cout << sl::format_double(v) << "\n";
            return kExitOk;
        }
        if (*mass_cmd) {
            sl::LinearCra machine = load_machine(in_path, alphabet_override);
            sl::TotalWeightOptions opt;
            opt.cross_check_len = l0;
            opt.budget = budget;
            if (!dfa_path.empty())
                machine = sl::product_with_dfa(machine, sl::parse_dfa(slurp(dfa_path)));
            print_mass_record(sl::total_weight(machine, opt), format == "human");
            return kExitOk;
        }
        if (*check_cmd) {
            sl::LinearCra machine = load_machine(in_path, alphabet_override);
            sl::StochasticityReport rep = sl::is_stochastic(machine, tol);
            std::cout << "stochastic=" << bool_str(rep.stochastic) << "\n"
                      << "total=" << sl::format_double(rep.total) << "\n"
                      << "finite=" << bool_str(rep.solution_finite) << "\n"
                      << "nonneg_solution=" << bool_str(rep.non_negative_solution) << "\n"
                      << "validated=" << bool_str(rep.validated) << "\n";
            return rep.stochastic ? kExitOk : kExitReject;
        }
        if (*sample_cmd) {
            sl::Sre r = load_sre(in_path, alphabet_override);
            sl::SeededRng rng(seed);
            std::ostringstream out;
            if (replay_header) out << "alphabet: " << r.alphabet.symbols() << "\n";
            for (std::uint64_t i = 0; i < n_samples; ++i)
                out << sl::sample_sre(r, rng).str() << "\n";
            if (out_path.empty()) {
                std::cout << out.str();
            } else {
                std::ofstream f(out_path, std::ios::binary);
                if (!f) throw sl::Error("cannot open " + out_path + " for writing");
                f << out.str();
            }
            return kExitOk;
        }
        if (*test_cmd) {
            TestInvocation inv;
            inv.reference_path = in_path;
            inv.source_spec = source_spec;
            inv.mode = mode;
            inv.alphabet_override = alphabet_override;
            inv.epsilon = epsilon;
            inv.delta = delta;
            inv.seed = seed;
            inv.override_n = override_n;
            inv.normalize_by_drawn = normalize_by_drawn;
            inv.conservative = conservative;
            inv.budget = budget;
            inv.timing = timing;
            return run_test(inv);
        }
        if (*bench_cmd)
            return run_bench(in_path, mode, epsilon, trials, seed, out_path, jobs, timing);
    } catch (const sl::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const sl::AlphabetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const sl::WeightError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const sl::NormalizationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const sl::BudgetExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const sl::ExhaustedSource& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const sl::SingularSystemError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const sl::EmptySampleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const sl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
