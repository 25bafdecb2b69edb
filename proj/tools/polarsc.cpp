// Command-line harness for source polar codes: construction, encoding,
// decoding, Monte Carlo simulation, key agreement, Slepian-Wolf runs, the
// Gaussian quantizer report and the blocklength scaling study.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "polarsc/gauss_key.hpp"
#include "polarsc/gaussian.hpp"
#include "polarsc/io.hpp"
#include "polarsc/simulate.hpp"

namespace {

using namespace polarsc;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;

struct SourceFlags {
    std::optional<double> bsc;
    std::optional<double> erasure;
    std::string joint_file;
    std::string symbol_file;

    // For symbol-alphabet tasks --source-file takes the 'x y mass' format;
    // binary tasks read the 'y p0 p1' joint format under the same flag.
    void attach(CLI::App* cmd, bool symbol_format) {
        auto* a = cmd->add_option("--bsc", bsc, "inline source: X uniform, Y = X flipped w.p. p");
        auto* b = cmd->add_option("--erasure", erasure, "inline source: Y erases X w.p. eps");
        CLI::Option* c = nullptr;
        if (symbol_format) {
            c = cmd->add_option("--source-file,--symbols-file", symbol_file,
                                "2^m-ary source file (lines: 'x y mass' or 'x mass')");
        } else {
            c = cmd->add_option("--source-file", joint_file,
                                "binary joint source file (lines: y p0 p1)");
        }
        a->excludes(b)->excludes(c);
        b->excludes(c);
    }

    SourceConfig resolve() const {
        if (bsc) return {SourceConfig::Kind::bsc, *bsc, ""};
        if (erasure) return {SourceConfig::Kind::erasure, *erasure, ""};
        if (!joint_file.empty()) return {SourceConfig::Kind::joint_file, 0.0, joint_file};
        if (!symbol_file.empty()) return {SourceConfig::Kind::symbol_file, 0.0, symbol_file};
        throw CLI::ValidationError("source", "one of --bsc/--erasure/--source-file is required");
    }
};

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(out_path, std::ios::binary);
    if (!os) throw std::invalid_argument("cannot open output file " + out_path);
    os << text;
}

std::string slurp_or_die(const std::string& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream is(path, mode);
    if (!is) throw std::invalid_argument("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

SelectionMode selection_from(const std::optional<double>& rate, const std::optional<double>& z_thr) {
    if (rate) return RateSelection{*rate};
    if (z_thr) return ThresholdSelection{*z_thr};
    throw CLI::ValidationError("selection", "one of --rate/--z-threshold is required");
}

int run(int argc, char** argv) {
    CLI::App app{"source polar codes: compression with side information, key agreement, Slepian-Wolf"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    std::string out_path;
    std::string format = "csv";
    auto* seed_opt =
        app.add_option("--seed", seed, "64-bit seed; mandatory for stochastic tasks");
    app.add_option("--out", out_path, "output path (default stdout)");
    app.add_option("--format", format, "report format")->check(CLI::IsMember({"csv", "json"}));
    auto require_seed = [&](const char* task) {
        if (seed_opt->count() == 0)
            throw CLI::ValidationError(task, "--seed is mandatory for stochastic tasks");
    };

    // ---- construct ----
    auto* c_construct = app.add_subcommand("construct", "build a code spec and write it as JSON");
    c_construct->fallthrough();
    SourceFlags construct_src;
    construct_src.attach(c_construct, false);
    int construct_n = 10;
    int construct_k = kDefaultBinK;
    std::optional<double> construct_eps;
    std::optional<double> construct_rate;
    std::optional<double> construct_zthr;
    c_construct->add_option("--n", construct_n, "recursion depth, N = 2^n")->capture_default_str();
    c_construct->add_option("--k", construct_k, "degradation bins per symbol (2k+1 total)")
        ->capture_default_str();
    c_construct->add_option("--eps", construct_eps, "entropy-gap budget; derives k (small n only)");
    c_construct->add_option("--rate", construct_rate, "select ceil(rate*N) highest-entropy indices");
    c_construct->add_option("--z-threshold", construct_zthr, "select indices with z_upper >= threshold");
    bool construct_exact = false;
    std::size_t construct_budget = kDefaultAlphabetBudget;
    c_construct->add_flag("--exact", construct_exact,
                          "exact construction, no degradation (tiny n only)");
    c_construct->add_option("--budget", construct_budget, "largest exact alphabet to materialize")
        ->capture_default_str();
    c_construct->callback([&] {
        ResolvedSource src = resolve_source(construct_src.resolve());
        if (src.layered.layers() != 1)
            throw CLI::ValidationError("construct", "construct takes binary sources; see 'layered'");
        CodeSpec spec;
        if (construct_exact) {
            spec = exact_construct(layer_marginal(src.layered, 1), construct_n, construct_budget);
        } else {
            BinParams bins{construct_k};
            if (construct_eps) bins = bin_params_for_gap(construct_n, *construct_eps);
            spec = construct_degraded(layer_marginal(src.layered, 1), construct_n, bins);
        }
        spec = select_indices(std::move(spec), selection_from(construct_rate, construct_zthr));
        emit(out_path, code_spec_to_json(spec).dump(2) + "\n");
    });

    // ---- encode ----
    auto* c_encode = app.add_subcommand("encode", "compress a source block with a code spec");
    c_encode->fallthrough();
    std::string encode_code;
    std::string encode_in;
    c_encode->add_option("--code-file", encode_code, "code spec JSON")->required();
    c_encode->add_option("--in", encode_in, "source bits file (0/1 text)")->required();
    c_encode->callback([&] {
        CodeSpec code = code_spec_from_json(nlohmann::json::parse(slurp_or_die(encode_code)));
        std::istringstream bits_in(slurp_or_die(encode_in));
        BitVec x = read_bit_text(bits_in);
        CompressedBlock block = compress(x, code);
        std::ostringstream os(std::ios::binary);
        write_compressed_block(os, block);
        emit(out_path, os.str());
    });

    // ---- decode ----
    auto* c_decode = app.add_subcommand("decode", "decompress a block given side information");
    c_decode->fallthrough();
    SourceFlags decode_src;
    decode_src.attach(c_decode, false);
    std::string decode_code;
    std::string decode_in;
    std::string decode_side;
    c_decode->add_option("--code-file", decode_code, "code spec JSON")->required();
    c_decode->add_option("--in", decode_in, "compressed block file")->required();
    c_decode->add_option("--side-file", decode_side, "side symbols, whitespace separated")->required();
    c_decode->callback([&] {
        CodeSpec code = code_spec_from_json(nlohmann::json::parse(slurp_or_die(decode_code)));
        ResolvedSource src = resolve_source(decode_src.resolve());
        if (src.layered.layers() != 1)
            throw CLI::ValidationError("decode", "decode takes binary sources");
        std::istringstream block_in(slurp_or_die(decode_in, std::ios::in | std::ios::binary));
        CompressedBlock block = read_compressed_block(block_in);
        std::vector<std::uint64_t> side;
        std::istringstream side_in(slurp_or_die(decode_side));
        std::uint64_t y = 0;
        while (side_in >> y) side.push_back(y);
        if (side.size() != block.block_length)
            throw std::invalid_argument("decode: side length " + std::to_string(side.size()) +
                                        " != block length " + std::to_string(block.block_length));
        LlrVector llr = llr_from_side_info(layer_marginal(src.layered, 1), side);
        std::ostringstream os;
        write_bit_text(os, decompress(block, code, llr));
        emit(out_path, os.str());
    });

    // ---- Monte Carlo tasks: simulate / layered / keygen / sw ----
    bool keygen_material = false;
    auto add_mc = [&](const std::string& name, const std::string& desc, bool symbols) {
        auto* cmd = app.add_subcommand(name, desc);
        cmd->fallthrough();
        auto flags = std::make_shared<SourceFlags>();
        flags->attach(cmd, symbols);
        auto cfg = std::make_shared<ExperimentConfig>();
        cfg->task = name;
        cmd->add_option("--n", cfg->n, "recursion depth, N = 2^n")->capture_default_str();
        cmd->add_option("--k", cfg->bin_k, "degradation bins per symbol")->capture_default_str();
        cmd->add_option("--trials", cfg->trials, "Monte Carlo trials")->capture_default_str();
        cmd->add_option("--eps", cfg->eps, "rate slack over the per-code entropy bound")
            ->capture_default_str();
        auto rate = std::make_shared<std::optional<double>>();
        auto zthr = std::make_shared<std::optional<double>>();
        cmd->add_option("--rate", *rate, "fixed transmitted rate per code");
        cmd->add_option("--z-threshold", *zthr, "threshold split on z_upper");
        if (name == "sw" || name == "layered")
            cmd->add_flag("--genie", cfg->genie, "isolate units with true feed-forward");
        auto users = std::make_shared<std::optional<int>>();
        if (name == "sw")
            cmd->add_option("--users", *users, "expected user count (validated against the file)");
        auto gauss_rho = std::make_shared<std::optional<double>>();
        auto gauss_m = std::make_shared<int>(1);
        auto gauss_ky = std::make_shared<int>(64);
        if (name == "keygen") {
            cmd->add_option("--gauss-rho", *gauss_rho,
                            "jointly Gaussian source with this correlation instead of a file");
            cmd->add_option("--gauss-m", *gauss_m, "bit layers of the X quantizer")->capture_default_str();
            cmd->add_option("--gauss-ky", *gauss_ky, "construction-side Y quantizer cells")
                ->capture_default_str();
        }
        cmd->callback([&, name, flags, cfg, rate, zthr, users, gauss_rho, gauss_m, gauss_ky] {
            require_seed(name.c_str());
            cfg->rate = *rate;
            cfg->z_threshold = *zthr;
            cfg->seed = seed;
            if (name == "keygen" && *gauss_rho) {
                // Construction on the doubly-discretized model, recovery with
                // exact Gaussian densities.
                GaussianKeyModel model = build_gaussian_key_model(**gauss_rho, *gauss_m, *gauss_ky);
                LayeredSpec spec;
                if (cfg->z_threshold)
                    spec = keygen_construct(model.discretized, cfg->n, BinParams{cfg->bin_k},
                                            SelectionMode{ThresholdSelection{*cfg->z_threshold}});
                else if (cfg->rate)
                    spec = keygen_construct(model.discretized, cfg->n, BinParams{cfg->bin_k},
                                            SelectionMode{RateSelection{*cfg->rate}});
                else
                    spec = keygen_construct(model.discretized, cfg->n, BinParams{cfg->bin_k}, cfg->eps);
                GaussianKeyRun run = run_gaussian_keygen(model, spec, cfg->trials, seed);
                nlohmann::json j{{"task", "keygen"},
                                 {"source", "gauss(rho=" + std::to_string(**gauss_rho) + ")"},
                                 {"m", *gauss_m},
                                 {"ky", *gauss_ky},
                                 {"n", cfg->n},
                                 {"public_rate", run.public_rate},
                                 {"key_rate", run.key_rate},
                                 {"key_mismatches", run.key_mismatches},
                                 {"trials", run.trials},
                                 {"mi_gaussian", mi_gaussian(**gauss_rho)},
                                 {"seed", seed}};
                if (format == "json") {
                    emit(out_path, j.dump(2) + "\n");
                } else {
                    std::ostringstream os;
                    os.precision(12);
                    os << "# keygen " << j.dump() << "\n";
                    os << "m,n,public_rate,key_rate,key_mismatches,trials,seed\n";
                    os << *gauss_m << ',' << cfg->n << ',' << run.public_rate << ',' << run.key_rate
                       << ',' << run.key_mismatches << ',' << run.trials << ',' << seed << "\n";
                    emit(out_path, os.str());
                }
                return;
            }
            cfg->source = flags->resolve();
            if (*users) {
                ResolvedSource src = resolve_source(cfg->source);
                if (src.layered.layers() != **users)
                    throw CLI::ValidationError("sw", "--users does not match the source file");
            }
            SimReport report = run_simulation(*cfg);
            std::string extra;
            if (name == "keygen" && keygen_material) {
                ResolvedSource src = resolve_source(cfg->source);
                LayeredSpec spec;
                spec.m = src.layered.layers();
                if (cfg->z_threshold)
                    spec = keygen_construct(src.layered, cfg->n, BinParams{cfg->bin_k},
                                            SelectionMode{ThresholdSelection{*cfg->z_threshold}});
                else if (cfg->rate)
                    spec = keygen_construct(src.layered, cfg->n, BinParams{cfg->bin_k},
                                            SelectionMode{RateSelection{*cfg->rate}});
                else
                    spec = keygen_construct(src.layered, cfg->n, BinParams{cfg->bin_k}, cfg->eps);
                detail::SymbolSampler sampler(src.layered);
                CounterRng rng(seed, 0);
                std::vector<std::uint32_t> x(std::size_t{1} << cfg->n);
                std::vector<std::uint64_t> yv(x.size());
                sampler.sample_block(rng, x, yv);
                KeyMaterial km = derive_at_a(spec, x);
                for (int layer = 1; layer <= spec.m; ++layer) {
                    extra += "# W[" + std::to_string(layer) + "]=" + bits_to_hex(km.public_w[layer - 1]);
                    extra += " K[" + std::to_string(layer) + "]=" + bits_to_hex(km.key_k[layer - 1]);
                    extra += "\n";
                }
            }
            emit(out_path,
                 (format == "json" ? report.to_json().dump(2) + "\n" : report.csv()) + extra);
        });
        return cmd;
    };
    add_mc("simulate", "compress/decompress Monte Carlo for a binary source", false);
    add_mc("layered", "onion-peeling Monte Carlo for a 2^m-ary source", true);
    auto* c_keygen = add_mc("keygen", "key agreement Monte Carlo with exact audit at tiny N", true);
    c_keygen->add_flag("--emit-material", keygen_material,
                       "also print W and K of trial 0 as hex strings");
    add_mc("sw", "Slepian-Wolf onion-peeling Monte Carlo", true);

    // ---- gauss ----
    auto* c_gauss = app.add_subcommand("gauss", "equiprobable Gaussian quantizer report");
    c_gauss->fallthrough();
    double gauss_rho = 0.5;
    int gauss_k = 64;
    bool check_lemma7 = false;
    c_gauss->add_option("--rho", gauss_rho, "correlation coefficient")->required();
    c_gauss->add_option("--k,--quantizer-k", gauss_k, "number of quantizer cells")->capture_default_str();
    c_gauss->add_flag("--check-lemma7", check_lemma7, "fail unless mi_quantized >= lemma7_rhs");
    c_gauss->callback([&] {
        Quantizer q = build_quantizer(gauss_k);
        QuantizedMiOptions opts;
        if (gauss_k > opts.mc_threshold) require_seed("gauss");  // Monte Carlo fallback path
        opts.seed = seed;
        QuantizedMi mi = mi_quantized(q, gauss_rho, opts);
        const double rhs = lemma7_bound(gauss_rho, gauss_k);
        nlohmann::json j{{"rho", gauss_rho},
                         {"k", gauss_k},
                         {"rho_tilde", induced_correlation(q, gauss_rho)},
                         {"mi_exact", mi_gaussian(gauss_rho)},
                         {"mi_quantized", mi.bits},
                         {"lemma7_rhs", rhs}};
        if (mi.monte_carlo) j["mi_std_error"] = mi.standard_error;
        emit(out_path, j.dump(2) + "\n");
        if (check_lemma7 && mi.bits < rhs - 1e-5)
            throw std::invalid_argument("lemma7 check failed: mi_quantized < lemma7_rhs");
    });

    // ---- scaling ----
    auto* c_scaling = app.add_subcommand("scaling", "smallest achievable rate and codec timings vs N");
    c_scaling->fallthrough();
    SourceFlags scaling_src;
    scaling_src.attach(c_scaling, false);
    int n_min = 8;
    int n_max = 12;
    double target_error = 1e-2;
    std::uint64_t scaling_trials = 1000;
    int scaling_k = kDefaultBinK;
    c_scaling->add_option("--n-min", n_min, "smallest depth")->capture_default_str();
    c_scaling->add_option("--n-max", n_max, "largest depth")->capture_default_str();
    c_scaling->add_option("--target-error", target_error, "block-error target")->capture_default_str();
    c_scaling->add_option("--trials", scaling_trials, "trials per probe")->capture_default_str();
    c_scaling->add_option("--k", scaling_k, "degradation bins per symbol")->capture_default_str();
    c_scaling->callback([&] {
        require_seed("scaling");
        ScalingResult res =
            scaling_study(scaling_src.resolve(), n_min, n_max, target_error, scaling_trials, seed,
                          scaling_k);
        if (format == "json") {
            nlohmann::json rows = nlohmann::json::array();
            for (const ScalingRow& r : res.rows)
                rows.push_back({{"N", r.block_length},
                                {"rate", r.rate},
                                {"eps", r.eps},
                                {"errors", r.errors},
                                {"trials", r.trials},
                                {"reached", r.reached},
                                {"construct_seconds", r.construct_seconds},
                                {"encode_ns_per_block", r.encode_ns_per_block},
                                {"decode_ns_per_block", r.decode_ns_per_block}});
            emit(out_path, nlohmann::json{{"h_cond", res.h_cond}, {"rows", rows}}.dump(2) + "\n");
        } else {
            emit(out_path, res.csv());
        }
        bool monotone = true;
        for (std::size_t i = 1; i < res.rows.size(); ++i)
            monotone &= res.rows[i].eps <= res.rows[i - 1].eps + 1e-12;
        if (!monotone) std::cerr << "warning: rate gap is not monotone over this range\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    } catch (const alphabet_budget_error& e) {
        std::cerr << "resource budget exceeded: " << e.what() << "\n";
        return kExitBudget;
    } catch (const quadrature_error& e) {
        std::cerr << "numeric budget exceeded: " << e.what() << "\n";
        return kExitBudget;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
