/*
Deterministic Monte Carlo harness: experiment configuration, trial execution
with counter-based per-trial streams, report emission (CSV data rows are a
pure function of the config; timings live in comment lines and JSON only),
and the blocklength scaling study.
*/

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "polarsc/codec.hpp"
#include "polarsc/construction.hpp"
#include "polarsc/io.hpp"
#include "polarsc/keygen.hpp"
#include "polarsc/layered.hpp"
#include "polarsc/rng.hpp"
#include "polarsc/slepian_wolf.hpp"

namespace polarsc {

// Construction bin count used when the caller gives neither k nor an entropy
// gap; keeps one fused step at ~(2k+1)^2 operations while reproducing exact
// metrics to ~1e-9 at small depths.
inline constexpr int kDefaultBinK = 128;

inline constexpr const char* kSeedDerivation = "trial t draws from mix64(key(seed, stream=t) ^ counter)";

struct SourceConfig {
    enum class Kind { bsc, erasure, joint_file, symbol_file };
    Kind kind = Kind::bsc;
    double param = 0.11;  // flip or erasure probability
    std::string path;

    std::string describe() const {
        switch (kind) {
            case Kind::bsc: return "bsc(p=" + std::to_string(param) + ")";
            case Kind::erasure: return "erasure(eps=" + std::to_string(param) + ")";
            case Kind::joint_file: return "joint:" + path;
            case Kind::symbol_file: return "symbols:" + path;
        }
        return "?";
    }
};

// A source resolved for simulation: always carried as a LayeredSource (m=1
// for binary sources) plus the side-information flag.
struct ResolvedSource {
    LayeredSource layered;
    bool has_side = true;
};

inline ResolvedSource resolve_source(const SourceConfig& cfg) {
    switch (cfg.kind) {
        case SourceConfig::Kind::bsc: {
            const double p = cfg.param;
            if (p < 0.0 || p > 1.0) throw std::invalid_argument("source: bsc p outside [0,1]");
            return {LayeredSource(
                        1, {{0, 0, (1 - p) / 2}, {1, 1, (1 - p) / 2}, {0, 1, p / 2}, {1, 0, p / 2}}),
                    true};
        }
        case SourceConfig::Kind::erasure: {
            const double e = cfg.param;
            if (e < 0.0 || e > 1.0) throw std::invalid_argument("source: erasure eps outside [0,1]");
            return {LayeredSource(1, {{0, 0, (1 - e) / 2}, {1, 1, (1 - e) / 2}, {0, 2, e / 2}, {1, 2, e / 2}}),
                    true};
        }
        case SourceConfig::Kind::joint_file: {
            std::ifstream in(cfg.path);
            if (!in) throw std::invalid_argument("source: cannot open " + cfg.path);
            JointSource js = read_joint_source(in);
            std::vector<LayeredEntry> entries;
            for (const SymbolMass& e : js.entries()) {
                entries.push_back({0, e.id, e.p0});
                entries.push_back({1, e.id, e.p1});
            }
            std::erase_if(entries, [](const LayeredEntry& e) { return e.mass == 0.0; });
            return {LayeredSource(1, std::move(entries)), true};
        }
        case SourceConfig::Kind::symbol_file: {
            std::ifstream in(cfg.path);
            if (!in) throw std::invalid_argument("source: cannot open " + cfg.path);
            SymbolTable table = read_symbol_table(in);
            return {LayeredSource(table.m, std::move(table.entries)), table.has_side};
        }
    }
    throw std::invalid_argument("source: unknown kind");
}

struct ExperimentConfig {
    std::string task;  // simulate | layered | keygen | sw
    SourceConfig source;
    int n = 10;
    int bin_k = kDefaultBinK;
    std::optional<double> rate;         // per-code transmitted rate
    std::optional<double> z_threshold;  // threshold split (keygen)
    double eps = 0.05;                  // rate slack over the entropy bound
    std::uint64_t trials = 1000;
    std::uint64_t seed = 1;
    bool genie = false;
    int threads = 0;  // 0 = hardware concurrency

    nlohmann::json to_json() const {
        nlohmann::json j{{"task", task},         {"source", source.describe()},
                         {"n", n},               {"k", bin_k},
                         {"eps", eps},           {"trials", trials},
                         {"seed", seed},         {"genie", genie}};
        if (rate) j["rate"] = *rate;
        if (z_threshold) j["z_threshold"] = *z_threshold;
        return j;
    }

    void validate() const {
        if (n < 0 || n > 26) throw std::invalid_argument("config: n outside [0, 26]");
        if (bin_k < 1) throw std::invalid_argument("config: k must be >= 1");
        if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("config: eps outside [0,1]");
        if (rate && (*rate < 0.0 || *rate > 1.0)) throw std::invalid_argument("config: rate outside [0,1]");
        if (z_threshold && (*z_threshold < 0.0 || *z_threshold > 1.0))
            throw std::invalid_argument("config: z threshold outside [0,1]");
    }
};

struct PhaseTiming {
    std::string phase;
    double seconds = 0.0;
};

struct SimReport {
    std::string task;
    nlohmann::json config;
    double h_cond = 0.0;
    std::vector<double> rates;  // per layer/user
    double rate_sum = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t block_errors = 0;
    std::uint64_t bit_errors = 0;               // symbol errors for multi-layer tasks
    std::vector<std::uint64_t> unit_errors;     // per layer/user block errors
    double key_rate = 0.0;
    double public_rate = 0.0;
    std::uint64_t key_mismatches = 0;
    std::optional<SecrecyAudit> audit;
    std::vector<PhaseTiming> timings;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        nlohmann::json j{{"task", task},
                         {"config", config},
                         {"h_cond", h_cond},
                         {"rates", rates},
                         {"rate_sum", rate_sum},
                         {"trials", trials},
                         {"block_errors", block_errors},
                         {"bit_errors", bit_errors},
                         {"unit_errors", unit_errors},
                         {"seed", seed},
                         {"seed_derivation", kSeedDerivation}};
        if (task == "keygen") {
            j["key_rate"] = key_rate;
            j["public_rate"] = public_rate;
            j["key_mismatches"] = key_mismatches;
            if (audit)
                j["audit"] = {{"H_K", audit->key_entropy_bits}, {"I_KW", audit->mi_key_public_bits}};
        }
        nlohmann::json t = nlohmann::json::array();
        for (const PhaseTiming& pt : timings) t.push_back({{"phase", pt.phase}, {"seconds", pt.seconds}});
        j["timings"] = t;  // excluded from determinism contracts
        return j;
    }

    // Comment lines carry the config echo and timings; data rows are
    // byte-stable across reruns of the same config.
    std::string csv() const {
        std::ostringstream os;
        os.precision(12);
        os << "# " << task << " " << config.dump() << "\n";
        os << "# h_cond=" << h_cond << " seed_derivation=\"" << kSeedDerivation << "\"\n";
        for (const PhaseTiming& pt : timings)
            os << "# timing " << pt.phase << " " << pt.seconds << "s\n";
        if (task == "simulate") {
            os << "task,n,N,k,rate,trials,seed,block_errors,bit_errors\n";
            os << task << ',' << config["n"].get<int>() << ',' << (1u << config["n"].get<int>()) << ','
               << config["k"].get<int>() << ',' << rate_sum << ',' << trials << ',' << seed << ','
               << block_errors << ',' << bit_errors << "\n";
        } else if (task == "keygen") {
            os << "m,n,public_rate,key_rate,key_mismatches,trials,seed\n";
            os << rates.size() << ',' << config["n"].get<int>() << ',' << public_rate << ',' << key_rate
               << ',' << key_mismatches << ',' << trials << ',' << seed << "\n";
            if (audit) {
                os << "audit_H_K,audit_I_KW\n";
                os << audit->key_entropy_bits << ',' << audit->mi_key_public_bits << "\n";
            }
        } else {
            // layered and sw: one row per unit in decoding order.
            os << (task == "sw" ? "user" : "layer") << ",rate,errors,trials,seed\n";
            for (std::size_t i = 0; i < rates.size(); ++i)
                os << (i + 1) << ',' << rates[i] << ','
                   << (i < unit_errors.size() ? unit_errors[i] : 0) << ',' << trials << ',' << seed
                   << "\n";
            os << "# joint block_errors=" << block_errors << " symbol_errors=" << bit_errors << "\n";
        }
        return os.str();
    }
};

namespace detail {

class StopWatch {
   public:
    StopWatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

   private:
    std::chrono::steady_clock::time_point start_;
};

// Cumulative-mass sampler over a layered source.
class SymbolSampler {
   public:
    explicit SymbolSampler(const LayeredSource& ls) {
        cumulative_.reserve(ls.entries().size());
        double acc = 0.0;
        for (const LayeredEntry& e : ls.entries()) {
            acc += e.mass;
            cumulative_.push_back(acc);
            entries_.push_back(e);
        }
    }

    void sample_block(CounterRng& rng, std::vector<std::uint32_t>& x, std::vector<std::uint64_t>& y) const {
        for (std::size_t t = 0; t < x.size(); ++t) {
            const double r = rng.next_double() * cumulative_.back();
            const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
            const std::size_t idx = std::min<std::size_t>(it - cumulative_.begin(), entries_.size() - 1);
            x[t] = entries_[idx].x;
            y[t] = entries_[idx].y;
        }
    }

   private:
    std::vector<double> cumulative_;
    std::vector<LayeredEntry> entries_;
};

struct TrialCounts {
    std::uint64_t block_errors = 0;
    std::uint64_t bit_errors = 0;
    std::uint64_t key_mismatches = 0;
    std::vector<std::uint64_t> unit_errors;

    explicit TrialCounts(std::size_t units = 0) : unit_errors(units, 0) {}

    void merge(const TrialCounts& other) {
        block_errors += other.block_errors;
        bit_errors += other.bit_errors;
        key_mismatches += other.key_mismatches;
        for (std::size_t i = 0; i < unit_errors.size(); ++i) unit_errors[i] += other.unit_errors[i];
    }
};

// Chunked deterministic trial runner. Each trial is a pure function of
// (seed, trial index), so the merged counts are independent of the thread
// count; the abort limit only cuts work once the outcome is already decided.
// make_ctx builds per-thread scratch (decoders, buffers) reused across the
// chunk.
template <typename MakeCtx, typename PerTrial>
inline TrialCounts run_trials(std::uint64_t trials, int threads, std::size_t units, MakeCtx&& make_ctx,
                              PerTrial&& per_trial,
                              std::uint64_t abort_block_errors = ~std::uint64_t{0}) {
    if (threads <= 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        threads = hw == 0 ? 1 : static_cast<int>(hw);
    }
    threads = static_cast<int>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(trials, 1)));
    std::vector<TrialCounts> partial(threads, TrialCounts(units));
    std::atomic<std::uint64_t> global_block_errors{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::uint64_t chunk = (trials + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            auto ctx = make_ctx();
            const std::uint64_t lo = w * chunk;
            const std::uint64_t hi = std::min(trials, lo + chunk);
            for (std::uint64_t t = lo; t < hi; ++t) {
                if (global_block_errors.load(std::memory_order_relaxed) > abort_block_errors) return;
                const std::uint64_t before = partial[w].block_errors;
                per_trial(ctx, t, partial[w]);
                if (partial[w].block_errors != before)
                    global_block_errors.fetch_add(partial[w].block_errors - before,
                                                  std::memory_order_relaxed);
            }
        });
    }
    for (auto& th : pool) th.join();
    TrialCounts total(units);
    for (const TrialCounts& p : partial) total.merge(p);
    return total;
}

}  // namespace detail

// Monte Carlo simulation for one configuration; deterministic given the seed
// except for the timing fields.
inline SimReport run_simulation(const ExperimentConfig& cfg) {
    cfg.validate();
    ResolvedSource src = resolve_source(cfg.source);
    const int m = src.layered.layers();
    const std::size_t block = std::size_t{1} << cfg.n;

    SimReport report;
    report.task = cfg.task;
    report.config = cfg.to_json();
    report.seed = cfg.seed;
    report.h_cond = cond_entropy(src.layered);

    detail::StopWatch construct_timer;
    LayeredSpec spec;
    spec.m = m;
    if (cfg.task == "keygen") {
        if (cfg.z_threshold)
            spec = keygen_construct(src.layered, cfg.n, BinParams{cfg.bin_k},
                                    SelectionMode{ThresholdSelection{*cfg.z_threshold}});
        else if (cfg.rate)
            spec = keygen_construct(src.layered, cfg.n, BinParams{cfg.bin_k},
                                    SelectionMode{RateSelection{*cfg.rate}});
        else
            spec = keygen_construct(src.layered, cfg.n, BinParams{cfg.bin_k}, cfg.eps);
    } else if (cfg.rate || cfg.z_threshold) {
        for (int layer = 1; layer <= m; ++layer) {
            CodeSpec c = construct_degraded(layer_marginal(src.layered, layer), cfg.n, BinParams{cfg.bin_k});
            SelectionMode mode = cfg.rate ? SelectionMode{RateSelection{*cfg.rate}}
                                          : SelectionMode{ThresholdSelection{*cfg.z_threshold}};
            spec.specs.push_back(select_indices(std::move(c), mode));
        }
    } else {
        spec = layered_construct(src.layered, cfg.n, BinParams{cfg.bin_k}, cfg.eps);
    }
    report.timings.push_back({"construct", construct_timer.seconds()});

    for (const CodeSpec& c : spec.specs) report.rates.push_back(c.rate());
    report.rate_sum = spec.sum_rate();
    report.trials = cfg.trials;

    detail::SymbolSampler sampler(src.layered);
    detail::StopWatch trial_timer;

    if (cfg.task == "keygen") {
        report.public_rate = report.rate_sum;
        report.key_rate = m - report.rate_sum;
        if (block * static_cast<std::size_t>(m) <= 16) report.audit = secrecy_audit(src.layered, spec);
        auto counts = detail::run_trials(
            cfg.trials, cfg.threads, 0,
            [&] { return LayeredDecoder(src.layered, spec); },
            [&](LayeredDecoder& decoder, std::uint64_t t, detail::TrialCounts& acc) {
                CounterRng rng(cfg.seed, t);
                std::vector<std::uint32_t> x(block);
                std::vector<std::uint64_t> y(block);
                sampler.sample_block(rng, x, y);
                KeyMaterial km = derive_at_a(spec, x);
                std::vector<BitVec> key_hat;
                std::vector<BitVec> planes;
                for (int layer = 1; layer <= m; ++layer) {
                    const CodeSpec& code = spec.specs[layer - 1];
                    CompressedBlock blk{code.block_length(), km.public_w[layer - 1]};
                    planes.push_back(decoder.decode_layer(layer, blk, y, planes));
                    const BitVec& u = decoder.layer_u_hat(layer);
                    BitVec kbits;
                    std::size_t sel_pos = 0;
                    for (std::uint32_t j = 0; j < u.size(); ++j) {
                        if (sel_pos < code.selected.size() && code.selected[sel_pos] == j)
                            ++sel_pos;
                        else
                            kbits.push_back(u[j]);
                    }
                    key_hat.push_back(std::move(kbits));
                }
                if (key_hat != km.key_k) {
                    ++acc.key_mismatches;
                    ++acc.block_errors;
                }
            });
        report.key_mismatches = counts.key_mismatches;
        report.block_errors = counts.block_errors;
    } else {
        auto counts = detail::run_trials(
            cfg.trials, cfg.threads, m,
            [&] { return LayeredDecoder(src.layered, spec); },
            [&](LayeredDecoder& decoder, std::uint64_t t, detail::TrialCounts& acc) {
                CounterRng rng(cfg.seed, t);
                std::vector<std::uint32_t> x(block);
                std::vector<std::uint64_t> y(block);
                sampler.sample_block(rng, x, y);
                std::vector<std::uint64_t> side = y;
                if (!src.has_side) side.assign(block, 0);

                std::vector<CompressedBlock> blocks;
                blocks.reserve(m);
                for (int layer = 1; layer <= m; ++layer)
                    blocks.push_back(compress(bit_plane(x, layer), spec.specs[layer - 1]));

                if (cfg.genie) {
                    // Isolated per-unit errors: true lower planes feed forward.
                    std::vector<BitVec> truth;
                    truth.reserve(m);
                    for (int layer = 1; layer <= m; ++layer) truth.push_back(bit_plane(x, layer));
                    bool any = false;
                    for (int layer = 1; layer <= m; ++layer) {
                        std::vector<BitVec> lower(truth.begin(), truth.begin() + layer - 1);
                        BitVec plane = decoder.decode_layer(layer, blocks[layer - 1], side, lower);
                        if (plane != truth[layer - 1]) {
                            ++acc.unit_errors[layer - 1];
                            any = true;
                        }
                    }
                    acc.block_errors += any;
                } else {
                    std::vector<BitVec> planes;
                    planes.reserve(m);
                    for (int layer = 1; layer <= m; ++layer)
                        planes.push_back(decoder.decode_layer(layer, blocks[layer - 1], side, planes));
                    bool any = false;
                    std::uint64_t symbol_errs = 0;
                    for (std::size_t i = 0; i < block; ++i) {
                        std::uint32_t sym = 0;
                        for (int layer = 1; layer <= m; ++layer)
                            sym |= static_cast<std::uint32_t>(planes[layer - 1][i]) << (layer - 1);
                        symbol_errs += (sym != x[i]);
                    }
                    for (int layer = 1; layer <= m; ++layer) {
                        if (planes[layer - 1] != bit_plane(x, layer)) {
                            ++acc.unit_errors[layer - 1];
                            any = true;
                        }
                    }
                    acc.bit_errors += symbol_errs;
                    acc.block_errors += any;
                }
            });
        report.block_errors = counts.block_errors;
        report.bit_errors = counts.bit_errors;
        report.unit_errors = counts.unit_errors;
    }
    report.timings.push_back({"trials", trial_timer.seconds()});
    return report;
}

// ------------------------------ scaling study ------------------------------

struct ScalingRow {
    int n = 0;
    std::uint32_t block_length = 0;
    double rate = 0.0;  // smallest rate meeting the target error
    double eps = 0.0;   // rate - H(X|Y)
    std::uint64_t errors = 0;
    std::uint64_t trials = 0;
    bool reached = true;  // false when even rate 1 misses the target
    double construct_seconds = 0.0;
    double encode_ns_per_block = 0.0;
    double decode_ns_per_block = 0.0;
};

struct ScalingResult {
    std::vector<ScalingRow> rows;
    double h_cond = 0.0;

    std::string csv() const {
        std::ostringstream os;
        os.precision(12);
        os << "# scaling h_cond=" << h_cond << "\n";
        for (const ScalingRow& r : rows)
            os << "# timing n=" << r.n << " construct=" << r.construct_seconds
               << "s encode=" << r.encode_ns_per_block << "ns decode=" << r.decode_ns_per_block
               << "ns\n";
        os << "N,rate,eps,errors,trials,reached\n";
        for (const ScalingRow& r : rows)
            os << r.block_length << ',' << r.rate << ',' << r.eps << ',' << r.errors << ',' << r.trials
               << ',' << (r.reached ? 1 : 0) << "\n";
        return os.str();
    }
};

namespace detail {

// Block-error count for a fixed selected-index count; aborts once the target
// is provably missed.
inline std::uint64_t measure_block_errors(const LayeredSource& ls, bool has_side, const CodeSpec& base,
                                          std::uint32_t selected_count, std::uint64_t trials,
                                          std::uint64_t seed, int threads, std::uint64_t abort_limit) {
    CodeSpec code = select_indices(base, RateSelection{static_cast<double>(selected_count) /
                                                       static_cast<double>(base.block_length())});
    const std::size_t block = code.block_length();
    JointSource binary = layer_marginal(ls, 1);
    SymbolSampler sampler(ls);
    auto counts = run_trials(
        trials, threads, 0,
        [&] { return ScDecoder(code.n); },
        [&](ScDecoder& dec, std::uint64_t t, TrialCounts& acc) {
            CounterRng rng(seed, t);
            std::vector<std::uint32_t> x(block);
            std::vector<std::uint64_t> y(block);
            sampler.sample_block(rng, x, y);
            if (!has_side) y.assign(block, 0);
            LlrVector llr = llr_from_side_info(binary, y);
            BitVec bits = bit_plane(x, 1);
            CompressedBlock payload = compress(bits, code);
            acc.block_errors += (dec.decode(llr, code, payload.payload) != bits);
        },
        abort_limit);
    return counts.block_errors;
}

}  // namespace detail

// For each depth, binary-search the smallest transmitted-index count (rate
// granularity 1/N) whose measured block error meets the target, and record
// the rate gap to H(X|Y) plus per-block codec timings.
inline ScalingResult scaling_study(const SourceConfig& source, int n_min, int n_max, double target_error,
                                   std::uint64_t trials, std::uint64_t seed, int bin_k = kDefaultBinK,
                                   int threads = 0) {
    if (n_min > n_max || n_min < 1 || n_max > 26)
        throw std::invalid_argument("scaling_study: bad depth range");
    if (target_error <= 0.0 || target_error >= 1.0)
        throw std::invalid_argument("scaling_study: target error outside (0,1)");
    ResolvedSource src = resolve_source(source);
    if (src.layered.layers() != 1)
        throw std::invalid_argument("scaling_study: binary sources only");
    ScalingResult result;
    result.h_cond = cond_entropy(src.layered);
    const auto limit = static_cast<std::uint64_t>(target_error * static_cast<double>(trials));

    for (int n = n_min; n <= n_max; ++n) {
        ScalingRow row;
        row.n = n;
        row.block_length = 1u << n;

        detail::StopWatch construct_timer;
        CodeSpec base = construct_degraded(layer_marginal(src.layered, 1), n, BinParams{bin_k});
        row.construct_seconds = construct_timer.seconds();

        auto ok = [&](std::uint32_t count) {
            return detail::measure_block_errors(src.layered, src.has_side, base, count, trials, seed,
                                                threads, limit) <= limit;
        };
        std::uint32_t lo = 0;
        std::uint32_t hi = row.block_length;
        if (!ok(hi)) {
            row.reached = false;
            row.rate = 1.0;
        } else if (ok(lo)) {
            row.rate = 0.0;
        } else {
            while (hi - lo > 1) {
                const std::uint32_t mid = lo + (hi - lo) / 2;
                (ok(mid) ? hi : lo) = mid;
            }
            row.rate = static_cast<double>(hi) / row.block_length;
        }
        const auto final_count = static_cast<std::uint32_t>(row.rate * row.block_length + 0.5);
        row.errors = detail::measure_block_errors(src.layered, src.has_side, base, final_count, trials,
                                                  seed, threads, ~std::uint64_t{0});
        row.trials = trials;
        row.eps = row.rate - result.h_cond;

        // Per-block codec timings, single-threaded, construction excluded.
        CodeSpec code = select_indices(base, RateSelection{row.rate});
        JointSource binary = layer_marginal(src.layered, 1);
        detail::SymbolSampler sampler(src.layered);
        CounterRng rng(seed, ~std::uint64_t{0});
        std::vector<std::uint32_t> xs(row.block_length);
        std::vector<std::uint64_t> ys(row.block_length);
        sampler.sample_block(rng, xs, ys);
        if (!src.has_side) ys.assign(row.block_length, 0);
        LlrVector llr = llr_from_side_info(binary, ys);
        BitVec bits = bit_plane(xs, 1);
        const int reps = std::max(4, 1 << std::max(0, 16 - n));
        CompressedBlock payload;
        detail::StopWatch enc_timer;
        for (int r = 0; r < reps; ++r) payload = compress(bits, code);
        row.encode_ns_per_block = enc_timer.seconds() * 1e9 / reps;
        ScDecoder dec(n);
        detail::StopWatch dec_timer;
        for (int r = 0; r < reps; ++r) dec.decode(llr, code, payload.payload);
        row.decode_ns_per_block = dec_timer.seconds() * 1e9 / reps;

        result.rows.push_back(row);
    }
    return result;
}

}  // namespace polarsc
