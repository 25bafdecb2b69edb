/*
File formats: textual source distributions, JSON code specs, and the binary
compressed-block wire format (big-endian lengths, MSB-first packed bits).
*/

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "polarsc/codec.hpp"
#include "polarsc/construction.hpp"
#include "polarsc/joint_source.hpp"
#include "polarsc/layered.hpp"

namespace polarsc {

// -------- textual joint source: one line per side symbol, "y p0 p1" --------

inline void write_joint_source(std::ostream& os, const JointSource& s) {
    os.precision(17);
    for (const SymbolMass& e : s.entries()) os << e.id << ' ' << e.p0 << ' ' << e.p1 << '\n';
}

inline JointSource read_joint_source(std::istream& is) {
    std::vector<SymbolMass> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        SymbolMass e;
        if (!(ls >> e.id >> e.p0 >> e.p1))
            throw std::invalid_argument("joint source line " + std::to_string(lineno) +
                                        ": expected 'y p0 p1'");
        entries.push_back(e);
    }
    return JointSource(std::move(entries));
}

// ---- textual multi-symbol source: "x y mass" lines ("x mass" when there ----
// ---- is no side information; y then defaults to a single dummy symbol) ----

struct SymbolTable {
    int m = 0;           // bit layers needed for the largest symbol
    bool has_side = false;
    std::vector<LayeredEntry> entries;
};

inline SymbolTable read_symbol_table(std::istream& is) {
    SymbolTable table;
    std::string line;
    std::size_t lineno = 0;
    std::uint32_t max_x = 0;
    int columns = 0;  // fixed by the first data line
    while (std::getline(is, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        double a = 0;
        double b = 0;
        double c = 0;
        std::uint32_t x = 0;
        if (!(ls >> x >> a))
            throw std::invalid_argument("source line " + std::to_string(lineno) +
                                        ": expected 'x mass' or 'x y mass'");
        LayeredEntry e;
        e.x = x;
        int ncols = 2;
        if (ls >> b) {
            ncols = 3;
            if (ls >> c)
                throw std::invalid_argument("source line " + std::to_string(lineno) + ": too many columns");
        }
        if (columns == 0) columns = ncols;
        if (ncols != columns)
            throw std::invalid_argument("source line " + std::to_string(lineno) + ": mixed column counts");
        if (ncols == 3) {
            e.y = static_cast<std::uint64_t>(a);
            e.mass = b;
            table.has_side = true;
        } else {
            e.y = 0;
            e.mass = a;
        }
        max_x = std::max(max_x, e.x);
        table.entries.push_back(e);
    }
    table.m = 1;
    while ((max_x >> table.m) != 0) ++table.m;
    return table;
}

inline void write_symbol_table(std::ostream& os, const LayeredSource& ls, bool with_side) {
    os.precision(17);
    for (const LayeredEntry& e : ls.entries()) {
        if (with_side)
            os << e.x << ' ' << e.y << ' ' << e.mass << '\n';
        else
            os << e.x << ' ' << e.mass << '\n';
    }
}

// ------------------------------ JSON formats ------------------------------

inline nlohmann::json code_spec_to_json(const CodeSpec& spec) {
    nlohmann::json metrics = nlohmann::json::array();
    for (const IndexMetric& m : spec.metrics) metrics.push_back({{"h", m.h_upper}, {"z", m.z_upper}});
    return {{"n", spec.n}, {"k", spec.bin_k}, {"metrics", std::move(metrics)}, {"selected", spec.selected}};
}

inline CodeSpec code_spec_from_json(const nlohmann::json& j) {
    CodeSpec spec;
    spec.n = j.at("n").get<int>();
    spec.bin_k = j.at("k").get<int>();
    for (const auto& m : j.at("metrics")) {
        IndexMetric im{m.at("h").get<double>(), m.at("z").get<double>()};
        if (!(im.h_upper >= 0.0 && im.h_upper <= 1.0) || !(im.z_upper >= 0.0 && im.z_upper <= 1.0))
            throw std::invalid_argument("code_spec_from_json: metric outside [0,1]");
        spec.metrics.push_back(im);
    }
    spec.selected = j.at("selected").get<std::vector<std::uint32_t>>();
    if (spec.n < 0 || spec.n > 26 || spec.metrics.size() != (std::size_t{1} << spec.n))
        throw std::invalid_argument("code_spec_from_json: metric count does not match n");
    std::uint32_t prev = 0;
    for (std::size_t i = 0; i < spec.selected.size(); ++i) {
        if (spec.selected[i] >= spec.block_length() || (i > 0 && spec.selected[i] <= prev))
            throw std::invalid_argument("code_spec_from_json: selected set not sorted in range");
        prev = spec.selected[i];
    }
    return spec;
}

inline nlohmann::json layered_spec_to_json(const LayeredSpec& spec) {
    nlohmann::json specs = nlohmann::json::array();
    for (const CodeSpec& c : spec.specs) specs.push_back(code_spec_to_json(c));
    return {{"m", spec.m}, {"bit_order", "lsb-first"}, {"specs", std::move(specs)}};
}

inline LayeredSpec layered_spec_from_json(const nlohmann::json& j) {
    if (j.at("bit_order").get<std::string>() != "lsb-first")
        throw std::invalid_argument("layered_spec_from_json: unknown bit order");
    LayeredSpec spec;
    spec.m = j.at("m").get<int>();
    for (const auto& c : j.at("specs")) spec.specs.push_back(code_spec_from_json(c));
    if (static_cast<int>(spec.specs.size()) != spec.m)
        throw std::invalid_argument("layered_spec_from_json: spec count does not match m");
    for (const CodeSpec& c : spec.specs)
        if (c.n != spec.specs[0].n)
            throw std::invalid_argument("layered_spec_from_json: layers disagree on the blocklength");
    return spec;
}

// ------------------------- compressed block wire -------------------------
// 8-byte big-endian block length, 8-byte big-endian payload bit count, then
// payload bits packed MSB-first.

namespace detail {

inline void put_u64_be(std::ostream& os, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8)
        os.put(static_cast<char>((v >> shift) & 0xffu));
}

inline std::uint64_t get_u64_be(std::istream& is) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        const int c = is.get();
        if (c == std::istream::traits_type::eof())
            throw std::invalid_argument("compressed block: truncated header");
        v = (v << 8) | static_cast<std::uint64_t>(c & 0xff);
    }
    return v;
}

}  // namespace detail

inline void write_compressed_block(std::ostream& os, const CompressedBlock& block) {
    detail::put_u64_be(os, block.block_length);
    detail::put_u64_be(os, block.payload.size());
    std::uint8_t acc = 0;
    int used = 0;
    for (std::uint8_t bit : block.payload) {
        acc = static_cast<std::uint8_t>((acc << 1) | (bit & 1u));
        if (++used == 8) {
            os.put(static_cast<char>(acc));
            acc = 0;
            used = 0;
        }
    }
    if (used > 0) os.put(static_cast<char>(acc << (8 - used)));
}

inline CompressedBlock read_compressed_block(std::istream& is) {
    CompressedBlock block;
    block.block_length = detail::get_u64_be(is);
    const std::uint64_t bits = detail::get_u64_be(is);
    if (bits > block.block_length)
        throw std::invalid_argument("compressed block: payload longer than the block");
    block.payload.reserve(bits);
    int c = 0;
    int used = 8;
    for (std::uint64_t i = 0; i < bits; ++i) {
        if (used == 8) {
            c = is.get();
            if (c == std::istream::traits_type::eof())
                throw std::invalid_argument("compressed block: truncated payload");
            used = 0;
        }
        block.payload.push_back(static_cast<std::uint8_t>((c >> (7 - used)) & 1));
        ++used;
    }
    return block;
}

// ------------------------------- bit strings -------------------------------

inline std::string bits_to_hex(const BitVec& bits) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve((bits.size() + 3) / 4);
    int nibble = 0;
    int used = 0;
    for (std::uint8_t bit : bits) {
        nibble = (nibble << 1) | (bit & 1);
        if (++used == 4) {
            out.push_back(digits[nibble]);
            nibble = 0;
            used = 0;
        }
    }
    if (used > 0) out.push_back(digits[nibble << (4 - used)]);
    return out;
}

inline BitVec read_bit_text(std::istream& is) {
    BitVec bits;
    char c;
    while (is.get(c)) {
        if (c == '0' || c == '1')
            bits.push_back(static_cast<std::uint8_t>(c - '0'));
        else if (!std::isspace(static_cast<unsigned char>(c)))
            throw std::invalid_argument("bit text: unexpected character");
    }
    return bits;
}

inline void write_bit_text(std::ostream& os, const BitVec& bits) {
    for (std::uint8_t b : bits) os.put(static_cast<char>('0' + (b & 1)));
    os.put('\n');
}

}  // namespace polarsc
