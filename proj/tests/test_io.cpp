#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "polarsc/io.hpp"

using namespace polarsc;

TEST_CASE("joint source text round-trip") {
    JointSource s = make_bsc_source(0.11);
    std::stringstream ss;
    write_joint_source(ss, s);
    JointSource back = read_joint_source(ss);
    REQUIRE(back.alphabet_size() == s.alphabet_size());
    for (std::size_t i = 0; i < s.entries().size(); ++i) {
        CHECK(back.entries()[i].id == s.entries()[i].id);
        CHECK(back.entries()[i].p0 == s.entries()[i].p0);
        CHECK(back.entries()[i].p1 == s.entries()[i].p1);
    }
}

TEST_CASE("joint source text accepts comments and rejects junk") {
    std::stringstream good("# comment\n0 0.445 0.055\n\n1 0.055 0.445\n");
    CHECK(read_joint_source(good).alphabet_size() == 2);
    std::stringstream bad("0 0.5\n");
    CHECK_THROWS_AS(read_joint_source(bad), std::invalid_argument);
}

TEST_CASE("symbol table parsing with and without side information") {
    std::stringstream three("0 0 0.25\n1 0 0.25\n2 1 0.25\n3 1 0.25\n");
    SymbolTable with = read_symbol_table(three);
    CHECK(with.has_side);
    CHECK(with.m == 2);
    CHECK(with.entries.size() == 4);

    std::stringstream two("0 0.5\n1 0.5\n");
    SymbolTable without = read_symbol_table(two);
    CHECK_FALSE(without.has_side);
    CHECK(without.m == 1);

    std::stringstream mixed("0 0.5\n1 0 0.5\n");
    CHECK_THROWS_AS(read_symbol_table(mixed), std::invalid_argument);
    std::stringstream wide("0 0 0.5 9\n");
    CHECK_THROWS_AS(read_symbol_table(wide), std::invalid_argument);
}

TEST_CASE("code spec JSON round-trip") {
    CodeSpec spec = select_indices(exact_construct(make_erasure_source(0.5), 2), RateSelection{0.5});
    spec.bin_k = 7;
    nlohmann::json j = code_spec_to_json(spec);
    CodeSpec back = code_spec_from_json(j);
    CHECK(back.n == spec.n);
    CHECK(back.bin_k == 7);
    CHECK(back.selected == spec.selected);
    REQUIRE(back.metrics.size() == spec.metrics.size());
    for (std::size_t i = 0; i < spec.metrics.size(); ++i) {
        CHECK(back.metrics[i].h_upper == spec.metrics[i].h_upper);
        CHECK(back.metrics[i].z_upper == spec.metrics[i].z_upper);
    }

    j["selected"] = {3, 1};  // unsorted
    CHECK_THROWS_AS(code_spec_from_json(j), std::invalid_argument);
    j["selected"] = {1, 9};  // out of range
    CHECK_THROWS_AS(code_spec_from_json(j), std::invalid_argument);
    j = code_spec_to_json(spec);
    j["metrics"][0]["z"] = 1.5;  // outside [0,1]
    CHECK_THROWS_AS(code_spec_from_json(j), std::invalid_argument);
}

TEST_CASE("layered spec JSON round-trip") {
    LayeredSpec spec;
    spec.m = 2;
    spec.specs.push_back(select_indices(exact_construct(make_bsc_source(0.2), 2), RateSelection{0.75}));
    spec.specs.push_back(select_indices(exact_construct(make_bsc_source(0.3), 2), RateSelection{0.25}));
    nlohmann::json j = layered_spec_to_json(spec);
    CHECK(j["bit_order"] == "lsb-first");
    LayeredSpec back = layered_spec_from_json(j);
    CHECK(back.m == 2);
    CHECK(back.specs[0].selected == spec.specs[0].selected);
    CHECK(back.specs[1].selected == spec.specs[1].selected);
    j["bit_order"] = "msb-first";
    CHECK_THROWS_AS(layered_spec_from_json(j), std::invalid_argument);
}

TEST_CASE("compressed block wire format is bit-exact") {
    CompressedBlock block;
    block.block_length = 4096;
    block.payload = {1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1};  // 11 bits: a3 e0 packed
    std::stringstream ss;
    write_compressed_block(ss, block);
    const std::string bytes = ss.str();
    REQUIRE(bytes.size() == 16 + 2);
    // 8-byte big-endian block length.
    CHECK(static_cast<unsigned char>(bytes[6]) == 0x10);
    CHECK(static_cast<unsigned char>(bytes[7]) == 0x00);
    // 8-byte big-endian payload bit count.
    CHECK(static_cast<unsigned char>(bytes[15]) == 11);
    // Payload bits MSB-first: 10110010 111xxxxx.
    CHECK(static_cast<unsigned char>(bytes[16]) == 0xb2);
    CHECK(static_cast<unsigned char>(bytes[17]) == 0xe0);

    std::stringstream in(bytes);
    CompressedBlock back = read_compressed_block(in);
    CHECK(back.block_length == block.block_length);
    CHECK(back.payload == block.payload);
}

TEST_CASE("wire round-trip over random payloads") {
    CounterRng rng(0x10ULL, 50);
    for (int rep = 0; rep < 50; ++rep) {
        CompressedBlock block;
        block.block_length = 1u << (3 + rng.next_u64() % 6);
        const std::size_t bits = rng.next_u64() % (block.block_length + 1);
        for (std::size_t i = 0; i < bits; ++i) block.payload.push_back(rng.next_u64() & 1u);
        std::stringstream ss;
        write_compressed_block(ss, block);
        CompressedBlock back = read_compressed_block(ss);
        CHECK(back.block_length == block.block_length);
        CHECK(back.payload == block.payload);
    }
    std::stringstream truncated(std::string("\x00\x00\x00\x00\x00\x00\x00", 7));
    CHECK_THROWS_AS(read_compressed_block(truncated), std::invalid_argument);
}

TEST_CASE("bit text and hex helpers") {
    std::stringstream ss("1011 0\n1");
    BitVec bits = read_bit_text(ss);
    CHECK(bits == BitVec{1, 0, 1, 1, 0, 1});
    std::stringstream bad("10x1");
    CHECK_THROWS_AS(read_bit_text(bad), std::invalid_argument);
    CHECK(bits_to_hex({1, 0, 1, 0, 1, 1, 1, 1}) == "af");
    CHECK(bits_to_hex({1, 1, 1}) == "e");  // short tail padded with zeros
    CHECK(bits_to_hex({}) == "");
    std::stringstream out;
    write_bit_text(out, {1, 0, 1});
    CHECK(out.str() == "101\n");
}
