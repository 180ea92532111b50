#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "dagi/checkpoint.hpp"
#include "dagi/errors.hpp"
#include "dagi/matrix.hpp"
#include "dagi/rng.hpp"

using namespace dagi;

namespace {

std::filesystem::path temp_file(const std::string& stem) {
    return std::filesystem::path("/tmp") / ("dagi_test_" + stem + ".ckpt");
}

std::vector<unsigned char> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

Checkpoint sample_checkpoint() {
    Checkpoint c;
    c.header["model_kind"] = "demo";
    c.header["fingerprint"] = std::uint64_t{0xdeadbeefcafebabeULL};
    c.header["nested"] = {{"lr", 0.01}, {"epochs", 3}};
    SeededRng rng(7);
    c.matrices.emplace_back("a.w", rng.normal_matrix(3, 4));
    c.matrices.emplace_back("a.b", rng.normal_matrix(1, 4));
    c.matrices.emplace_back("scalar", rng.normal_matrix(1, 1));
    return c;
}

} // namespace

TEST_CASE("checkpoint round-trips header and matrices exactly") {
    const auto path = temp_file("ckpt-roundtrip");
    Checkpoint c = sample_checkpoint();
    save_checkpoint(c, path.string());
    Checkpoint r = load_checkpoint(path.string());
    CHECK(r.header == c.header);
    REQUIRE(r.matrices.size() == c.matrices.size());
    for (std::size_t i = 0; i < c.matrices.size(); ++i) {
        CHECK(r.matrices[i].first == c.matrices[i].first);
        CHECK(r.matrices[i].second == c.matrices[i].second);
    }
    CHECK(r.field("model_kind").get<std::string>() == "demo");
    CHECK(r.field("fingerprint").get<std::uint64_t>() == 0xdeadbeefcafebabeULL);
    std::filesystem::remove(path);
}

TEST_CASE("payload layout: little-endian f64 columns after the JSON header") {
    const auto path = temp_file("ckpt-layout");
    Checkpoint c;
    c.header["k"] = 1;
    Matrix m(2, 2, {1.0, 2.0, 3.0, 4.0}); // row-major init: [[1,2],[3,4]]
    c.matrices.emplace_back("m", m);
    save_checkpoint(c, path.string());

    const auto bytes = slurp(path);
    REQUIRE(bytes.size() > 20);
    CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "DAGICKPT");
    std::uint32_t version = 0;
    for (int i = 0; i < 4; ++i) version |= std::uint32_t(bytes[8 + i]) << (8 * i);
    CHECK(version == kCheckpointVersion);
    std::uint64_t hlen = 0;
    for (int i = 0; i < 8; ++i) hlen |= std::uint64_t(bytes[12 + i]) << (8 * i);
    const std::size_t payload_at = 20 + hlen;
    REQUIRE(bytes.size() == payload_at + 4 * 8);
    // column-major: (0,0), (1,0), (0,1), (1,1)
    const double expect[4] = {1.0, 3.0, 2.0, 4.0};
    for (int k = 0; k < 4; ++k) {
        std::uint64_t u = 0;
        for (int i = 0; i < 8; ++i) u |= std::uint64_t(bytes[payload_at + 8 * k + i]) << (8 * i);
        CHECK(std::bit_cast<double>(u) == expect[k]);
    }
    std::filesystem::remove(path);
}

TEST_CASE("malformed checkpoints are refused with format errors") {
    const auto path = temp_file("ckpt-malformed");
    save_checkpoint(sample_checkpoint(), path.string());
    const auto good = slurp(path);

    SUBCASE("bad magic") {
        auto bad = good;
        bad[0] = 'X';
        spit(path, bad);
        CHECK_THROWS_AS(load_checkpoint(path.string()), FormatError);
    }
    SUBCASE("version mismatch names both versions") {
        auto bad = good;
        bad[8] = 2; // little-endian u32 version -> 2
        spit(path, bad);
        try {
            load_checkpoint(path.string());
            FAIL("expected a format error");
        } catch (const FormatError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("version") != std::string::npos);
            CHECK(msg.find('2') != std::string::npos);
            CHECK(msg.find('1') != std::string::npos);
        }
    }
    SUBCASE("truncated payload") {
        auto bad = good;
        bad.resize(bad.size() - 4);
        spit(path, bad);
        CHECK_THROWS_AS(load_checkpoint(path.string()), FormatError);
    }
    SUBCASE("truncated header") {
        auto bad = good;
        bad.resize(16);
        spit(path, bad);
        CHECK_THROWS_AS(load_checkpoint(path.string()), FormatError);
    }
    SUBCASE("trailing bytes") {
        auto bad = good;
        bad.push_back(0);
        spit(path, bad);
        CHECK_THROWS_AS(load_checkpoint(path.string()), FormatError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_checkpoint((path.string() + ".nope")), IoError);
    }
    std::filesystem::remove(path);
}

TEST_CASE("header field access reports missing keys") {
    Checkpoint c = sample_checkpoint();
    CHECK_NOTHROW(c.field("nested"));
    try {
        c.field("fingerprint_v2");
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("fingerprint_v2") != std::string::npos);
    }
}

TEST_CASE("manifest shape mismatch with payload is rejected") {
    const auto path = temp_file("ckpt-shape");
    Checkpoint c;
    c.header["k"] = 1;
    c.matrices.emplace_back("m", Matrix(2, 3));
    save_checkpoint(c, path.string());
    auto bytes = slurp(path);
    bytes.resize(bytes.size() - 8); // drop one f64: payload no longer matches manifest
    spit(path, bytes);
    CHECK_THROWS_AS(load_checkpoint(path.string()), FormatError);
    std::filesystem::remove(path);
}
