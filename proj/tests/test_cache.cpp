// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <thread>

#include "confrepair/cache.hpp"
#include "confrepair/serialize.hpp"

#include "support/tempdir.hpp"

using namespace confrepair;

TEST_CASE("get after put returns identical bytes") {
    testutil::TempDir dir("cache-roundtrip");
    Cache cache(dir.path);
    CacheKey key{"kconfig", sha256_hex("input bytes")};
    cache.put(key, "payload \x01\x02 with binary-ish bytes\n");
    auto got = cache.get(key);
    REQUIRE(got);
    CHECK(*got == "payload \x01\x02 with binary-ish bytes\n");
}

TEST_CASE("unknown keys are absent") {
    testutil::TempDir dir("cache-miss");
    Cache cache(dir.path);
    CHECK(!cache.get(CacheKey{"cpp", sha256_hex("never stored")}));
}

TEST_CASE("an empty payload round-trips") {
    testutil::TempDir dir("cache-empty");
    Cache cache(dir.path);
    CacheKey key{"kbuild", sha256_hex("x")};
    cache.put(key, "");
    auto got = cache.get(key);
    REQUIRE(got);
    CHECK(got->empty());
}

TEST_CASE("different producers or digests never collide") {
    testutil::TempDir dir("cache-distinct");
    Cache cache(dir.path);
    CHECK(cache.path_of({"kconfig", "aa"}) != cache.path_of({"kbuild", "aa"}));
    CHECK(cache.path_of({"kconfig", "aa"}) != cache.path_of({"kconfig", "ab"}));
}

TEST_CASE("corrupt entries are treated as absent and removed") {
    testutil::TempDir dir("cache-corrupt");
    Diagnostics diag;
    Cache cache(dir.path, &diag);
    CacheKey key{"cpp", sha256_hex("source")};
    cache.put(key, "good payload");
    auto path = cache.path_of(key);
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << "garbage that fails the digest check";
    }
    CHECK(!cache.get(key));
    CHECK(!std::filesystem::exists(path));
    CHECK(!diag.warnings.empty());
}

TEST_CASE("a leftover temp file does not disturb reads") {
    testutil::TempDir dir("cache-stray");
    Cache cache(dir.path);
    CacheKey key{"kbuild", sha256_hex("rules")};
    cache.put(key, "rules payload");
    auto path = cache.path_of(key);
    std::ofstream(path.string() + ".tmp.999.0", std::ios::binary) << "crashed writer leftovers";
    auto got = cache.get(key);
    REQUIRE(got);
    CHECK(*got == "rules payload");
}

TEST_CASE("concurrent writers of one key leave a single intact entry") {
    testutil::TempDir dir("cache-race");
    Cache cache(dir.path);
    CacheKey key{"kconfig", sha256_hex("contended")};
    const std::string payload = "the agreed payload contents";

    std::vector<std::thread> writers;
    for (int t = 0; t < 8; ++t)
        writers.emplace_back([&]() {
            for (int round = 0; round < 50; ++round) cache.put(key, payload);
        });
    std::thread reader([&]() {
        for (int round = 0; round < 200; ++round) {
            auto got = cache.get(key);
            if (got) REQUIRE(*got == payload); // never torn
        }
    });
    for (auto& w : writers) w.join();
    reader.join();
    auto got = cache.get(key);
    REQUIRE(got);
    CHECK(*got == payload);
}

TEST_CASE("a disabled cache ignores puts and reports misses") {
    Cache cache;
    CHECK(!cache.enabled());
    cache.put({"kconfig", "d"}, "bytes");
    CHECK(!cache.get({"kconfig", "d"}));
}

TEST_CASE("serialized formulas survive the round trip") {
    VarTable t;
    Formula f = Formula::disjunction(
        {Formula::conjunction({Formula::var(t.intern("A")), Formula::var(t.intern("B_MODULE"))}),
         Formula::negation(Formula::var(t.intern("C"))), Formula::falsity()});
    std::string bytes = encode_formula(f, t);
    VarTable t2;
    Formula back = decode_formula(bytes, t2);
    CHECK(encode_formula(back, t2) == bytes);
    CHECK_THROWS(decode_formula("confrepair-formula 999\nT\n", t2));
}

TEST_CASE("serialized rules survive the round trip") {
    std::vector<BuildRule> rules{
        {"irq-gic.o", {GuardKind::Var, "ARM_GIC"}, std::nullopt},
        {"core.o", {GuardKind::Always, ""}, std::nullopt},
        {"mod.o", {GuardKind::Module, ""}, std::nullopt},
        {"part.o", {GuardKind::Var, "F"}, "grp.o"},
        {"sub/", {GuardKind::Always, ""}, std::nullopt},
    };
    std::string bytes = encode_rules(rules);
    std::vector<BuildRule> back = decode_rules(bytes);
    CHECK(back == rules);
}

TEST_CASE("serialized block trees keep structure and raw guards") {
    VarTable t;
    KconfigSpec spec;
    {
        OptionDecl a;
        a.name = "A";
        a.prompt = "a";
        spec.decls.push_back(a);
    }
    std::string src = "#if defined(CONFIG_A) && WEIRD\nint x;\n#elif 0\nint y;\n#else\nint z;\n#endif\n";
    BlockTree tree = parse_conditionals(src, "f.c", spec, t);
    std::string bytes = encode_block_tree(tree);
    BlockTree back = decode_block_tree(bytes);
    VarTable t2;
    resolve_block_conditions(back, "f.c", spec, t2, nullptr, nullptr);
    REQUIRE(back.blocks.size() == tree.blocks.size());
    for (size_t i = 0; i < tree.blocks.size(); ++i) {
        CHECK(back.blocks[i].parent == tree.blocks[i].parent);
        CHECK(back.blocks[i].start == tree.blocks[i].start);
        CHECK(back.blocks[i].end == tree.blocks[i].end);
        CHECK(back.blocks[i].raw_guard == tree.blocks[i].raw_guard);
    }
    CHECK(back.line_block == tree.line_block);
    // conditions resolve to the same formulas in a fresh table
    for (int line = 1; line <= tree.line_count; ++line)
        CHECK(line_condition(back, line).pc.to_infix(t2) ==
              line_condition(tree, line).pc.to_infix(t));
}
