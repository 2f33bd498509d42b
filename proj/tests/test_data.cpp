#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "irts/data.hpp"
#include "irts/rng.hpp"

using namespace irts;

TEST_CASE("mask: fixed examples") {
    {
        FiniteIncomplete c{4, {1, 3}, {5, -2}};
        MaskedGrid g = mask(c);
        CHECK(g.values == std::vector<double>{0, 5, 0, -2});
        CHECK(g.mask == std::vector<std::uint8_t>{0, 1, 0, 1});
    }
    {
        FiniteIncomplete c{3, {}, {}};
        MaskedGrid g = mask(c);
        CHECK(g.values == std::vector<double>{0, 0, 0});
        CHECK(g.mask == std::vector<std::uint8_t>{0, 0, 0});
    }
    {
        FiniteIncomplete c{2, {0, 1}, {7, 8}};
        MaskedGrid g = mask(c);
        CHECK(g.values == std::vector<double>{7, 8});
        CHECK(g.mask == std::vector<std::uint8_t>{1, 1});
    }
}

TEST_CASE("mask rejects duplicate indices") {
    FiniteIncomplete c{3, {1, 1}, {2, 3}};
    CHECK_THROWS_AS(mask(c), DataError);
}

TEST_CASE("mask is injective over all cases with n <= 4, values in {-1,1}") {
    // Exhaustively enumerate every finite incomplete case and check distinct
    // cases produce distinct grids, and that the grid matches the sum formula
    // values[t] = sum_i x_i 1{t_i = t} directly.
    std::map<std::pair<std::vector<double>, std::vector<std::uint8_t>>,
             FiniteIncomplete> seen;
    for (std::size_t n = 0; n <= 4; ++n) {
        for (std::uint32_t subset = 0; subset < (1u << n); ++subset) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < n; ++i)
                if (subset & (1u << i)) idx.push_back(i);
            const std::size_t k = idx.size();
            for (std::uint32_t signs = 0; signs < (1u << k); ++signs) {
                std::vector<double> vals(k);
                for (std::size_t i = 0; i < k; ++i)
                    vals[i] = (signs & (1u << i)) ? 1.0 : -1.0;
                FiniteIncomplete c{n, idx, vals};
                MaskedGrid g = mask(c);

                std::vector<double> direct(n, 0.0);
                for (std::size_t i = 0; i < k; ++i)
                    for (std::size_t t = 0; t < n; ++t)
                        if (idx[i] == t) direct[t] += vals[i];
                CHECK(g.values == direct);

                auto key = std::make_pair(g.values, g.mask);
                // Grids of different n have different lengths, so a collision
                // can only happen within the same n; record and compare.
                auto [it, inserted] = seen.emplace(key, c);
                if (!inserted) {
                    CHECK(it->second.n == c.n);
                    CHECK(it->second.indices == c.indices);
                    CHECK(it->second.values == c.values);
                }
                // Round trip back to the sparse form.
                FiniteIncomplete back = unmask(g);
                CHECK(back.n == c.n);
                CHECK(back.indices == c.indices);
                CHECK(back.values == c.values);
            }
        }
    }
}

TEST_CASE("permute: identity, reversal, validation") {
    IncompleteSeries c;
    c.channels = {{{0.1, 1.0}, {0.2, 2.0}, {0.3, 3.0}}, {{0.5, -1.0}}};

    auto id = permute(c, {{0, 1, 2}, {0}});
    CHECK(id.channels[0][0].time == 0.1);
    CHECK(id.channels[0][2].value == 3.0);

    auto rev = permute(c, {{2, 1, 0}, {0}});
    CHECK(rev.channels[0][0].time == 0.3);
    CHECK(rev.channels[0][2].time == 0.1);
    CHECK(rev.fingerprint() == c.fingerprint());

    CHECK_THROWS_AS(permute(c, {{0, 1}, {0}}), DataError);
}

TEST_CASE("fingerprint is order insensitive and content sensitive") {
    IncompleteSeries a;
    a.channels = {{{0.25, 1.5}, {0.75, -0.5}}};
    auto b = permute(a, {{1, 0}});
    CHECK(a.fingerprint() == b.fingerprint());

    IncompleteSeries c = a;
    c.channels[0][0].value = 1.5000001;
    CHECK(c.fingerprint() != a.fingerprint());
}

namespace {

std::string tmp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("dataset round-trip is bit exact") {
    Dataset d;
    d.meta.channels = 2;
    d.meta.seed = 99;
    d.meta.description = "round trip";
    Rng rng(5);
    for (int k = 0; k < 2; ++k) {
        IncompleteSeries c;
        c.channels.resize(2);
        for (int ch = 0; ch < 2; ++ch)
            for (int i = 0; i < 3; ++i)
                c.channels[ch].push_back({rng.uniform(), rng.normal()});
        if (k == 0) c.label = 1;
        c.truth = TruthParams{rng.normal() * 10, rng.uniform() * 10};
        d.cases.push_back(c);
    }
    auto path = tmp_path("irts_roundtrip.jsonl");
    save_dataset(d, path);
    Dataset e = load_dataset(path);

    REQUIRE(e.size() == d.size());
    CHECK(e.meta.channels == 2);
    CHECK(e.meta.seed == 99);
    CHECK(e.meta.description == "round trip");
    for (std::size_t k = 0; k < d.size(); ++k) {
        CHECK(e.cases[k].label == d.cases[k].label);
        REQUIRE(e.cases[k].truth.has_value());
        CHECK(e.cases[k].truth->a == d.cases[k].truth->a);
        CHECK(e.cases[k].truth->b == d.cases[k].truth->b);
        for (std::size_t ch = 0; ch < 2; ++ch)
            for (std::size_t i = 0; i < 3; ++i) {
                CHECK(e.cases[k].channels[ch][i].time == d.cases[k].channels[ch][i].time);
                CHECK(e.cases[k].channels[ch][i].value == d.cases[k].channels[ch][i].value);
            }
    }

    // Save of the loaded copy is byte-identical to the first save.
    auto path2 = tmp_path("irts_roundtrip2.jsonl");
    save_dataset(e, path2);
    CHECK(slurp(path) == slurp(path2));
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("empty dataset keeps its metadata") {
    Dataset d;
    d.meta.channels = 3;
    d.meta.seed = 17;
    auto path = tmp_path("irts_empty.jsonl");
    save_dataset(d, path);
    Dataset e = load_dataset(path);
    CHECK(e.size() == 0);
    CHECK(e.meta.channels == 3);
    CHECK(e.meta.seed == 17);
    std::remove(path.c_str());
}

TEST_CASE("loader rejects out-of-range time with the line number") {
    auto path = tmp_path("irts_badtime.jsonl");
    {
        std::ofstream out(path);
        out << R"({"schema_version":1,"channels":1,"seed":0,"description":""})" << "\n";
        out << R"({"obs":[[0,1.5,2.0]],"label":null,"truth":null})" << "\n";
    }
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("line 2"), DataError);
    std::remove(path.c_str());
}

TEST_CASE("loader rejects a schema version mismatch") {
    auto path = tmp_path("irts_badschema.jsonl");
    {
        std::ofstream out(path);
        out << R"({"schema_version":2,"channels":1,"seed":0,"description":""})" << "\n";
    }
    CHECK_THROWS_AS(load_dataset(path), DataError);
    std::remove(path.c_str());
}

TEST_CASE("loader rejects a channel index beyond the metadata count") {
    auto path = tmp_path("irts_badchan.jsonl");
    {
        std::ofstream out(path);
        out << R"({"schema_version":1,"channels":1,"seed":0,"description":""})" << "\n";
        out << R"({"obs":[[1,0.5,2.0]],"label":null,"truth":null})" << "\n";
    }
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("line 2"), DataError);
    std::remove(path.c_str());
}
