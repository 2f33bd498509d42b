#include "irts/data.hpp"

#include <cstring>
#include <fstream>
#include <set>

#include <json.hpp>

namespace irts {

using nlohmann::json;

namespace {

std::uint64_t hash_bits(double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, sizeof u);
    // splitmix64 finalizer
    u += 0x9e3779b97f4a7c15ULL;
    u = (u ^ (u >> 30)) * 0xbf58476d1ce4e5b9ULL;
    u = (u ^ (u >> 27)) * 0x94d049bb133111ebULL;
    return u ^ (u >> 31);
}

}  // namespace

std::uint64_t IncompleteSeries::fingerprint() const {
    std::uint64_t h = 0x12345678abcdef01ULL;
    for (std::size_t c = 0; c < channels.size(); ++c) {
        std::uint64_t hc = 0;  // order-insensitive per channel
        for (const auto& o : channels[c])
            hc += hash_bits(o.time) ^ (hash_bits(o.value) * 0x100000001b3ULL);
        h = h * 0x100000001b3ULL + hc + c;
    }
    return h;
}

MaskedGrid mask(const FiniteIncomplete& c) {
    if (c.indices.size() != c.values.size())
        throw DataError("mask: indices/values length mismatch");
    MaskedGrid g;
    g.values.assign(c.n, 0.0);
    g.mask.assign(c.n, 0);
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < c.indices.size(); ++i) {
        std::size_t t = c.indices[i];
        if (t >= c.n) throw DataError("mask: index " + std::to_string(t) + " out of range");
        if (!seen.insert(t).second)
            throw DataError("mask: duplicate index " + std::to_string(t));
        g.values[t] += c.values[i];
        g.mask[t] = 1;
    }
    return g;
}

FiniteIncomplete unmask(const MaskedGrid& g) {
    if (g.values.size() != g.mask.size()) throw DataError("unmask: length mismatch");
    FiniteIncomplete c;
    c.n = g.values.size();
    for (std::size_t t = 0; t < g.values.size(); ++t)
        if (g.mask[t]) {
            c.indices.push_back(t);
            c.values.push_back(g.values[t]);
        }
    return c;
}

IncompleteSeries permute(const IncompleteSeries& c,
                         const std::vector<std::vector<std::size_t>>& perms) {
    if (perms.size() != c.channels.size())
        throw DataError("permute: wrong number of channel permutations");
    IncompleteSeries out = c;
    for (std::size_t ch = 0; ch < c.channels.size(); ++ch) {
        const auto& perm = perms[ch];
        if (perm.size() != c.channels[ch].size())
            throw DataError("permute: invalid permutation length for channel " +
                            std::to_string(ch));
        std::vector<bool> used(perm.size(), false);
        for (std::size_t i = 0; i < perm.size(); ++i) {
            if (perm[i] >= perm.size() || used[perm[i]])
                throw DataError("permute: not a permutation");
            used[perm[i]] = true;
            out.channels[ch][i] = c.channels[ch][perm[i]];
        }
    }
    return out;
}

void save_dataset(const Dataset& d, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw DataError("save_dataset: cannot open " + path);
    json meta = {{"schema_version", d.meta.schema_version},
                 {"channels", d.meta.channels},
                 {"seed", d.meta.seed},
                 {"description", d.meta.description}};
    os << meta.dump() << "\n";
    for (const auto& cs : d.cases) {
        json obs = json::array();
        for (std::size_t c = 0; c < cs.channels.size(); ++c)
            for (const auto& o : cs.channels[c])
                obs.push_back(json::array({c, o.time, o.value}));
        json rec = {{"obs", std::move(obs)}};
        rec["label"] = cs.label ? json(*cs.label) : json(nullptr);
        rec["truth"] = cs.truth ? json{{"a", cs.truth->a}, {"b", cs.truth->b}}
                                : json(nullptr);
        os << rec.dump() << "\n";
    }
    if (!os) throw DataError("save_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("load_dataset: cannot open " + path);
    Dataset d;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(is, line)) throw DataError("load_dataset: empty file " + path);
    ++lineno;
    json meta;
    try {
        meta = json::parse(line);
    } catch (const json::exception& e) {
        throw DataError("load_dataset: malformed metadata at line 1: " + std::string(e.what()));
    }
    d.meta.schema_version = meta.at("schema_version").get<int>();
    if (d.meta.schema_version != 1)
        throw DataError("load_dataset: unsupported schema_version " +
                        std::to_string(d.meta.schema_version));
    d.meta.channels = meta.at("channels").get<std::size_t>();
    d.meta.seed = meta.value("seed", std::uint64_t(0));
    d.meta.description = meta.value("description", std::string());

    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("load_dataset: malformed record at line " +
                            std::to_string(lineno) + ": " + e.what());
        }
        IncompleteSeries cs;
        cs.channels.resize(d.meta.channels);
        for (const auto& o : rec.at("obs")) {
            std::size_t c = o.at(0).get<std::size_t>();
            double t = o.at(1).get<double>();
            double v = o.at(2).get<double>();
            if (c >= d.meta.channels)
                throw DataError("load_dataset: line " + std::to_string(lineno) +
                                ": channel " + std::to_string(c) + " out of range");
            if (!(t >= 0.0 && t <= 1.0))
                throw DataError("load_dataset: line " + std::to_string(lineno) +
                                ": time " + std::to_string(t) + " outside [0,1]");
            cs.channels[c].push_back({t, v});
        }
        if (rec.contains("label") && !rec["label"].is_null())
            cs.label = rec["label"].get<int>();
        if (rec.contains("truth") && !rec["truth"].is_null())
            cs.truth = TruthParams{rec["truth"].at("a").get<double>(),
                                   rec["truth"].at("b").get<double>()};
        d.cases.push_back(std::move(cs));
    }
    return d;
}

}  // namespace irts
