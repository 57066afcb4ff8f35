#include "msse/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "msse/phash.hpp"
#include <json.hpp>

namespace msse {

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
        default: return "unassigned";
    }
}

std::string to_string(Origin o) { return o == Origin::original ? "original" : "augmented"; }

Split split_from_string(const std::string &s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    if (s == "unassigned") return Split::unassigned;
    throw std::runtime_error("manifest: unknown split '" + s + "'");
}

Origin origin_from_string(const std::string &s) {
    if (s == "original") return Origin::original;
    if (s == "augmented") return Origin::augmented;
    throw std::runtime_error("manifest: unknown origin '" + s + "'");
}

std::vector<std::string> DatasetManifest::class_names() const {
    std::set<std::string> names;
    for (const auto &r : records) names.insert(r.label);
    return {names.begin(), names.end()};
}

std::map<std::string, std::vector<std::size_t>> DatasetManifest::by_class() const {
    std::map<std::string, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < records.size(); ++i) out[records[i].label].push_back(i);
    return out;
}

void DatasetManifest::validate() const {
    std::set<std::string> paths;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto &r = records[i];
        if (!paths.insert(r.path).second)
            throw std::runtime_error("manifest: duplicate path " + r.path);
        if (r.origin == Origin::augmented) {
            if (r.source_id < 0 || static_cast<std::size_t>(r.source_id) >= records.size())
                throw std::runtime_error("manifest: augmented record " + r.path +
                                         " has no valid source");
            if (records[static_cast<std::size_t>(r.source_id)].origin != Origin::original)
                throw std::runtime_error("manifest: augmented record " + r.path +
                                         " must reference an original");
        }
    }
}

namespace {

std::string hash_hex(std::uint64_t h) {
    static const char *digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

std::uint64_t hash_from_hex(const std::string &s) {
    if (s.size() != 16) throw std::runtime_error("manifest: phash must be 16 hex chars");
    std::uint64_t h = 0;
    for (char c : s) {
        h <<= 4;
        if (c >= '0' && c <= '9') h |= static_cast<std::uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f') h |= static_cast<std::uint64_t>(c - 'a' + 10);
        else if (c >= 'A' && c <= 'F') h |= static_cast<std::uint64_t>(c - 'A' + 10);
        else throw std::runtime_error("manifest: bad phash hex digit");
    }
    return h;
}

} // namespace

void save_manifest(const DatasetManifest &m, const std::string &path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("manifest: cannot open " + path + " for writing");
    for (const auto &r : m.records) {
        nlohmann::ordered_json j;
        j["path"] = r.path;
        j["label"] = r.label;
        j["split"] = to_string(r.split);
        j["phash"] = hash_hex(r.phash);
        j["origin"] = to_string(r.origin);
        j["source_id"] = r.source_id;
        out << j.dump() << "\n";
    }
    if (!out) throw std::runtime_error("manifest: short write to " + path);
}

DatasetManifest load_manifest(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("manifest: cannot open " + path);
    DatasetManifest m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception &e) {
            throw std::runtime_error("manifest: " + path + ":" + std::to_string(lineno) + ": " +
                                     e.what());
        }
        ManifestRecord r;
        r.path = j.at("path").get<std::string>();
        r.label = j.at("label").get<std::string>();
        r.split = split_from_string(j.at("split").get<std::string>());
        r.phash = hash_from_hex(j.at("phash").get<std::string>());
        r.origin = origin_from_string(j.at("origin").get<std::string>());
        r.source_id = j.at("source_id").get<std::int64_t>();
        m.records.push_back(std::move(r));
    }
    m.validate();
    return m;
}

DedupResult dedup_filter(const std::vector<ManifestRecord> &records, double tau) {
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("dedup: tau must be in [0, 1]");
    DedupResult result;
    for (std::size_t i = 0; i < records.size(); ++i) {
        double best_sim = -1.0;
        std::size_t best_idx = 0;
        for (std::size_t kept : result.retained) {
            const double sim = phash_similarity(records[i].phash, records[kept].phash);
            if (sim > best_sim) {
                best_sim = sim;
                best_idx = kept;
            }
        }
        if (result.retained.empty() || best_sim < tau) {
            result.retained.push_back(i);
        } else {
            result.rejections.push_back({i, best_idx, best_sim});
        }
    }
    return result;
}

void save_rejection_log(const std::vector<ManifestRecord> &records, const DedupResult &result,
                        const std::string &path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dedup: cannot open " + path + " for writing");
    out << "rejected,nearest_retained,similarity\n";
    char buf[32];
    for (const auto &rej : result.rejections) {
        std::snprintf(buf, sizeof buf, "%.6f", rej.similarity);
        out << records[rej.record].path << "," << records[rej.nearest].path << "," << buf << "\n";
    }
}

std::map<std::string, std::size_t> balance_plan(const DatasetManifest &m, std::size_t target) {
    std::map<std::string, std::size_t> plan;
    for (const auto &[label, indices] : m.by_class()) {
        if (indices.empty()) throw std::invalid_argument("balance: empty class " + label);
        plan[label] = indices.size() >= target ? 0 : target - indices.size();
    }
    return plan;
}

void apply_balance_plan(DatasetManifest &m, const std::map<std::string, std::size_t> &plan) {
    auto classes = m.by_class();
    for (const auto &[label, want] : plan) {
        auto it = classes.find(label);
        if (it == classes.end()) throw std::invalid_argument("balance: unknown class " + label);
        // only originals are eligible sources
        std::vector<std::size_t> originals;
        for (std::size_t idx : it->second)
            if (m.records[idx].origin == Origin::original) originals.push_back(idx);
        if (originals.empty()) throw std::invalid_argument("balance: class " + label +
                                                           " has no original images");
        for (std::size_t k = 0; k < want; ++k) {
            const std::size_t src = originals[k % originals.size()];
            ManifestRecord r;
            r.path = m.records[src].path + "#aug" + std::to_string(k);
            r.label = label;
            r.split = Split::unassigned;
            r.phash = m.records[src].phash;
            r.origin = Origin::augmented;
            r.source_id = static_cast<std::int64_t>(src);
            m.records.push_back(std::move(r));
        }
    }
}

} // namespace msse
