#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace msse {

enum class Split { unassigned, train, val, test };
enum class Origin { original, augmented };

std::string to_string(Split s);
std::string to_string(Origin o);
Split split_from_string(const std::string &s);
Origin origin_from_string(const std::string &s);

// One dataset entry. Augmented records reference the manifest index of the
// original they are regenerated from and never exist on disk.
struct ManifestRecord {
    std::string path;
    std::string label;
    Split split = Split::unassigned;
    std::uint64_t phash = 0;
    Origin origin = Origin::original;
    std::int64_t source_id = -1; // index of the source record, -1 for originals
};

struct DatasetManifest {
    std::vector<ManifestRecord> records;

    std::vector<std::string> class_names() const; // sorted unique labels
    std::map<std::string, std::vector<std::size_t>> by_class() const;
    void validate() const; // unique paths, augmented sources resolve
};

// JSONL, one record per line: path,label,split,phash (16 hex),origin,source_id.
void save_manifest(const DatasetManifest &m, const std::string &path);
DatasetManifest load_manifest(const std::string &path);

// Greedy similarity filter in manifest order: a record is retained iff its
// max similarity against every previously retained record is < tau.
struct DedupRejection {
    std::size_t record;      // rejected record index
    std::size_t nearest;     // retained record it collided with
    double similarity;
};

struct DedupResult {
    std::vector<std::size_t> retained;
    std::vector<DedupRejection> rejections;
};

DedupResult dedup_filter(const std::vector<ManifestRecord> &records, double tau);

void save_rejection_log(const std::vector<ManifestRecord> &records, const DedupResult &result,
                        const std::string &path);

// Per-class augmentation counts needed to lift every class to the target.
// Classes at or above the target get zero planned samples.
std::map<std::string, std::size_t> balance_plan(const DatasetManifest &m, std::size_t target);

// Appends the planned augmented records, drawing source originals round-robin
// in manifest order. Record k for a class of n originals sources original k%n.
void apply_balance_plan(DatasetManifest &m, const std::map<std::string, std::size_t> &plan);

} // namespace msse
