#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lbpforest/errors.hpp"
#include "lbpforest/eval.hpp"

namespace lbpf {

struct ManifestRecord {
    std::string path;    // as written in the file (possibly relative)
    int label = kGenuine;
    std::string subject;
    std::string group;   // optional video/clip id; empty = none
    int fold = -1;       // optional; -1 = unassigned
};

/// A dataset list: one image per record. `dir` is the directory the
/// manifest was loaded from; relative record paths resolve against it.
struct DatasetManifest {
    std::vector<ManifestRecord> records;
    std::filesystem::path dir;

    std::size_t size() const { return records.size(); }

    std::filesystem::path resolve(std::size_t i) const {
        const std::filesystem::path p(records[i].path);
        return p.is_absolute() ? p : dir / p;
    }

    std::vector<int> labels() const {
        std::vector<int> out(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) out[i] = records[i].label;
        return out;
    }

    std::vector<std::string> subjects() const {
        std::vector<std::string> out(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) out[i] = records[i].subject;
        return out;
    }

    bool has_folds() const {
        return std::all_of(records.begin(), records.end(),
                           [](const ManifestRecord& r) { return r.fold >= 0; }) &&
               !records.empty();
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (const char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

} // namespace detail

inline constexpr const char* kManifestHeader = "path,label,subject,group,fold";

/// Loads and validates a manifest CSV. Checks are eager: unknown labels,
/// empty subjects, malformed folds, unreadable image paths, and groups that
/// mix labels all fail here rather than mid-pipeline. Fields must not
/// themselves contain commas (paths with commas are not supported).
inline DatasetManifest load_manifest(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw bad_input("cannot open manifest: " + file.string());

    DatasetManifest m;
    m.dir = file.has_parent_path() ? file.parent_path() : std::filesystem::path(".");

    std::string line;
    if (!std::getline(in, line)) throw bad_input("manifest is empty: " + file.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kManifestHeader)
        throw bad_input("manifest header must be exactly '" + std::string(kManifestHeader) +
                        "'");

    std::map<std::string, int> group_label;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        const std::string where = file.string() + ":" + std::to_string(line_no);
        if (fields.size() != 5)
            throw bad_input(where + ": expected 5 comma-separated fields, got " +
                            std::to_string(fields.size()));

        ManifestRecord r;
        r.path = fields[0];
        if (r.path.empty()) throw bad_input(where + ": empty path");

        if (fields[1] == "genuine")
            r.label = kGenuine;
        else if (fields[1] == "spoof")
            r.label = kSpoof;
        else
            throw bad_input(where + ": label must be 'genuine' or 'spoof', got '" +
                            fields[1] + "'");

        r.subject = fields[2];
        if (r.subject.empty()) throw bad_input(where + ": empty subject id");

        r.group = fields[3];
        if (!r.group.empty()) {
            const auto [it, inserted] = group_label.try_emplace(r.group, r.label);
            if (!inserted && it->second != r.label)
                throw bad_input(where + ": group '" + r.group + "' mixes labels");
        }

        if (!fields[4].empty()) {
            std::size_t used = 0;
            int fold = -1;
            try {
                fold = std::stoi(fields[4], &used);
            } catch (const std::exception&) {
                throw bad_input(where + ": fold must be a non-negative integer");
            }
            if (used != fields[4].size() || fold < 0)
                throw bad_input(where + ": fold must be a non-negative integer");
            r.fold = fold;
        }

        m.records.push_back(std::move(r));
    }
    if (m.records.empty()) throw bad_input("manifest has no records: " + file.string());

    for (std::size_t i = 0; i < m.records.size(); ++i) {
        std::error_code ec;
        if (!std::filesystem::exists(m.resolve(i), ec) || ec)
            throw bad_input("manifest references a missing file: " + m.resolve(i).string());
    }
    return m;
}

inline void save_manifest(const DatasetManifest& m, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary); // binary: no platform newline mangling
    if (!out) throw bad_input("cannot write manifest: " + file.string());
    out << kManifestHeader << '\n';
    for (const auto& r : m.records) {
        out << r.path << ',' << (r.label == kGenuine ? "genuine" : "spoof") << ','
            << r.subject << ',' << r.group << ',';
        if (r.fold >= 0) out << r.fold;
        out << '\n';
    }
    if (!out) throw bad_input("failed writing manifest: " + file.string());
}

/// Records with the given fold id (or everything else, inverted).
inline DatasetManifest manifest_subset(const DatasetManifest& m, int fold, bool invert) {
    DatasetManifest out;
    out.dir = m.dir;
    for (const auto& r : m.records)
        if ((r.fold == fold) != invert) out.records.push_back(r);
    return out;
}

} // namespace lbpf
