#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bwsq/error.hpp"
#include "bwsq/log.hpp"

namespace bwsq {

// Append-only JSONL journal of rows keyed by Codec::key(row). On open, rows
// are replayed and a later row for a key supersedes an earlier one; a torn
// final line from an interrupted write is dropped. Appends are serialized
// and flushed one line at a time.
//
// Codec provides:
//   using Row = ...;
//   static std::string key(const Row&);
//   static std::string encode(const Row&);          // one line, no '\n'
//   static Row decode(std::string_view line);       // throws SchemaError
template <typename Codec>
class Journal {
public:
    using Row = typename Codec::Row;

    explicit Journal(std::string path) : path_(std::move(path)) { replay(); }

    void put(const Row& row) {
        const auto line = Codec::encode(row) + '\n';
        std::lock_guard lock(mutex_);
        std::FILE* f = std::fopen(path_.c_str(), "ab");
        if (!f) throw Error("cannot append to " + path_);
        const bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size();
        const bool flushed = std::fflush(f) == 0;
        std::fclose(f);
        if (!ok || !flushed) throw Error("short write to " + path_);
        upsert(row);
    }

    std::optional<Row> get(const std::string& key) const {
        std::lock_guard lock(mutex_);
        auto it = index_.find(key);
        if (it == index_.end()) return std::nullopt;
        return rows_[it->second];
    }

    // Current rows, one per key, in order of first appearance.
    std::vector<Row> rows() const {
        std::lock_guard lock(mutex_);
        return rows_;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return rows_.size();
    }

    // Rewrites the file with exactly one line per key.
    void compact() {
        std::lock_guard lock(mutex_);
        const auto tmp = path_ + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw Error("cannot write " + tmp);
            for (const auto& row : rows_) out << Codec::encode(row) << '\n';
            if (!out.flush()) throw Error("short write to " + tmp);
        }
        std::filesystem::rename(tmp, path_);
    }

    const std::string& path() const noexcept { return path_; }

private:
    void upsert(const Row& row) {
        auto key = Codec::key(row);
        if (auto it = index_.find(key); it != index_.end()) {
            rows_[it->second] = row;
        } else {
            index_.emplace(std::move(key), rows_.size());
            rows_.push_back(row);
        }
    }

    void replay() {
        std::ifstream in(path_, std::ios::binary);
        if (!in) return;
        const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        std::size_t pos = 0;
        std::size_t line_no = 0;
        while (pos < content.size()) {
            auto nl = content.find('\n', pos);
            const bool terminated = nl != std::string::npos;
            if (!terminated) nl = content.size();
            const auto line = std::string_view(content).substr(pos, nl - pos);
            pos = nl + 1;
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
            try {
                upsert(Codec::decode(line));
            } catch (const SchemaError& e) {
                if (!terminated) {
                    log::warn("journal.torn_tail", {{"path", path_}, {"line", std::to_string(line_no)}});
                    break;
                }
                throw SchemaError(path_ + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
    }

    std::string path_;
    mutable std::mutex mutex_;
    std::map<std::string, std::size_t> index_;
    std::vector<Row> rows_;
};

}  // namespace bwsq
