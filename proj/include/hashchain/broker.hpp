#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hashchain/bytes.hpp"

namespace hashchain {

struct Record {
    std::uint64_t offset = 0;
    Bytes payload;
    std::uint64_t produced_at_ms = 0;
};

/// Batch flush condition; at least one of the three triggers must be set.
struct BatchTrigger {
    std::optional<std::size_t> max_count;
    std::optional<std::uint64_t> max_interval_ms;
    std::optional<std::size_t> max_bytes;

    static BatchTrigger by_count(std::size_t n) { return {n, std::nullopt, std::nullopt}; }

    bool configured() const { return max_count || max_interval_ms || max_bytes; }
};

struct FlushDecision {
    bool flushed = false;
    std::vector<Record> batch;
};

using FlushCallback = std::function<void(const std::vector<Record>&, std::uint64_t now_ms)>;

// In-process stand-in for the streaming layer: topic-partitioned,
// offset-ordered, append-only logs with producer batching. One partition
// per topic; total order over records is the replication contract.
class Broker {
public:
    void create_topic(const std::string& name, BatchTrigger trigger = {}) {
        std::lock_guard lock(broker_mutex_);
        if (topics_.contains(name)) throw std::runtime_error("topic already exists: " + name);
        auto topic = std::make_unique<Topic>();
        topic->trigger = trigger;
        topics_.emplace(name, std::move(topic));
    }

    bool has_topic(const std::string& name) const {
        std::lock_guard lock(broker_mutex_);
        return topics_.contains(name);
    }

    void set_trigger(const std::string& name, BatchTrigger trigger) {
        Topic& t = topic(name);
        std::lock_guard lock(t.mutex);
        t.trigger = trigger;
    }

    // The registered builder receives each flushed batch. Callbacks must
    // not publish back into the same topic.
    void register_builder(const std::string& name, FlushCallback callback) {
        Topic& t = topic(name);
        std::lock_guard lock(t.mutex);
        t.on_flush = std::move(callback);
    }

    std::uint64_t publish(const std::string& name, Bytes payload, std::uint64_t now_ms) {
        Topic& t = topic(name);
        std::lock_guard lock(t.mutex);
        Record r;
        r.offset = t.next_offset++;
        r.payload = std::move(payload);
        r.produced_at_ms = now_ms;
        t.log.push_back(r);
        t.buffered.push_back(std::move(r));
        return t.log.back().offset;
    }

    std::vector<Record> poll(const std::string& name, std::uint64_t from_offset) const {
        const Topic& t = topic(name);
        std::lock_guard lock(t.mutex);
        if (from_offset >= t.log.size()) return {};
        return {t.log.begin() + static_cast<std::ptrdiff_t>(from_offset), t.log.end()};
    }

    std::uint64_t end_offset(const std::string& name) const {
        const Topic& t = topic(name);
        std::lock_guard lock(t.mutex);
        return t.next_offset;
    }

    std::size_t buffered_count(const std::string& name) const {
        const Topic& t = topic(name);
        std::lock_guard lock(t.mutex);
        return t.buffered.size();
    }

    // Flush iff buffered count, age of the oldest buffered record, or
    // buffered byte size has reached its configured trigger.
    FlushDecision check_flush(const std::string& name, std::uint64_t now_ms) {
        Topic& t = topic(name);
        FlushDecision decision;
        FlushCallback callback;
        {
            std::lock_guard lock(t.mutex);
            if (!t.trigger.configured())
                throw std::runtime_error("check_flush: topic has no batch trigger: " + name);
            if (t.buffered.empty()) return decision;

            bool fire = false;
            if (t.trigger.max_count && t.buffered.size() >= *t.trigger.max_count) fire = true;
            if (!fire && t.trigger.max_interval_ms &&
                now_ms - t.buffered.front().produced_at_ms >= *t.trigger.max_interval_ms)
                fire = true;
            if (!fire && t.trigger.max_bytes) {
                std::size_t bytes = 0;
                for (const Record& r : t.buffered) bytes += r.payload.size();
                if (bytes >= *t.trigger.max_bytes) fire = true;
            }
            if (!fire) return decision;

            decision.flushed = true;
            if (t.trigger.max_count && t.buffered.size() > *t.trigger.max_count) {
                // count trigger flushes exactly max_count; the rest keeps accumulating
                decision.batch.assign(
                    t.buffered.begin(),
                    t.buffered.begin() + static_cast<std::ptrdiff_t>(*t.trigger.max_count));
                t.buffered.erase(
                    t.buffered.begin(),
                    t.buffered.begin() + static_cast<std::ptrdiff_t>(*t.trigger.max_count));
            } else {
                decision.batch = std::move(t.buffered);
                t.buffered.clear();
            }
            callback = t.on_flush;
        }
        if (callback) callback(decision.batch, now_ms);
        return decision;
    }

    // Drains every batch the triggers allow; used when a burst of
    // publishes may satisfy the count trigger several times over.
    std::size_t drain_flush(const std::string& name, std::uint64_t now_ms) {
        std::size_t flushes = 0;
        while (check_flush(name, now_ms).flushed) ++flushes;
        return flushes;
    }

    std::uint64_t oldest_buffered_at(const std::string& name) const {
        const Topic& t = topic(name);
        std::lock_guard lock(t.mutex);
        if (t.buffered.empty()) throw std::runtime_error("oldest_buffered_at: buffer empty");
        return t.buffered.front().produced_at_ms;
    }

    std::vector<std::string> topic_names() const {
        std::lock_guard lock(broker_mutex_);
        std::vector<std::string> names;
        for (const auto& [name, _] : topics_) names.push_back(name);
        return names;
    }

private:
    struct Topic {
        mutable std::mutex mutex;
        std::vector<Record> log;
        std::vector<Record> buffered;
        std::uint64_t next_offset = 0;
        BatchTrigger trigger;
        FlushCallback on_flush;
    };

    Topic& topic(const std::string& name) {
        std::lock_guard lock(broker_mutex_);
        auto it = topics_.find(name);
        if (it == topics_.end()) throw std::runtime_error("topic not found: " + name);
        return *it->second;
    }
    const Topic& topic(const std::string& name) const {
        std::lock_guard lock(broker_mutex_);
        auto it = topics_.find(name);
        if (it == topics_.end()) throw std::runtime_error("topic not found: " + name);
        return *it->second;
    }

    mutable std::mutex broker_mutex_;
    std::map<std::string, std::unique_ptr<Topic>> topics_;
};

// Newline-delimited debug dump: offset (decimal), produced_at (ms), payload (hex).
inline std::string dump_records(const std::vector<Record>& records) {
    std::ostringstream out;
    for (const Record& r : records)
        out << r.offset << " " << r.produced_at_ms << " " << to_hex(r.payload) << "\n";
    return out.str();
}

inline std::vector<Record> parse_record_dump(const std::string& text) {
    std::vector<Record> records;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        Record r;
        std::string payload_hex;
        if (!(fields >> r.offset >> r.produced_at_ms >> payload_hex))
            throw std::runtime_error("record dump: malformed line: " + line);
        r.payload = from_hex(payload_hex);
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace hashchain
