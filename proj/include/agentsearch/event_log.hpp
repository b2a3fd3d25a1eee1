#pragma once

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace agentsearch {

enum class EventKind { query, execution, feedback, lifecycle, snapshot, warning };

std::string_view to_string(EventKind k);
/// Throws CorruptionError on an unknown kind.
EventKind event_kind_from_string(std::string_view s);

struct EventLogEntry {
    std::uint64_t seq = 0;
    /// Logical time: the index of the query being processed.
    double t = 0.0;
    EventKind kind = EventKind::warning;
    nlohmann::json payload;
};

/// Append-only, newline-delimited event log. Sequence numbers start at 0 and
/// have no gaps.
class EventLog {
public:
    const EventLogEntry& append(EventKind kind, double t, nlohmann::json payload);

    const std::vector<EventLogEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    /// Copy holding the first `n` entries.
    EventLog prefix(std::size_t n) const;

    std::string to_ndjson() const;
    void write(std::ostream& out) const;
    void save(const std::string& path) const;

    /// Throws CorruptionError on malformed lines, unknown kinds, or sequence
    /// numbers that do not run 0, 1, 2, ...
    static EventLog parse(std::istream& in);
    static EventLog load(const std::string& path);

private:
    std::vector<EventLogEntry> entries_;
};

std::string entry_to_line(const EventLogEntry& entry);

}  // namespace agentsearch
