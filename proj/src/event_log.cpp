#include "agentsearch/event_log.hpp"

#include "agentsearch/error.hpp"

#include <array>
#include <fstream>
#include <sstream>

namespace agentsearch {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 6> kKindNames{{
    {EventKind::query, "query"},
    {EventKind::execution, "execution"},
    {EventKind::feedback, "feedback"},
    {EventKind::lifecycle, "lifecycle"},
    {EventKind::snapshot, "snapshot"},
    {EventKind::warning, "warning"},
}};

}  // namespace

std::string_view to_string(EventKind k)
{
    for (const auto& [kind, name] : kKindNames) {
        if (kind == k) {
            return name;
        }
    }
    return "warning";
}

EventKind event_kind_from_string(std::string_view s)
{
    for (const auto& [kind, name] : kKindNames) {
        if (name == s) {
            return kind;
        }
    }
    throw CorruptionError("unknown event kind '" + std::string(s) + "'");
}

const EventLogEntry& EventLog::append(EventKind kind, double t, nlohmann::json payload)
{
    entries_.push_back({entries_.size(), t, kind, std::move(payload)});
    return entries_.back();
}

EventLog EventLog::prefix(std::size_t n) const
{
    EventLog out;
    out.entries_.assign(entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(std::min(n, size())));
    return out;
}

std::string entry_to_line(const EventLogEntry& entry)
{
    nlohmann::json j;
    j["seq"] = entry.seq;
    j["t"] = entry.t;
    j["kind"] = std::string(to_string(entry.kind));
    j["payload"] = entry.payload;
    return j.dump();
}

std::string EventLog::to_ndjson() const
{
    std::ostringstream out;
    write(out);
    return out.str();
}

void EventLog::write(std::ostream& out) const
{
    for (const auto& e : entries_) {
        out << entry_to_line(e) << '\n';
    }
}

void EventLog::save(const std::string& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    write(out);
    if (!out) {
        throw std::runtime_error("failed writing '" + path + "'");
    }
}

EventLog EventLog::parse(std::istream& in)
{
    EventLog log;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw CorruptionError("event log line " + std::to_string(line_no) + ": " + e.what());
        }
        EventLogEntry entry;
        try {
            entry.seq = j.at("seq").get<std::uint64_t>();
            entry.t = j.at("t").get<double>();
            entry.kind = event_kind_from_string(j.at("kind").get<std::string>());
            entry.payload = j.at("payload");
        } catch (const nlohmann::json::exception& e) {
            throw CorruptionError("event log line " + std::to_string(line_no) + ": " + e.what());
        }
        if (entry.seq != log.entries_.size()) {
            throw CorruptionError("event log sequence gap: expected " + std::to_string(log.entries_.size()) +
                                  ", found " + std::to_string(entry.seq) + " on line " + std::to_string(line_no));
        }
        log.entries_.push_back(std::move(entry));
    }
    return log;
}

EventLog EventLog::load(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open event log '" + path + "'");
    }
    return parse(in);
}

}  // namespace agentsearch
