#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <string>
#include <thread>
#include <vector>

#include "mindprint/agent.hpp"
#include "mindprint/battery.hpp"
#include "mindprint/runlog.hpp"

namespace mindprint {

struct RunOptions {
    std::uint64_t seed = 1;
    std::size_t parallelism = 1;
};

inline std::string utc_timestamp_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Administers every battery item to the agent. Items may be probed
// concurrently up to opts.parallelism; each worker writes only its own
// pre-allocated slot, and records come back in battery order, so the log is
// identical whatever the completion order was. Per-item failures become
// error records, never aborts.
inline RunLog administer(const AgentUnderTest& agent, const ProbeBattery& battery,
                         const RunOptions& opts) {
    RunLog log;
    log.conditions.agent_id = agent.agent_id();
    log.conditions.agent_version = agent.agent_version();
    log.conditions.endpoint_config_hash = agent.config_hash();
    log.conditions.battery_id = battery.battery_id;
    log.conditions.battery_version = battery.version;
    log.conditions.timestamp = utc_timestamp_now();
    log.conditions.seed = opts.seed;
    log.conditions.parallelism = opts.parallelism == 0 ? 1 : opts.parallelism;

    const std::size_t n = battery.items.size();
    log.records.resize(n);

    auto probe_one = [&](std::size_t i) {
        try {
            log.records[i] = agent.respond(battery.items[i], opts.seed);
        } catch (const std::exception& e) {
            ResponseRecord rec;
            rec.item_id = battery.items[i].item_id;
            rec.error = e.what();
            log.records[i] = std::move(rec);
        }
    };

    const std::size_t workers = std::min(log.conditions.parallelism, std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) probe_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= n) return;
                    probe_one(i);
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    return log;
}

} // namespace mindprint
