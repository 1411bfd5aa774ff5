#include "fspike/tracking.hpp"

#include <algorithm>
#include <atomic>

namespace fspike {

namespace {
thread_local AllocationLedger* active_ledger = nullptr;
std::atomic<std::size_t> live_total{0};
std::atomic<std::size_t> peak_total{0};
} // namespace

void AllocationLedger::on_allocate(AllocCategory cat, std::size_t bytes) {
    auto& s = stats_[static_cast<std::size_t>(cat)];
    ++s.allocations;
    s.bytes_allocated += bytes;
    s.live_bytes += bytes;
    s.peak_live_bytes = std::max(s.peak_live_bytes, s.live_bytes);
}

void AllocationLedger::on_deallocate(AllocCategory cat, std::size_t bytes) {
    auto& s = stats_[static_cast<std::size_t>(cat)];
    // Buffers created before the ledger was installed may be released under it.
    s.live_bytes -= std::min(s.live_bytes, bytes);
}

ScopedLedger::ScopedLedger(AllocationLedger& ledger) : previous_(active_ledger) {
    active_ledger = &ledger;
}

ScopedLedger::~ScopedLedger() { active_ledger = previous_; }

namespace detail {

void record_allocate(AllocCategory cat, std::size_t bytes) noexcept {
    const std::size_t now = live_total.fetch_add(bytes, std::memory_order_relaxed) + bytes;
    std::size_t peak = peak_total.load(std::memory_order_relaxed);
    while (now > peak && !peak_total.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
    }
    if (active_ledger != nullptr) active_ledger->on_allocate(cat, bytes);
}

void record_deallocate(AllocCategory cat, std::size_t bytes) noexcept {
    live_total.fetch_sub(bytes, std::memory_order_relaxed);
    if (active_ledger != nullptr) active_ledger->on_deallocate(cat, bytes);
}

} // namespace detail

std::size_t tracked_live_bytes() noexcept { return live_total.load(std::memory_order_relaxed); }
std::size_t tracked_peak_bytes() noexcept { return peak_total.load(std::memory_order_relaxed); }
void reset_tracked_peak() noexcept { peak_total.store(live_total.load(std::memory_order_relaxed)); }

} // namespace fspike
