#pragma once

// Allocation accounting for the buffers that matter to the memory analysis
// of the adjoint pass: parameter-shaped matrices, per-grid-point trajectory
// storage and per-step scratch. Every Buffer reports its allocations to a
// process-wide counter and, when one is installed on the calling thread, to
// a scoped AllocationLedger.

#include <array>
#include <cstddef>
#include <cstdint>
#include <new>
#include <vector>

namespace fspike {

enum class AllocCategory : std::uint8_t { general = 0, parameter, trajectory, scratch };

struct CategoryStats {
    std::size_t allocations = 0;
    std::size_t bytes_allocated = 0;
    std::size_t live_bytes = 0;
    std::size_t peak_live_bytes = 0;
};

class AllocationLedger {
public:
    void on_allocate(AllocCategory cat, std::size_t bytes);
    void on_deallocate(AllocCategory cat, std::size_t bytes);

    const CategoryStats& stats(AllocCategory cat) const {
        return stats_[static_cast<std::size_t>(cat)];
    }

private:
    std::array<CategoryStats, 4> stats_{};
};

// Installs `ledger` for allocations made on this thread until destruction.
class ScopedLedger {
public:
    explicit ScopedLedger(AllocationLedger& ledger);
    ~ScopedLedger();
    ScopedLedger(const ScopedLedger&) = delete;
    ScopedLedger& operator=(const ScopedLedger&) = delete;

private:
    AllocationLedger* previous_;
};

namespace detail {
void record_allocate(AllocCategory cat, std::size_t bytes) noexcept;
void record_deallocate(AllocCategory cat, std::size_t bytes) noexcept;
} // namespace detail

// Process-wide totals over every tracked buffer.
std::size_t tracked_live_bytes() noexcept;
std::size_t tracked_peak_bytes() noexcept;
void reset_tracked_peak() noexcept;

template <class T>
class TrackingAllocator {
public:
    using value_type = T;

    TrackingAllocator() noexcept = default;
    explicit TrackingAllocator(AllocCategory cat) noexcept : category_(cat) {}
    template <class U>
    TrackingAllocator(const TrackingAllocator<U>& other) noexcept : category_(other.category()) {}

    T* allocate(std::size_t n) {
        T* p = std::allocator<T>{}.allocate(n);
        detail::record_allocate(category_, n * sizeof(T));
        return p;
    }
    void deallocate(T* p, std::size_t n) noexcept {
        detail::record_deallocate(category_, n * sizeof(T));
        std::allocator<T>{}.deallocate(p, n);
    }

    AllocCategory category() const noexcept { return category_; }

    template <class U>
    bool operator==(const TrackingAllocator<U>& other) const noexcept {
        return category_ == other.category();
    }

    // Copies keep the source's category.
    using propagate_on_container_copy_assignment = std::true_type;
    using propagate_on_container_move_assignment = std::true_type;
    using propagate_on_container_swap = std::true_type;

private:
    AllocCategory category_ = AllocCategory::general;
};

using Buffer = std::vector<double, TrackingAllocator<double>>;

inline Buffer make_buffer(std::size_t n, AllocCategory cat, double fill = 0.0) {
    return Buffer(n, fill, TrackingAllocator<double>(cat));
}

} // namespace fspike
