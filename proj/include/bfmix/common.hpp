// Shared aliases, thread control, deterministic reductions, and the
// allocation accountant used for peak-memory reporting.
#pragma once

#include <atomic>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif
#if defined(__unix__) || defined(__APPLE__)
#include <unistd.h>
#endif

namespace bfmix {

using cplx = std::complex<double>;

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void fft_set_threads(int n);  // defined in fft.hpp

// Sets the OpenMP and FFTW thread counts for all subsequent work.
inline void set_threads(int n) {
    if (n < 1) throw std::invalid_argument("thread count must be >= 1");
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
    fft_set_threads(n);
}

// Deterministic parallel reduction: the index range is cut into a fixed
// number of chunks, each chunk is summed sequentially, and the chunk sums
// are combined in chunk order. The result is identical across runs and
// across thread counts.
template <class F>
double parallel_sum(std::size_t n, F&& term) {
    constexpr std::size_t kChunks = 64;
    double partial[kChunks] = {};
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long c = 0; c < static_cast<long>(kChunks); ++c) {
        const std::size_t lo = n * static_cast<std::size_t>(c) / kChunks;
        const std::size_t hi = n * (static_cast<std::size_t>(c) + 1) / kChunks;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += term(i);
        partial[c] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

// Tracks bytes held by grid fields and basis tables. Used instead of OS RSS
// so memory reports are comparable across platforms.
class MemoryAccountant {
  public:
    static MemoryAccountant& instance() {
        static MemoryAccountant acc;
        return acc;
    }
    void add(std::size_t bytes) {
        const std::size_t cur = current_.fetch_add(bytes) + bytes;
        std::size_t peak = peak_.load();
        while (cur > peak && !peak_.compare_exchange_weak(peak, cur)) {}
    }
    void remove(std::size_t bytes) { current_.fetch_sub(bytes); }
    std::size_t current() const { return current_.load(); }
    std::size_t peak() const { return peak_.load(); }
    void reset_peak() { peak_.store(current_.load()); }

  private:
    std::atomic<std::size_t> current_{0};
    std::atomic<std::size_t> peak_{0};
};

// RAII registration of a tracked allocation.
class TrackedBytes {
  public:
    TrackedBytes() = default;
    explicit TrackedBytes(std::size_t bytes) : bytes_(bytes) {
        MemoryAccountant::instance().add(bytes_);
    }
    TrackedBytes(const TrackedBytes& o) : bytes_(o.bytes_) {
        MemoryAccountant::instance().add(bytes_);
    }
    TrackedBytes(TrackedBytes&& o) noexcept : bytes_(o.bytes_) { o.bytes_ = 0; }
    TrackedBytes& operator=(TrackedBytes o) noexcept {
        std::swap(bytes_, o.bytes_);
        return *this;
    }
    ~TrackedBytes() {
        if (bytes_) MemoryAccountant::instance().remove(bytes_);
    }
    void resize(std::size_t bytes) {
        if (bytes_) MemoryAccountant::instance().remove(bytes_);
        bytes_ = bytes;
        MemoryAccountant::instance().add(bytes_);
    }

  private:
    std::size_t bytes_ = 0;
};

// Detected physical RAM in bytes (0 if unknown).
inline std::size_t detected_ram_bytes() {
#if defined(_SC_PHYS_PAGES) && defined(_SC_PAGESIZE)
    const long pages = sysconf(_SC_PHYS_PAGES);
    const long psize = sysconf(_SC_PAGESIZE);
    if (pages > 0 && psize > 0)
        return static_cast<std::size_t>(pages) * static_cast<std::size_t>(psize);
#endif
    return 0;
}

}  // namespace bfmix
