// Spectral transform contract on top of FFTW.
//
// Normalization convention: the forward transform is unnormalized and the
// inverse carries the 1/N factor, so inverse(forward(f)) == f.
// Plans are created with FFTW_ESTIMATE, which keeps planning deterministic
// and leaves input data untouched.
#pragma once

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "bfmix/grid.hpp"

namespace bfmix {

namespace detail {

class PlanCache {
  public:
    static PlanCache& instance() {
        static PlanCache c;
        return c;
    }

    void set_threads(int n) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (n == threads_) return;
        clear_locked();
        threads_ = n;
    }

    // Executes an in-place transform on `data` for the given grid shape.
    void execute(int nx, int ny, int nz, cplx* data, int sign) {
        fftw_plan plan;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            const Key key{nx, ny, nz, sign};
            auto it = plans_.find(key);
            if (it == plans_.end()) {
#ifdef _OPENMP
                static std::once_flag fftw_threads_once;
                std::call_once(fftw_threads_once, [] { fftw_init_threads(); });
                fftw_plan_with_nthreads(threads_);
#endif
                const std::size_t n = static_cast<std::size_t>(nx) *
                                      static_cast<std::size_t>(ny) *
                                      static_cast<std::size_t>(nz);
                fftw_complex* buf = fftw_alloc_complex(n);
                plan = fftw_plan_dft_3d(nx, ny, nz, buf, buf, sign,
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
                fftw_free(buf);
                plans_.emplace(key, plan);
            } else {
                plan = it->second;
            }
        }
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(data),
                         reinterpret_cast<fftw_complex*>(data));
    }

  private:
    using Key = std::tuple<int, int, int, int>;

    PlanCache() = default;
    ~PlanCache() { clear_locked(); }

    void clear_locked() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
        plans_.clear();
    }

    std::mutex mutex_;
    std::map<Key, fftw_plan> plans_;
    int threads_ = 1;
};

}  // namespace detail

inline void fft_set_threads(int n) { detail::PlanCache::instance().set_threads(n); }

// In-place transforms; exclusive access to the field is required.
inline void forward_transform_inplace(ComplexField3D& f) {
    const Grid3D& g = f.grid();
    detail::PlanCache::instance().execute(g.nx, g.ny, g.nz, f.data(), FFTW_FORWARD);
}

inline void inverse_transform_inplace(ComplexField3D& f) {
    const Grid3D& g = f.grid();
    detail::PlanCache::instance().execute(g.nx, g.ny, g.nz, f.data(), FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(g.size());
    const std::size_t sz = f.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sz); ++i)
        f[static_cast<std::size_t>(i)] *= scale;
}

inline ComplexField3D forward_transform(const ComplexField3D& f) {
    ComplexField3D out = f;
    forward_transform_inplace(out);
    return out;
}

inline ComplexField3D inverse_transform(const ComplexField3D& f) {
    ComplexField3D out = f;
    inverse_transform_inplace(out);
    return out;
}

// k-space quadratic form: sum of weight(k^2) |psi_hat|^2 under the transform
// normalization, equal to the coordinate-space quadrature for weight = 1
// (Parseval). Used for spectral kinetic energies.
template <class W>
double spectral_quadratic_form(const ComplexField3D& psi, W&& weight_of_k2) {
    ComplexField3D hat = forward_transform(psi);
    const Grid3D& g = psi.grid();
    const double scale = g.cell_volume() / static_cast<double>(g.size());
    return scale * parallel_sum(g.size(), [&](std::size_t idx) {
               const std::size_t k = idx % static_cast<std::size_t>(g.nz);
               const std::size_t j =
                   (idx / static_cast<std::size_t>(g.nz)) % static_cast<std::size_t>(g.ny);
               const std::size_t i =
                   idx / (static_cast<std::size_t>(g.nz) * static_cast<std::size_t>(g.ny));
               const double k2 = g.kx[i] * g.kx[i] + g.ky[j] * g.ky[j] + g.kz[k] * g.kz[k];
               return weight_of_k2(k2) * std::norm(hat[idx]);
           });
}

}  // namespace bfmix
