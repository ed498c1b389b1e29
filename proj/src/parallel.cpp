#include "mkteq/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mkteq {

Exec default_exec() {
#ifdef _OPENMP
    return Exec::openmp;
#else
    return Exec::serial;
#endif
}

namespace detail {

void par_for_impl(std::int64_t n, Exec mode, void* ctx, void (*body)(void*, std::int64_t)) {
#ifdef _OPENMP
    if (mode == Exec::openmp) {
        // Round-robin chunks: several kernels have triangular per-iteration
        // cost (work shrinking in i), which block scheduling would skew.
#pragma omp parallel for schedule(static, 1)
        for (std::int64_t i = 0; i < n; ++i) {
            body(ctx, i);
        }
        return;
    }
#else
    (void)mode;
#endif
    for (std::int64_t i = 0; i < n; ++i) {
        body(ctx, i);
    }
}

}  // namespace detail
}  // namespace mkteq
