#pragma once

#include <cstdint>

namespace mkteq {

// Execution mode for the data-parallel kernels. Every parallel loop in the
// library keeps one iteration per output slot, so serial and openmp runs
// produce bitwise identical results; the serial path doubles as the
// reference implementation in tests and benchmarks.
enum class Exec { serial, openmp };

Exec default_exec();

namespace detail {
void par_for_impl(std::int64_t n, Exec mode, void* ctx, void (*body)(void*, std::int64_t));
}

template <class F>
void par_for(std::int64_t n, Exec mode, F&& body) {
    detail::par_for_impl(n, mode, &body, [](void* ctx, std::int64_t i) {
        (*static_cast<F*>(ctx))(i);
    });
}

}  // namespace mkteq
