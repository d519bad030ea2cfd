#include "lrfr/kernels.hpp"

#include <cstdlib>
#include <string>

#include "lrfr/errors.hpp"

namespace lrfr::kernels {

#if defined(__x86_64__) || defined(_M_X64)
bool avx2_supported() {
#if defined(LRFR_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}
#endif

namespace {

const Ops* backend_ops(Backend backend) {
    switch (backend) {
        case Backend::scalar:
            return &scalar_ops();
        case Backend::avx2:
#if (defined(__x86_64__) || defined(_M_X64)) && defined(LRFR_AVX2_TU)
            if (avx2_supported()) return &avx2_ops();
#endif
            return nullptr;
        case Backend::neon:
#if defined(__aarch64__)
            return &neon_ops();
#else
            return nullptr;
#endif
    }
    return nullptr;
}

Backend best_backend() {
#if defined(__aarch64__)
    return Backend::neon;
#elif defined(__x86_64__) || defined(_M_X64)
    if (avx2_supported()) return Backend::avx2;
    return Backend::scalar;
#else
    return Backend::scalar;
#endif
}

Backend initial_backend() {
    if (const char* env = std::getenv("LRFR_KERNEL")) {
        const std::string requested(env);
        if (requested == "scalar") return Backend::scalar;
        if (requested == "avx2" && backend_ops(Backend::avx2)) return Backend::avx2;
        if (requested == "neon" && backend_ops(Backend::neon)) return Backend::neon;
        // "auto" or an unsupported request falls through to detection.
    }
    return best_backend();
}

struct Dispatch {
    Backend backend;
    const Ops* ops;
};

Dispatch& dispatch() {
    static Dispatch d = [] {
        const Backend b = initial_backend();
        return Dispatch{b, backend_ops(b) ? backend_ops(b) : &scalar_ops()};
    }();
    return d;
}

} // namespace

const Ops& active() { return *dispatch().ops; }

Backend active_backend() { return dispatch().backend; }

void force_backend(Backend backend) {
    const Ops* ops = backend_ops(backend);
    if (!ops) fail(Errc::InvalidSpec, std::string("kernel backend not available: ") + backend_name(backend));
    dispatch() = Dispatch{backend, ops};
}

const char* backend_name(Backend backend) {
    switch (backend) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "?";
}

} // namespace lrfr::kernels
