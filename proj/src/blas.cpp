#include "blas.hpp"

#include <dlfcn.h>

#include <cmath>
#include <cstdlib>
#include <mutex>
#include <string>
#include <vector>

#include "qtherm/errors.hpp"

#ifndef QTHERM_OPENBLAS_PATH
#define QTHERM_OPENBLAS_PATH "libopenblas.so.0"
#endif

namespace qtherm::detail {

namespace {

// cblas_dgemm with the CBLAS enums passed as ints.
using GemmFn = void (*)(int, int, int, int, int, int, double, const double*, int, const double*, int, double,
                        double*, int);
using SyevdFn = void (*)(const char*, const char*, const int*, double*, const int*, double*, double*, const int*,
                         int*, const int*, int*, std::size_t, std::size_t);

constexpr int kColMajor = 102, kNoTrans = 111, kTrans = 112;

struct Blas {
    GemmFn gemm = nullptr;
    SyevdFn syevd = nullptr;
};

void* open_library() {
    for (const char* name : {QTHERM_OPENBLAS_PATH, "libopenblas.so.0", "libopenblas.so"})
        if (void* h = dlopen(name, RTLD_NOW | RTLD_LOCAL)) return h;
    throw NumericError(std::string("cannot load OpenBLAS: ") + dlerror());
}

// Products of small integer matrices are exact in double precision, so any
// discrepancy means the selected kernel is broken.
void self_test(const Blas& b) {
    const int n = 320, cols = 48;
    std::vector<double> a(n * n), x(n * cols), c(n * cols);
    for (int i = 0; i < n * n; ++i) a[i] = (i * 7 + 3) % 11 - 5;
    for (int i = 0; i < n * cols; ++i) x[i] = (i * 5 + 1) % 9 - 4;
    for (const bool trans : {false, true}) {
        b.gemm(kColMajor, trans ? kTrans : kNoTrans, kNoTrans, n, cols, n, 1.0, a.data(), n, x.data(), n, 0.0,
               c.data(), n);
        for (int j = 0; j < cols; ++j)
            for (int i = 0; i < n; ++i) {
                double ref = 0;
                for (int k = 0; k < n; ++k) ref += (trans ? a[i * n + k] : a[k * n + i]) * x[j * n + k];
                if (c[j * n + i] != ref)
                    throw NumericError("OpenBLAS self-test failed; set OPENBLAS_CORETYPE to a working kernel");
            }
    }
}

const Blas& blas() {
    static Blas b;
    static std::once_flag once;
    std::call_once(once, [] {
        // OpenBLAS 0.3.20 mis-computes dgemm with its Cooperlake kernels on
        // some AVX-512 parts; the SkylakeX kernels are identical for double
        // precision and correct. A user-set core type always wins.
        if (!std::getenv("OPENBLAS_CORETYPE") && __builtin_cpu_supports("avx512f"))
            setenv("OPENBLAS_CORETYPE", "SkylakeX", 0);
        void* h = open_library();
        b.gemm = reinterpret_cast<GemmFn>(dlsym(h, "cblas_dgemm"));
        b.syevd = reinterpret_cast<SyevdFn>(dlsym(h, "dsyevd_"));
        if (!b.gemm || !b.syevd) throw NumericError("OpenBLAS lacks cblas_dgemm or dsyevd_");
        self_test(b);
    });
    return b;
}

}  // namespace

void gemm(bool transpose_a, const double* a, int n, const double* b, int cols, double* c) {
    blas().gemm(kColMajor, transpose_a ? kTrans : kNoTrans, kNoTrans, n, cols, n, 1.0, a, n, b, n, 0.0, c, n);
}

int syevd(int n, double* a, double* w) {
    const auto fn = blas().syevd;
    int info = 0, lwork = -1, liwork = -1, iwork_query = 0;
    double work_query = 0;
    fn("V", "U", &n, a, &n, w, &work_query, &lwork, &iwork_query, &liwork, &info, 1, 1);
    if (info != 0) return info;
    lwork = static_cast<int>(work_query);
    liwork = iwork_query;
    std::vector<double> work(static_cast<std::size_t>(lwork));
    std::vector<int> iwork(static_cast<std::size_t>(liwork));
    fn("V", "U", &n, a, &n, w, work.data(), &lwork, iwork.data(), &liwork, &info, 1, 1);
    return info;
}

}  // namespace qtherm::detail
