#pragma once

// Runtime-loaded OpenBLAS entry points used by the spectral module.
namespace qtherm::detail {

/// C = op(A) B for column-major n x n A and n x cols B.
void gemm(bool transpose_a, const double* a, int n, const double* b, int cols, double* c);

/// Eigen-decomposition of a column-major symmetric matrix in place (upper
/// triangle); returns the LAPACK info code.
int syevd(int n, double* a, double* w);

}  // namespace qtherm::detail
