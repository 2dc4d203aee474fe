#pragma once

// Small row-major GEMM helpers shared by the dense and GRU kernels. The
// loop orders keep the innermost loop contiguous so the compiler vectorizes
// it; nothing here allocates.

#include <cstddef>

namespace avasd::detail {

// C[M,N] += A[M,K] * B[K,N]
template <typename T>
void gemm_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[K,N] += A[M,K]^T * B[M,N]
template <typename T>
void gemm_at_b_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    const T* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      T* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[M,K] += A[M,N] * B[K,N]^T
template <typename T>
void gemm_a_bt_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * n;
    T* crow = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T* brow = b + p * n;
      T acc = T{0};
      for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
      crow[p] += acc;
    }
  }
}

}  // namespace avasd::detail
