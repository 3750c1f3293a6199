// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

namespace thumbseed::linalg {

// C = alpha * op(A) * op(B) + beta * C over row-major buffers, where op(A)
// is M x K and op(B) is K x N.
template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, T alpha,
          const T* a, const T* b, T beta, T* c);

}  // namespace thumbseed::linalg
