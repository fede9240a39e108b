/*
 * Copyright 2026 The Operon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "operon/tensor.hpp"

namespace operon::nn {

/// C = A * B for row-major operands.
///
/// Every output element is the sequential sum over k of A(i,k)*B(k,j), each
/// product and sum rounded separately. A row of C therefore depends only on
/// the matching row of A, whatever the number of rows or their position;
/// forward passes rely on this so that evaluating a query subset reproduces
/// the full-grid values bit for bit.
void matmul_rowwise(Eigen::Ref<const RowMatrix> a, Eigen::Ref<const RowMatrix> b, Eigen::Ref<RowMatrix> c);

inline RowMatrix matmul_rowwise(Eigen::Ref<const RowMatrix> a, Eigen::Ref<const RowMatrix> b) {
  RowMatrix c(a.rows(), b.cols());
  matmul_rowwise(a, b, c);
  return c;
}

}  // namespace operon::nn
