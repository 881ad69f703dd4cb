/*
 * Copyright 2026 The qrewrite Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qrw {

using Index = Eigen::Index;

// Row-major dense storage; sequences are stored one position per row.
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

// An (n x h) sequence of vectors in the shared question/paragraph space.
template <typename Scalar>
using EmbeddingSeq = Mat<Scalar>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VocabMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TrainingDiverged : public NumericError {
 public:
  using NumericError::NumericError;
};

// 64-bit FNV-1a, used for content hashes of tensors and vocabularies.
class Fnv1a {
 public:
  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  void update(const std::string& s) {
    const std::uint64_t n = s.size();
    update(&n, sizeof(n));
    update(s.data(), s.size());
  }
  template <typename Scalar>
  void update(const Mat<Scalar>& m) {
    const std::int64_t dims[2] = {m.rows(), m.cols()};
    update(dims, sizeof(dims));
    update(m.data(), sizeof(Scalar) * static_cast<std::size_t>(m.size()));
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace qrw
