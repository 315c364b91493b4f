// vc/base/common.h

// Copyright 2026  seqvc authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VC_BASE_COMMON_H_
#define VC_BASE_COMMON_H_

#include <Eigen/Dense>

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vc {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Matf = Mat<float>;
using Matd = Mat<double>;
using Vecf = Vec<float>;
using Vecd = Vec<double>;

// Scalar type used by the production pipeline.  Tests instantiate the
// templated stack with double where tighter precision is needed.
using Real = float;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

namespace internal {
inline std::string MakeMessage(const char *file, int line, const std::string &what) {
  std::ostringstream os;
  os << file << ":" << line << ": " << what;
  return os.str();
}
}  // namespace internal

#define VC_CHECK(cond, msg)                                                   \
  do {                                                                        \
    if (!(cond)) {                                                            \
      std::ostringstream vc_check_os_;                                        \
      vc_check_os_ << msg;                                                    \
      throw ::vc::Error(                                                      \
          ::vc::internal::MakeMessage(__FILE__, __LINE__, vc_check_os_.str())); \
    }                                                                         \
  } while (0)

#define VC_ERROR(msg)                                                         \
  do {                                                                        \
    std::ostringstream vc_err_os_;                                            \
    vc_err_os_ << msg;                                                        \
    throw ::vc::Error(                                                        \
        ::vc::internal::MakeMessage(__FILE__, __LINE__, vc_err_os_.str()));   \
  } while (0)

inline int CeilDiv(int a, int b) { return (a + b - 1) / b; }

}  // namespace vc

#endif  // VC_BASE_COMMON_H_
