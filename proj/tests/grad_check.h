// tests/grad_check.h

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

#ifndef TESTS_GRAD_CHECK_H_
#define TESTS_GRAD_CHECK_H_

#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "vc/ad/graph.h"

namespace vc {
namespace test {

using Td = ad::Tensor<double>;
using BuildFn = std::function<ad::Node<double> *(ad::Tape<double> &)>;

// Central-difference check of d(build)/d(p) for every tensor in params.
// `build` must be a pure function of the tensor values.
inline void CheckGrads(const std::vector<Td *> &params, const BuildFn &build,
                       double tol = 1e-6) {
  ad::Tape<double> tape(true);
  ad::Node<double> *loss = build(tape);
  REQUIRE(loss->val.size() == 1);
  for (Td *p : params) p->ZeroGrad();
  tape.Backward(loss);
  const double h = 1e-5;
  for (Td *p : params) {
    for (int i = 0; i < p->value.rows(); ++i) {
      for (int j = 0; j < p->value.cols(); ++j) {
        double orig = p->value(i, j);
        p->value(i, j) = orig + h;
        ad::Tape<double> tp(false);
        double fp = build(tp)->val(0, 0);
        p->value(i, j) = orig - h;
        ad::Tape<double> tm(false);
        double fm = build(tm)->val(0, 0);
        p->value(i, j) = orig;
        double fd = (fp - fm) / (2.0 * h);
        double an = p->grad(i, j);
        double scale = std::max({1.0, std::abs(fd), std::abs(an)});
        INFO("tensor ", p->name, " entry (", i, ",", j, ") fd=", fd,
             " analytic=", an);
        CHECK(std::abs(fd - an) <= tol * scale);
      }
    }
  }
}

}  // namespace test
}  // namespace vc

#endif  // TESTS_GRAD_CHECK_H_
