// tests/test_ad.cc

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <vector>

#include "grad_check.h"
#include "vc/ad/graph.h"
#include "vc/ad/ops.h"
#include "vc/base/rng.h"

using vc::Mat;
using vc::Vec;
using vc::ad::Node;
using vc::ad::Tape;
using vc::ad::Tensor;
using vc::test::CheckGrads;

namespace {

using Td = Tensor<double>;

Mat<double> RandMat(int r, int c, uint64_t salt) {
  std::mt19937_64 rng = vc::MakeRng(7, vc::kStreamTest, salt);
  return vc::RandomNormal<double>(rng, r, c, 1.0);
}

Mat<double> RandWeights(int r, int c, uint64_t salt) {
  std::mt19937_64 rng = vc::MakeRng(11, vc::kStreamTest, salt);
  return vc::RandomNormal<double>(rng, r, c, 1.0);
}

}  // namespace

TEST_CASE("matmul value and gradient") {
  Td a("a", RandMat(3, 4, 1)), b("b", RandMat(4, 2, 2));
  Mat<double> w = RandWeights(3, 2, 3);
  Tape<double> t(false);
  Node<double> *m = MatMul(t, t.Param(a), t.Param(b));
  Mat<double> want = a.value * b.value;
  CHECK((m->val - want).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CheckGrads({&a, &b}, [&](Tape<double> &tp) {
    return WeightedSum(tp, MatMul(tp, tp.Param(a), tp.Param(b)), w);
  });
}

TEST_CASE("affine gradient") {
  Td x("x", RandMat(5, 3, 4)), w("w", RandMat(3, 4, 5)), b("b", RandMat(1, 4, 6));
  Mat<double> ww = RandWeights(5, 4, 7);
  CheckGrads({&x, &w, &b}, [&](Tape<double> &tp) {
    return WeightedSum(tp, Affine(tp, tp.Param(x), tp.Param(w), tp.Param(b)), ww);
  });
}

TEST_CASE("add sub cmul scale gradients") {
  Td a("a", RandMat(4, 3, 8)), b("b", RandMat(4, 3, 9));
  Mat<double> w = RandWeights(4, 3, 10);
  CheckGrads({&a, &b}, [&](Tape<double> &tp) {
    Node<double> *na = tp.Param(a), *nb = tp.Param(b);
    Node<double> *y = Add(tp, CMul(tp, na, nb), Sub(tp, na, nb));
    return WeightedSum(tp, Scale(tp, y, 0.7, -0.3), w);
  });
}

TEST_CASE("linear combine reuses a node") {
  Td a("a", RandMat(2, 3, 11));
  Mat<double> w = RandWeights(2, 3, 12);
  CheckGrads({&a}, [&](Tape<double> &tp) {
    Node<double> *na = tp.Param(a);
    Node<double> *y = LinearCombine(tp, {na, na, Square(tp, na)}, {0.5, 1.5, 2.0});
    return WeightedSum(tp, y, w);
  });
}

TEST_CASE("scale rows by constant vector") {
  Td a("a", RandMat(4, 2, 13));
  Vec<double> m(4);
  m << 1.0, 0.0, -2.0, 0.5;
  Mat<double> w = RandWeights(4, 2, 14);
  CheckGrads({&a}, [&](Tape<double> &tp) {
    return WeightedSum(tp, ScaleRowsConst(tp, tp.Param(a), m), w);
  });
}

TEST_CASE("elementwise nonlinearity gradients") {
  Mat<double> base = RandMat(4, 5, 15);
  // Push entries away from the relu/abs kinks.
  for (int i = 0; i < base.rows(); ++i)
    for (int j = 0; j < base.cols(); ++j)
      base(i, j) += (base(i, j) >= 0 ? 0.1 : -0.1);
  Td x("x", base);
  Mat<double> w = RandWeights(4, 5, 16);
  CheckGrads({&x}, [&](Tape<double> &tp) {
    Node<double> *n = tp.Param(x);
    Node<double> *y = Tanh(tp, n);
    y = Add(tp, y, Sigmoid(tp, n));
    y = Add(tp, y, Relu(tp, n));
    y = Add(tp, y, LeakyRelu(tp, n, 0.2));
    y = Add(tp, y, Square(tp, n));
    y = Add(tp, y, Abs(tp, n));
    return WeightedSum(tp, y, w);
  });
}

TEST_CASE("sum all gradient") {
  Td x("x", RandMat(3, 3, 17));
  CheckGrads({&x}, [&](Tape<double> &tp) { return SumAll(tp, tp.Param(x)); });
}

TEST_CASE("concat and slice gradients") {
  Td a("a", RandMat(3, 2, 18)), b("b", RandMat(3, 4, 19)), c("c", RandMat(3, 1, 20));
  Mat<double> w = RandWeights(3, 5, 21);
  CheckGrads({&a, &b, &c}, [&](Tape<double> &tp) {
    Node<double> *cat =
        ConcatCols3(tp, tp.Param(a), tp.Param(b), tp.Param(c));
    Node<double> *s = SliceCols(tp, cat, 1, 5);
    return WeightedSum(tp, s, w);
  });
  Mat<double> w2 = RandWeights(2, 2, 22);
  CheckGrads({&b}, [&](Tape<double> &tp) {
    return WeightedSum(tp, SliceCols(tp, SliceRows(tp, tp.Param(b), 1, 2), 1, 2),
                       w2);
  });
}

TEST_CASE("vstack and select rows gradients") {
  Td a("a", RandMat(2, 3, 23)), b("b", RandMat(3, 3, 24));
  Mat<double> w = RandWeights(5, 3, 25);
  CheckGrads({&a, &b}, [&](Tape<double> &tp) {
    return WeightedSum(tp, VStack(tp, {tp.Param(a), tp.Param(b)}), w);
  });
  std::vector<int> idx = {2, 0, 2, 1};
  Mat<double> w2 = RandWeights(4, 3, 26);
  CheckGrads({&b}, [&](Tape<double> &tp) {
    return WeightedSum(tp, SelectRows(tp, tp.Param(b), idx), w2);
  });
}

TEST_CASE("split row chunks round trip") {
  Td x("x", RandMat(3, 6, 27));
  Tape<double> t(false);
  Node<double> *y = SplitRowChunks(t, t.Param(x), 2);
  CHECK(y->Rows() == 6);
  CHECK(y->Cols() == 3);
  CHECK(y->val(0, 0) == x.value(0, 0));
  CHECK(y->val(1, 0) == x.value(0, 3));
  CHECK(y->val(2, 2) == x.value(1, 2));
  Mat<double> w = RandWeights(6, 3, 28);
  CheckGrads({&x}, [&](Tape<double> &tp) {
    return WeightedSum(tp, SplitRowChunks(tp, tp.Param(x), 2), w);
  });
}

TEST_CASE("col to align and repeat rows gradients") {
  Td x("x", RandMat(6, 1, 29)), q("q", RandMat(2, 3, 30));
  Mat<double> w = RandWeights(2, 3, 31);
  CheckGrads({&x}, [&](Tape<double> &tp) {
    return WeightedSum(tp, ColToAlign(tp, tp.Param(x), 2, 3), w);
  });
  Mat<double> w2 = RandWeights(8, 3, 32);
  CheckGrads({&q}, [&](Tape<double> &tp) {
    return WeightedSum(tp, RepeatRowsUniform(tp, tp.Param(q), 4), w2);
  });
  std::vector<int> lens = {2, 3};
  Mat<double> w3 = RandWeights(5, 3, 33);
  CheckGrads({&q}, [&](Tape<double> &tp) {
    return WeightedSum(tp, RepeatRowsSeg(tp, tp.Param(q), lens), w3);
  });
}

TEST_CASE("softmax rows is a distribution and differentiates") {
  Td x("x", RandMat(3, 5, 34));
  Tape<double> t(false);
  Node<double> *y = SoftmaxRows(t, t.Param(x));
  for (int i = 0; i < 3; ++i)
    CHECK(y->val.row(i).sum() == doctest::Approx(1.0));
  Mat<double> w = RandWeights(3, 5, 35);
  CheckGrads({&x}, [&](Tape<double> &tp) {
    return WeightedSum(tp, SoftmaxRows(tp, tp.Param(x)), w);
  });
}

TEST_CASE("masked softmax zeroes masked entries") {
  Td x("x", RandMat(2, 4, 36));
  Mat<double> mask(2, 4);
  mask << 1, 1, 0, 1, 0, 1, 1, 0;
  Tape<double> t(false);
  Node<double> *y = SoftmaxRows(t, t.Param(x), mask);
  CHECK(y->val(0, 2) == 0.0);
  CHECK(y->val(1, 0) == 0.0);
  CHECK(y->val(1, 3) == 0.0);
  CHECK(y->val.row(0).sum() == doctest::Approx(1.0));
  CHECK(y->val.row(1).sum() == doctest::Approx(1.0));
  Mat<double> w = RandWeights(2, 4, 37);
  CheckGrads({&x}, [&](Tape<double> &tp) {
    return WeightedSum(tp, SoftmaxRows(tp, tp.Param(x), mask), w);
  });
}

TEST_CASE("normalize rows gradient") {
  Mat<double> base = RandMat(3, 4, 38).cwiseAbs();
  Td x("x", base);
  Mat<double> w = RandWeights(3, 4, 39);
  CheckGrads({&x}, [&](Tape<double> &tp) {
    return WeightedSum(tp, NormalizeRows(tp, tp.Param(x), 1e-6), w);
  });
}

TEST_CASE("l2 normalize rows gives unit rows and differentiates") {
  Td x("x", RandMat(4, 3, 40));
  Tape<double> t(false);
  Node<double> *y = L2NormalizeRows(t, t.Param(x));
  for (int i = 0; i < 4; ++i)
    CHECK(y->val.row(i).norm() == doctest::Approx(1.0));
  Mat<double> w = RandWeights(4, 3, 41);
  CheckGrads({&x}, [&](Tape<double> &tp) {
    return WeightedSum(tp, L2NormalizeRows(tp, tp.Param(x)), w);
  });
}

TEST_CASE("shift cols right") {
  Td x("x", RandMat(2, 4, 42));
  Tape<double> t(false);
  Node<double> *y = ShiftColsRight(t, t.Param(x));
  CHECK(y->val(0, 0) == 0.0);
  CHECK(y->val(0, 1) == x.value(0, 0));
  CHECK(y->val(1, 3) == x.value(1, 2));
  Mat<double> w = RandWeights(2, 4, 43);
  CheckGrads({&x}, [&](Tape<double> &tp) {
    return WeightedSum(tp, ShiftColsRight(tp, tp.Param(x)), w);
  });
}

TEST_CASE("dropout determinism and gradient") {
  Td x("x", RandMat(6, 5, 44));
  Mat<double> w = RandWeights(6, 5, 45);
  Tape<double> t1(false), t2(false);
  std::mt19937_64 r1 = vc::MakeRng(3, vc::kStreamDropout, 0);
  std::mt19937_64 r2 = vc::MakeRng(3, vc::kStreamDropout, 0);
  Node<double> *y1 = Dropout(t1, t1.Param(x), 0.4, &r1, true);
  Node<double> *y2 = Dropout(t2, t2.Param(x), 0.4, &r2, true);
  CHECK((y1->val - y2->val).cwiseAbs().maxCoeff() == 0.0);
  bool saw_zero = false;
  for (int i = 0; i < y1->val.size(); ++i)
    if (y1->val(i) == 0.0 && x.value(i) != 0.0) saw_zero = true;
  CHECK(saw_zero);
  Tape<double> t3(false);
  Node<double> *xin = t3.Param(x);
  CHECK(Dropout(t3, xin, 0.4, &r1, false) == xin);
  CheckGrads({&x}, [&](Tape<double> &tp) {
    std::mt19937_64 rd = vc::MakeRng(3, vc::kStreamDropout, 1);
    return WeightedSum(tp, Dropout(tp, tp.Param(x), 0.3, &rd, true), w);
  });
}

TEST_CASE("detach blocks gradient flow") {
  Td x("x", RandMat(2, 2, 46));
  Tape<double> t(true);
  Node<double> *n = t.Param(x);
  Node<double> *loss = SumAll(t, CMul(t, Detach(t, n), n));
  x.ZeroGrad();
  t.Backward(loss);
  CHECK((x.grad - x.value).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("batchnorm training mode gradient and stats") {
  Td x("x", RandMat(6, 3, 47)), g("g", RandMat(1, 3, 48).cwiseAbs()),
      b("b", RandMat(1, 3, 49));
  Mat<double> w = RandWeights(6, 3, 50);
  CheckGrads({&x, &g, &b}, [&](Tape<double> &tp) {
    return WeightedSum(
        tp, BatchNorm<double>(tp, tp.Param(x), tp.Param(g), tp.Param(b),
                              nullptr, nullptr, true, 0.1, 1e-5),
        w);
  }, 2e-6);

  Mat<double> rm = Mat<double>::Zero(1, 3), rv = Mat<double>::Ones(1, 3);
  Tape<double> t(false);
  BatchNorm<double>(t, t.Param(x), t.Param(g), t.Param(b), &rm, &rv, true, 0.1,
                    1e-5);
  Vec<double> mu = x.value.colwise().mean().transpose();
  Mat<double> cen = x.value.rowwise() - mu.transpose();
  Vec<double> var = cen.array().square().colwise().mean().transpose();
  CHECK((rm.row(0).transpose() - 0.1 * mu).cwiseAbs().maxCoeff() ==
        doctest::Approx(0.0));
  CHECK((rv.row(0).transpose() - (0.9 * Vec<double>::Ones(3) + 0.1 * var))
            .cwiseAbs()
            .maxCoeff() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("batchnorm eval mode uses running stats") {
  Td x("x", RandMat(4, 2, 51)), g("g", Mat<double>::Ones(1, 2)),
      b("b", Mat<double>::Zero(1, 2));
  Mat<double> rm = Mat<double>::Zero(1, 2), rv = Mat<double>::Ones(1, 2);
  Tape<double> t(false);
  Node<double> *y = BatchNorm<double>(t, t.Param(x), t.Param(g), t.Param(b),
                                      &rm, &rv, false, 0.1, 0.0);
  CHECK((y->val - x.value).cwiseAbs().maxCoeff() < 1e-12);
  Mat<double> w = RandWeights(4, 2, 52);
  CheckGrads({&x, &g, &b}, [&](Tape<double> &tp) {
    return WeightedSum(
        tp, BatchNorm<double>(tp, tp.Param(x), tp.Param(g), tp.Param(b),
                              &rm, &rv, false, 0.1, 0.0),
        w);
  });
}

TEST_CASE("unfold makes a same convolution with segment boundaries") {
  std::vector<int> lens = {4, 3};
  Td x("x", RandMat(7, 2, 53)), k("k", RandMat(6, 3, 54)), b("b", RandMat(1, 3, 55));
  Tape<double> t(false);
  Node<double> *u = Unfold1dSeg(t, t.Param(x), lens, 3);
  CHECK(u->Rows() == 7);
  CHECK(u->Cols() == 6);
  // First frame of each segment has a zero left tap.
  CHECK(u->val.block(0, 0, 1, 2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(u->val.block(4, 0, 1, 2).cwiseAbs().maxCoeff() == 0.0);
  // Last frame of each segment has a zero right tap.
  CHECK(u->val.block(3, 4, 1, 2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(u->val.block(6, 4, 1, 2).cwiseAbs().maxCoeff() == 0.0);
  Mat<double> w = RandWeights(7, 3, 56);
  CheckGrads({&x, &k, &b}, [&](Tape<double> &tp) {
    Node<double> *uu = Unfold1dSeg(tp, tp.Param(x), lens, 3);
    return WeightedSum(tp, Affine(tp, uu, tp.Param(k), tp.Param(b)), w);
  });
}

TEST_CASE("unfold never mixes segments") {
  std::vector<int> lens = {2, 2};
  Mat<double> xv(4, 1);
  xv << 1, 2, 100, 200;
  Td x("x", xv);
  Tape<double> t(false);
  Node<double> *u = Unfold1dSeg(t, t.Param(x), lens, 3);
  // Row 1 (end of segment 0) must not see 100 from segment 1.
  CHECK(u->val(1, 2) == 0.0);
  // Row 2 (start of segment 1) must not see 2 from segment 0.
  CHECK(u->val(2, 0) == 0.0);
}

TEST_CASE("conv rows gradient") {
  Td a("a", RandMat(2, 5, 57)), k("k", RandMat(3, 2, 58));
  Mat<double> w = RandWeights(10, 2, 59);
  CheckGrads({&a, &k}, [&](Tape<double> &tp) {
    return WeightedSum(tp, ConvRows(tp, tp.Param(a), tp.Param(k)), w);
  });
}

TEST_CASE("rows at step and seg from steps gradients") {
  std::vector<int> lens = {3, 1};
  Td seg("seg", RandMat(4, 2, 60));
  Mat<double> w = RandWeights(2, 2, 61);
  CheckGrads({&seg}, [&](Tape<double> &tp) {
    Node<double> *r0 = RowsAtStep(tp, tp.Param(seg), lens, 0);
    Node<double> *r2 = RowsAtStep(tp, tp.Param(seg), lens, 2);
    return WeightedSum(tp, Add(tp, r0, r2), w);
  });
  // Step 2 is beyond the second segment, so its row is zero.
  Tape<double> t(false);
  Node<double> *r2 = RowsAtStep(t, t.Param(seg), lens, 2);
  CHECK(r2->val.row(1).cwiseAbs().maxCoeff() == 0.0);

  Td s0("s0", RandMat(2, 3, 62)), s1("s1", RandMat(2, 3, 63)),
      s2("s2", RandMat(2, 3, 64));
  Mat<double> w2 = RandWeights(4, 3, 65);
  CheckGrads({&s0, &s1, &s2}, [&](Tape<double> &tp) {
    std::vector<Node<double> *> steps = {tp.Param(s0), tp.Param(s1),
                                         tp.Param(s2)};
    return WeightedSum(tp, SegFromSteps(tp, steps, lens), w2);
  });
}

TEST_CASE("stack step rows and time major gradients") {
  Td s0("s0", RandMat(2, 3, 66)), s1("s1", RandMat(2, 3, 67));
  Mat<double> w = RandWeights(2, 3, 68);
  CheckGrads({&s0, &s1}, [&](Tape<double> &tp) {
    std::vector<Node<double> *> steps = {tp.Param(s0), tp.Param(s1)};
    return WeightedSum(tp, StackStepRows(tp, steps, 1, 2), w);
  });
  Mat<double> w2 = RandWeights(4, 3, 69);
  CheckGrads({&s0, &s1}, [&](Tape<double> &tp) {
    std::vector<Node<double> *> steps = {tp.Param(s0), tp.Param(s1)};
    return WeightedSum(tp, StackTimeMajor(tp, steps), w2);
  });
}

TEST_CASE("seg mean rows matches per-segment means") {
  std::vector<int> lens = {2, 3};
  Td seg("seg", RandMat(5, 2, 70));
  Tape<double> t(false);
  Node<double> *m = SegMeanRows(t, t.Param(seg), lens);
  CHECK(m->val(0, 0) ==
        doctest::Approx(0.5 * (seg.value(0, 0) + seg.value(1, 0))));
  CHECK(m->val(1, 1) ==
        doctest::Approx((seg.value(2, 1) + seg.value(3, 1) + seg.value(4, 1)) /
                        3.0));
  Mat<double> w = RandWeights(2, 2, 71);
  CheckGrads({&seg}, [&](Tape<double> &tp) {
    return WeightedSum(tp, SegMeanRows(tp, tp.Param(seg), lens), w);
  });
}

TEST_CASE("attention context gradient") {
  Td mem("mem", RandMat(6, 4, 72)), al("al", RandMat(2, 3, 73));
  Mat<double> w = RandWeights(2, 4, 74);
  CheckGrads({&mem, &al}, [&](Tape<double> &tp) {
    return WeightedSum(tp, AttnContext(tp, tp.Param(mem), tp.Param(al)), w);
  });
}

TEST_CASE("cross entropy closed forms") {
  // Uniform logits over C classes cost ln C per unit weight.
  Td z("z", Mat<double>::Zero(1, 4));
  Tape<double> t(false);
  Node<double> *l =
      CeRowsWeighted(t, t.Param(z), std::vector<int>{2}, std::vector<double>{1.0});
  CHECK(l->val(0, 0) == doctest::Approx(1.3862943611198906).epsilon(1e-12));

  Td z2("z2", RandMat(3, 5, 75));
  std::vector<int> tgt = {1, -1, 4};
  std::vector<double> w = {0.5, 0.0, 2.0};
  CheckGrads({&z2}, [&](Tape<double> &tp) {
    return CeRowsWeighted(tp, tp.Param(z2), tgt, w);
  });
}

TEST_CASE("binary cross entropy closed form and gradient") {
  Td z("z", Mat<double>::Zero(3, 1));
  Vec<double> tgt(3), w(3);
  tgt << 1, 0, 1;
  w << 1, 1, 0;
  Tape<double> t(false);
  Node<double> *l = BinaryCeWeighted(t, t.Param(z), tgt, w);
  CHECK(l->val(0, 0) == doctest::Approx(2.0 * 0.6931471805599453).epsilon(1e-12));

  Td z2("z2", RandMat(4, 1, 76));
  Vec<double> tgt2(4), w2(4);
  tgt2 << 1, 0, 0, 1;
  w2 << 1.0, 0.5, 0.0, 2.0;
  CheckGrads({&z2}, [&](Tape<double> &tp) {
    return BinaryCeWeighted(tp, tp.Param(z2), tgt2, w2);
  });
}

TEST_CASE("hinge contrastive closed forms") {
  // Identical unit rows: every distance is 0, diagonal contributes nothing,
  // each off-diagonal pair contributes the full margin of 1.
  Mat<double> rows(2, 3);
  rows << 1, 0, 0, 1, 0, 0;
  Tape<double> t3(false);
  Node<double> *gr = t3.Constant(Mat<double>(rows * rows.transpose()));
  Node<double> *l = HingeContrastive(t3, gr);
  CHECK(l->val(0, 0) == doctest::Approx(2.0).epsilon(1e-12));

  // One antipodal pair: d = 4, hinge off, diagonal d drives the loss.
  Mat<double> g1(1, 1);
  g1 << -1.0;
  Tape<double> t4(false);
  CHECK(HingeContrastive(t4, t4.Constant(g1))->val(0, 0) ==
        doctest::Approx(4.0).epsilon(1e-12));

  // Matched rows identical, mismatched rows orthogonal: loss is zero.
  Tape<double> t5(false);
  CHECK(HingeContrastive(t5, t5.Constant(Mat<double>(Mat<double>::Identity(3, 3))))
            ->val(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("hinge contrastive gradient through normalization") {
  Td a("a", RandMat(3, 4, 77)), b("b", RandMat(3, 4, 78));
  // Random Gaussian rows land far from the hinge kink at d = 1 for this
  // seed; the FD probe below would blow up otherwise.
  CheckGrads({&a, &b}, [&](Tape<double> &tp) {
    Node<double> *na = L2NormalizeRows(tp, tp.Param(a));
    Node<double> *nb = L2NormalizeRows(tp, tp.Param(b));
    Node<double> *gram = MatMul(tp, na, Transpose(tp, nb));
    return HingeContrastive(tp, gram);
  });
}

TEST_CASE("transpose gradient") {
  Td x("x", RandMat(3, 2, 83));
  Mat<double> w = RandWeights(2, 3, 84);
  CheckGrads({&x}, [&](Tape<double> &tp) {
    return WeightedSum(tp, Transpose(tp, tp.Param(x)), w);
  });
}

TEST_CASE("two backward passes over one tape") {
  Td x("x", RandMat(2, 2, 79));
  Tape<double> t(true);
  Node<double> *n = t.Param(x);
  Node<double> *l1 = SumAll(t, Square(t, n));
  Node<double> *l2 = SumAll(t, n);
  x.ZeroGrad();
  t.Backward(l1);
  CHECK((x.grad - 2.0 * x.value).cwiseAbs().maxCoeff() < 1e-12);
  t.ZeroGrads();
  x.ZeroGrad();
  t.Backward(l2);
  CHECK((x.grad - Mat<double>::Ones(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("tensor gradients accumulate across backward calls") {
  Td x("x", RandMat(2, 2, 80));
  Tape<double> t(true);
  Node<double> *n = t.Param(x);
  Node<double> *l1 = SumAll(t, n);
  x.ZeroGrad();
  t.Backward(l1);
  t.ZeroGrads();
  t.Backward(l1);
  CHECK((x.grad - 2.0 * Mat<double>::Ones(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("backward only touches ancestors of the loss") {
  Td x("x", RandMat(2, 2, 81)), y("y", RandMat(2, 2, 82));
  Tape<double> t(true);
  Node<double> *nx = t.Param(x), *ny = t.Param(y);
  Node<double> *lx = SumAll(t, Square(t, nx));
  SumAll(t, Square(t, ny));
  x.ZeroGrad();
  y.ZeroGrad();
  t.Backward(lx);
  CHECK(x.grad.cwiseAbs().maxCoeff() > 0.0);
  CHECK(y.grad.cwiseAbs().maxCoeff() == 0.0);
}
