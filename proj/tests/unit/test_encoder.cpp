#include <doctest.h>

#include <cmath>

#include "cogmen/encoder.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "random.hpp"

using namespace cogmen;
using testing_util::random_matrix;

namespace {

std::vector<Tensor*> tensors_of(EncoderParams& p) {
  NamedTensors named;
  p.collect("enc.", named);
  std::vector<Tensor*> out;
  for (auto& [name, t] : named) out.push_back(t);
  return out;
}

Matrix run(const Matrix& x, const EncoderParams& p) {
  Tape tape(Tape::Mode::inference);
  return encode(Var::constant(x), p, Pass{tape}).value();
}

EncoderParams random_encoder(Index d, int layers, int heads, Rng& rng) {
  EncoderParams p = make_encoder_params(d, layers, heads, 2 * d, rng);
  testing_util::scramble(tensors_of(p), rng, 0.7);
  return p;
}

}  // namespace

TEST_SUITE("encoder") {
  TEST_CASE("head width") {
    Rng rng(0);
    CHECK(make_encoder_params(8, 1, 4, 0, rng).head_width == 2);
    CHECK(make_encoder_params(7, 1, 4, 0, rng).head_width == 2);
    CHECK(make_encoder_params(7, 1, 4, 0, rng).ffn_width == 28);
    CHECK(make_encoder_params(1380, 1, 4, 0, rng).layers[0].wq.cols() == 1380);
    CHECK_THROWS(make_encoder_params(4, 1, 0, 0, rng));
  }

  TEST_CASE("single utterance attends only to itself") {
    Rng rng(1);
    const EncoderParams p = random_encoder(6, 2, 3, rng);
    const auto maps = attention_maps(random_matrix(1, 6, rng), p);
    REQUIRE(maps.size() == 6);
    for (const Matrix& m : maps) {
      CHECK(m.rows() == 1);
      CHECK(m(0, 0) == 1.0);
    }
  }

  TEST_CASE("attention rows are distributions") {
    Rng rng(2);
    const EncoderParams p = random_encoder(5, 2, 2, rng);
    for (const Matrix& m : attention_maps(random_matrix(7, 5, rng, 3.0), p)) {
      CHECK(m.minCoeff() >= 0.0);
      for (Index i = 0; i < m.rows(); ++i) CHECK(std::abs(m.row(i).sum() - 1.0) < 1e-12);
    }
  }

  TEST_CASE("identical utterances get identical attention rows") {
    Rng rng(3);
    const EncoderParams p = random_encoder(4, 1, 2, rng);
    Matrix x = random_matrix(5, 4, rng);
    x.row(3) = x.row(1);
    for (const Matrix& m : attention_maps(x, p)) {
      CHECK(m.row(1) == m.row(3));
      CHECK(m.col(1) == m.col(3));
    }
    const Matrix z = run(x, p);
    CHECK(z.row(1) == z.row(3));
  }

  TEST_CASE("permutation equivariance") {
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
      const int n = 2 + static_cast<int>(rng.below(7));
      const EncoderParams p = random_encoder(6, 2, 3, rng);
      const Matrix x = random_matrix(n, 6, rng);
      const auto perm = testing_util::random_permutation(n, rng);
      const Matrix lhs = run(testing_util::permute_rows(x, perm), p);
      const Matrix rhs = testing_util::permute_rows(run(x, p), perm);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  TEST_CASE("one layer, one head, d = 2, written out by hand") {
    Rng rng(0);
    EncoderParams p = make_encoder_params(2, 1, 1, 1, rng);
    auto& l = p.layers[0];
    l.wq.data = l.wk.data = l.wv.data = l.wo.data = Matrix::Identity(2, 2);
    l.w1.data.setZero();
    l.w2.data.setZero();
    const Matrix x = Matrix::Identity(2, 2);
    const double eps = p.eps;
    // Scores are I / sqrt(2); values are the inputs themselves.
    const double e = std::exp(1.0 / std::sqrt(2.0));
    const double a = e / (e + 1.0);
    // Row 0 before the first norm: [1 + a, 1 - a], mean 1, variance a^2.
    const double s = a / std::sqrt(a * a + eps);
    // The FFN is zero, so the second norm sees [s, -s].
    const double z = s / std::sqrt(s * s + eps);
    const Matrix got = run(x, p);
    CHECK(std::abs(got(0, 0) - z) < 1e-12);
    CHECK(std::abs(got(0, 1) + z) < 1e-12);
    CHECK(std::abs(got(1, 0) + z) < 1e-12);
    CHECK(std::abs(got(1, 1) - z) < 1e-12);
    const Matrix alpha = attention_maps(x, p).at(0);
    CHECK(std::abs(alpha(0, 0) - a) < 1e-15);
    CHECK(std::abs(alpha(0, 1) - (1.0 - a)) < 1e-15);
  }

  TEST_CASE("matches the loop oracle") {
    Rng rng(5);
    for (int t = 0; t < 30; ++t) {
      const Index d = 2 + static_cast<Index>(rng.below(8));
      const int heads = 1 + static_cast<int>(rng.below(4));
      const int n = 1 + static_cast<int>(rng.below(8));
      const EncoderParams p = random_encoder(d, 1 + static_cast<int>(rng.below(3)), heads, rng);
      const Matrix x = random_matrix(n, d, rng, 2.0);
      CHECK((run(x, p) - oracle::encoder(x, p)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  TEST_CASE("zero layers is the identity") {
    Rng rng(6);
    const EncoderParams p = make_encoder_params(3, 0, 1, 0, rng);
    const Matrix x = random_matrix(4, 3, rng);
    CHECK(run(x, p) == x);
  }

  TEST_CASE("width mismatch is rejected") {
    Rng rng(7);
    const EncoderParams p = make_encoder_params(3, 1, 1, 0, rng);
    CHECK_THROWS_AS(run(Matrix::Zero(2, 4), p), DimensionError);
  }

  TEST_CASE("dropout only in training") {
    Rng rng(8);
    const EncoderParams p = random_encoder(6, 1, 2, rng);
    const Matrix x = random_matrix(4, 6, rng);
    Rng drop(1);
    Tape a(Tape::Mode::inference);
    CHECK(encode(Var::constant(x), p, Pass{a, false, 0.5, &drop}).value() == run(x, p));
    Tape b(Tape::Mode::inference);
    CHECK_FALSE(encode(Var::constant(x), p, Pass{b, true, 0.5, &drop}).value() == run(x, p));
  }

  TEST_CASE("gradients") {
    Rng rng(9);
    for (int t = 0; t < 20; ++t) {
      const Index d = 2 + static_cast<Index>(rng.below(7));
      const int n = 1 + static_cast<int>(rng.below(5));
      EncoderParams p = random_encoder(d, 1 + static_cast<int>(rng.below(2)), 1 + static_cast<int>(rng.below(3)), rng);
      Tensor x(random_matrix(n, d, rng));
      const Matrix w = random_matrix(n, d, rng);
      auto wrt = tensors_of(p);
      wrt.push_back(&x);
      const auto r = gradcheck::check(
          [&](const Pass& pass) { return gradcheck::project(encode(pass.bind(x), p, pass), w); }, wrt);
      CAPTURE(t);
      CHECK(r.max_rel_error < 1e-4);
    }
  }
}
