#include <doctest.h>

#include <cmath>

#include "cogmen/classifier.hpp"
#include "gradcheck.hpp"
#include "random.hpp"

using namespace cogmen;
using testing_util::random_matrix;

namespace {

double loss_value(const Matrix& logits, const std::vector<int>& labels) {
  return classification_loss(Var::constant(logits), labels).scalar();
}

/// Mean of logsumexp(row) - row[label], in long double.
long double reference_ce(const Matrix& logits, const std::vector<int>& labels) {
  long double total = 0;
  for (Index i = 0; i < logits.rows(); ++i) {
    long double sum = 0;
    for (Index j = 0; j < logits.cols(); ++j) sum += std::exp(static_cast<long double>(logits(i, j)));
    total += std::log(sum) - logits(i, labels[static_cast<std::size_t>(i)]);
  }
  return total / logits.rows();
}

long double reference_bce(const Matrix& logits, const Matrix& targets) {
  long double total = 0;
  for (Index i = 0; i < logits.size(); ++i) {
    const long double z = logits.data()[i];
    const long double p = 1.0L / (1.0L + std::exp(-z));
    total -= targets.data()[i] != 0.0 ? std::log(p) : std::log(1.0L - p);
  }
  return total / logits.size();
}

}  // namespace

TEST_SUITE("classifier") {
  TEST_CASE("hidden width defaults to half the input, rounded up") {
    Rng rng(0);
    CHECK(make_classifier_params(7, 0, 3, TaskMode::single, rng).w1.cols() == 4);
    CHECK(make_classifier_params(8, 0, 3, TaskMode::single, rng).w1.cols() == 4);
    CHECK(make_classifier_params(8, 5, 3, TaskMode::single, rng).w1.cols() == 5);
    CHECK(make_classifier_params(8, 0, 6, TaskMode::multi, rng).num_classes() == 6);
  }

  TEST_CASE("zero output layer gives uniform probabilities and class 0") {
    Rng rng(1);
    ClassifierParams p = make_classifier_params(5, 0, 4, TaskMode::single, rng);
    p.w2.data.setZero();
    p.b2.data.setZero();
    const auto c = classify(random_matrix(3, 5, rng), p);
    CHECK(c.probs.isApproxToConstant(0.25, 1e-15));
    CHECK(c.labels == std::vector<int>{0, 0, 0});

    p.mode = TaskMode::multi;
    const auto m = classify(random_matrix(3, 5, rng), p);
    CHECK(m.probs.isApproxToConstant(0.5, 1e-15));
    CHECK(m.label_bits.isApproxToConstant(1.0));
  }

  TEST_CASE("predictions match a naive scan") {
    Rng rng(2);
    for (int t = 0; t < 50; ++t) {
      const Matrix logits = random_matrix(6, 5, rng, 4.0);
      const auto s = classify_logits(logits, TaskMode::single);
      for (Index i = 0; i < logits.rows(); ++i) {
        CHECK(std::abs(s.probs.row(i).sum() - 1.0) < 1e-12);
        int best = 0;
        for (int j = 1; j < 5; ++j)
          if (s.probs(i, j) > s.probs(i, best)) best = j;
        CHECK(s.labels[static_cast<std::size_t>(i)] == best);
      }
      const Matrix shifted = logits + Matrix::Constant(6, 5, 3.7);
      CHECK(classify_logits(shifted, TaskMode::single).labels == s.labels);

      const double threshold = rng.uniform(0.2, 0.8);
      const auto m = classify_logits(logits, TaskMode::multi, threshold);
      for (Index i = 0; i < logits.size(); ++i) {
        const double p = 1.0 / (1.0 + std::exp(-logits.data()[i]));
        CHECK(std::abs(m.probs.data()[i] - p) < 1e-15);
        CHECK(m.label_bits.data()[i] == (p >= threshold ? 1.0 : 0.0));
      }
    }
  }

  TEST_CASE("ties go to the lowest index") {
    Matrix logits(2, 3);
    logits << 1, 2, 2, 5, 5, 5;
    CHECK(classify_logits(logits, TaskMode::single).labels == std::vector<int>{1, 0});
  }

  TEST_CASE("cross-entropy limits") {
    const std::vector<int> labels{0, 3, 2};
    CHECK(loss_value(Matrix::Zero(3, 4), labels) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
    Matrix sure = Matrix::Constant(3, 4, -400.0);
    for (std::size_t i = 0; i < labels.size(); ++i) sure(static_cast<Index>(i), labels[i]) = 400.0;
    CHECK(loss_value(sure, labels) == 0.0);
    Rng rng(3);
    CHECK(loss_value(random_matrix(3, 4, rng), labels) > 0.0);
    CHECK_THROWS(loss_value(Matrix::Zero(3, 4), {0, 4, 1}));
  }

  TEST_CASE("losses match an extended-precision reference") {
    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
      const Matrix logits = random_matrix(5, 4, rng, 10.0);
      std::vector<int> labels(5);
      for (int& l : labels) l = static_cast<int>(rng.below(4));
      CHECK(std::abs(loss_value(logits, labels) - static_cast<double>(reference_ce(logits, labels))) < 1e-10);

      Matrix targets(5, 4);
      for (Index i = 0; i < targets.size(); ++i) targets.data()[i] = static_cast<double>(rng.below(2));
      const double bce = classification_loss(Var::constant(logits), targets).scalar();
      CHECK(std::abs(bce - static_cast<double>(reference_bce(logits, targets))) < 1e-10);
    }
    CHECK(classification_loss(Var::constant(Matrix::Zero(2, 3)), Matrix::Ones(2, 3)).scalar() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-15));
  }

  TEST_CASE("gradients through the head and loss") {
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
      const TaskMode mode = t % 2 ? TaskMode::multi : TaskMode::single;
      const Index d = 1 + static_cast<Index>(rng.below(8));
      const int n = 1 + static_cast<int>(rng.below(5));
      ClassifierParams p = make_classifier_params(d, 0, 2 + static_cast<int>(rng.below(4)), mode, rng);
      p.b1.data = random_matrix(1, p.b1.cols(), rng);
      p.b2.data = random_matrix(1, p.b2.cols(), rng);
      Tensor h(random_matrix(n, d, rng));
      std::vector<int> labels(static_cast<std::size_t>(n));
      for (int& l : labels) l = static_cast<int>(rng.below(static_cast<std::size_t>(p.num_classes())));
      Matrix targets(n, p.num_classes());
      for (Index i = 0; i < targets.size(); ++i) targets.data()[i] = static_cast<double>(rng.below(2));
      const auto r = gradcheck::check(
          [&](const Pass& pass) {
            const Var logits = classifier_logits(pass.bind(h), p, pass);
            return mode == TaskMode::single ? classification_loss(logits, labels)
                                            : classification_loss(logits, targets);
          },
          {&p.w1, &p.b1, &p.w2, &p.b2, &h});
      CHECK(r.max_rel_error < 1e-4);
    }
  }
}
