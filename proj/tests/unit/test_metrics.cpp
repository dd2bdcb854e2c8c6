#include <doctest.h>

#include <cmath>

#include "cogmen/metrics.hpp"
#include "oracles.hpp"

using namespace cogmen;

namespace {

std::vector<int> random_labels(Rng& rng, std::size_t n, int classes) {
  std::vector<int> out(n);
  for (int& v : out) v = static_cast<int>(rng.below(static_cast<std::size_t>(classes)));
  return out;
}

Dialogue dialogue_of(const std::vector<int>& labels, const std::vector<int>& speakers, int num_speakers) {
  Dialogue d;
  d.id = "d";
  d.num_speakers = num_speakers;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Utterance u;
    u.label = labels[i];
    u.speaker = speakers[i];
    d.utterances.push_back(u);
  }
  return d;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("two thirds") {
    const std::vector<int> gold{0, 0, 1}, pred{0, 1, 1};
    const auto s = weighted_f1(gold, pred, 2);
    CHECK(std::abs(s.per_class[0] - 2.0 / 3.0) < 1e-15);
    CHECK(std::abs(s.per_class[1] - 2.0 / 3.0) < 1e-15);
    CHECK(std::abs(s.weighted - 2.0 / 3.0) < 1e-15);
    CHECK(s.support == std::vector<std::int64_t>{2, 1});
  }

  TEST_CASE("perfect and disjoint predictions") {
    const std::vector<int> gold{0, 2, 1, 2};
    const auto s = weighted_f1(gold, gold, 3);
    CHECK(s.weighted == 1.0);
    for (double f : s.per_class) CHECK(f == 1.0);
    CHECK(accuracy(gold, gold) == 1.0);
    CHECK(accuracy(gold, std::vector<int>{1, 0, 0, 0}) == 0.0);
    CHECK_THROWS(accuracy(std::vector<int>{}, std::vector<int>{}));
    CHECK_THROWS(weighted_f1(gold, std::vector<int>{0}, 3));
  }

  TEST_CASE("class absent from gold and predictions scores zero") {
    const auto s = weighted_f1(std::vector<int>{0, 1}, std::vector<int>{0, 1}, 3);
    CHECK(s.per_class[2] == 0.0);
    CHECK(s.weighted == 1.0);
  }

  TEST_CASE("match the confusion-table oracle") {
    Rng rng(1);
    for (int t = 0; t < 1000; ++t) {
      const int c = 2 + static_cast<int>(rng.below(6));
      const std::size_t n = 1 + rng.below(60);
      const auto gold = random_labels(rng, n, c), pred = random_labels(rng, n, c);
      const auto s = weighted_f1(gold, pred, c);
      const auto o = oracle::f1(gold, pred, c);
      CHECK(std::abs(s.weighted - o.weighted) < 1e-12);
      for (int k = 0; k < c; ++k) CHECK(std::abs(s.per_class[static_cast<std::size_t>(k)] - o.per_class[static_cast<std::size_t>(k)]) < 1e-12);
      CHECK(std::abs(accuracy(gold, pred) - o.accuracy) < 1e-12);
      const CountMatrix cm = confusion_matrix(gold, pred, c);
      CHECK(cm.sum() == static_cast<std::int64_t>(n));
      CHECK(std::abs(static_cast<double>(cm.trace()) / static_cast<double>(cm.sum()) - accuracy(gold, pred)) < 1e-15);
      for (int k = 0; k < c; ++k) CHECK(s.support[static_cast<std::size_t>(k)] == cm.row(k).sum());
    }
  }

  TEST_CASE("invariant under relabelling") {
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
      const int c = 4;
      const auto gold = random_labels(rng, 30, c), pred = random_labels(rng, 30, c);
      std::vector<int> perm{0, 1, 2, 3};
      rng.shuffle(perm);
      std::vector<int> pg, pp;
      for (int g : gold) pg.push_back(perm[static_cast<std::size_t>(g)]);
      for (int p : pred) pp.push_back(perm[static_cast<std::size_t>(p)]);
      CHECK(std::abs(weighted_f1(gold, pred, c).weighted - weighted_f1(pg, pp, c).weighted) < 1e-12);
    }
  }

  TEST_CASE("shift buckets") {
    const Dialogue constant = dialogue_of({1, 1, 1, 1}, {0, 1, 0, 1}, 2);
    const std::vector<const Dialogue*> one{&constant};
    const std::vector<std::vector<int>> pred{{1, 1, 0, 1}};
    const auto s = shift_split(one, pred, ShiftLevel::utterance);
    CHECK(s.shift_count == 0);
    CHECK(s.non_shift_count == 4);
    CHECK(s.non_shift_accuracy == 0.75);
    CHECK(s.shift_accuracy == 0.0);

    const Dialogue alternating = dialogue_of({0, 1, 0, 1, 0}, {0, 0, 0, 0, 0}, 1);
    const std::vector<const Dialogue*> alt{&alternating};
    const std::vector<std::vector<int>> right{{0, 1, 0, 1, 0}};
    for (ShiftLevel level : {ShiftLevel::utterance, ShiftLevel::speaker}) {
      const auto a = shift_split(alt, right, level);
      CHECK(a.shift_count == 4);
      CHECK(a.non_shift_count == 1);
      CHECK(a.shift_accuracy == 1.0);
    }

    // Two speakers, each constant, interleaved: shifts only at utterance level.
    const Dialogue two = dialogue_of({0, 1, 0, 1}, {0, 1, 0, 1}, 2);
    const std::vector<const Dialogue*> t{&two};
    const std::vector<std::vector<int>> p{{0, 1, 0, 1}};
    CHECK(shift_split(t, p, ShiftLevel::utterance).shift_count == 3);
    CHECK(shift_split(t, p, ShiftLevel::speaker).shift_count == 0);

    const std::vector<std::vector<int>> short_pred{{0, 1}};
    CHECK_THROWS(shift_split(t, short_pred, ShiftLevel::utterance));
  }

  TEST_CASE("shift buckets match a naive scan") {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
      std::vector<Dialogue> ds;
      std::vector<std::vector<int>> preds;
      for (int k = 0; k < 4; ++k) {
        const std::size_t n = 1 + rng.below(10);
        ds.push_back(dialogue_of(random_labels(rng, n, 3), random_labels(rng, n, 2), 2));
        preds.push_back(random_labels(rng, n, 3));
      }
      std::vector<const Dialogue*> ptrs;
      for (const auto& d : ds) ptrs.push_back(&d);
      for (ShiftLevel level : {ShiftLevel::utterance, ShiftLevel::speaker}) {
        std::size_t shift = 0, shift_hit = 0, same = 0, same_hit = 0;
        for (std::size_t k = 0; k < ds.size(); ++k) {
          const auto& u = ds[k].utterances;
          for (std::size_t i = 0; i < u.size(); ++i) {
            int ref = -1;
            for (std::size_t j = i; j-- > 0;)
              if (level == ShiftLevel::utterance || u[j].speaker == u[i].speaker) {
                ref = u[j].label;
                break;
              }
            const bool hit = preds[k][i] == u[i].label;
            if (ref >= 0 && ref != u[i].label) {
              ++shift;
              shift_hit += hit;
            } else {
              ++same;
              same_hit += hit;
            }
          }
        }
        const auto s = shift_split(ptrs, preds, level);
        CHECK(s.shift_count == shift);
        CHECK(s.non_shift_count == same);
        CHECK(s.shift_accuracy == (shift ? static_cast<double>(shift_hit) / shift : 0.0));
        CHECK(s.non_shift_accuracy == (same ? static_cast<double>(same_hit) / same : 0.0));
      }
    }
  }

  TEST_CASE("multilabel per-class F1") {
    Matrix gold(4, 2), pred(4, 2);
    gold << 1, 0, 0, 0, 1, 1, 0, 1;
    CHECK(multilabel_f1(gold, gold) == std::vector<double>{1.0, 1.0});
    pred.setZero();
    // Column 0: outcome 1 gets F1 0, outcome 0 gets 2 * 0.5 * 1 / 1.5 = 2/3, support 2 each.
    const auto f = multilabel_f1(gold, pred);
    CHECK(std::abs(f[0] - (2.0 / 3.0) * 0.5) < 1e-15);
    CHECK_THROWS(multilabel_f1(gold, Matrix::Zero(3, 2)));

    Rng rng(4);
    for (int t = 0; t < 100; ++t) {
      Matrix g(12, 3), p(12, 3);
      for (Index i = 0; i < g.size(); ++i) {
        g.data()[i] = static_cast<double>(rng.below(2));
        p.data()[i] = static_cast<double>(rng.below(2));
      }
      const auto got = multilabel_f1(g, p);
      for (Index c = 0; c < 3; ++c) {
        std::vector<int> gc, pc;
        for (Index i = 0; i < 12; ++i) {
          gc.push_back(static_cast<int>(g(i, c)));
          pc.push_back(static_cast<int>(p(i, c)));
        }
        CHECK(std::abs(got[static_cast<std::size_t>(c)] - oracle::f1(gc, pc, 2).weighted) < 1e-12);
      }
    }
  }

  TEST_CASE("report json and table") {
    const Dialogue d = dialogue_of({0, 0, 1}, {0, 1, 0}, 2);
    const std::vector<const Dialogue*> ds{&d};
    const std::vector<std::vector<int>> pred{{0, 1, 1}};
    const auto r = evaluate_single(ds, pred, {"happy", "sad"}, ShiftLevel::utterance);
    CHECK(r.total == 3);
    CHECK(std::abs(r.weighted_f1 - 2.0 / 3.0) < 1e-15);
    CHECK(std::abs(r.accuracy - 2.0 / 3.0) < 1e-15);
    const auto doc = r.to_json();
    CHECK(doc.at("label_names")[1] == "sad");
    CHECK(doc.at("confusion")[0][1] == 1);
    CHECK(doc.at("support")[0] == 2);
    CHECK(doc.at("shift").at("shift_count") == 1);
    const std::string table = r.to_table();
    CHECK(table.find("happy") != std::string::npos);
    CHECK(table.find("Acc.") != std::string::npos);
    CHECK(table.find("66.67") != std::string::npos);
  }
}
