#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cogmen/gnn.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "random.hpp"

using namespace cogmen;
using testing_util::random_matrix;

namespace {

double max_diff(const Matrix& a, const Matrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  return (a - b).cwiseAbs().maxCoeff();
}

Matrix rgcn(const Matrix& z, const ConversationGraph& g, const RgcnParams& p) {
  Tape tape(Tape::Mode::inference);
  return rgcn_forward(Var::constant(z), g, p, Pass{tape}).value();
}

Matrix gt(const Matrix& x, const ConversationGraph& g, const GraphTransformerParams& p,
          std::vector<Matrix>* attention = nullptr) {
  Tape tape(Tape::Mode::inference);
  return graph_transformer_forward(Var::constant(x), g, p, Pass{tape}, attention).value();
}

/// Random dialogue graph with windows drawn from {0..5, unbounded}.
ConversationGraph random_graph(Rng& rng, int n, int m) {
  std::vector<int> spk(static_cast<std::size_t>(n));
  for (int& s : spk) s = static_cast<int>(rng.below(static_cast<std::size_t>(m)));
  const auto window = [&] { return rng.below(7) == 6 ? kUnbounded : static_cast<int>(rng.below(6)); };
  GraphOptions o;
  o.past = window();
  o.future = window();
  o.mode = rng.below(2) ? EdgeMode::both_directions : EdgeMode::single_direction;
  o.self_loops = rng.below(4) != 0;
  return build_graph(spk, m, o);
}

std::vector<Tensor*> tensors_of(RgcnParams& p) {
  std::vector<Tensor*> out{&p.root};
  for (auto& r : p.relations) out.push_back(&r);
  return out;
}

std::vector<Tensor*> tensors_of(GraphTransformerParams& p) {
  return {&p.w_self, &p.w_value, &p.w_query, &p.w_key, &p.w_out};
}

ConversationGraph permute_graph(const ConversationGraph& g, const std::vector<int>& perm) {
  std::vector<Index> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[static_cast<std::size_t>(perm[i])] = static_cast<Index>(i);
  ConversationGraph out = g;
  for (Edge& e : out.edges) {
    e.src = inv[static_cast<std::size_t>(e.src)];
    e.dst = inv[static_cast<std::size_t>(e.dst)];
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

}  // namespace

TEST_SUITE("gnn") {
  TEST_CASE("rgcn without edges applies the root weight only") {
    Rng rng(1);
    RgcnParams p = make_rgcn_params(3, 3, 2, rng);
    p.root.data = Matrix::Identity(3, 3);
    ConversationGraph g;
    g.num_nodes = 4;
    g.relation_count = 2;
    const Matrix z = random_matrix(4, 3, rng);
    CHECK(rgcn(z, g, p) == z);
  }

  TEST_CASE("rgcn single message") {
    Rng rng(2);
    const RgcnParams p = make_rgcn_params(3, 2, 2, rng);
    ConversationGraph g;
    g.num_nodes = 2;
    g.relation_count = 2;
    g.edges = {{0, 1, 1}};
    const Matrix z = random_matrix(2, 3, rng);
    const Matrix out = rgcn(z, g, p);
    CHECK(max_diff(out.row(0), z.row(0) * p.root.data) < 1e-15);
    CHECK(max_diff(out.row(1), z.row(1) * p.root.data + z.row(0) * p.relations[1].data) < 1e-15);
  }

  TEST_CASE("rgcn averages per relation and counts repeated edges") {
    Rng rng(3);
    RgcnParams p = make_rgcn_params(2, 2, 2, rng);
    p.root.data.setZero();
    p.relations[0].data = Matrix::Identity(2, 2);
    p.relations[1].data = 2.0 * Matrix::Identity(2, 2);
    ConversationGraph g;
    g.num_nodes = 3;
    g.relation_count = 2;
    g.edges = {{0, 2, 0}, {0, 2, 0}, {1, 2, 0}, {1, 2, 1}};
    Matrix z(3, 2);
    z << 3, 0, 0, 6, 9, 9;
    const Matrix out = rgcn(z, g, p);
    // Relation 0: (z0 + z0 + z1) / 3; relation 1: 2 z1.
    CHECK(out(2, 0) == doctest::Approx(2.0));
    CHECK(out(2, 1) == doctest::Approx(2.0 + 12.0));
    CHECK(out.row(0).isZero());
  }

  TEST_CASE("rgcn matches the per-node oracle") {
    Rng rng(4);
    for (int t = 0; t < 100; ++t) {
      const int m = 1 + static_cast<int>(rng.below(4));
      const int n = 1 + static_cast<int>(rng.below(12));
      const auto g = random_graph(rng, n, m);
      const Index d = 1 + static_cast<Index>(rng.below(6)), d2 = 1 + static_cast<Index>(rng.below(6));
      const RgcnParams p = make_rgcn_params(d, d2, relation_count(m), rng);
      const Matrix z = random_matrix(n, d, rng, 2.0);
      CHECK(max_diff(rgcn(z, g, p), oracle::rgcn(z, g, p)) < 1e-12);
    }
  }

  TEST_CASE("rgcn is linear in its input") {
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
      const auto g = random_graph(rng, 6, 2);
      const RgcnParams p = make_rgcn_params(4, 3, 8, rng);
      const Matrix a = random_matrix(6, 4, rng), b = random_matrix(6, 4, rng);
      CHECK(max_diff(rgcn(2.5 * a - b, g, p), 2.5 * rgcn(a, g, p) - rgcn(b, g, p)) < 1e-12);
    }
  }

  TEST_CASE("rgcn rejects relation ids outside its weights") {
    Rng rng(6);
    const RgcnParams p = make_rgcn_params(2, 2, 2, rng);
    ConversationGraph g;
    g.num_nodes = 2;
    g.relation_count = 2;
    g.edges = {{0, 1, 2}};
    CHECK_THROWS_AS(rgcn(Matrix::Zero(2, 2), g, p), std::out_of_range);
    g.edges = {{0, 1, 0}};
    CHECK_THROWS_AS(rgcn(Matrix::Zero(3, 2), g, p), DimensionError);
  }

  TEST_CASE("graph transformer isolated node keeps its self term") {
    Rng rng(7);
    const auto p = make_graph_transformer_params(4, 5, 2, rng);
    CHECK(p.head_width == 3);
    ConversationGraph g;
    g.num_nodes = 2;
    g.relation_count = 2;
    g.edges = {{0, 1, 0}};
    const Matrix x = random_matrix(2, 4, rng);
    const Matrix out = gt(x, g, p);
    CHECK(max_diff(out.row(0), x.row(0) * p.w_self.data * p.w_out.data) < 1e-14);
  }

  TEST_CASE("graph transformer single neighbour gets all the attention") {
    Rng rng(8);
    const auto p = make_graph_transformer_params(3, 3, 1, rng);
    ConversationGraph g;
    g.num_nodes = 2;
    g.relation_count = 2;
    g.edges = {{0, 1, 0}, {0, 1, 1}};
    const Matrix x = random_matrix(2, 3, rng);
    std::vector<Matrix> maps;
    const Matrix out = gt(x, g, p, &maps);
    REQUIRE(maps.size() == 1);
    CHECK(maps[0](1, 0) == 1.0);
    CHECK(maps[0](1, 1) == 0.0);
    CHECK(maps[0].row(0).isZero());
    const Matrix expect = (x.row(1) * p.w_self.data + x.row(0) * p.w_value.data) * p.w_out.data;
    CHECK(max_diff(out.row(1), expect) < 1e-14);
  }

  TEST_CASE("graph transformer matches the per-head oracle") {
    Rng rng(9);
    for (int t = 0; t < 100; ++t) {
      const int m = 1 + static_cast<int>(rng.below(4));
      const int n = 1 + static_cast<int>(rng.below(12));
      const auto g = random_graph(rng, n, m);
      const Index d = 1 + static_cast<Index>(rng.below(6)), d2 = 1 + static_cast<Index>(rng.below(8));
      const auto p = make_graph_transformer_params(d, d2, 1 + static_cast<int>(rng.below(4)), rng);
      const Matrix x = random_matrix(n, d, rng, 2.0);
      std::vector<Matrix> maps;
      CHECK(max_diff(gt(x, g, p, &maps), oracle::graph_transformer(x, g, p)) < 1e-12);
      const Matrix mask = g.neighbor_mask();
      for (const Matrix& a : maps)
        for (Index i = 0; i < n; ++i) {
          const double total = a.row(i).sum();
          CHECK(std::abs(total - (mask.row(i).any() ? 1.0 : 0.0)) < 1e-12);
          CHECK((a.row(i).array() * (1.0 - mask.row(i).array())).isZero());
        }
    }
  }

  TEST_CASE("both layers are equivariant under node relabelling") {
    Rng rng(10);
    for (int t = 0; t < 30; ++t) {
      const int n = 2 + static_cast<int>(rng.below(9));
      const auto g = random_graph(rng, n, 2);
      const auto perm = testing_util::random_permutation(n, rng);
      const auto pg = permute_graph(g, perm);
      const Matrix x = random_matrix(n, 4, rng);
      const Matrix px = testing_util::permute_rows(x, perm);
      const RgcnParams r = make_rgcn_params(4, 4, 8, rng);
      const auto tp = make_graph_transformer_params(4, 4, 2, rng);
      CHECK(max_diff(rgcn(px, pg, r), testing_util::permute_rows(rgcn(x, g, r), perm)) < 1e-9);
      CHECK(max_diff(gt(px, pg, tp), testing_util::permute_rows(gt(x, g, tp), perm)) < 1e-9);
    }
  }

  TEST_CASE("rgcn gradients") {
    Rng rng(11);
    for (int t = 0; t < 20; ++t) {
      const int m = 1 + static_cast<int>(rng.below(3));
      const int n = 1 + static_cast<int>(rng.below(5));
      const auto g = random_graph(rng, n, m);
      RgcnParams p = make_rgcn_params(1 + static_cast<Index>(rng.below(8)), 1 + static_cast<Index>(rng.below(8)),
                                      relation_count(m), rng);
      Tensor z(random_matrix(n, p.input_dim(), rng));
      const Matrix w = random_matrix(n, p.output_dim(), rng);
      auto wrt = tensors_of(p);
      wrt.push_back(&z);
      const auto res = gradcheck::check(
          [&](const Pass& pass) { return gradcheck::project(rgcn_forward(pass.bind(z), g, p, pass), w); }, wrt);
      CHECK(res.max_rel_error < 1e-6);
    }
  }

  TEST_CASE("graph transformer gradients") {
    Rng rng(12);
    for (int t = 0; t < 20; ++t) {
      const int n = 1 + static_cast<int>(rng.below(5));
      const auto g = random_graph(rng, n, 2);
      auto p = make_graph_transformer_params(1 + static_cast<Index>(rng.below(8)), 1 + static_cast<Index>(rng.below(8)),
                                             1 + static_cast<int>(rng.below(3)), rng);
      Tensor x(random_matrix(n, p.input_dim(), rng));
      const Matrix w = random_matrix(n, p.output_dim(), rng);
      auto wrt = tensors_of(p);
      wrt.push_back(&x);
      const auto res = gradcheck::check(
          [&](const Pass& pass) {
            return gradcheck::project(graph_transformer_forward(pass.bind(x), g, p, pass), w);
          },
          wrt);
      CHECK(res.max_rel_error < 1e-6);
    }
  }
}
