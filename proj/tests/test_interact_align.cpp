#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "molrel/align/align.hpp"
#include "molrel/interact/interact.hpp"
#include "nn_test_util.hpp"

using namespace molrel;
using namespace molrel::interact;
using namespace molrel::align;

namespace {

Matd random_mat(Rng& rng, Index r, Index c, double scale = 1.0) {
  Matd m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = scale * rng.uniform(-1, 1);
  return m;
}

}  // namespace

TEST_CASE("mean fuse identities") {
  Rng rng(1);
  Matd a = random_mat(rng, 1, 8);
  Tensord ta = constant(a), tb = constant(Matd(-a));
  CHECK((mean_fuse(ta, ta).v - a).cwiseAbs().maxCoeff() == 0.0);
  CHECK(mean_fuse(ta, tb).v.cwiseAbs().maxCoeff() == 0.0);
  Matd b = random_mat(rng, 1, 8);
  CHECK((mean_fuse(ta, constant(b)).v - mean_fuse(constant(b), ta).v).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("gated fusion: saturated gate picks the a-branch; gate lies in (0,1)") {
  InteractConfig cfg{.dim = 6};
  ParamStore<double> store;
  Rng rng(2);
  init_gated_fusion(store, "x", cfg, rng);
  store.value("x.gate.b").setConstant(50.0);  // force g -> 1
  Matd a = random_mat(rng, 1, 6), b = random_mat(rng, 1, 6);
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  Tensord out = gated_fusion(ws, "x", constant(a), constant(b));
  Matd expect = (a * store.value("x.wa")).array().tanh();
  CHECK((out.v - expect).cwiseAbs().maxCoeff() < 1e-12);

  store.value("x.gate.b").setZero();
  Tape<double> tape2;
  Workspace<double> ws2(tape2, store, false, 0);
  Tensord g = sigmoid(nn::linear(ws2, "x.gate", constant(Matd(random_mat(rng, 1, 12)))));
  CHECK(g.v.minCoeff() > 0.0);
  CHECK(g.v.maxCoeff() < 1.0);
}

TEST_CASE("bilinear fusion: zero second argument gives zero; output nonnegative") {
  InteractConfig cfg{.dim = 5};
  ParamStore<double> store;
  Rng rng(3);
  init_bilinear_fusion(store, "x", cfg, rng);
  store.value("x.out.b").setZero();
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  Matd a = random_mat(rng, 1, 5);
  Tensord out = bilinear_fusion(ws, "x", constant(a), constant(Matd(Matd::Zero(1, 5))));
  CHECK(out.v.cwiseAbs().maxCoeff() == 0.0);
  Tensord out2 = bilinear_fusion(ws, "x", constant(a), constant(Matd(random_mat(rng, 1, 5))));
  CHECK(out2.v.minCoeff() >= 0.0);
}

TEST_CASE("highway: carry gate at 0 passes x through; at 1 applies the transform") {
  InteractConfig cfg{.dim = 4};
  ParamStore<double> store;
  Rng rng(4);
  init_highway(store, "x", cfg, rng);
  Matd a = random_mat(rng, 1, 4), b = random_mat(rng, 1, 4);
  Matd cat(1, 8);
  cat << a, b;
  Matd x = cat * store.value("x.wp");

  store.value("x.transform.b").setConstant(-50.0);  // t -> 0
  {
    Tape<double> tape;
    Workspace<double> ws(tape, store, false, 0);
    Tensord out = highway_fuse(ws, "x", constant(a), constant(b));
    CHECK((out.v - x).cwiseAbs().maxCoeff() < 1e-12);
  }
  store.value("x.transform.b").setConstant(50.0);  // t -> 1
  {
    Tape<double> tape;
    Workspace<double> ws(tape, store, false, 0);
    Tensord out = highway_fuse(ws, "x", constant(a), constant(b));
    Matd expect = (x * store.value("x.carry.w") + store.value("x.carry.b")).cwiseMax(0.0);
    CHECK((out.v - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("self attention: single token total is its value projection") {
  InteractConfig cfg{.dim = 6};
  ParamStore<double> store;
  Rng rng(5);
  init_self_attention(store, "x", cfg, rng);
  store.value("x.segment").setZero();
  Matd tok = random_mat(rng, 1, 6);
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  Tensord out = self_attention_fuse(ws, "x", constant(tok), constant(Matd(Matd::Zero(0, 6))));
  CHECK((out.v - tok * store.value("x.attn.wv")).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("self attention: swapping sources with swapped segment rows permutes rows") {
  InteractConfig cfg{.dim = 6};
  ParamStore<double> store;
  Rng rng(6);
  init_self_attention(store, "x", cfg, rng);
  Matd a = random_mat(rng, 2, 6), b = random_mat(rng, 3, 6);
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  Tensord base = self_attention_fuse(ws, "x", constant(a), constant(b));

  Matd seg = store.value("x.segment");
  store.value("x.segment").row(0) = seg.row(1);
  store.value("x.segment").row(1) = seg.row(0);
  Tape<double> tape2;
  Workspace<double> ws2(tape2, store, false, 0);
  Tensord swapped = self_attention_fuse(ws2, "x", constant(b), constant(a));
  store.value("x.segment") = seg;

  // Rows: swapped = [B'; A'], base = [A'; B'].
  CHECK((swapped.v.topRows(3) - base.v.bottomRows(3)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((swapped.v.bottomRows(2) - base.v.topRows(2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cross attention: singleton key side copies the value projection") {
  InteractConfig cfg{.dim = 5};
  ParamStore<double> store;
  Rng rng(7);
  init_cross_attention(store, "x", cfg, rng);
  Matd a = random_mat(rng, 3, 5), b = random_mat(rng, 1, 5);
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  Tensord out = cross_attention_fuse(ws, "x", constant(a), constant(b));
  Matd vb = b * store.value("x.attn.wv");
  for (int i = 0; i < 3; ++i)
    CHECK((out.v.row(i) - vb).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bilinear attention: 1x1 token sets give alpha = 1") {
  InteractConfig cfg{.dim = 4};
  ParamStore<double> store;
  Rng rng(8);
  init_bilinear_attention(store, "x", cfg, rng);
  Matd a = random_mat(rng, 1, 4), b = random_mat(rng, 1, 4);
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);  // eval mode: unit running stats
  Tensord out = bilinear_attention_fuse(ws, "x", constant(a), constant(b), cfg);
  Matd prod = (a * store.value("x.u")).cwiseProduct(b * store.value("x.v"));
  Matd expect = prod * store.value("x.out");
  // Unit stats + identity affine: the normalization is an epsilon-scaled identity.
  CHECK((out.v - expect / std::sqrt(1.0 + 1e-5)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("bilinear attention: running stats update only in training mode") {
  InteractConfig cfg{.dim = 4};
  ParamStore<double> store;
  Rng rng(9);
  init_bilinear_attention(store, "x", cfg, rng);
  Matd a = random_mat(rng, 2, 4), b = random_mat(rng, 2, 4);
  {
    Tape<double> tape;
    Workspace<double> ws(tape, store, false, 0);
    bilinear_attention_fuse(ws, "x", constant(a), constant(b), cfg);
    CHECK(store.value("x.bn.running_mean").cwiseAbs().maxCoeff() == 0.0);
  }
  {
    Tape<double> tape;
    Workspace<double> ws(tape, store, true, 0);
    bilinear_attention_fuse(ws, "x", constant(a), constant(b), cfg);
    CHECK(store.value("x.bn.running_mean").cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("all interaction outputs finite on inputs in [-10, 10]") {
  Rng rng(10);
  InteractConfig cfg{.dim = 8};
  for (const std::string& name : registry_interaction()) {
    if (name == "none") continue;
    CAPTURE(name);
    ParamStore<double> store;
    Rng init_rng(11);
    init_interaction(name, store, "x", cfg, init_rng);
    bool tokens = interaction_wants_tokens(name);
    Tape<double> tape;
    Workspace<double> ws(tape, store, false, 0);
    Tensord a = constant(random_mat(rng, tokens ? 3 : 1, 8, 10.0));
    Tensord b = constant(random_mat(rng, tokens ? 2 : 1, 8, 10.0));
    auto out = apply_interaction(name, ws, "x", a, b, cfg);
    CHECK(out.fused.v.allFinite());
    CHECK(out.fused.cols() == 8);
    CHECK(out.token_mode == (name == "self_attention" || name == "cross_attention"));
  }
}

TEST_CASE("grad check for all seven interaction layers") {
  Rng rng(12);
  InteractConfig cfg{.dim = 5};
  for (const std::string& name : registry_interaction()) {
    if (name == "none" || name == "mean") continue;  // mean is parameter-free
    CAPTURE(name);
    ParamStore<double> store;
    Rng init_rng(13);
    init_interaction(name, store, "x", cfg, init_rng);
    bool tokens = interaction_wants_tokens(name);
    Matd a = random_mat(rng, tokens ? 2 : 1, 5);
    Matd b = random_mat(rng, tokens ? 3 : 1, 5);
    double err = testutil::param_grad_check(store, [&](Workspace<double>& ws) {
      auto out = apply_interaction(name, ws, "x", constant(a), constant(b), cfg);
      return mean_all(mul(out.fused, out.fused));
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("grad check for mean fuse through its inputs") {
  Rng rng(14);
  Matd a = random_mat(rng, 1, 5), b = random_mat(rng, 1, 5);
  double err = grad_check(
      [](Tape<double>&, const std::vector<Tensord>& in) {
        Tensord f = mean_fuse(in[0], in[1]);
        return mean_all(mul(f, f));
      },
      {a, b});
  CHECK(err < 1e-4);
}

TEST_CASE("unknown interaction lists valid names") {
  ParamStore<double> store;
  Rng rng(1);
  try {
    init_interaction("bogus", store, "x", InteractConfig{}, rng);
    FAIL("expected throw");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("bilinear_attention") != std::string::npos);
  }
}

// ---------------------------------------------------------------------------
// Alignment
// ---------------------------------------------------------------------------

TEST_CASE("mlp projector: zero weights give the zero token; widths match presets") {
  Rng rng(20);
  for (int lm_dim : {128, 192, 256}) {
    AlignConfig cfg{.in_dim = 16, .lm_dim = lm_dim};
    ParamStore<double> store;
    Rng init_rng(21);
    init_mlp_project(store, "al", cfg, init_rng);
    {
      ParamStore<double> zeroed = store;
      for (auto& e : zeroed.entries()) e.value.setZero();
      Tape<double> tape;
      Workspace<double> ws(tape, zeroed, false, 0);
      Tensord out = mlp_project(ws, "al", constant(random_mat(rng, 1, 16)));
      CHECK(out.v.cwiseAbs().maxCoeff() == 0.0);
      CHECK(out.cols() == lm_dim);
      CHECK(out.rows() == 1);
    }
  }
}

TEST_CASE("qformer: output shape K x lm_dim; singleton input attends fully") {
  AlignConfig cfg{.in_dim = 8, .lm_dim = 24, .queries = 8, .blocks = 2};
  ParamStore<double> store;
  Rng rng(22);
  init_qformer(store, "q", cfg, rng);
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  Matd tok = Matd::Random(1, 8);
  Tensord out = qformer_lite(ws, "q", constant(Matd(tok)), cfg);
  CHECK(out.rows() == 8);
  CHECK(out.cols() == 24);
  CHECK_THROWS_AS(qformer_lite(ws, "q", constant(Matd(Matd::Zero(0, 8))), cfg),
                  ValidationError);
}

TEST_CASE("qformer output invariant under input token permutation") {
  AlignConfig cfg{.in_dim = 6, .lm_dim = 10, .queries = 4, .blocks = 2};
  ParamStore<double> store;
  Rng rng(23);
  init_qformer(store, "q", cfg, rng);
  Matd tokens = Matd::Random(5, 6);
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  Tensord base = qformer_lite(ws, "q", constant(Matd(tokens)), cfg);
  Rng shuffle_rng(24);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    shuffle_rng.shuffle(perm);
    Matd shuffled(5, 6);
    for (int i = 0; i < 5; ++i) shuffled.row(perm[static_cast<size_t>(i)]) = tokens.row(i);
    Tape<double> tape2;
    Workspace<double> ws2(tape2, store, false, 0);
    Tensord out = qformer_lite(ws2, "q", constant(Matd(shuffled)), cfg);
    CHECK((out.v - base.v).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("grad check for both alignment modes") {
  Rng rng(25);
  {
    AlignConfig cfg{.in_dim = 5, .lm_dim = 7};
    ParamStore<double> store;
    Rng init_rng(26);
    init_mlp_project(store, "al", cfg, init_rng);
    Matd pooled = random_mat(rng, 1, 5);
    double err = testutil::param_grad_check(store, [&](Workspace<double>& ws) {
      Tensord out = mlp_project(ws, "al", constant(pooled));
      return mean_all(mul(out, out));
    });
    CHECK(err < 1e-4);
  }
  {
    AlignConfig cfg{.in_dim = 4, .lm_dim = 6, .queries = 3, .blocks = 2};
    ParamStore<double> store;
    Rng init_rng(27);
    init_qformer(store, "q", cfg, init_rng);
    Matd tokens = random_mat(rng, 3, 4);
    double err = testutil::param_grad_check(store, [&](Workspace<double>& ws) {
      Tensord out = qformer_lite(ws, "q", constant(tokens), cfg);
      return mean_all(mul(out, out));
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("alignment registry") {
  CHECK(is_registered_align("mlp"));
  CHECK(is_registered_align("qformer"));
  ParamStore<double> store;
  Rng rng(1);
  CHECK_THROWS_AS(init_align("bogus", store, "x", AlignConfig{}, rng), ValidationError);
}
