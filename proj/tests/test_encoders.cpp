#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "molrel/chem/molecule.hpp"
#include "molrel/encoders/encoder2d.hpp"
#include "molrel/encoders/encoder3d.hpp"
#include "nn_test_util.hpp"

using namespace molrel;
using namespace molrel::chem;
using namespace molrel::enc2d;
using namespace molrel::enc3d;

namespace {

Molecule smiles(const std::string& s) { return parse(s, ReprKind::smiles); }

MolGraph permuted_graph(const Molecule& mol, const std::vector<int>& perm) {
  Molecule out = mol;
  for (size_t i = 0; i < mol.atoms.size(); ++i)
    out.atoms[static_cast<size_t>(perm[i])] = mol.atoms[i];
  for (size_t k = 0; k < mol.bonds.size(); ++k) {
    out.bonds[k].a = perm[static_cast<size_t>(mol.bonds[k].a)];
    out.bonds[k].b = perm[static_cast<size_t>(mol.bonds[k].b)];
  }
  return to_graph(out);
}

const std::vector<std::string> kImplemented2d = {"gcn", "gin", "gat", "graphsage", "mpnn"};

template <typename S>
ParamStore<S> make_store_2d(const std::string& name, const Encoder2dConfig& cfg, uint64_t seed) {
  ParamStore<S> store;
  Rng rng(seed);
  init_encoder2d(name, store, "enc", cfg, rng);
  return store;
}

}  // namespace

TEST_CASE("gcn: single atom with identity weights is relu(x)") {
  Encoder2dConfig cfg{.dim = 29, .layers = 1};
  ParamStore<double> store = make_store_2d<double>("gcn", cfg, 1);
  store.value("enc.layer0.w") = Matd::Identity(29, 29);
  MolGraph g = to_graph(smiles("C"));
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  auto out = gcn_encode(ws, "enc", g, cfg);
  CHECK((out.atom_tokens.v - g.node_features.cwiseMax(0.0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gcn: 2-node path with identity weights averages neighbors") {
  Encoder2dConfig cfg{.dim = 29, .layers = 1};
  ParamStore<double> store = make_store_2d<double>("gcn", cfg, 2);
  store.value("enc.layer0.w") = Matd::Identity(29, 29);
  MolGraph g = to_graph(smiles("CO"));
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  auto out = gcn_encode(ws, "enc", g, cfg);
  Matd expect = 0.5 * (g.node_features.row(0) + g.node_features.row(1)).cwiseMax(0.0);
  CHECK((out.atom_tokens.v.row(0) - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((out.atom_tokens.v.row(1) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gin: isolated atom with eps=0 and identity MLP keeps one-hot features") {
  Encoder2dConfig cfg{.dim = 29, .layers = 1, .gin_eps = 0.0};
  ParamStore<double> store = make_store_2d<double>("gin", cfg, 3);
  store.value("enc.layer0.fc1.w") = Matd::Identity(29, 29);
  store.value("enc.layer0.fc2.w") = Matd::Identity(29, 29);
  store.value("enc.layer0.fc1.b").setZero();
  store.value("enc.layer0.fc2.b").setZero();
  MolGraph g = to_graph(smiles("C"));
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  auto out = gin_encode(ws, "enc", g, cfg);
  CHECK((out.atom_tokens.v - g.node_features).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gin: triangle with equal features gives equal tokens") {
  Encoder2dConfig cfg{.dim = 16, .layers = 2};
  ParamStore<double> store = make_store_2d<double>("gin", cfg, 4);
  MolGraph g = to_graph(smiles("C1CC1"));
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  auto out = gin_encode(ws, "enc", g, cfg);
  for (int i = 1; i < 3; ++i)
    CHECK((out.atom_tokens.v.row(i) - out.atom_tokens.v.row(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gat: single atom attends only to itself") {
  Encoder2dConfig cfg{.dim = 8, .layers = 1, .heads = 2};
  ParamStore<double> store = make_store_2d<double>("gat", cfg, 5);
  MolGraph g = to_graph(smiles("C"));
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  auto out = gat_encode(ws, "enc", g, cfg);
  // alpha = [1], so the output is the mean over heads of W_h x.
  Matd expect = Matd::Zero(1, 8);
  for (int hd = 0; hd < 2; ++hd)
    expect += g.node_features * store.value("enc.layer0.head" + std::to_string(hd) + ".w");
  expect /= 2.0;
  CHECK((out.atom_tokens.v - expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gat: identical-feature pair gives symmetric outputs") {
  Encoder2dConfig cfg{.dim = 8, .layers = 2, .heads = 2};
  ParamStore<double> store = make_store_2d<double>("gat", cfg, 6);
  MolGraph g = to_graph(smiles("CC"));
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  auto out = gat_encode(ws, "enc", g, cfg);
  CHECK((out.atom_tokens.v.row(0) - out.atom_tokens.v.row(1)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("graphsage: isolated atom uses a zero neighbor vector") {
  Encoder2dConfig cfg{.dim = 12, .layers = 1};
  ParamStore<double> store = make_store_2d<double>("graphsage", cfg, 7);
  MolGraph g = to_graph(smiles("C"));
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  auto out = graphsage_encode(ws, "enc", g, cfg);
  Matd cat(1, 58);
  cat << g.node_features, Matd::Zero(1, 29);
  Matd expect = (cat * store.value("enc.layer0.w") + store.value("enc.layer0.b")).cwiseMax(0.0);
  CHECK((out.atom_tokens.v - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("graphsage: 3-path middle node aggregates the endpoint mean") {
  Encoder2dConfig cfg{.dim = 12, .layers = 1};
  ParamStore<double> store = make_store_2d<double>("graphsage", cfg, 8);
  MolGraph g = to_graph(smiles("CCO"));  // path C-C-O, middle node 1
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  auto out = graphsage_encode(ws, "enc", g, cfg);
  Matd mean_nb = 0.5 * (g.node_features.row(0) + g.node_features.row(2));
  Matd cat(1, 58);
  cat << g.node_features.row(1), mean_nb;
  Matd expect = (cat * store.value("enc.layer0.w") + store.value("enc.layer0.b")).cwiseMax(0.0);
  CHECK((out.atom_tokens.v.row(1) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mpnn: zero edge set reduces to gru(h, 0)") {
  Encoder2dConfig cfg{.dim = 10, .layers = 1};
  ParamStore<double> store = make_store_2d<double>("mpnn", cfg, 9);
  MolGraph g = to_graph(smiles("C"));
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  auto out = mpnn_encode(ws, "enc", g, cfg);

  Tape<double> tape2;
  Workspace<double> ws2(tape2, store, false, 0);
  TensorT<double> h = nn::linear(ws2, "enc.input",
                                 ws2.constant(g.node_features));
  TensorT<double> expect = gru_cell(ws2, "enc.layer0.gru", h,
                                    ws2.constant(Matd::Zero(1, 10)));
  CHECK((out.atom_tokens.v - expect.v).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("permutation: tokens equivariant, pooled invariant, for every encoder") {
  Rng rng(100);
  for (const std::string& name : kImplemented2d) {
    CAPTURE(name);
    Encoder2dConfig cfg{.dim = 16, .layers = 2, .heads = 2};
    ParamStore<double> store = make_store_2d<double>(name, cfg, 11);
    Molecule mol = smiles("CC(=O)Oc1ccccc1");
    MolGraph g = to_graph(mol);
    Tape<double> tape;
    Workspace<double> ws(tape, store, false, 0);
    auto base = encode2d(name, ws, "enc", g, cfg);

    for (int trial = 0; trial < 10; ++trial) {
      std::vector<int> perm(static_cast<size_t>(mol.num_atoms()));
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm);
      Tape<double> tape2;
      Workspace<double> ws2(tape2, store, false, 0);
      auto out = encode2d(name, ws2, "enc", permuted_graph(mol, perm), cfg);
      CHECK((out.pooled.v - base.pooled.v).cwiseAbs().maxCoeff() < 1e-10);
      for (int i = 0; i < mol.num_atoms(); ++i)
        CHECK((out.atom_tokens.v.row(perm[static_cast<size_t>(i)]) - base.atom_tokens.v.row(i))
                  .cwiseAbs()
                  .maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("grad check end-to-end for every 2D encoder on a small graph") {
  MolGraph g = to_graph(smiles("CC(=O)O"));
  for (const std::string& name : kImplemented2d) {
    CAPTURE(name);
    Encoder2dConfig cfg{.dim = 6, .layers = 2, .heads = 2};
    ParamStore<double> store = make_store_2d<double>(name, cfg, 13);
    double err = testutil::param_grad_check(store, [&](Workspace<double>& ws) {
      auto out = encode2d(name, ws, "enc", g, cfg);
      return mean_all(mul(out.pooled, out.pooled));
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("2D registry errors") {
  Encoder2dConfig cfg;
  ParamStore<double> store;
  Rng rng(1);
  for (const std::string& reserved : {"neuralfp", "attentivefp", "coatgin"}) {
    try {
      init_encoder2d(reserved, store, "enc", cfg, rng);
      FAIL("expected UnimplementedEncoder");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("UnimplementedEncoder") != std::string::npos);
    }
  }
  try {
    init_encoder2d("unknown-name", store, "enc", cfg, rng);
    FAIL("expected UnknownEncoder");
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    CHECK(msg.find("UnknownEncoder") != std::string::npos);
    CHECK(msg.find("gcn") != std::string::npos);  // lists valid names
    CHECK(msg.find("coatgin") != std::string::npos);
  }
}

// ---------------------------------------------------------------------------
// 3D encoders
// ---------------------------------------------------------------------------

namespace {

template <typename S>
ParamStore<S> make_store_3d(const std::string& name, const Encoder3dConfig& cfg, uint64_t seed) {
  ParamStore<S> store;
  Rng rng(seed);
  init_encoder3d(name, store, "enc", cfg, rng);
  return store;
}

Conformer rigid_motion(const Conformer& conf, const Eigen::Matrix3d& rot,
                       const Eigen::RowVector3d& t) {
  Conformer out = conf;
  out.coords = (conf.coords * rot.transpose()).rowwise() + t;
  return out;
}

}  // namespace

TEST_CASE("schnet: atoms beyond the cutoff do not interact") {
  Encoder3dConfig cfg{.dim = 8, .layers = 2};
  ParamStore<double> store = make_store_3d<double>("schnet", cfg, 21);
  Molecule mol = smiles("CC");
  Conformer conf;
  conf.coords.resize(2, 3);
  conf.coords << 0, 0, 0, 10, 0, 0;  // far beyond 5 A
  conf.elements = {"C", "C"};
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  auto out = schnet_encode(ws, "enc", mol, conf, cfg);
  Matd embed = store.value("enc.embed");
  int c_slot = chem::element_feature_index("C");
  CHECK((out.atom_tokens.v.row(0) - embed.row(c_slot)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((out.atom_tokens.v.row(1) - embed.row(c_slot)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("schnet: equilateral triangle with equal features gives equal tokens") {
  Encoder3dConfig cfg{.dim = 8, .layers = 2};
  ParamStore<double> store = make_store_3d<double>("schnet", cfg, 22);
  Molecule mol = smiles("C1CC1");
  Conformer conf;
  conf.coords.resize(3, 3);
  conf.coords << 0, 0, 0, 1.5, 0, 0, 0.75, 1.2990381056766580, 0;
  conf.elements = {"C", "C", "C"};
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  auto out = schnet_encode(ws, "enc", mol, conf, cfg);
  for (int i = 1; i < 3; ++i)
    CHECK((out.atom_tokens.v.row(i) - out.atom_tokens.v.row(0)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("schnet rejects atom-count mismatch") {
  Encoder3dConfig cfg{.dim = 8, .layers = 1};
  ParamStore<double> store = make_store_3d<double>("schnet", cfg, 23);
  Molecule mol = smiles("CCO");
  Conformer conf = synth_conformer(smiles("CC"), 1);
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  CHECK_THROWS_AS(schnet_encode(ws, "enc", mol, conf, cfg), ValidationError);
}

TEST_CASE("rigid-motion invariance of pooled 3D features (20 motions)") {
  Rng rng(31);
  Molecule mol = smiles("CC(=O)O");
  Conformer conf = synth_conformer(mol, 3);
  for (const std::string name : {std::string("schnet"), std::string("egnn"), std::string("unimol")}) {
    CAPTURE(name);
    Encoder3dConfig cfg{.dim = 8, .layers = 2, .unimol_stub = true};
    ParamStore<double> store = make_store_3d<double>(name, cfg, 24);
    Tape<double> tape;
    Workspace<double> ws(tape, store, false, 0);
    auto base = encode3d(name, ws, "enc", mol, conf, cfg);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::Matrix3d rot = testutil::random_rotation(rng);
      Eigen::RowVector3d t(rng.normal(0, 3), rng.normal(0, 3), rng.normal(0, 3));
      Tape<double> tape2;
      Workspace<double> ws2(tape2, store, false, 0);
      auto moved = encode3d(name, ws2, "enc", mol, rigid_motion(conf, rot, t), cfg);
      CHECK((moved.pooled.v - base.pooled.v).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("egnn: coordinate outputs are equivariant under rigid motions") {
  Rng rng(37);
  Molecule mol = smiles("NCCO");
  Conformer conf = synth_conformer(mol, 5);
  Encoder3dConfig cfg{.dim = 8, .layers = 2};
  ParamStore<double> store = make_store_3d<double>("egnn", cfg, 25);
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  auto base = egnn_encode(ws, "enc", mol, conf, cfg);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Matrix3d rot = testutil::random_rotation(rng);
    Eigen::RowVector3d t(rng.normal(0, 2), rng.normal(0, 2), rng.normal(0, 2));
    Tape<double> tape2;
    Workspace<double> ws2(tape2, store, false, 0);
    auto moved = egnn_encode(ws2, "enc", mol, rigid_motion(conf, rot, t), cfg);
    Matd expected = (base.coords.v * rot.transpose()).rowwise() + t;
    CHECK((moved.coords.v - expected).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("egnn: single atom keeps its coordinate and sees an empty sum") {
  Encoder3dConfig cfg{.dim = 6, .layers = 1};
  ParamStore<double> store = make_store_3d<double>("egnn", cfg, 26);
  Molecule mol = smiles("C");
  Conformer conf;
  conf.coords.resize(1, 3);
  conf.coords << 1.0, 2.0, 3.0;
  conf.elements = {"C"};
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  auto out = egnn_encode(ws, "enc", mol, conf, cfg);
  CHECK((out.coords.v - conf.coords).cwiseAbs().maxCoeff() == 0.0);

  Tape<double> tape2;
  Workspace<double> ws2(tape2, store, false, 0);
  TensorT<double> h = embedding_lookup(ws2.param("enc.embed"),
                                       std::vector<int>{chem::element_feature_index("C")});
  TensorT<double> expect = nn::mlp2(ws2, "enc.layer0.phi_h",
                                    concat_cols(h, ws2.constant(Matd::Zero(1, 6))),
                                    [](const Tensord& x) { return gelu(x); });
  CHECK((out.atom_tokens.v - expect.v).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("permutation invariance of pooled 3D outputs") {
  Rng rng(41);
  Molecule mol = smiles("CC(N)O");
  Conformer conf = synth_conformer(mol, 9);
  for (const std::string name : {std::string("schnet"), std::string("egnn")}) {
    CAPTURE(name);
    Encoder3dConfig cfg{.dim = 8, .layers = 2};
    ParamStore<double> store = make_store_3d<double>(name, cfg, 27);
    Tape<double> tape;
    Workspace<double> ws(tape, store, false, 0);
    auto base = encode3d(name, ws, "enc", mol, conf, cfg);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<int> perm(static_cast<size_t>(mol.num_atoms()));
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm);
      Molecule pmol = mol;
      for (size_t i = 0; i < mol.atoms.size(); ++i)
        pmol.atoms[static_cast<size_t>(perm[i])] = mol.atoms[i];
      for (size_t k = 0; k < mol.bonds.size(); ++k) {
        pmol.bonds[k].a = perm[static_cast<size_t>(mol.bonds[k].a)];
        pmol.bonds[k].b = perm[static_cast<size_t>(mol.bonds[k].b)];
      }
      Conformer pconf = conf;
      for (int i = 0; i < mol.num_atoms(); ++i) {
        pconf.coords.row(perm[static_cast<size_t>(i)]) = conf.coords.row(i);
        pconf.elements[static_cast<size_t>(perm[static_cast<size_t>(i)])] =
            conf.elements[static_cast<size_t>(i)];
      }
      Tape<double> tape2;
      Workspace<double> ws2(tape2, store, false, 0);
      auto out = encode3d(name, ws2, "enc", pmol, pconf, cfg);
      CHECK((out.pooled.v - base.pooled.v).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("attn_reaggregate: singleton and identical-token behavior") {
  ParamStore<double> store;
  Rng rng(51);
  init_attn_reaggregate(store, "attn", 6, rng);
  Matd token = Matd::Random(1, 6);
  Tape<double> tape;
  Workspace<double> ws(tape, store, false, 0);
  auto single = attn_reaggregate(ws, "attn", ws.constant(token));
  Matd expect = token * store.value("attn.wv");
  CHECK((single.atom_tokens.v - expect).cwiseAbs().maxCoeff() < 1e-12);

  Matd same = token.replicate(4, 1);
  Tape<double> tape2;
  Workspace<double> ws2(tape2, store, false, 0);
  auto rep = attn_reaggregate(ws2, "attn", ws2.constant(same));
  for (int i = 1; i < 4; ++i)
    CHECK((rep.atom_tokens.v.row(i) - rep.atom_tokens.v.row(0)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(attn_reaggregate(ws2, "attn", ws2.constant(Matd::Zero(0, 6))),
                  ValidationError);
}

TEST_CASE("grad check end-to-end for 3D encoders on a small conformer") {
  Molecule mol = smiles("CCO");
  Conformer conf = synth_conformer(mol, 2);
  for (const std::string name : {std::string("schnet"), std::string("egnn"), std::string("unimol")}) {
    CAPTURE(name);
    Encoder3dConfig cfg{.dim = 4, .layers = 1, .unimol_stub = true};
    ParamStore<double> store = make_store_3d<double>(name, cfg, 28);
    double err = testutil::param_grad_check(store, [&](Workspace<double>& ws) {
      auto out = encode3d(name, ws, "enc", mol, conf, cfg);
      return mean_all(mul(out.pooled, out.pooled));
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("3D registry: stubs and unknown names") {
  ParamStore<double> store;
  Rng rng(1);
  Encoder3dConfig cfg;
  for (const std::string name :
       {std::string("painn"), std::string("se3transformer"), std::string("dimenet++"),
        std::string("spherenet"), std::string("g-spherenet"), std::string("gvp"),
        std::string("gearnet"), std::string("3d-geoformer")}) {
    try {
      init_encoder3d(name, store, "enc", cfg, rng);
      FAIL("expected UnimplementedEncoder");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("UnimplementedEncoder") != std::string::npos);
    }
  }
  // unimol without the stub flag is reserved; with it, it resolves.
  CHECK_THROWS_AS(init_encoder3d("unimol", store, "enc", cfg, rng), ValidationError);
  Encoder3dConfig stub = cfg;
  stub.unimol_stub = true;
  init_encoder3d("unimol", store, "enc", stub, rng);
  CHECK(store.contains("enc.schnet.embed"));
  try {
    init_encoder3d("not-an-encoder", store, "enc2", cfg, rng);
    FAIL("expected UnknownEncoder");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("UnknownEncoder") != std::string::npos);
    CHECK(std::string(e.what()).find("schnet") != std::string::npos);
  }
}
