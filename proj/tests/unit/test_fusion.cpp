#include <gtest/gtest.h>

#include <cmath>

#include "semtrack/fusion.hpp"
#include "semtrack/verify/fusion_oracle.hpp"

namespace semtrack {
namespace {

Tensor random_tensor(Shape shape, RngStream& rng, double bound = 1.0) { return Tensor::uniform(std::move(shape), bound, rng); }

struct Instance {
  FusionDims dims;
  FusionParams params;
  Tensor x_q, x_s;

  explicit Instance(std::uint64_t seed) {
    RngStream rng(derive_key({seed}));
    params = init_fusion_params(dims, rng);
    x_q = random_tensor({dims.channels, dims.height, dims.width}, rng);
    x_s = random_tensor({dims.channels, dims.height, dims.width}, rng);
  }
  Tensor queries(std::uint64_t seed) const {
    RngStream rng(seed);
    return random_tensor({dims.queries, dims.query_dim}, rng);
  }
};

TEST(Casa, ZeroGeneratorsHalveBothBranches) {
  Instance in(1);
  auto p = in.params.adapter.casa;
  zero(p.channel.reduce);
  zero(p.channel.expand);
  zero(p.spatial.conv);
  const auto out = casa(in.x_q, p);
  for (std::size_t i = 0; i < in.x_q.size(); ++i) {
    EXPECT_EQ(out.channel[i], 0.5 * in.x_q[i]);
    EXPECT_EQ(out.spatial[i], 0.5 * in.x_q[i]);
  }
}

TEST(Casa, SharedParametersGiveEqualResultsOnEqualInputs) {
  Instance in(2);
  const auto t = adapter_trace(in.x_s, in.x_s, in.params.adapter);
  EXPECT_EQ(t.f_qc, t.f_sc);
  EXPECT_EQ(t.f_qs, t.f_ss);
}

TEST(Adapter, ZeroedProjectionsReturnSemanticMapExactly) {
  Instance in(3);
  zero_adapter_projections(in.params.adapter);
  EXPECT_EQ(adapter_forward(in.x_q, in.x_s, in.params.adapter), in.x_s);
}

TEST(Adapter, ZeroQueriesWithZeroBiasesReturnSemanticMap) {
  Instance in(4);
  auto& p = in.params.adapter;
  for (auto* m : {&p.channel_mha, &p.spatial_mha})
    for (auto* l : {&m->query, &m->key, &m->value, &m->output}) l->bias.fill(0.0);
  const Tensor zeros(in.x_q.shape());
  EXPECT_EQ(adapter_forward(zeros, in.x_s, p), in.x_s);
}

TEST(Adapter, MatchesStraightLineOracle) {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    Instance in(seed);
    EXPECT_LT(max_abs_diff(adapter_forward(in.x_q, in.x_s, in.params.adapter),
                           verify::oracle_adapter(in.x_q, in.x_s, in.params.adapter)),
              1e-9);
  }
}

TEST(ReshapeQueries, IdentityProjectionIsPureReshape) {
  RngStream rng(5);
  const auto x = random_tensor({6, 3}, rng);
  const auto grid = reshape_queries(x, 2, 3, identity_linear(3));
  ASSERT_EQ(grid.shape(), (Shape{3, 2, 3}));
  for (std::size_t n = 0; n < 6; ++n)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(grid.at(c, n / 3, n % 3), x.at(n, c));
}

TEST(ReshapeQueries, MissingQueriesLeaveZeroCells) {
  RngStream rng(6);
  const auto x = random_tensor({4, 3}, rng);
  const auto grid = reshape_queries(x, 3, 3, identity_linear(3));
  for (std::size_t cell = 4; cell < 9; ++cell)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(grid.at(c, cell / 3, cell % 3), 0.0);
}

TEST(ReshapeQueries, GatherInvertsScatter) {
  RngStream rng(7);
  const auto proj = init_linear(4, 5, rng);
  const auto x = random_tensor({6, 4}, rng);
  const auto back = gather_queries(reshape_queries(x, 3, 3, proj), 6);
  EXPECT_EQ(back, linear(x, proj));
}

TEST(ReshapeQueries, OverflowKeepsHighestScores) {
  const Tensor x({4, 1}, {1.0, 2.0, 3.0, 4.0});
  const std::vector<double> scores{0.1, 0.9, 0.5, 0.9};
  const auto grid = reshape_queries(x, 1, 3, identity_linear(1), scores);
  EXPECT_EQ(grid[0], 2.0);
  EXPECT_EQ(grid[1], 4.0);
  EXPECT_EQ(grid[2], 3.0);
  const auto unscored = reshape_queries(x, 1, 3, identity_linear(1));
  EXPECT_EQ(unscored[2], 3.0);
}

TEST(Vsfm, ZeroedExtractorReturnsQueriesExactly) {
  Instance in(8);
  auto p = in.params.vsfm;
  zero_extractor_output(p);
  const auto q = in.queries(9);
  EXPECT_EQ(vsfm_forward(in.x_s, q, p), q);
}

TEST(Vsfm, GateEndpoints) {
  Instance in(10);
  const auto q = in.queries(11);
  VsfmOptions ones;
  ones.gate_override = 1.0;
  EXPECT_EQ(vsfm_trace(in.x_s, q, in.params.vsfm, ones).f_f, in.x_s);
  VsfmOptions zeros;
  zeros.gate_override = 0.0;
  const auto t = vsfm_trace(in.x_s, q, in.params.vsfm, zeros);
  EXPECT_EQ(t.f_f, t.x_rq);
}

TEST(Vsfm, GateIsChannelSoftmax) {
  Instance in(12);
  const auto t = vsfm_trace(in.x_s, in.queries(13), in.params.vsfm);
  const auto C = t.f_s.extent(0), L = t.f_s.extent(1) * t.f_s.extent(2);
  for (std::size_t i = 0; i < L; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < C; ++c) s += t.f_s[c * L + i];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Vsfm, MatchesStraightLineOracle) {
  for (std::uint64_t seed = 20; seed < 30; ++seed) {
    Instance in(seed);
    const auto q = in.queries(seed);
    EXPECT_LT(max_abs_diff(vsfm_forward(in.x_s, q, in.params.vsfm), verify::oracle_vsfm(in.x_s, q, in.params.vsfm)),
              1e-9);
  }
}

TEST(Vsfm, WrongQueryShapeThrows) {
  Instance in(14);
  EXPECT_THROW(vsfm_forward(in.x_s, Tensor({3, 4}), in.params.vsfm), ShapeError);
}

TEST(FuseQueries, ComposesAdapterAndVsfm) {
  Instance in(15);
  const auto q = in.queries(16);
  const auto x_rq = reshape_queries(q, in.dims.height, in.dims.width, in.params.vsfm.query_projection);
  const auto expected = verify::oracle_vsfm(verify::oracle_adapter(x_rq, in.x_s, in.params.adapter), q, in.params.vsfm);
  EXPECT_LT(max_abs_diff(fuse_queries(q, in.x_s, in.params), expected), 1e-9);
}

TEST(GradCheck, AdapterWithZeroedProjectionsHasUnitGradient) {
  Instance in(17);
  zero_adapter_projections(in.params.adapter);
  const auto r = grad_check_fusion(GradProbe::AdapterOutput, in.x_q, in.x_s, &in.params.adapter, nullptr);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[1].input, "X_s");
  for (double g : r[1].gradient.data()) EXPECT_NEAR(g, 1.0, 1e-9);
  for (double g : r[0].gradient.data()) EXPECT_NEAR(g, 0.0, 1e-9);
}

TEST(GradCheck, VsfmWithZeroedExtractorHasUnitGradient) {
  Instance in(18);
  zero_extractor_output(in.params.vsfm);
  const auto r = grad_check_fusion(GradProbe::VsfmOutput, in.x_s, in.queries(19), nullptr, &in.params.vsfm);
  EXPECT_EQ(r[1].input, "X_q");
  for (double g : r[1].gradient.data()) EXPECT_NEAR(g, 1.0, 1e-9);
}

TEST(GradCheck, LiveInstanceIsSecondOrderConsistent) {
  RngStream rng(derive_key({0x6c697665ULL}));
  FusionDims dims;
  dims.channels = 16;
  dims.height = dims.width = 4;
  int checked = 0;
  for (int i = 0; i < 20 && checked < 2; ++i) {
    const auto p = init_fusion_params(dims, rng).vsfm;
    const auto x_as = random_tensor({16, 4, 4}, rng, 3.0);
    const auto q = random_tensor({dims.queries, dims.query_dim}, rng, 3.0);
    if (extractor_inactive(vsfm_trace(x_as, q, p).f_m, p.extractor)) continue;
    ++checked;
    for (const auto& r : grad_check_fusion(GradProbe::VsfmOutput, x_as, q, nullptr, &p)) {
      EXPECT_TRUE(r.finite);
      EXPECT_GE(r.richardson_ratio, 3.9) << r.input;
      EXPECT_LE(r.richardson_ratio, 4.1) << r.input;
    }
  }
  EXPECT_EQ(checked, 2);
}

TEST(Params, StoreRoundTrip) {
  Instance in(20);
  ArrayStore store;
  store_params(store, in.params.adapter);
  store_params(store, in.params.vsfm);
  const auto back = ArrayStore::deserialize(store.serialize());
  EXPECT_EQ(back, store);
  const auto adapter = load_adapter_params(back);
  const auto vsfm = load_vsfm_params(back);
  const auto q = in.queries(21);
  EXPECT_EQ(adapter_forward(in.x_q, in.x_s, adapter), adapter_forward(in.x_q, in.x_s, in.params.adapter));
  EXPECT_EQ(vsfm_forward(in.x_s, q, vsfm), vsfm_forward(in.x_s, q, in.params.vsfm));
}

}  // namespace
}  // namespace semtrack
