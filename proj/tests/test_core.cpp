#include "qmcmc/ledger.hpp"
#include "qmcmc/rng.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace qmcmc;

TEST(Rng, SplitIgnoresParentConsumption) {
  Rng a(5), b(5);
  for (int i = 0; i < 17; ++i) a.next_u64();
  EXPECT_EQ(a.split(7).next_u64(), b.split(7).next_u64());
  EXPECT_EQ(a.split(Stream::Chain, 3).next_u64(), b.split(Stream::Chain, 3).next_u64());
  EXPECT_NE(b.split(Stream::Chain, 3).next_u64(), b.split(Stream::Chain, 4).next_u64());
}

TEST(Rng, UniformIntIsInclusive) {
  Rng r(1);
  bool lo = false, hi = false;
  for (int i = 0; i < 2000; ++i) {
    const auto v = r.uniform_int(2, 4);
    ASSERT_GE(v, 2u);
    ASSERT_LE(v, 4u);
    lo = lo || v == 2;
    hi = hi || v == 4;
  }
  EXPECT_TRUE(lo && hi);
}

TEST(Rng, NormalMoments) {
  Rng r(2);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, HashSphereIsUnitAndPure) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Vector u = hash_unit_sphere(s, 5);
    EXPECT_NEAR(u.norm(), 1.0, 1e-12);
    EXPECT_EQ(u, hash_unit_sphere(s, 5));
  }
  const double h = hash_uniform(9);
  EXPECT_GE(h, 0.0);
  EXPECT_LT(h, 1.0);
}

TEST(Rng, UnitBallStaysInside) {
  Rng r(3);
  for (int i = 0; i < 1000; ++i) EXPECT_LE(r.unit_ball(3).norm(), 1.0);
}

namespace {

QueryLedger random_ledger(Rng& r) {
  QueryLedger l;
  const char* phases[] = {"main", "anchor", "estimate"};
  for (int k = 0; k < 5; ++k) {
    l.set_phase(phases[r.uniform_int(0, 2)]);
    l.charge_grad_classical(r.uniform_int(0, 100));
    l.charge_grad_quantum(r.uniform_int(0, 100));
    l.charge_eval_classical(r.uniform_int(0, 100));
    l.charge_eval_quantum(r.uniform_int(0, 100));
  }
  l.record_emulation_draws(r.uniform_int(0, 10));
  return l;
}

}  // namespace

TEST(Ledger, MergeIsCommutativeAndAssociative) {
  Rng r(11);
  for (int trial = 0; trial < 50; ++trial) {
    const QueryLedger a = random_ledger(r), b = random_ledger(r), c = random_ledger(r);
    QueryLedger ab = a;
    ab.merge(b);
    QueryLedger ba = b;
    ba.merge(a);
    EXPECT_EQ(ab, ba);
    QueryLedger ab_c = ab;
    ab_c.merge(c);
    QueryLedger bc = b;
    bc.merge(c);
    QueryLedger a_bc = a;
    a_bc.merge(bc);
    EXPECT_EQ(ab_c, a_bc);
    EXPECT_EQ(ab_c.totals().total(), a.totals().total() + b.totals().total() + c.totals().total());
  }
}

TEST(Ledger, CountersAreMonotoneAndSaturate) {
  QueryLedger l;
  std::uint64_t prev = 0;
  Rng r(4);
  for (int i = 0; i < 100; ++i) {
    l.charge_eval_quantum(r.uniform_int(0, 1000));
    ASSERT_GE(l.totals().eval_q, prev);
    prev = l.totals().eval_q;
  }
  l.charge_eval_quantum(std::numeric_limits<std::uint64_t>::max());
  EXPECT_EQ(l.totals().eval_q, std::numeric_limits<std::uint64_t>::max());
  EXPECT_EQ(saturating_add(std::numeric_limits<std::uint64_t>::max(), 5),
            std::numeric_limits<std::uint64_t>::max());
}

TEST(Ledger, PhaseScopeRestoresLabel) {
  QueryLedger l;
  {
    PhaseScope s(l, "anchor");
    l.charge_grad_classical(3);
  }
  l.charge_grad_classical(1);
  EXPECT_EQ(l.phases().at("anchor").grad_c, 3u);
  EXPECT_EQ(l.phases().at("main").grad_c, 1u);
  EXPECT_EQ(l.phase(), "main");
}

TEST(Ledger, JsonRoundTrip) {
  Rng r(8);
  const QueryLedger a = random_ledger(r);
  const auto j = a.to_json();
  const QueryLedger b = QueryLedger::from_json(j);
  EXPECT_EQ(a.phases(), b.phases());
  for (const auto& [phase, c] : a.phases()) {
    EXPECT_EQ(j.at(phase).at("grad_c").get<std::uint64_t>(), c.grad_c);
    EXPECT_EQ(j.at(phase).at("eval_q").get<std::uint64_t>(), c.eval_q);
  }
}
