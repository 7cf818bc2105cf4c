#include "hsmrf/genealogy.hpp"
#include "hsmrf/newick.hpp"
#include "hsmrf/rng.hpp"
#include "hsmrf/simulate.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace hsmrf;

namespace {

Genealogy hetero3() { return Genealogy({{0.0, 1.0}, {2, 1}}, {2.0, 3.0}); }

// Lineage count at time t by replaying raw events.
int lineages_at(const Genealogy &g, double t) {
  int k = 0;
  for (std::size_t i = 0; i < g.schedule().times.size(); ++i)
    if (g.schedule().times[i] <= t) k += g.schedule().counts[i];
  for (double c : g.coal_times())
    if (c <= t) --k;
  return k;
}

} // namespace

TEST(Newick, TwoTipSymmetric) {
  const Genealogy g = parse_newick("(A:1.0,B:1.0);", {{"A", 0.0}, {"B", 0.0}});
  EXPECT_EQ(g.schedule().times, std::vector<double>{0.0});
  EXPECT_EQ(g.schedule().counts, std::vector<int>{2});
  EXPECT_EQ(g.coal_times(), std::vector<double>{1.0});
}

TEST(Newick, ThreeTipIsochronous) {
  const Genealogy g = parse_newick("((A:2.0,B:2.0):1.0,C:3.0);", {{"A", 0.0}, {"B", 0.0}, {"C", 0.0}});
  EXPECT_EQ(g.sample_size(), 3);
  EXPECT_EQ(g.coal_times(), (std::vector<double>{2.0, 3.0}));
}

TEST(Newick, ThreeTipHeterochronous) {
  const Genealogy g = parse_newick("((A:2.0,B:1.0):1.0,C:3.0);", {{"A", 0.0}, {"B", 1.0}, {"C", 0.0}});
  EXPECT_EQ(g.schedule().times, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(g.schedule().counts, (std::vector<int>{2, 1}));
  EXPECT_EQ(g.coal_times(), (std::vector<double>{2.0, 3.0}));
}

TEST(Newick, QuotedLabelsCommentsAndRootEdge) {
  const Genealogy g =
      parse_newick("[comment]('tip one':1.0,B:1.0):0.5;", {{"tip one", 0.0}, {"B", 0.0}});
  EXPECT_EQ(g.coal_times(), std::vector<double>{1.0});
}

TEST(Newick, Errors) {
  const DateMap d{{"A", 0.0}, {"B", 0.0}, {"C", 0.0}};
  EXPECT_THROW(parse_newick("(A:1.0,B:1.0)", d), NewickError);           // no semicolon
  EXPECT_THROW(parse_newick("(A:1.0,B:1.0,C:1.0);", d), NewickError);    // trifurcation
  EXPECT_THROW(parse_newick("(A:-1.0,B:1.0);", d), NewickError);         // negative length
  EXPECT_THROW(parse_newick("(A:1.0,(B:1.0);", d), NewickError);         // unbalanced
  EXPECT_THROW(parse_newick("(A:1.0,A:1.0);", d), NewickError);          // duplicate label
  EXPECT_THROW(parse_newick("(A:1.0,B:1.0);", {{"A", 0.0}, {"B", 0.5}}), InputError); // dates disagree
  try {
    parse_newick("(A:1.0,Z:1.0);", d);
    FAIL();
  } catch (const MissingLabelError &e) {
    EXPECT_EQ(e.label, "Z");
  }
}

TEST(Newick, DateToleranceIsRelative) {
  EXPECT_NO_THROW(parse_newick("(A:1.0,B:1.0);", {{"A", 0.0}, {"B", 5e-9}}));
  EXPECT_THROW(parse_newick("(A:1.0,B:1.0);", {{"A", 0.0}, {"B", 5e-8}}), InputError);
}

TEST(Newick, DatesCsv) {
  std::istringstream in("label,time\nA, 2001.5\nB,2000\n");
  const DateMap back = read_dates_csv(in, true);
  EXPECT_DOUBLE_EQ(back.at("A"), 0.0);
  EXPECT_DOUBLE_EQ(back.at("B"), 1.5);
  std::istringstream bad("name,date\nA,1\n");
  EXPECT_THROW(read_dates_csv(bad), InputError);
  std::istringstream dup("label,time\nA,1\nA,2\n");
  EXPECT_THROW(read_dates_csv(dup), InputError);
}

TEST(Newick, RoundTripSimulatedTree) {
  Engine rng = make_engine(3);
  const auto sim = simulate_coalescent(sample_schedule(5, 15, 2.0, rng), Trajectory::constant(1.0), rng);
  const std::string text = to_newick(sim.tree);
  std::ostringstream dates;
  for (int i : sim.tree.tips()) dates << sim.tree.nodes[i].label << ',' << sim.tree.nodes[i].age << '\n';
  DateMap dm;
  for (int i : sim.tree.tips()) dm[sim.tree.nodes[i].label] = sim.tree.nodes[i].age;
  const Genealogy g = parse_newick(text, dm);
  ASSERT_EQ(g.coal_times().size(), sim.genealogy.coal_times().size());
  for (std::size_t i = 0; i < g.coal_times().size(); ++i)
    EXPECT_NEAR(g.coal_times()[i], sim.genealogy.coal_times()[i], 1e-12);
  EXPECT_EQ(g.schedule().counts, sim.genealogy.schedule().counts);
}

TEST(Genealogy, ValidationRejectsBadInput) {
  EXPECT_THROW(Genealogy({{0.0}, {2}}, {}), InputError);                   // count
  EXPECT_THROW(Genealogy({{0.0}, {3}}, {2.0, 1.0}), InputError);           // not increasing
  EXPECT_THROW(Genealogy({{0.0, 1.0}, {2, 1}}, {1.0, 3.0}), InputError);   // tie with sampling
  EXPECT_THROW(Genealogy({{0.0, 4.0}, {2, 1}}, {2.0, 3.0}), InputError);   // TMRCA before last sample
  EXPECT_THROW(Genealogy({{0.0, 1.0}, {1, 2}}, {0.5, 3.0}), InputError);   // coalescence with 1 lineage
  EXPECT_THROW(Genealogy({{0.5}, {2}}, {1.0}), InputError);                // schedule must start at 0
}

TEST(LineageIntervals, TwoTips) {
  const auto iv = lineage_intervals(Genealogy({{0.0}, {2}}, {1.0}));
  ASSERT_EQ(iv.size(), 1u);
  EXPECT_EQ(iv[0].start, 0.0);
  EXPECT_EQ(iv[0].end, 1.0);
  EXPECT_EQ(iv[0].lineages, 2);
  EXPECT_EQ(iv[0].coal_factor, 1.0);
}

TEST(LineageIntervals, ThreeTipsIsochronous) {
  const auto iv = lineage_intervals(Genealogy({{0.0}, {3}}, {2.0, 3.0}));
  ASSERT_EQ(iv.size(), 2u);
  EXPECT_EQ(iv[0].lineages, 3);
  EXPECT_EQ(iv[0].coal_factor, 3.0);
  EXPECT_EQ(iv[1].start, 2.0);
  EXPECT_EQ(iv[1].coal_factor, 1.0);
}

TEST(LineageIntervals, ThreeTipsHeterochronous) {
  const auto iv = lineage_intervals(hetero3());
  ASSERT_EQ(iv.size(), 3u);
  EXPECT_EQ(iv[0].lineages, 2);
  EXPECT_EQ(iv[0].ends_in, IntervalEnd::Sampling);
  EXPECT_EQ(iv[0].end, 1.0);
  EXPECT_EQ(iv[1].lineages, 3);
  EXPECT_EQ(iv[1].coal_factor, 3.0);
  EXPECT_EQ(iv[1].ends_in, IntervalEnd::Coalescent);
  EXPECT_EQ(iv[2].lineages, 2);
  EXPECT_EQ(iv[2].ends_in, IntervalEnd::Coalescent);
}

TEST(LineageIntervals, PropertiesOnRandomGenealogies) {
  Engine rng = make_engine(17);
  for (int rep = 0; rep < 50; ++rep) {
    const int n0 = 1 + static_cast<int>(rng() % 5), rest = 1 + static_cast<int>(rng() % 30);
    const auto sim = simulate_coalescent(sample_schedule(n0, rest, 3.0, rng), Trajectory::constant(0.7), rng);
    const Genealogy &g = sim.genealogy;
    const auto iv = lineage_intervals(g);
    int coal = 0, samp = 0;
    double prev_end = 0.0;
    for (const auto &i : iv) {
      EXPECT_EQ(i.start, prev_end); // tiles with no gaps
      EXPECT_GT(i.end, i.start);
      prev_end = i.end;
      (i.ends_in == IntervalEnd::Coalescent ? coal : samp)++;
      EXPECT_EQ(i.coal_factor, i.lineages * (i.lineages - 1) / 2.0);
      EXPECT_EQ(i.lineages, lineages_at(g, 0.5 * (i.start + i.end)));
    }
    EXPECT_EQ(prev_end, g.tmrca());
    EXPECT_EQ(coal, g.sample_size() - 1);
    EXPECT_EQ(samp, g.sampling_events() - 1);
    // Rebuilding from the stored form gives identical intervals.
    const auto again = lineage_intervals(Genealogy(g.schedule(), g.coal_times()));
    ASSERT_EQ(again.size(), iv.size());
    for (std::size_t k = 0; k < iv.size(); ++k) {
      EXPECT_EQ(again[k].start, iv[k].start);
      EXPECT_EQ(again[k].lineages, iv[k].lineages);
    }
  }
}

TEST(SamplingSchedule, FromSampleTimesMergesTies) {
  const auto s = SamplingSchedule::from_sample_times({3.0, 1.0, 1.0, 2.5});
  EXPECT_EQ(s.times, (std::vector<double>{0.0, 1.5, 2.0}));
  EXPECT_EQ(s.counts, (std::vector<int>{2, 1, 1}));
  EXPECT_THROW(SamplingSchedule::from_sample_times({1.0}), InputError);
}
