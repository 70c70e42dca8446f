#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>

#include "rbmwave/config.hpp"
#include "rbmwave/errors.hpp"
#include "rbmwave/randomization.hpp"
#include "test_support.hpp"

using namespace rbmwave;
using rbmwave::testing::diamond_graph;
using rbmwave::testing::diamond_scheme;

namespace {

// Brute-force E[(c chi / pi - c)^2] over the subset list, with pi by enumeration.
double variance_by_enumeration(const std::vector<std::vector<EdgeId>>& subsets, const std::vector<double>& p,
                               EdgeId e, double c) {
  double pi = 0.0;
  for (std::size_t w = 0; w < subsets.size(); ++w)
    for (EdgeId k : subsets[w]) pi += k == e ? p[w] : 0.0;
  double var = 0.0;
  for (std::size_t w = 0; w < subsets.size(); ++w) {
    const bool in = std::find(subsets[w].begin(), subsets[w].end(), e) != subsets[w].end();
    const double ch = in ? c / pi : 0.0;
    var += p[w] * (ch - c) * (ch - c);
  }
  return var;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n + 1)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int v) { return parent[v] == v ? v : parent[v] = find(parent[v]); }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

}  // namespace

TEST(EdgeProbability, Examples) {
  const SubsetScheme s = diamond_scheme();
  EXPECT_DOUBLE_EQ(edge_probability(s, 1), 0.25);
  EXPECT_DOUBLE_EQ(edge_probability(s, 7), 0.25);
  EXPECT_DOUBLE_EQ(edge_probability(s, 2), 0.5);
  EXPECT_DOUBLE_EQ(edge_probability(SubsetScheme::all_edges(diamond_graph()), 4), 1.0);

  const SubsetScheme two({{1}, {1, 2}}, {0.3, 0.7});
  EXPECT_DOUBLE_EQ(edge_probability(two, 1), 1.0);
  EXPECT_DOUBLE_EQ(edge_probability(two, 2), 0.7);
}

TEST(VarianceCh, MatchesEnumerationOracle) {
  const std::vector<std::vector<EdgeId>> subsets{{1, 2, 3}, {2, 4, 5}, {3, 4, 6}, {5, 6, 7}};
  const std::vector<double> p{0.25, 0.25, 0.25, 0.25};
  EXPECT_NEAR(variance_by_enumeration(subsets, p, 2, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(variance_by_enumeration(subsets, p, 1, 1.0), 3.0, 1e-15);

  const SubsetScheme s = diamond_scheme();
  for (EdgeId e = 1; e <= 7; ++e) {
    EXPECT_NEAR(variance_ch(s, e, 1.0), variance_by_enumeration(subsets, p, e, 1.0), 1e-14);
    EXPECT_NEAR(variance_ch_closed_form(s, e, 1.0), variance_by_enumeration(subsets, p, e, 1.0), 1e-14);
  }
  EXPECT_EQ(variance_ch(SubsetScheme::all_edges(diamond_graph()), 3, 7.0), 0.0);
}

TEST(VarianceCh, ClosedFormOnRandomSchemes) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int edges = 2 + static_cast<int>(rng() % 6);
    const int count = 1 + static_cast<int>(rng() % 5);
    std::vector<std::vector<EdgeId>> subsets(static_cast<std::size_t>(count));
    for (auto& s : subsets)
      for (EdgeId e = 1; e <= edges; ++e)
        if (rng() % 2) s.push_back(e);
    for (EdgeId e = 1; e <= edges; ++e) subsets[rng() % subsets.size()].push_back(e);  // coverage
    for (auto& s : subsets) {
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
    }
    std::vector<double> p(subsets.size());
    for (double& v : p) v = unit(rng);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v /= total;
    p.back() = 1.0 - std::accumulate(p.begin(), p.end() - 1, 0.0);

    const SubsetScheme scheme(subsets, p);
    const double c = 0.5 + unit(rng) * 4.0;
    for (EdgeId e = 1; e <= edges; ++e) {
      const double oracle = variance_by_enumeration(subsets, p, e, c);
      EXPECT_NEAR(variance_ch(scheme, e, c), oracle, 1e-10 * (1.0 + oracle));
      EXPECT_NEAR(variance_ch_closed_form(scheme, e, c), oracle, 1e-10 * (1.0 + oracle));
      EXPECT_NEAR(mean_speed_check(scheme, e, c), c, 1e-12 * c);
    }
  }
}

TEST(RandomizedSpeed, Examples) {
  const SubsetScheme s = diamond_scheme();
  EXPECT_DOUBLE_EQ(randomized_speed(s, 1, 1.0, 1), 4.0);
  EXPECT_DOUBLE_EQ(randomized_speed(s, 2, 1.0, 1), 2.0);
  EXPECT_EQ(randomized_speed(s, 7, 1.0, 1), 0.0);
  EXPECT_EQ(randomized_speed(SubsetScheme::all_edges(diamond_graph()), 5, 3.5, 1), 3.5);

  const SubsetScheme seventy({{1}, {1, 2}}, {0.3, 0.7});
  EXPECT_DOUBLE_EQ(randomized_speed(seventy, 2, 5.0, 2), 50.0 / 7.0);

  const std::vector<double> speeds = randomized_speeds(s, diamond_graph(), 4);
  EXPECT_EQ(speeds, (std::vector<double>{0, 0, 0, 0, 2, 2, 4}));
}

TEST(MeanSpeed, Examples) {
  EXPECT_NEAR(mean_speed_check(diamond_scheme(), 1, 1.0), 1.0, 1e-15);
  EXPECT_EQ(mean_speed_check(SubsetScheme::all_edges(diamond_graph()), 2, 2.5), 2.5);
  EXPECT_NEAR(mean_speed_check(SubsetScheme({{1}, {1, 2}}, {0.3, 0.7}), 2, 2.0), 2.0, 1e-15);
}

TEST(SubsetScheme, Validation) {
  EXPECT_THROW(SubsetScheme({{1}, {2}}, {0.5, 0.4}), SchemeError);
  EXPECT_THROW(SubsetScheme({{1}, {2}}, {1.2, -0.2}), SchemeError);
  EXPECT_THROW(SubsetScheme({{1}}, {0.5, 0.5}), SchemeError);
  EXPECT_THROW(SubsetScheme({}, {}), SchemeError);

  const SubsetScheme misses_edge_7({{1, 2, 3}, {2, 4, 5}, {3, 4, 6}}, {0.5, 0.25, 0.25});
  EXPECT_THROW(misses_edge_7.validate_against(diamond_graph()), SchemeError);
  EXPECT_THROW(edge_probability(misses_edge_7, 7), SchemeError);
  const SubsetScheme unknown({{1, 2, 3, 4, 5, 6, 7, 8}}, {1.0});
  EXPECT_THROW(unknown.validate_against(diamond_graph()), SchemeError);
  EXPECT_NO_THROW(diamond_scheme().validate_against(diamond_graph()));
  EXPECT_THROW(diamond_scheme().subset(5), ArgumentError);
}

TEST(SampleRealization, DegenerateAndDeterministic) {
  const SubsetScheme point({{1, 2}, {1}, {2}}, {1.0, 0.0, 0.0});
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    const RealizationVector r = sample_realization(point, 1000, seed);
    EXPECT_TRUE(std::all_of(r.indices.begin(), r.indices.end(), [](int w) { return w == 1; }));
  }
  const RealizationVector a = sample_realization(diamond_scheme(), 5000, 123);
  const RealizationVector b = sample_realization(diamond_scheme(), 5000, 123);
  const RealizationVector c = sample_realization(diamond_scheme(), 5000, 124);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_NE(a.indices, c.indices);
  EXPECT_EQ(a.at(1), a.indices.front());
  EXPECT_THROW(sample_realization(diamond_scheme(), 0, 1), ArgumentError);
}

TEST(SampleRealization, FrequenciesWithinThreeSigma) {
  const RealizationVector r = sample_realization(diamond_scheme(), 100000, 2024);
  std::vector<int> counts(4, 0);
  for (int w : r.indices) ++counts[static_cast<std::size_t>(w - 1)];
  for (int c : counts) EXPECT_NEAR(c / 1e5, 0.25, 0.01);
}

TEST(SampleRealization, ChiSquaredOnUnequalProbabilities) {
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  const SubsetScheme s({{1}, {1}, {1}, {1}}, p);
  const std::size_t n = 100000;
  const RealizationVector r = sample_realization(s, n, 77);
  std::vector<double> counts(p.size(), 0.0);
  for (int w : r.indices) counts[static_cast<std::size_t>(w - 1)] += 1.0;
  double stat = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double expected = p[i] * static_cast<double>(n);
    stat += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  const boost::math::chi_squared dist(static_cast<double>(p.size() - 1));
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, stat)), 1e-3);
}

TEST(Fixtures, SubsetsAreSpanningForestsCoveringEveryEdge) {
  for (const char* name : {"diamond_network.json", "gaslib40_network.json"}) {
    std::ifstream in(rbmwave::testing::fixture_path(name));
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const NetworkDocument doc = parse_network_document(text);
    ASSERT_TRUE(doc.scheme.has_value()) << name;
    const MetricGraph& g = doc.graph;
    const SubsetScheme& s = *doc.scheme;
    std::vector<bool> covered(static_cast<std::size_t>(g.edge_count()), false);
    for (SubsetIndex w = 1; w <= s.size(); ++w) {
      UnionFind uf(g.vertex_count());
      for (EdgeId e : s.subset(w)) {
        covered[static_cast<std::size_t>(e - 1)] = true;
        EXPECT_TRUE(uf.unite(g.edge(e).start, g.edge(e).end)) << name << " subset " << w << " has a cycle";
      }
    }
    EXPECT_TRUE(std::all_of(covered.begin(), covered.end(), [](bool b) { return b; })) << name;
    for (const EdgeSpec& e : g.edges()) EXPECT_NEAR(mean_speed_check(s, e.id, e.speed), e.speed, 1e-12);
  }
}
