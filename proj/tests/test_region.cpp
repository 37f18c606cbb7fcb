#include <gtest/gtest.h>

#include "proxthresh/region.hpp"

using namespace proxthresh;

namespace {

Polyhedron ray_below(double b, bool strict = false) { return Polyhedron(1, {HalfSpace{{1.0}, b, strict}}); }
Polyhedron ray_above(double b, bool strict = false) { return Polyhedron(1, {HalfSpace{{-1.0}, -b, strict}}); }

}  // namespace

TEST(HalfSpace, StrictAndClosedMembership) {
  const HalfSpace closed{{1.0}, 0.0, false};
  const HalfSpace open{{1.0}, 0.0, true};
  const double zero = 0.0;
  EXPECT_TRUE(closed.contains(std::span<const double>(&zero, 1)));
  EXPECT_FALSE(open.contains(std::span<const double>(&zero, 1)));
  EXPECT_FALSE(closed.interior_contains(std::span<const double>(&zero, 1)));
}

TEST(Polyhedron, IntervalOfOneDimensionalCell) {
  const auto p = ray_above(-1.0).intersect(ray_below(2.0, true));
  const auto iv = p.interval();
  EXPECT_EQ(iv.lo, -1.0);
  EXPECT_TRUE(iv.lo_closed);
  EXPECT_EQ(iv.hi, 2.0);
  EXPECT_FALSE(iv.hi_closed);
}

TEST(Polyhedron, EmptinessByElimination) {
  EXPECT_TRUE(ray_below(0.0).intersect(ray_above(1.0)).is_empty());
  EXPECT_TRUE(ray_below(0.0, true).intersect(ray_above(0.0)).is_empty());
  EXPECT_FALSE(ray_below(0.0).intersect(ray_above(0.0)).is_empty());
  const Polyhedron tri(2, {{{-1.0, 0.0}, 0.0}, {{0.0, -1.0}, 0.0}, {{1.0, 1.0}, 1.0}});
  EXPECT_FALSE(tri.is_empty());
  EXPECT_TRUE(tri.intersect(Polyhedron(2, {{{1.0, 1.0}, -1.0}})).is_empty());
}

TEST(Polyhedron, RecessionDirections) {
  const auto half_line = ray_above(3.0);
  const auto dirs = half_line.recession_candidates();
  ASSERT_TRUE(dirs);
  ASSERT_EQ(dirs->size(), 1u);
  EXPECT_EQ((*dirs)[0], Point{1.0});
  const auto bounded = ray_above(0.0).intersect(ray_below(1.0));
  EXPECT_TRUE(bounded.recession_candidates()->empty());
  const Polyhedron quadrant(2, {{{-1.0, 0.0}, 0.0}, {{0.0, -1.0}, 0.0}});
  const auto q = quadrant.recession_candidates();
  ASSERT_TRUE(q);
  for (const auto& d : *q) EXPECT_TRUE(d[0] >= 0.0 && d[1] >= 0.0);
  EXPECT_FALSE(Polyhedron(3).recession_candidates());
}

TEST(RegionPartition, LocateReturnsLowestIndexOnSharedBoundary) {
  const RegionPartition part({ray_below(0.0), ray_above(0.0)});
  const double zero = 0.0;
  EXPECT_EQ(part.locate(std::span<const double>(&zero, 1)), 0u);
  const double one = 1.0;
  EXPECT_EQ(part.locate(std::span<const double>(&one, 1)), 1u);
}

TEST(RegionPartition, ValidationRejectsGapsAndOverlaps) {
  EXPECT_NO_THROW(validate_partition(RegionPartition({ray_below(0.0, true), ray_above(0.0)})));
  EXPECT_THROW(validate_partition(RegionPartition({ray_below(-1.0), ray_above(1.0)})), PartitionError);
  EXPECT_THROW(validate_partition(RegionPartition({ray_below(1.0), ray_above(-1.0)})), PartitionError);
}

TEST(RegionPartition, CellsMustShareDimension) {
  EXPECT_THROW(RegionPartition({Polyhedron(1), Polyhedron(2)}), PartitionError);
  EXPECT_THROW(RegionPartition(std::vector<Cell>{}), PartitionError);
}
