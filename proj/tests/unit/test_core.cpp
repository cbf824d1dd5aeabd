#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "tabsense/core/checksum.hpp"
#include "tabsense/core/error.hpp"
#include "tabsense/core/format.hpp"
#include "tabsense/core/parallel.hpp"
#include "tabsense/core/random.hpp"

using namespace tabsense;

TEST(Error, CodeNamesAreDistinct) {
  std::set<std::string_view> names;
  for (int c = 0; c <= static_cast<int>(ErrorCode::kInternal); ++c) {
    names.insert(ErrorCodeName(static_cast<ErrorCode>(c)));
  }
  EXPECT_EQ(names.size(), static_cast<size_t>(ErrorCode::kInternal) + 1);
  EXPECT_EQ(ErrorCodeName(ErrorCode::kFingerprintMismatch), "fingerprint_mismatch");
}

TEST(Error, RequireThrowsWithCode) {
  EXPECT_NO_THROW(Require(true, ErrorCode::kDomain, "x"));
  try {
    Require(false, ErrorCode::kDomain, "bad value");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDomain);
    EXPECT_STREQ(e.what(), "bad value");
  }
}

TEST(Rng, SameSeedSameStream) {
  Rng a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const uint64_t x = a.NextU64();
    EXPECT_EQ(x, b.NextU64());
    differs |= x != c.NextU64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformAndIndexRanges) {
  Rng rng(1);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.Uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    ASSERT_LT(rng.Index(7), 7u);
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.01);
}

TEST(Rng, NormalMoments) {
  Rng rng(3);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.Normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng rng(5);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  rng.Shuffle(v);
  std::set<int> seen(v.begin(), v.end());
  EXPECT_EQ(seen.size(), 50u);
}

TEST(Format, DoubleRoundTrips) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
    EXPECT_EQ(std::stod(FormatDouble(x)), x);
  }
  EXPECT_EQ(FormatDouble(0.5), "0.5");
  EXPECT_EQ(FormatDouble(3.0), "3");
}

TEST(Format, CsvFieldQuoting) {
  EXPECT_EQ(CsvField("plain"), "plain");
  EXPECT_EQ(CsvField("a,b"), "\"a,b\"");
  EXPECT_EQ(CsvField("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(CsvField("two\nlines"), "\"two\nlines\"");
}

TEST(Checksum, Crc32CheckValue) {
  EXPECT_EQ(Crc32("123456789"), 0xCBF43926u);
  EXPECT_EQ(Crc32(""), 0u);
}

TEST(Parallel, CoversEveryIndexOnce) {
  for (size_t threads : {1u, 3u, 8u}) {
    SetMaxThreads(threads);
    std::vector<std::atomic<int>> hits(10007);
    ParallelFor(hits.size(), [&](size_t b, size_t e) {
      for (size_t i = b; i < e; ++i) hits[i]++;
    }, 16);
    for (auto& h : hits) ASSERT_EQ(h.load(), 1);
  }
  SetMaxThreads(0);
}

TEST(Parallel, RethrowsWorkerException) {
  SetMaxThreads(4);
  EXPECT_THROW(ParallelFor(1000, [](size_t b, size_t) {
    if (b > 0) Fail(ErrorCode::kInternal, "boom");
  }, 10), Error);
  SetMaxThreads(0);
}

TEST(Parallel, EmptyRangeIsNoop) {
  bool called = false;
  ParallelFor(0, [&](size_t, size_t) { called = true; });
  EXPECT_FALSE(called);
}
