// Helpers shared by the unit tests.

#ifndef CLCNET_TESTS_TEST_UTIL_H_
#define CLCNET_TESTS_TEST_UTIL_H_

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "clcnet/common.h"

namespace clcnet::testing {

inline std::vector<double> GaussianSignal(uint64_t seed, size_t n,
                                          double scale = 1.0) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = scale * rng.Normal();
  return x;
}

inline double MaxAbsDiff(const std::vector<double>& a,
                         const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double MaxAbs(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// Fresh directory per test, under CLCNET_TEST_TMP when set.
inline std::filesystem::path TestDir() {
  const char* root = std::getenv("CLCNET_TEST_TMP");
  std::filesystem::path base =
      root ? root : std::filesystem::temp_directory_path() / "clcnet_tests";
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const std::filesystem::path dir =
      base / (std::string(info->test_suite_name()) + "." + info->name());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace clcnet::testing

#endif  // CLCNET_TESTS_TEST_UTIL_H_
