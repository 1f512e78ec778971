#pragma once

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "shapes.hpp"

namespace fixtures {

/// Fresh per-test scratch directory.
inline std::filesystem::path temp_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = std::filesystem::temp_directory_path() / "vxai_tests" /
             (std::string(info->test_suite_name()) + "_" + info->name());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
