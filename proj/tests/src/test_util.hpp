#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "retina/error.hpp"

// Fresh scratch directory per test, removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = info ? std::string(info->test_suite_name()) + "_" + info->name() : "scratch";
    path_ = std::filesystem::temp_directory_path() /
            ("retina_" + name + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

#define EXPECT_RETINA_ERROR(stmt, expected_code)                      \
  do {                                                                \
    try {                                                             \
      stmt;                                                           \
      ADD_FAILURE() << "no exception from " #stmt;                   \
    } catch (const ::retina::Error& e) {                              \
      EXPECT_EQ(e.code(), expected_code) << e.what();                 \
    }                                                                 \
  } while (0)
