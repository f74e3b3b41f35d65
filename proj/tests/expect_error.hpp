#pragma once

#include <gtest/gtest.h>

#include "gfs/error.hpp"

// Asserts that `stmt` throws gfs::Error carrying `expected_code`.
#define EXPECT_GFS_ERROR(stmt, expected_code)                                        \
  do {                                                                               \
    try {                                                                            \
      stmt;                                                                          \
      ADD_FAILURE() << "expected " << gfs::error_code_name(expected_code);          \
    } catch (const gfs::Error& e) {                                                  \
      EXPECT_EQ(e.code(), expected_code) << e.what();                                \
    }                                                                                \
  } while (0)
