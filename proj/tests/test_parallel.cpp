#include <gtest/gtest.h>

#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mre/parallel.hpp"

using namespace mre;

TEST(Parallel, ThreadCapFromEnvironment) {
#ifdef _OPENMP
  omp_set_num_threads(4);
  const int full = 4;
#else
  const int full = 1;
#endif
  unsetenv("MRE_THREADS");
  EXPECT_EQ(thread_count(), full);
  setenv("MRE_THREADS", "1", 1);
  EXPECT_EQ(thread_count(), 1);
  setenv("MRE_THREADS", "64", 1);
  EXPECT_EQ(thread_count(), full);
  for (const char* junk : {"0", "-3", "many", ""}) {
    setenv("MRE_THREADS", junk, 1);
    EXPECT_EQ(thread_count(), full) << junk;
  }
  setenv("MRE_THREADS", "1", 1);
  set_thread_cap(2);
  EXPECT_EQ(thread_count(), std::min(2, full));
  set_thread_cap(0);
  EXPECT_EQ(thread_count(), 1);
  unsetenv("MRE_THREADS");
}
