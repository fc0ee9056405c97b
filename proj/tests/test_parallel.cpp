#include <doctest.h>

#include "elem0/model.hpp"
#include "elem0/parallel.hpp"

#include <atomic>
#include <numeric>

using namespace elem0;

TEST_CASE("every index is visited once") {
  for (int threads : {1, 2, 5, 16}) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  }
  std::atomic<int> calls = 0;
  parallel_chunks(0, 4, [&](std::size_t, std::size_t) { ++calls; });
  CHECK(calls == 0);
}

TEST_CASE("worker exceptions reach the caller") {
  auto run = [] {
    parallel_for(100, 4, [](std::size_t i) {
      if (i == 57) throw Error(ErrorKind::SingularAfterJitter, "boom");
    });
  };
  try {
    run();
    FAIL("expected rethrow");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularAfterJitter);
  }
}
