#include <doctest.h>

#include "../support/oracles.hpp"

using namespace mwmv;

namespace {

constexpr Block kAllBlocks[] = {Block::clusters, Block::resid_var, Block::location_scale,
                                Block::latents,  Block::w,         Block::ard,
                                Block::psi,      Block::z,         Block::effects};

}  // namespace

TEST_CASE("every block's conditional matches log-joint differences") {
  for (Block b : kAllBlocks) {
    CAPTURE(block_name(b));
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
      CAPTURE(seed);
      CHECK(oracle::conditional_gap(b, seed) < 1e-8);
    }
  }
}

TEST_CASE("conditionals with frozen dimensions match log-joint differences") {
  for (Block b : {Block::z, Block::effects, Block::w, Block::ard}) {
    CAPTURE(block_name(b));
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
      CAPTURE(seed);
      CHECK(oracle::frozen_conditional_gap(b, seed) < 1e-8);
    }
  }
}
