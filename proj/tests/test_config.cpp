#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ns2d/config.hpp"

using namespace ns2d::config;

namespace {

const char* kSample = R"(
experiment = lemma1
[physics]
k_max = 12
r = 1.5
alpha = 3.5
R = 7.25
[numerics]
h = 0.005
T = 1
[experiment]
phi0 = 7.25
t_check = 1.0
d2_grid = 5.4, 10.9, 16.3
[mc]
n_traj = 250
seed = 99
[io]
out_dir = /tmp/ns2d_cfg_test
threads = 2
)";

}  // namespace

TEST_CASE("parse and validate a sample config") {
  const RunConfig c = parse(kSample);
  CHECK(c.experiment == Experiment::lemma1);
  CHECK(c.k_max == 12);
  CHECK(c.R == 7.25);
  CHECK(c.h == 0.005);
  CHECK(c.d2_grid == std::vector<double>{5.4, 10.9, 16.3});
  CHECK(c.n_traj == 250);
  CHECK(c.seed == 99);
  CHECK(c.threads == 2);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("round trip: parse(serialize(c)) == c") {
  RunConfig c = parse(kSample);
  c.noise_file = "forcing.spec";
  c.d_grid = {1.0, 2.5};
  c.heun = false;
  const std::string text = c.serialize();
  const RunConfig back = parse(text);
  CHECK(back.serialize() == text);
  CHECK(back.digest() == c.digest());
}

TEST_CASE("unknown keys and malformed input are rejected") {
  CHECK_THROWS_AS(parse("experiment = lemma1\n[physics]\nbogus_key = 1\n"), config_error);
  CHECK_THROWS_AS(parse("experiment = nonsense\n"), config_error);
  CHECK_THROWS_AS(parse("[physics\nk_max = 3\n"), config_error);
  CHECK_THROWS_AS(parse("experiment = lemma1\n[weird]\nk_max = 3\n"), config_error);
  CHECK_THROWS_AS(parse("experiment = lemma1\njust a line\n"), config_error);
  // Keys must sit in their own section.
  CHECK_THROWS_AS(parse("experiment = lemma1\n[mc]\nk_max = 3\n"), config_error);
}

TEST_CASE("module constraints are re-validated at load") {
  RunConfig c = parse(kSample);
  c.r = 0.5;
  CHECK_THROWS_AS(c.validate(), config_error);
  c = parse(kSample);
  c.alpha = 2.0;  // must exceed max(2, 1 + r)
  CHECK_THROWS_AS(c.validate(), config_error);
  c = parse(kSample);
  c.h = 0.0;
  CHECK_THROWS_AS(c.validate(), config_error);
  c = parse(kSample);
  c.R = -1.0;  // no forcing route at all
  CHECK_THROWS_AS(c.validate(), config_error);
  c = parse(kSample);
  c.init = "garbage";
  CHECK_THROWS_AS(c.validate(), config_error);
  c = parse(kSample);
  c.n_traj = 0;
  CHECK_THROWS_AS(c.validate(), config_error);
}

TEST_CASE("digest tracks content") {
  const RunConfig a = parse(kSample);
  RunConfig b = parse(kSample);
  CHECK(a.digest() == b.digest());
  b.seed = 100;
  CHECK(a.digest() != b.digest());
}
