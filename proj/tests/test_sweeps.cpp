#include "doctest.h"
#include "parfid/errors.hpp"
#include "parfid/sweeps.hpp"

using namespace parfid;

TEST_CASE("every suite passes on clean cases and fails on planted violations") {
  for (const SuiteInfo& s : suites()) {
    CAPTURE(s.name);
    SuiteOptions o;
    o.seed = 7;
    o.cases = 30;
    const SuiteResult clean = run_suite(s.name, o);
    CHECK(clean.passed == 30);
    CHECK(clean.failed == 0);
    CHECK(clean.worst_defect <= s.tolerance);
    CHECK_FALSE(clean.first_failing_seed.has_value());

    o.inject_violation = true;
    const SuiteResult bad = run_suite(s.name, o);
    CHECK(bad.failed == 30);
    REQUIRE(bad.first_failing_seed.has_value());
    CHECK(*bad.first_failing_case == 0);
    CHECK(*bad.first_failing_seed == case_seed(7, 0));
    CHECK_FALSE(bad.first_failure.empty());
    const CaseOutcome again = run_case(s.name, *bad.first_failing_seed, true);
    CHECK_FALSE(again.pass);
    CHECK(again.detail == bad.first_failure);
  }
}

TEST_CASE("results do not depend on the number of jobs") {
  SuiteOptions o;
  o.seed = 11;
  o.cases = 40;
  const SuiteResult one = run_suite("profile", o);
  o.jobs = 4;
  const SuiteResult four = run_suite("profile", o);
  CHECK(one.passed == four.passed);
  CHECK(one.worst_defect == four.worst_defect);
}

TEST_CASE("seeds select the cases") {
  SuiteOptions a, b;
  a.seed = 1;
  b.seed = 2;
  a.cases = b.cases = 10;
  CHECK(run_suite("star-invariance", a).worst_defect !=
        run_suite("star-invariance", b).worst_defect);
  CHECK(case_seed(1, 0) != case_seed(1, 1));
}

TEST_CASE("bad requests") {
  CHECK_THROWS_AS(run_suite("nope", {}), PreconditionError);
  SuiteOptions o;
  o.jobs = 0;
  CHECK_THROWS_AS(run_suite("lemma1", o), PreconditionError);
  o.jobs = 1;
  o.cases = 0;
  CHECK(run_suite("lemma1", o).cases == 0);
}
