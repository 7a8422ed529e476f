#include <fstream>
#include <random>
#include <regex>
#include <set>
#include <thread>

#include "doctest.h"
#include "support.hpp"
#include "webphuzz/error.hpp"
#include "webphuzz/feedback.hpp"

using namespace webphuzz;
using namespace webphuzz::feedback;
using webphuzz::testing::TempDir;
using webphuzz::testing::write_text;

namespace {

FeedbackRecord sample() {
  FeedbackRecord fb;
  fb.id = "1700000000-00000000-0000-4000-8000-000000000000";
  fb.coverage = {{"/var/www/html/a.php", {1, 2, 9}}, {"b.php", {}}};
  fb.hook_events.push_back({"mysqli_query", {"SELECT 1'"}, "You have an error in your SQL syntax", std::nullopt, true});
  fb.hook_events.push_back({"unserialize", {"O:"}, std::nullopt, HookException{"TypeError", "bad"}, false});
  fb.php_errors.push_back({"Warning: x", "a.php", 3});
  fb.php_exceptions.push_back({"ValueError", "Path cannot be empty", "a.php", 14});
  fb.termination = Termination::error;
  return fb;
}

}  // namespace

TEST_CASE("minimal record") {
  auto fb = parse_feedback(R"({"id":"t-u","coverage":{},"hooks":[],"php_errors":[],"php_exceptions":[],"termination":"normal"})");
  CHECK(fb.id == "t-u");
  CHECK(fb.coverage.empty());
  CHECK(fb.hook_events.empty());
  CHECK(fb.termination == Termination::normal);
}

TEST_CASE("hook with error") {
  auto fb = parse_feedback(
      R"({"id":"x","coverage":{"a.php":[2,1,2]},"hooks":[{"function":"mysqli_query","args":["SELECT * FROM t WHERE id = 1'"],"error":"You have an error in your SQL syntax"}],"php_errors":[],"php_exceptions":[],"termination":"normal","extra":1})");
  REQUIRE(fb.hook_events.size() == 1);
  CHECK(fb.hook_events[0].error == "You have an error in your SQL syntax");
  CHECK_FALSE(fb.hook_events[0].returned_false);
  CHECK(fb.coverage.at("a.php") == std::vector<int>{1, 2});
  CHECK(fb.covered_line_count() == 2);
}

TEST_CASE("round trip") {
  auto fb = sample();
  CHECK(parse_feedback(serialize_feedback(fb)) == fb);
}

TEST_CASE("hook arguments are truncated") {
  auto fb = sample();
  fb.hook_events[0].args[0] = std::string(10000, 'a');
  auto back = parse_feedback(serialize_feedback(fb));
  CHECK(back.hook_events[0].args[0].size() == kMaxHookArgBytes);
}

TEST_CASE("malformed input") {
  CHECK_THROWS_AS(parse_feedback(R"({"id":"x","coverage":{)"), ParseError);
  CHECK_THROWS_AS(parse_feedback("[]"), ParseError);
  CHECK_THROWS_AS(parse_feedback(R"({"id":"x","coverage":{},"hooks":[],"php_errors":[],"php_exceptions":[],"termination":"crash"})"), ParseError);
  CHECK_THROWS_AS(parse_feedback(R"({"id":"x","coverage":{"a":[0]},"hooks":[],"php_errors":[],"php_exceptions":[],"termination":"normal"})"), ParseError);
  CHECK_THROWS_AS(parse_feedback(R"({"id":"x","coverage":{},"hooks":[{"args":[]}],"php_errors":[],"php_exceptions":[],"termination":"normal"})"), ParseError);
  try {
    parse_feedback(R"({"id": tru})");
    FAIL("no throw");
  } catch (const ParseError& e) {
    CHECK(e.offset() < 12);
  }
}

TEST_CASE("collect") {
  TempDir dir("fb");
  auto fb = sample();
  fb.hook_events.clear();
  fb.coverage = {{"a.php", {1, 2}}};

  SUBCASE("present") {
    write_feedback_file(dir.path(), fb);
    auto r = collect(fb.id, dir.path(), std::chrono::milliseconds(100));
    CHECK(r.status == CollectStatus::ok);
    REQUIRE(r.record);
    CHECK(r.record->covered_line_count() == 2);
    CHECK_FALSE(std::filesystem::exists(feedback_path(dir.path(), fb.id)));
  }
  SUBCASE("missing") {
    auto start = std::chrono::steady_clock::now();
    auto r = collect("nope", dir.path(), std::chrono::milliseconds(150));
    CHECK(r.status == CollectStatus::missing);
    CHECK(std::chrono::steady_clock::now() - start >= std::chrono::milliseconds(150));
  }
  SUBCASE("malformed goes to quarantine") {
    write_text(dir / "bad1.json", "{\"id\":");
    auto r = collect("bad1", dir.path(), std::chrono::milliseconds(50));
    CHECK(r.status == CollectStatus::malformed);
    CHECK(std::filesystem::exists(dir / "bad/bad1.json"));
    CHECK_FALSE(std::filesystem::exists(dir / "bad1.json"));
  }
  SUBCASE("arrives while polling") {
    std::thread writer([&] {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      write_feedback_file(dir.path(), fb);
    });
    auto r = collect(fb.id, dir.path(), std::chrono::milliseconds(2000));
    writer.join();
    CHECK(r.status == CollectStatus::ok);
  }
}

TEST_CASE("slow tmp writes are never observed partially") {
  TempDir dir("fb");
  for (int round = 0; round < 20; ++round) {
    FeedbackRecord fb = sample();
    fb.id = "slow-" + std::to_string(round);
    auto text = serialize_feedback(fb);
    std::thread writer([&] {
      auto tmp = feedback_path(dir.path(), fb.id);
      tmp += ".tmp";
      {
        std::ofstream out(tmp, std::ios::binary);
        for (char c : text) {
          out.put(c);
          out.flush();
          if (c == ',') std::this_thread::sleep_for(std::chrono::microseconds(200));
        }
      }
      std::filesystem::rename(tmp, feedback_path(dir.path(), fb.id));
    });
    auto r = collect(fb.id, dir.path(), std::chrono::milliseconds(3000));
    writer.join();
    CHECK(r.status == CollectStatus::ok);
    CHECK(r.record == fb);
  }
  CHECK_FALSE(std::filesystem::exists(dir / "bad"));
}

TEST_CASE("feedback ids") {
  std::mt19937_64 rng(3);
  std::regex shape("^1700000000-[0-9a-f]{8}-[0-9a-f]{4}-4[0-9a-f]{3}-[89ab][0-9a-f]{3}-[0-9a-f]{12}$");
  std::set<std::string> seen;
  for (int i = 0; i < 2000; ++i) {
    auto id = make_feedback_id(rng, 1700000000);
    CHECK(std::regex_match(id, shape));
    seen.insert(id);
  }
  CHECK(seen.size() == 2000);
}
