#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support/temp_dir.hpp"
#include "trafficmon/errors.hpp"
#include "trafficmon/ingest.hpp"

using namespace trafficmon;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const TrafficError& e) {
    return e.code();
  }
  FAIL("expected a TrafficError");
  return Errc::io_error;
}

DetectionFrame random_frame(std::mt19937_64& rng, bool force_valid) {
  DetectionFrame f;
  f.camera_id = "cam-" + std::to_string(rng() % 5);
  f.timestamp_ms = static_cast<std::int64_t>(rng() % 1'000'000);
  f.image_w = 640;
  f.image_h = 480;
  const int n = static_cast<int>(rng() % 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    Detection d;
    d.cls = kVehicleClasses[rng() % kVehicleClasses.size()];
    d.confidence = unit(rng);
    if (force_valid) {
      d.box.w = 1 + unit(rng) * 100;
      d.box.h = 1 + unit(rng) * 100;
      d.box.x = unit(rng) * (f.image_w - d.box.w);
      d.box.y = unit(rng) * (f.image_h - d.box.h);
    } else {
      // Anywhere near the canvas, possibly hanging over the edge.
      d.box.w = 1 + unit(rng) * 200;
      d.box.h = 1 + unit(rng) * 200;
      d.box.x = unit(rng) * f.image_w;
      d.box.y = unit(rng) * f.image_h;
    }
    f.detections.push_back(d);
  }
  return f;
}

}  // namespace

TEST_CASE("parse_frame reads an empty frame") {
  const auto f = parse_frame(
      R"({"camera_id":"cam-01","timestamp_ms":0,"image_w":640,"image_h":640,"detections":[]})");
  CHECK(f.camera_id == "cam-01");
  CHECK(f.timestamp_ms == 0);
  CHECK(f.image_w == 640);
  CHECK(f.image_h == 640);
  CHECK(f.detections.empty());
}

TEST_CASE("parse_frame reads detections") {
  const auto f = parse_frame(
      R"({"camera_id":"c","timestamp_ms":12,"image_w":640,"image_h":640,)"
      R"("detections":[{"class":"bus","confidence":0.75,"box":{"x":1,"y":2,"w":30,"h":40}}]})");
  REQUIRE(f.detections.size() == 1);
  CHECK(f.detections[0].cls == ObjectClass::Bus);
  CHECK(f.detections[0].confidence == doctest::Approx(0.75));
  CHECK(f.detections[0].box.w == 30);
}

TEST_CASE("parse_frame error identities") {
  const std::string base =
      R"({"camera_id":"c","timestamp_ms":0,"image_w":640,"image_h":640,"detections":[%]})";
  const auto with_det = [&](const std::string& det) {
    std::string line = base;
    line.replace(line.find('%'), 1, det);
    return line;
  };

  CHECK(code_of([] { parse_frame(R"({"camera_id":"c","timestamp_ms":)"); }) ==
        Errc::malformed_record);
  CHECK(code_of([] { parse_frame("not json at all"); }) == Errc::malformed_record);
  CHECK(code_of([] {
          parse_frame(R"({"timestamp_ms":0,"image_w":640,"image_h":640,"detections":[]})");
        }) == Errc::malformed_record);

  // Confidence outside [0,1].
  CHECK(code_of([&] {
          parse_frame(with_det(R"({"class":"car","confidence":1.5,"box":{"x":0,"y":0,"w":1,"h":1}})"));
        }) == Errc::invalid_value);
  // Unknown class strings are a hard error, not mapped to other.
  CHECK(code_of([&] {
          parse_frame(with_det(R"({"class":"bicycle","confidence":0.5,"box":{"x":0,"y":0,"w":1,"h":1}})"));
        }) == Errc::invalid_value);
  // Non-positive box size.
  CHECK(code_of([&] {
          parse_frame(with_det(R"({"class":"car","confidence":0.5,"box":{"x":0,"y":0,"w":-3,"h":1}})"));
        }) == Errc::invalid_value);
  CHECK(code_of([&] {
          parse_frame(with_det(R"({"class":"car","confidence":0.5,"box":{"x":0,"y":0,"w":0,"h":1}})"));
        }) == Errc::invalid_value);
  // Negative position.
  CHECK(code_of([&] {
          parse_frame(with_det(R"({"class":"car","confidence":0.5,"box":{"x":-1,"y":0,"w":3,"h":1}})"));
        }) == Errc::invalid_value);
}

TEST_CASE("validate_frame boundary cases") {
  DetectionFrame f;
  f.camera_id = "c";
  f.image_w = 640;
  f.image_h = 640;

  SUBCASE("exact fit is accepted") {
    f.detections.push_back({ObjectClass::Car, 0.9, {0, 0, 640, 640}});
    CHECK_NOTHROW(validate_frame(f));
  }
  SUBCASE("overhang is rejected with the detection index") {
    f.detections.push_back({ObjectClass::Car, 0.9, {0, 0, 10, 10}});
    f.detections.push_back({ObjectClass::Car, 0.9, {630, 0, 20, 10}});
    try {
      validate_frame(f);
      FAIL("expected BoxOutOfBounds");
    } catch (const TrafficError& e) {
      CHECK(e.code() == Errc::box_out_of_bounds);
      CHECK(std::string(e.what()).find("detection 1") != std::string::npos);
    }
  }
  SUBCASE("no detections is vacuously valid") { CHECK_NOTHROW(validate_frame(f)); }
}

TEST_CASE("parse/serialize round-trips exactly") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const DetectionFrame f = random_frame(rng, /*force_valid=*/true);
    const DetectionFrame g = parse_frame(serialize_frame(f));
    CHECK(g == f);
    const DetectionFrame h = parse_frame(serialize_frame(g));
    CHECK(h == g);
  }
}

TEST_CASE("validate_frame agrees with a direct inequality re-check") {
  std::mt19937_64 rng(11);
  int rejected = 0;
  for (int i = 0; i < 500; ++i) {
    const DetectionFrame f = random_frame(rng, /*force_valid=*/false);
    bool expect_ok = true;
    for (const Detection& d : f.detections) {
      const auto& b = d.box;
      if (!(b.w > 0 && b.h > 0 && b.x >= 0 && b.y >= 0 && b.x + b.w <= f.image_w &&
            b.y + b.h <= f.image_h)) {
        expect_ok = false;
      }
    }
    bool ok = true;
    try {
      validate_frame(f);
    } catch (const TrafficError&) {
      ok = false;
      ++rejected;
    }
    CHECK(ok == expect_ok);
  }
  CHECK(rejected > 0);  // the generator must actually exercise the reject path
}

TEST_CASE("camera registry resolves and reports unknowns") {
  CameraRegistry reg;
  reg.add("cam-01", "kaveh-blvd");
  reg.add("cam-02", "kaveh-blvd");
  reg.add("cam-03", "chamran-expwy");

  CHECK(reg.resolve("cam-01") == "kaveh-blvd");
  CHECK(reg.resolve("cam-02") == "kaveh-blvd");  // many-to-one is allowed
  CHECK(reg.resolve("cam-03") == "chamran-expwy");
  CHECK(code_of([&] { reg.resolve("cam-99"); }) == Errc::unknown_camera);
}

TEST_CASE("camera registry loads from file") {
  testsupport::TempDir dir;
  const auto path = dir.write("cameras.json", R"({"cam-01":"s1","cam-02":"s2"})");
  const auto reg = CameraRegistry::load_file(path);
  CHECK(reg.size() == 2);
  CHECK(reg.resolve("cam-02") == "s2");
}

TEST_CASE("sequencer rejects time travel but allows equal timestamps") {
  FrameSequencer seq;
  seq.accept("a", 100);
  seq.accept("a", 100);  // non-decreasing contract
  seq.accept("a", 150);
  CHECK(code_of([&] { seq.accept("a", 149); }) == Errc::stale_frame);
  seq.accept("b", 10);  // other cameras are independent
  seq.accept("a", 150);
}
