#include "doctest.h"
#include "nnmass/archspec.hpp"
#include "nnmass/error.hpp"

using namespace nnmass;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_arch(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("convnext-t preset has the base stage layout") {
  const auto a = preset("convnext-t");
  REQUIRE(a.stages);
  CHECK(a.stages->widths == std::vector<int>{96, 192, 384, 768});
  CHECK(a.stages->depths == std::vector<int>{3, 3, 9, 3});
  CHECK(a.family == Family::ConvNext);
  // stem + 3 downsamples + 18 blocks + head
  CHECK(a.blocks.size() == 1 + 3 + 18 + 1);
}

TEST_CASE("parsing the serialized convnext-t preset yields the same descriptor") {
  const auto a = preset("convnext-t");
  const auto b = parse_arch(serialize_arch(a));
  CHECK(a == b);
  CHECK(b.stages->widths == std::vector<int>{96, 192, 384, 768});
}

TEST_CASE("empty blocks list is rejected") {
  const std::string text = R"({"name":"x","family":"generic","input_resolution":224,"input_channels":3,"blocks":[]})";
  CHECK(error_of(text).find("blocks non-empty") != std::string::npos);
}

TEST_CASE("residual IBN with stride 2 is rejected with the block index") {
  const std::string text = R"({"name":"x","family":"ran_e","input_resolution":224,"input_channels":3,"blocks":[
    {"kind":"stem","kernel":3,"stride":2,"out_channels":16},
    {"kind":"ibn","expansion":6,"dw_kernel":3,"stride":2,"out_channels":16,"residual":true}]})";
  const auto msg = error_of(text);
  CHECK(msg.find("block 1") != std::string::npos);
  CHECK(msg.find("residual") != std::string::npos);
}

TEST_CASE("parse errors") {
  SUBCASE("syntax error reports a position") {
    CHECK(error_of("{\"name\": ").find("syntax error at byte") != std::string::npos);
  }
  SUBCASE("unknown block kind") {
    const std::string text =
        R"({"name":"x","family":"generic","input_resolution":8,"input_channels":3,"blocks":[{"kind":"attention"}]})";
    CHECK(error_of(text).find("attention") != std::string::npos);
  }
  SUBCASE("unknown field") {
    const std::string text =
        R"({"name":"x","family":"generic","input_resolution":8,"input_channels":3,"extra":1,"blocks":[]})";
    CHECK(error_of(text).find("unknown field 'extra'") != std::string::npos);
  }
  SUBCASE("even depthwise kernel") {
    const std::string text = R"({"name":"x","family":"generic","input_resolution":8,"input_channels":3,"blocks":[
      {"kind":"ibn","expansion":6,"dw_kernel":4,"stride":1,"out_channels":8,"residual":false}]})";
    CHECK(error_of(text).find("block 0") != std::string::npos);
  }
  SUBCASE("head not last") {
    const std::string text = R"({"name":"x","family":"generic","input_resolution":8,"input_channels":3,"blocks":[
      {"kind":"head","classes":10},{"kind":"stem","kernel":3,"stride":2,"out_channels":8}]})";
    CHECK(error_of(text).find("last") != std::string::npos);
  }
  SUBCASE("resolution not divisible by total stride") {
    const std::string text = R"({"name":"x","family":"generic","input_resolution":10,"input_channels":3,"blocks":[
      {"kind":"stem","kernel":4,"stride":4,"out_channels":8}]})";
    CHECK(error_of(text).find("divisible") != std::string::npos);
  }
}

TEST_CASE("ran-e-supernet preset") {
  const auto a = preset("ran-e-supernet");
  REQUIRE(a.blocks.size() == 18);
  CHECK(std::holds_alternative<Stem>(a.blocks.front()));
  CHECK(std::holds_alternative<Head>(a.blocks.back()));
  // Stage 4 of the table (third AFRB row).
  const auto& s4 = std::get<Ibn>(a.blocks[3]);
  CHECK(s4.expansion == Rational(6));
  CHECK(s4.stride == 2);
  CHECK(s4.out_channels == 64);
  int residual = 0;
  for (const auto& b : a.blocks) {
    if (const auto* i = std::get_if<Ibn>(&b)) residual += i->residual ? 1 : 0;
  }
  CHECK(residual == 6);
}

TEST_CASE("ran-i and convnext-b presets") {
  CHECK(preset("ran-i-t").stages->widths == std::vector<int>{64, 128, 256, 511});
  CHECK(preset("ran-i-t").stages->depths == std::vector<int>{5, 5, 15, 5});
  CHECK(preset("convnext-b").stages->widths == std::vector<int>{128, 256, 512, 1024});
  CHECK(preset("convnext-b").stages->depths == std::vector<int>{3, 3, 27, 3});
  CHECK_THROWS_AS(preset("convnext-xl"), Error);
}

TEST_CASE("scale_arch rounding") {
  const auto base = preset("convnext-t");
  const auto t = scale_arch(base, 0.666, 1.65);
  CHECK(t.stages->widths == std::vector<int>{64, 128, 256, 511});
  CHECK(t.stages->depths == std::vector<int>{5, 5, 15, 5});
  const auto b = scale_arch(base, 0.9105, 2.30);
  CHECK(b.stages->widths == std::vector<int>{87, 175, 350, 699});
  CHECK(b.stages->depths == std::vector<int>{7, 7, 21, 7});
  CHECK(scale_arch(base, 1.0, 1.0) == base);
}

TEST_CASE("scale_arch errors and options") {
  const auto base = preset("convnext-t");
  SUBCASE("degenerate width") {
    try {
      scale_arch(base, 0.05, 1.0);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("degenerate width") != std::string::npos);
    }
  }
  SUBCASE("non-positive multipliers") {
    CHECK_THROWS_AS(scale_arch(base, 0.0, 1.0), Error);
    CHECK_THROWS_AS(scale_arch(base, 1.0, -1.0), Error);
  }
  SUBCASE("flat families cannot be scaled") { CHECK_THROWS_AS(scale_arch(preset("ran-e-supernet"), 1, 1), Error); }
  SUBCASE("depth never drops below one") {
    const auto s = scale_arch(base, 1.0, 0.01);
    CHECK(s.stages->depths == std::vector<int>{1, 1, 1, 1});
  }
  SUBCASE("channel divisor snapping") {
    ScaleOptions o;
    o.channel_divisor = 8;
    const auto s = scale_arch(base, 0.666, 1.0, o);
    for (int w : s.stages->widths) CHECK(w % 8 == 0);
  }
}

TEST_CASE("property: width monotonicity and round trips") {
  const auto base = preset("convnext-t");
  for (int i = 1; i < 60; ++i) {
    const double w0 = 0.25 + 0.025 * i;
    const auto a = scale_arch(base, w0, 1.3);
    const auto b = scale_arch(base, w0 + 0.0125, 1.3);
    for (std::size_t s = 0; s < 4; ++s) CHECK(b.stages->widths[s] >= a.stages->widths[s]);
  }
  for (const auto& name : preset_names()) {
    const auto a = preset(name);
    const auto text = serialize_arch(a);
    CHECK(parse_arch(text) == a);
    CHECK(serialize_arch(parse_arch(text)) == text);
  }
}

TEST_CASE("activation parameters survive serialization") {
  ArchDescriptor a;
  a.name = "split";
  a.family = Family::Generic;
  a.input_resolution = 8;
  a.blocks = {Stem{1, 1, 8}, ConvNextSplitBlock{Rational(4), 7, Rational(3, 5), Activation::exp_kernel(10.0)},
              RegularConv{3, 1, 8, Activation::prelu(0.5)}};
  const auto text = serialize_arch(a);
  CHECK(text.find("\"clamp\": 10") != std::string::npos);
  CHECK(text.find("\"alpha\": 0.5") != std::string::npos);
  CHECK(parse_arch(text) == a);
}

TEST_CASE("stage shorthand is accepted") {
  const std::string text = R"({"name":"r","family":"resnet_bottleneck","input_resolution":224,"input_channels":3,
    "stage_widths":[256,512,1024,2048],"stage_depths":[3,4,6,3],"expansion":"1/4","dw_kernel":3})";
  const auto a = parse_arch(text);
  CHECK(a.family == Family::ResNetBottleneck);
  CHECK(a.stages->expansion == Rational(1, 4));
}
