#include "doctest.h"
#include "oracles.hpp"

#include "stablerec/data.hpp"

#include <cstdio>
#include <filesystem>

using namespace stablerec;

namespace {

GrayImage ramp(const Shape& s) {
  Vector px(s.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<double>(i % 17) / 16.0;
  return make_image(s, px);
}

} // namespace

TEST_CASE("synthesis kinds") {
  CHECK(parse_synth_kind("blobs") == SynthKind::Blobs);
  CHECK(parse_synth_kind("random_phantom") == SynthKind::RandomPhantom);
  CHECK_THROWS_AS(parse_synth_kind("noise"), ParameterError);

  const auto checker = synthesize_images(2, {16, 16}, SynthKind::Checker, 1);
  CHECK(checker[0].at(0, 0) == 1.0);
  CHECK(checker[0].at(4, 0) == 0.0);
  CHECK(checker[0].at(4, 4) == 1.0);

  for (SynthKind k : {SynthKind::Blobs, SynthKind::Checker, SynthKind::RandomPhantom}) {
    const auto a = synthesize_images(3, {32, 32}, k, 77);
    const auto b = synthesize_images(3, {32, 32}, k, 77);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a[i].pixels == b[i].pixels);
      for (double v : a[i].pixels) CHECK((v >= 0.0 && v <= 1.0));
    }
  }
  CHECK(synthesize_images(2, {32, 32}, SynthKind::Blobs, 1)[0].pixels !=
        synthesize_images(2, {32, 32}, SynthKind::Blobs, 2)[0].pixels);
  CHECK_THROWS_AS(synthesize_images(0, {32, 32}, SynthKind::Blobs, 1), ParameterError);
  CHECK_THROWS_AS(synthesize_images(1, {24, 32}, SynthKind::Blobs, 1), ParameterError);
}

TEST_CASE("blob images follow their closed-form sum") {
  const Shape s{32, 32};
  const std::uint64_t seed = 5;
  const auto imgs = synthesize_images(4, s, SynthKind::Blobs, seed);
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    const auto blobs = blob_components(s, derive_seed(seed, i), 3);
    REQUIRE(blobs.size() == 3);
    double peak = 0.0;
    for (const Blob& b : blobs) peak = std::max(peak, blob_value(blobs, s, b.row, b.col));
    CHECK(peak >= 0.5);
    CHECK(*std::max_element(imgs[i].pixels.begin(), imgs[i].pixels.end()) <= 1.0);
    for (std::size_t r = 0; r < 32; r += 7)
      for (std::size_t c = 0; c < 32; c += 5)
        CHECK(imgs[i].at(r, c) ==
              std::clamp(blob_value(blobs, s, static_cast<double>(r), static_cast<double>(c)), 0.0, 1.0));
  }
}

TEST_CASE("normalize") {
  const GrayImage two = make_image({1, 2}, {2.0, 4.0});
  CHECK(normalize(two).pixels == Vector{0.0, 1.0});

  const GrayImage img = make_image({4, 4}, oracle::random_vector(16, 3, -2.0, 5.0));
  const GrayImage n1 = normalize(img);
  CHECK(*std::min_element(n1.pixels.begin(), n1.pixels.end()) == 0.0);
  CHECK(std::abs(*std::max_element(n1.pixels.begin(), n1.pixels.end()) - 1.0) < 1e-12);
  CHECK(normalize(n1).pixels == n1.pixels);
  CHECK_FALSE(n1.was_constant);

  const GrayImage flat = normalize(make_image({2, 2}, Vector(4, 0.7)));
  CHECK(flat.was_constant);
  CHECK(flat.pixels == Vector(4, 0.0));
}

TEST_CASE("patchify") {
  CHECK(patchify(ramp({32, 32}), 16).size() == 4);
  CHECK(patchify(ramp({33, 32}), 16).size() == 4);
  const GrayImage whole = ramp({16, 16});
  const auto self = patchify(whole, 16);
  REQUIRE(self.size() == 1);
  CHECK(self[0].pixels == whole.pixels);
  CHECK_THROWS_AS(patchify(whole, 17), ParameterError);

  // Exact tiling reassembles bitwise.
  const GrayImage big = make_image({8, 12}, oracle::random_vector(96, 1));
  const auto tiles = patchify(big, 4);
  REQUIRE(tiles.size() == 6);
  Vector rebuilt(96);
  for (std::size_t t = 0; t < tiles.size(); ++t) {
    const std::size_t r0 = (t / 3) * 4, c0 = (t % 3) * 4;
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) rebuilt[(r0 + r) * 12 + c0 + c] = tiles[t].at(r, c);
  }
  CHECK(rebuilt == big.pixels);
  CHECK(patchify(big, 4, 2).size() == 3 * 5);
}

TEST_CASE("degrade") {
  const GrayImage x = synthesize_images(1, {32, 32}, SynthKind::Blobs, 3)[0];
  DegradationConfig c;
  const ConvolutionOperator op({32, 32}, build_gaussian_kernel(5, 1.3, true));
  CHECK(degrade(x, c) == op.apply(x.pixels));

  c.delta = 0.01;
  c.seed = 12;
  const Vector y = degrade(x, c);
  CHECK(y == degrade(x, c));
  const Vector e = subtract(y, op.apply(x.pixels));
  CHECK(std::abs(oracle::dot(e, e) / 1024.0 / 1e-4 - 1.0) < 0.2);

  DegradationConfig id;
  id.radius = 0;
  CHECK(oracle::max_abs_diff(degrade(x, id), x.pixels) < 1e-15);
  id.delta = -1.0;
  CHECK_THROWS_AS(degrade(x, id), ParameterError);
}

TEST_CASE("pgm round trip and formats") {
  const GrayImage img = synthesize_images(1, {16, 32}, SynthKind::RandomPhantom, 9)[0];
  const GrayImage p5 = parse_pgm(encode_pgm(img, 255, false));
  const GrayImage p2 = parse_pgm(encode_pgm(img, 255, true));
  CHECK(p5.shape == img.shape);
  CHECK(oracle::max_abs_diff(p5.pixels, img.pixels) <= 1.0 / 510.0 + 1e-15);
  CHECK(p5.pixels == p2.pixels);

  const GrayImage wide = parse_pgm(encode_pgm(img, 65535, false));
  CHECK(oracle::max_abs_diff(wide.pixels, img.pixels) <= 1.0 / 131070.0 + 1e-15);
  CHECK(parse_pgm(encode_pgm(img, 65535, true)).pixels == wide.pixels);

  const std::string path = (std::filesystem::temp_directory_path() / "stablerec_test.pgm").string();
  save_pgm(img, path, 65535);
  CHECK(load_pgm(path).pixels == wide.pixels);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_pgm(path), IoError);

  CHECK(parse_pgm("P2\n# comment\n2 1\n4\n0 4\n").pixels == Vector{0.0, 1.0});
}

TEST_CASE("pgm parse errors carry byte offsets") {
  try {
    parse_pgm("P7\n1 1\n255\n\x01");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 0);
  }
  try {
    parse_pgm(std::string("P5\n4 4\n255\n") + std::string(5, '\x10'));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 16);
  }
  try {
    parse_pgm("P2\n2 x\n255\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 5);
  }
  CHECK_THROWS_AS(parse_pgm("P2\n2 1\n70000\n1 2\n"), ParseError);
  CHECK_THROWS_AS(parse_pgm("P2\n2 1\n10\n1 11\n"), ParseError);
  CHECK_THROWS_AS(parse_pgm("P2\n0 1\n10\n"), ParseError);
}

TEST_CASE("dataset split") {
  std::vector<GrayImage> imgs;
  for (std::size_t i = 0; i < 10; ++i) imgs.push_back(make_image({1, 1}, {static_cast<double>(i)}));
  const DatasetSplit a = split_dataset(imgs, 6, 3, 4);
  const DatasetSplit b = split_dataset(imgs, 6, 3, 4);
  CHECK(a.train.size() == 6);
  CHECK(a.test.size() == 3);
  std::vector<double> seen;
  for (const auto& s : {a.train, a.test})
    for (const auto& im : s) seen.push_back(im.pixels[0]);
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  for (std::size_t i = 0; i < 6; ++i) CHECK(a.train[i].pixels == b.train[i].pixels);
  CHECK(signals_of(a.test).size() == 3);
  CHECK_THROWS_AS(split_dataset(imgs, 8, 3, 1), ParameterError);
}
