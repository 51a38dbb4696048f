#include <doctest.h>

#include <filesystem>
#include <random>

#include "scr/dataset.hpp"
#include "scr/decoder.hpp"
#include "scr/errors.hpp"
#include "scr/extractor.hpp"
#include "scr/netpbm.hpp"
#include "scr/nn/serialize.hpp"

using namespace scr;

namespace {

std::string be32(std::uint32_t v) {
  return {static_cast<char>(v >> 24), static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 8) & 0xff),
          static_cast<char>(v & 0xff)};
}

std::string idx_images(int n, int rows = 28, int cols = 28) {
  std::string s = be32(0x803) + be32(n) + be32(rows) + be32(cols);
  for (int k = 0; k < n * rows * cols; ++k) s.push_back(static_cast<char>((k * 37) & 0xff));
  return s;
}

std::string idx_labels(std::initializer_list<int> labels) {
  std::string s = be32(0x801) + be32(static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) s.push_back(static_cast<char>(l));
  return s;
}

template <typename F>
std::size_t parse_offset(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.offset();
  }
  FAIL("expected a ParseError");
  return 0;
}

}  // namespace

TEST_SUITE("formats") {

TEST_CASE("idx header arithmetic and labels") {
  const auto ds = dataset::load_idx(idx_images(2), idx_labels({3, 7}));
  REQUIRE(ds.images.size() == 2);
  CHECK(ds.images[0].rows() == 28);
  CHECK(ds.images[1](0, 1) == doctest::Approx(((784 + 1) * 37 % 256) / 255.0));
  CHECK(ds.labels == std::vector<int>{3, 7});
}

TEST_CASE("idx round trip is byte-identical") {
  const auto img = idx_images(3, 5, 4);
  const auto lbl = idx_labels({0, 9, 4});
  const auto [img2, lbl2] = dataset::write_idx(dataset::load_idx(img, lbl));
  CHECK(img2 == img);
  CHECK(lbl2 == lbl);
  const auto arr = dataset::decode_idx(img);
  CHECK(dataset::encode_idx(arr) == img);
}

TEST_CASE("idx errors carry offsets") {
  const auto img = idx_images(2);
  CHECK(parse_offset([&] { dataset::load_idx(img.substr(0, img.size() - 5), idx_labels({1, 2})); }) ==
        img.size() - 5);
  std::string bad = img;
  bad[2] = 0x09;
  CHECK(parse_offset([&] { dataset::load_idx(bad, idx_labels({1, 2})); }) == 0);
  CHECK(parse_offset([&] { dataset::load_idx(img, idx_images(2)); }) == 0);
  CHECK(parse_offset([&] { dataset::load_idx(img, idx_labels({1, 2, 3})); }) == 4);
  CHECK(parse_offset([&] { dataset::load_idx(img, idx_labels({1, 12})); }) == 9);
  CHECK(parse_offset([&] { dataset::load_idx(img.substr(0, 10), idx_labels({1, 2})); }) == 10);
  CHECK(parse_offset([&] { dataset::decode_idx(img + "x"); }) == img.size());
}

TEST_CASE("mnist digits become 64x64 white-on-black rgb") {
  GrayImage digit = GrayImage::Zero(28, 28);
  digit.block(10, 10, 8, 8).setOnes();
  const auto rgb = dataset::mnist_to_rgb(digit);
  CHECK(rgb.rows() == 64);
  CHECK(rgb[0](32, 32) == doctest::Approx(1.0f));
  CHECK(rgb[1](0, 0) == 0.0f);
  CHECK((rgb[0] == rgb[2]).all());
}

TEST_CASE("weights round trip is byte-identical") {
  const auto net = extractor_network(Profile::mini);
  const auto w = nn::init_weights<float>(net, 4);
  const auto bytes = nn::encode_weights(net, w);
  CHECK(bytes.substr(0, 4) == "SCRW");
  const auto file = nn::decode_weights(bytes);
  CHECK(file.layers == net.layers());
  CHECK(nn::encode_weights(nn::Network(net.input_shape(), file.layers), file.weights) == bytes);
  CHECK(nn::checksum(file.weights) == nn::checksum(w));

  const auto path = std::filesystem::temp_directory_path() / "scr_weights_roundtrip.scrw";
  nn::save_weights(path, net, w);
  const auto loaded = nn::load_weights(path, net);
  CHECK(nn::encode_weights(net, loaded) == bytes);
  CHECK_THROWS_AS(nn::load_weights(path, decoder_network(Profile::mini)), StructuralError);
  std::filesystem::remove(path);
}

TEST_CASE("malformed weights files") {
  const nn::Network net({3}, {nn::fully_connected(3, 2), nn::relu()});
  const auto bytes = nn::encode_weights(net, nn::init_weights<float>(net, 1));
  CHECK(parse_offset([&] { nn::decode_weights("SCRX" + bytes.substr(4)); }) == 0);
  std::string v2 = bytes;
  v2[4] = 2;
  CHECK(parse_offset([&] { nn::decode_weights(v2); }) == 4);
  CHECK(parse_offset([&] { nn::decode_weights(bytes.substr(0, bytes.size() - 3)); }) == bytes.size() - 3);
  CHECK(parse_offset([&] { nn::decode_weights(bytes + "z"); }) == bytes.size());
  std::string kind = bytes;
  kind[12] = 9;
  CHECK(parse_offset([&] { nn::decode_weights(kind); }) == 12);
  std::string dims = bytes;
  dims[13] = 3;
  CHECK(parse_offset([&] { nn::decode_weights(dims); }) == 12);
}

TEST_CASE("netpbm encode and decode") {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> u(0, 255);
  GrayImage g(5, 7);
  for (Eigen::Index k = 0; k < g.size(); ++k) g.data()[k] = u(gen) / 255.0f;
  const auto pgm = netpbm::encode_pgm(g);
  CHECK(pgm.substr(0, 2) == "P5");
  const auto back = std::get<GrayImage>(netpbm::decode(pgm));
  CHECK((back == g).all());
  CHECK(netpbm::encode_pgm(back) == pgm);

  RgbImage c(4, 3);
  for (int ch = 0; ch < 3; ++ch)
    for (Eigen::Index k = 0; k < c[ch].size(); ++k) c[ch].data()[k] = u(gen) / 255.0f;
  const auto ppm = netpbm::encode_ppm(c);
  CHECK(ppm.substr(0, 2) == "P6");
  CHECK(std::get<RgbImage>(netpbm::decode(ppm)) == c);

  const auto ascii = std::get<GrayImage>(netpbm::decode("P2\n# comment\n2 1\n4\n0 2\n"));
  CHECK(ascii(0, 1) == 0.5f);
  const auto wide = std::get<RgbImage>(netpbm::decode("P3 1 1 65535 65535 0 0"));
  CHECK(wide[0](0, 0) == 1.0f);

  GrayImage clip(1, 2);
  clip << -0.5f, 2.0f;
  const auto clipped = netpbm::encode_pgm(clip);
  CHECK(static_cast<unsigned char>(clipped[clipped.size() - 2]) == 0);
  CHECK(static_cast<unsigned char>(clipped.back()) == 255);
}

TEST_CASE("malformed netpbm inputs") {
  CHECK(parse_offset([] { netpbm::decode("P7\n1 1\n255\n"); }) == 0);
  CHECK_THROWS_AS(netpbm::decode("P5\n2 2\n255\nab"), ParseError);
  CHECK_THROWS_AS(netpbm::decode("P5\n2 x\n255\n"), ParseError);
  CHECK_THROWS_AS(netpbm::decode("P2\n1 1\n255\n300\n"), ParseError);
  CHECK_THROWS_AS(netpbm::decode("P5\n1 1\n70000\n\x01"), ParseError);
}

}  // TEST_SUITE
