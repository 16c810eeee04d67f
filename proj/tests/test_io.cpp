#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "genrec/text_format.hpp"
#include "genrec/weights_io.hpp"

using namespace genrec;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
  return s;
}

}  // namespace

TEST(FormatReal, ShortestRoundTrip) {
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(-2.5), "-2.5");
  EXPECT_EQ(format_real(0.0), "0");
  EXPECT_EQ(format_real(std::nan("")), "nan");
  EXPECT_EQ(format_real(INFINITY), "inf");
  EXPECT_EQ(format_real(-INFINITY), "-inf");
  Rng rng(1);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int t = 0; t < 20000; ++t) {
    std::uint64_t b = bits(rng);
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    EXPECT_TRUE(same_bits(parse_real(format_real(v)), v)) << format_real(v);
  }
  EXPECT_TRUE(same_bits(parse_real(format_real(-0.0)), -0.0));
  EXPECT_TRUE(same_bits(parse_real(format_real(std::numeric_limits<double>::denorm_min())),
                        std::numeric_limits<double>::denorm_min()));
}

TEST(FormatReal, ParseRejectsGarbage) {
  EXPECT_THROW(parse_real("1.0x"), FormatError);
  EXPECT_THROW(parse_real(""), FormatError);
  EXPECT_THROW(parse_real("abc"), FormatError);
}

TEST(TokenReader, KeyedValues) {
  EXPECT_EQ(keyed_value("d=3", "d"), "3");
  EXPECT_THROW(keyed_value("x=3", "d"), FormatError);
}

TEST(Weights, HeaderForSmallIdentityNet) {
  const auto net = init_gaussian({2, 5, 10}, Activation::identity(), 7);
  const std::string text = weights_to_string(net);
  EXPECT_EQ(text.substr(0, text.find('\n')), "GENREC v1 d=2 act=identity h=0");
  EXPECT_NE(text.find("\nlayer 1 5 2\n"), std::string::npos);
  EXPECT_NE(text.find("\nlayer 2 10 5\n"), std::string::npos);
}

TEST(Weights, LoadSaveIsByteIdentical) {
  for (Seed s = 0; s < 10; ++s) {
    const Activation act = s % 3 == 0   ? Activation::identity()
                           : s % 3 == 1 ? Activation::relu()
                                        : Activation::leaky_relu(0.13);
    const auto net = init_gaussian({3, 4, 6, 9}, act, s, BiasInit::gaussian);
    const std::string first = weights_to_string(net);
    std::istringstream is(first);
    const auto loaded = load_weights(is);
    EXPECT_EQ(weights_to_string(loaded), first);
    ASSERT_EQ(loaded.depth(), net.depth());
    for (std::size_t i = 0; i < net.depth(); ++i) {
      EXPECT_EQ(loaded.layers()[i].weight, net.layers()[i].weight);
      EXPECT_EQ(loaded.layers()[i].bias, net.layers()[i].bias);
      EXPECT_EQ(loaded.layers()[i].activation, net.layers()[i].activation);
    }
  }
}

TEST(Weights, ForwardBitIdenticalAfterFileRoundTrip) {
  const auto net = init_gaussian({3, 7, 11}, Activation::leaky_relu(0.2), 21, BiasInit::gaussian);
  const auto path = std::filesystem::temp_directory_path() / "genrec_test_weights.txt";
  save_weights_file(path, net);
  const auto loaded = load_weights_file(path);
  std::filesystem::remove(path);
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const Vector z = gaussian_vector(3, rng);
    const Vector a = forward(net, z), b = forward(loaded, z);
    for (Index i = 0; i < a.size(); ++i) EXPECT_TRUE(same_bits(a(i), b(i)));
  }
}

TEST(Weights, BrokenChainNamesLayer) {
  const auto net = init_gaussian({2, 5, 10}, Activation::identity(), 7);
  const std::string bad = replace_once(weights_to_string(net), "layer 2 10 5", "layer 2 10 4");
  std::istringstream is(bad);
  try {
    load_weights(is);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 2"), std::string::npos) << e.what();
  }
}

TEST(Weights, RejectsMalformedFiles) {
  const auto net = init_gaussian({2, 3}, Activation::leaky_relu(0.2), 1);
  const std::string good = weights_to_string(net);
  const auto load = [](const std::string& text) {
    std::istringstream is(text);
    return load_weights(is);
  };
  EXPECT_NO_THROW(load(good));
  EXPECT_THROW(load(replace_once(good, "GENREC v1", "GENREC v2")), FormatError);
  EXPECT_THROW(load(replace_once(good, "h=0.2", "h=0")), FormatError);
  EXPECT_THROW(load(replace_once(good, "act=leaky_relu", "act=tanh")), std::exception);
  EXPECT_THROW(load(good + "1.0\n"), FormatError);
  EXPECT_THROW(load(good.substr(0, good.size() - 4)), FormatError);
  EXPECT_THROW(load(replace_once(good, "layer 1", "layer 2")), FormatError);
  EXPECT_THROW(load_weights_file("/nonexistent/dir/w.txt"), IoError);
}

TEST(Weights, MixedActivationsCannotBeSaved) {
  const GeneratorNet net({Layer<double>{Matrix::Ones(3, 2), Vector::Zero(3), Activation::relu()},
                          Layer<double>{Matrix::Ones(4, 3), Vector::Zero(4), Activation::identity()}});
  EXPECT_THROW(weights_to_string(net), UnsupportedOperation);
}
