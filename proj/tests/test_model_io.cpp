#include <filesystem>

#include <gtest/gtest.h>

#include "collabtrack/model_io.hpp"

using namespace collabtrack;

namespace {

NetworkParams sample_model() {
  Rng rng(21);
  NetworkParams p = init_network(std::vector<int>{12, 5, 3, 1}, rng);
  p.layers[1].bias[2] = -0.0;
  p.layers[2].bias[0] = 1e-300;
  p.layers[0].weights(3, 4) = 123456.789;
  return p;
}

}  // namespace

TEST(ModelIo, RoundTripIsBitExact) {
  const NetworkParams p = sample_model();
  const auto bytes = encode_model(p);
  const NetworkParams q = decode_model(bytes);
  EXPECT_EQ(q, p);
  EXPECT_EQ(encode_model(q), bytes);
}

TEST(ModelIo, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "collabtrack_model_io.cdtm";
  Rng rng(22);
  const NetworkParams p = init_network(default_architecture(), rng);
  write_model(path, p);
  EXPECT_EQ(read_model(path), p);
}

TEST(ModelIo, HeaderLayout) {
  const auto bytes = encode_model(sample_model());
  ASSERT_GE(bytes.size(), 12u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "CDTM");
  EXPECT_EQ(bytes[4], 1);  // version, little-endian
  EXPECT_EQ(bytes[8], 3);  // layer count
}

TEST(ModelIo, CorruptMagicIsRejected) {
  auto bytes = encode_model(sample_model());
  for (std::size_t i = 0; i < 4; ++i) {
    auto bad = bytes;
    bad[i] ^= 0x20;
    EXPECT_THROW(decode_model(bad), DataError) << "byte " << i;
  }
}

TEST(ModelIo, TruncationAndTrailingBytesAreRejected) {
  const auto bytes = encode_model(sample_model());
  for (std::size_t n : {std::size_t{0}, std::size_t{3}, std::size_t{7}, std::size_t{11}, std::size_t{20},
                        bytes.size() - 1}) {
    const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n));
    EXPECT_THROW(decode_model(cut), DataError) << n << " bytes";
  }
  auto longer = bytes;
  longer.push_back(0);
  EXPECT_THROW(decode_model(longer), DataError);
}

TEST(ModelIo, ImplausibleShapesAreRejected) {
  auto bytes = encode_model(sample_model());
  auto huge = bytes;
  huge[12] = 0xff;  // first layer rows
  huge[13] = 0xff;
  huge[14] = 0xff;
  EXPECT_THROW(decode_model(huge), DataError);
  auto version = bytes;
  version[4] = 9;
  EXPECT_THROW(decode_model(version), DataError);
}

TEST(ModelIo, MissingFileIsADataError) {
  EXPECT_THROW(read_model("/nonexistent/collabtrack/model.cdtm"), DataError);
}
