#include <gtest/gtest.h>

#include <cstring>
#include <limits>
#include <random>

#include "common.hpp"
#include "mhdbl/format.hpp"
#include "mhdbl/io.hpp"

using namespace mhdbl;
using mhdbl::testing::FieldGenerator;
using mhdbl::testing::small_data_domain;
using mhdbl::testing::small_data_state;

namespace {

bool bitwise_equal(const Field& a, const Field& b) {
  if (a.empty() || b.empty()) return a.empty() && b.empty();
  const auto x = a.spectrum(), y = b.spectrum();
  return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size() * sizeof(cplx)) == 0;
}

bool bitwise_equal(const std::vector<Field>& a, const std::vector<Field>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!bitwise_equal(a[i], b[i])) return false;
  return true;
}

Checkpoint random_checkpoint(std::uint64_t seed, int dim, bool magnetic, bool with_aux) {
  FieldGenerator gen(seed);
  DomainConfig d = small_data_domain(16, 33);
  d.dim = dim;
  if (dim == 3) d.Ny = 8;
  d.nu = gen.uniform(0.5, 2.0);
  d.eps = gen.uniform(0.0, 0.1);
  auto g = make_grid(d);
  State s = State::zeros(g, magnetic);
  for (auto& u : s.u_h) u = gen.smooth(g, 3, true);
  for (auto& f : s.f_h) f = gen.smooth(g, 3);
  s = prepare_initial_state(s);
  s.t = gen.uniform(0.0, 1.0);
  // a negative zero and a subnormal must survive as bits
  s.u_h[0](0, 0) = cplx(-0.0, std::numeric_limits<double>::denorm_min());
  Checkpoint c{d, s, std::nullopt};
  if (with_aux) {
    AuxState aux = initial_aux(s);
    for (auto& v : aux.V) v = gen.smooth(g, 2, true);
    c.aux = aux;
  }
  return c;
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitwise) {
  int n = 0;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const int dim = seed % 3 == 0 ? 3 : 2;
    const bool magnetic = seed % 4 != 1;
    const bool aux = seed % 2 == 0;
    const Checkpoint c = random_checkpoint(seed, dim, magnetic, aux);
    const std::string bytes = serialize_checkpoint(c);
    const Checkpoint back = deserialize_checkpoint(bytes);
    EXPECT_EQ(serialize_checkpoint(back), bytes);
    EXPECT_TRUE(back.domain == c.domain);
    EXPECT_EQ(std::memcmp(&back.state.t, &c.state.t, sizeof(double)), 0);
    EXPECT_TRUE(bitwise_equal(back.state.u_h, c.state.u_h));
    EXPECT_TRUE(bitwise_equal(back.state.f_h, c.state.f_h));
    EXPECT_TRUE(bitwise_equal(back.state.w, c.state.w));
    EXPECT_TRUE(bitwise_equal(back.state.h, c.state.h));
    ASSERT_EQ(back.aux.has_value(), aux);
    if (aux) {
      EXPECT_TRUE(bitwise_equal(back.aux->V, c.aux->V));
      EXPECT_TRUE(bitwise_equal(back.aux->lambda, c.aux->lambda));
      EXPECT_TRUE(bitwise_equal(back.aux->delta, c.aux->delta));
    }
    ++n;
  }
  EXPECT_EQ(n, 12);
}

TEST(Checkpoint, HeaderLayout) {
  const Checkpoint c = random_checkpoint(5, 2, true, false);
  const std::string b = serialize_checkpoint(c);
  EXPECT_EQ(b.substr(0, 4), "MHDL");
  EXPECT_EQ(static_cast<unsigned char>(b[4]), 1);
  EXPECT_EQ(b.substr(5, 3), std::string(3, '\0'));
  // dim (i32) then Lx at byte 12
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 2);
  double lx = 0.0;
  std::memcpy(&lx, b.data() + 12, 8);
  EXPECT_EQ(lx, c.domain.Lx);
  // domain block is 4 + 3*8 + 3*4 + 5*8 = 80 bytes; time at 88, count at 96
  double t = 0.0;
  std::memcpy(&t, b.data() + 88, 8);
  EXPECT_EQ(t, c.state.t);
  EXPECT_EQ(static_cast<unsigned char>(b[96]), 4);  // u, f, w, h
  EXPECT_EQ(static_cast<unsigned char>(b[100]), 1);
  EXPECT_EQ(b[104], 'u');
  const std::size_t payload = c.state.w.grid().size() * 16;
  EXPECT_EQ(b.size(), 100 + 4 * (4 + 1 + payload));
}

TEST(Checkpoint, FlippedMagicIsVersionError) {
  std::string b = serialize_checkpoint(random_checkpoint(2, 2, true, false));
  b[0] = 'X';
  try {
    deserialize_checkpoint(b, "flipped.bin");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("flipped.bin"), std::string::npos);
  }
}

TEST(Checkpoint, FutureVersionRejected) {
  std::string b = serialize_checkpoint(random_checkpoint(2, 2, true, false));
  b[4] = 2;
  try {
    deserialize_checkpoint(b);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("version 2"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, TruncationReportsSizes) {
  const std::string b = serialize_checkpoint(random_checkpoint(3, 2, true, true));
  for (std::size_t cut : {b.size() - 1, b.size() / 2, std::size_t{50}, std::size_t{6}}) {
    try {
      deserialize_checkpoint(b.substr(0, cut));
      FAIL() << cut;
    } catch (const IoError& e) {
      const std::string msg = e.what();
      EXPECT_NE(msg.find("truncated"), std::string::npos) << msg;
      EXPECT_NE(msg.find("got " + std::to_string(cut)), std::string::npos) << msg;
    }
  }
  try {
    deserialize_checkpoint(b.substr(0, b.size() - 8));
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("expected " + std::to_string(b.size())), std::string::npos) << e.what();
  }
  EXPECT_THROW(deserialize_checkpoint(b + "x"), IoError);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "mhdl_test_io.bin";
  auto g = make_grid(small_data_domain(16, 33));
  const Checkpoint c{g->config(), small_data_state(g), initial_aux(small_data_state(g))};
  write_checkpoint(path, c);
  EXPECT_TRUE(read_checkpoint(path) == c);
  std::filesystem::remove(path);
  EXPECT_THROW(read_checkpoint(path), IoError);
}

TEST(Hash, MatchesGitObjectIds) {
  EXPECT_EQ(git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(Format, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(0.0), "0");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  EXPECT_EQ(format_double(0.2 + 0.1), "0.30000000000000004");
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::bit_cast<double>(rng());
    if (!std::isfinite(v)) continue;
    const std::string s = format_double(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back), std::bit_cast<std::uint64_t>(v)) << s;
    std::string mantissa;
    for (char c : s.substr(0, s.find('e')))
      if (c >= '0' && c <= '9') mantissa.push_back(c);
    const auto first = mantissa.find_first_not_of('0');
    const auto last = mantissa.find_last_not_of('0');
    EXPECT_LE(last - first + 1, 17u) << s;
  }
}
