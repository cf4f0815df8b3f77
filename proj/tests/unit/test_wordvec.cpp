#include <gtest/gtest.h>

#include "embeval/error.hpp"
#include "embeval/wordvec.hpp"
#include "test_util.hpp"

using namespace embeval;

TEST(WordVectors, AddAndLookup) {
  WordVectors wv("t", 2);
  const std::vector<float> a{1, 2}, b{3, 4};
  EXPECT_TRUE(wv.add("a", a));
  EXPECT_FALSE(wv.add("a", b));
  EXPECT_EQ(wv.size(), 1u);
  EXPECT_EQ(wv.duplicate_count(), 1u);
  const auto v = wv.lookup("a");
  ASSERT_TRUE(v);
  EXPECT_EQ((*v)[1], 2.0f);
  EXPECT_FALSE(wv.lookup("b"));
  const std::vector<float> wrong{1, 2, 3};
  EXPECT_THROW(wv.add("c", wrong), DimensionMismatch);
}

TEST(WordVectors, LoadsFixture) {
  const auto wv = load_word_vectors(testutil::data("toy_vectors.txt"));
  EXPECT_EQ(wv.dim(), 10u);
  EXPECT_EQ(wv.size(), 49u);
  EXPECT_TRUE(wv.lookup("good"));
  EXPECT_EQ(wv.name(), "toy_vectors");
}

TEST(WordVectors, HeaderLineIsDetected) {
  testutil::TempDir dir;
  testutil::write_file(dir / "v.txt", "2 3\nx 1 2 3\ny 4 5 6\n");
  const auto wv = load_word_vectors(dir / "v.txt", 3);
  EXPECT_EQ(wv.size(), 2u);
  EXPECT_EQ((*wv.lookup("y"))[2], 6.0f);
}

TEST(WordVectors, FirstDuplicateWins) {
  testutil::TempDir dir;
  testutil::write_file(dir / "v.txt", "x 1 2\nx 9 9\n");
  const auto wv = load_word_vectors(dir / "v.txt");
  EXPECT_EQ((*wv.lookup("x"))[0], 1.0f);
  EXPECT_EQ(wv.duplicate_count(), 1u);
}

TEST(WordVectors, ErrorsCarryLineNumbers) {
  testutil::TempDir dir;
  auto expect_line = [&](const std::string& text, std::size_t line,
                         std::optional<std::size_t> dim = std::nullopt) {
    testutil::write_file(dir / "v.txt", text);
    try {
      load_word_vectors(dir / "v.txt", dim);
      ADD_FAILURE() << text;
    } catch (const LoadError& e) {
      EXPECT_EQ(e.line(), line) << text;
    }
  };
  expect_line("x 1 2\ny 1 2 3\n", 2);
  expect_line("x 1 2\ny 1 nan\n", 2);
  expect_line("x 1 2\ny 1 abc\n", 2);
  expect_line("x 1 2\n", 1, 3);
  expect_line("", 0);
}
