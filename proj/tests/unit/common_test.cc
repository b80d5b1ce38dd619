#include <gtest/gtest.h>

#include "edukg/common/error.h"
#include "edukg/common/text.h"
#include "edukg/common/url.h"

namespace edukg {
namespace {

TEST(Text, NormalizePhraseLowercasesAndCollapsesSpace) {
  EXPECT_EQ(text::NormalizePhrase("  Graph \t  Theory\n"), "graph theory");
  EXPECT_EQ(text::NormalizePhrase(""), "");
}

TEST(Text, AlphaOnlyLowerDropsDigitsAndPunctuation) {
  EXPECT_EQ(text::AlphaOnlyLower("My Course 2024!"), "mycourse");
  EXPECT_EQ(text::AlphaOnlyLower("12"), "");
}

TEST(Text, WordTokensKeepUtf8WordsWhole) {
  EXPECT_EQ(text::WordTokens("Ünïcode, wörds-42"),
            (std::vector<std::string>{"Ünïcode", "wörds", "42"}));
  EXPECT_EQ(text::WordTokens("Graph THEORY"), (std::vector<std::string>{"graph", "theory"}));
}

TEST(Text, SplitKeepsEmptyFields) {
  EXPECT_EQ(text::Split("a,,b", ','), (std::vector<std::string>{"a", "", "b"}));
  EXPECT_EQ(text::Join({"a", "b", "c"}, ", "), "a, b, c");
}

// Published FNV-1a 64-bit test vectors.
TEST(Text, Fnv1a64MatchesReferenceVectors) {
  EXPECT_EQ(text::Fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(text::Fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(text::Fnv1a64("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(text::Hex64(0xabcULL), "0000000000000abc");
}

TEST(Url, ParsesHostPortAndPath) {
  Url u = ParseUrl("http://127.0.0.1:2222/rest/annotate");
  EXPECT_EQ(u.scheme, "http");
  EXPECT_EQ(u.host, "127.0.0.1");
  EXPECT_EQ(u.port, 2222);
  EXPECT_EQ(u.path, "/rest/annotate");
  EXPECT_EQ(u.Origin(), "http://127.0.0.1:2222");
  EXPECT_EQ(ParseUrl("redis://cache").port, 6379);
  EXPECT_EQ(ParseUrl("http://h").path, "/");
}

TEST(Url, RejectsMalformedUrls) {
  EXPECT_THROW(ParseUrl("localhost:80"), ConfigError);
  EXPECT_THROW(ParseUrl("http://h:0"), ConfigError);
  EXPECT_THROW(ParseUrl("http://h:99999"), ConfigError);
  EXPECT_THROW(ParseUrl("http://:80"), ConfigError);
  EXPECT_THROW(ParseUrl("ftp://h"), ConfigError);
}

TEST(Url, PercentCodingRoundTrips) {
  const std::string s = "Mercury (planet)/Ünï&x=1";
  EXPECT_EQ(PercentDecode(PercentEncode(s)), s);
  EXPECT_EQ(PercentDecode("Graph%20theory"), "Graph theory");
  EXPECT_EQ(PercentDecode("100%"), "100%");
}

}  // namespace
}  // namespace edukg
