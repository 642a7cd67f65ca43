#include <doctest.h>

#include <algorithm>
#include <set>

#include "hpcplp/rng.hpp"
#include "hpcplp/vocabulary.hpp"

using namespace hpcplp;

namespace {

TokenStream stream_of(std::initializer_list<const char*> texts) {
  TokenStream ts;
  std::size_t pos = 0;
  for (const char* t : texts) {
    const std::string s(t);
    ts.tokens.push_back({s, TokenKind::Identifier, {pos, pos + s.size()}});
    pos += s.size() + 1;
  }
  return ts;
}

void check_dense_injective(const Vocabulary& v) {
  std::set<std::string> seen;
  for (std::size_t id = 0; id < v.size(); ++id) {
    const auto& tok = v.token(static_cast<TokenId>(id));
    CHECK(seen.insert(tok).second);
    CHECK(v.find(tok) == static_cast<TokenId>(id));
  }
}

}  // namespace

TEST_CASE("special ids are fixed") {
  Vocabulary v;
  CHECK(v.size() == 4);
  CHECK(v.find("[CLS]") == Vocabulary::kCls);
  CHECK(v.find("[SEP]") == Vocabulary::kSep);
  CHECK(v.find("[UNK]") == Vocabulary::kUnk);
  CHECK(v.find("[PAD]") == Vocabulary::kPad);
}

TEST_CASE("encode empty stream with specials") {
  Vocabulary v;
  CHECK(encode(TokenStream{}, v, true) == std::vector<TokenId>{Vocabulary::kCls, Vocabulary::kSep});
  CHECK(encode(TokenStream{}, v, false).empty());
}

TEST_CASE("encode with every token known has no UNK") {
  Vocabulary v;
  const std::vector<std::string> words = {"for", "i", "omp"};
  v.add_tokens(words);
  const auto ids = encode(stream_of({"omp", "for", "i", "i"}), v, false);
  CHECK(ids.size() == 4);
  CHECK(std::find(ids.begin(), ids.end(), Vocabulary::kUnk) == ids.end());
}

TEST_CASE("one out-of-vocabulary token maps to UNK in place") {
  Vocabulary v;
  const std::vector<std::string> words = {"a", "c"};
  v.add_tokens(words);  // a=4, c=5
  const auto ids = encode(stream_of({"a", "b", "c"}), v, true);
  CHECK(ids == std::vector<TokenId>{Vocabulary::kCls, 4, Vocabulary::kUnk, 5, Vocabulary::kSep});
}

TEST_CASE("add_tokens is idempotent and dense") {
  Vocabulary v;
  const std::vector<std::string> omp = {"omp"};
  CHECK(v.add_tokens(omp) == 1);
  CHECK(v.add_tokens(omp) == 0);
  CHECK(v.add_tokens(std::vector<std::string>{}) == 0);
  CHECK(v.size() == 5);

  const std::size_t n = v.size();
  const std::vector<std::string> fresh = {"x", "y", "z"};
  CHECK(v.add_tokens(fresh) == 3);
  CHECK(v.find("x") == static_cast<TokenId>(n));
  CHECK(v.find("y") == static_cast<TokenId>(n + 1));
  CHECK(v.find("z") == static_cast<TokenId>(n + 2));

  // duplicates inside one call count once
  const std::vector<std::string> dup = {"w", "w", "x"};
  CHECK(v.add_tokens(dup) == 1);
  check_dense_injective(v);
}

TEST_CASE("property: random add_tokens keeps ids dense and injective; decode inverts encode") {
  SplitMix64 rng(7);
  for (int round = 0; round < 50; ++round) {
    Vocabulary v;
    std::vector<std::string> all;
    for (int batch = 0; batch < 5; ++batch) {
      std::vector<std::string> toks;
      for (std::uint64_t k = 0, m = rng.below(10); k < m; ++k) {
        toks.push_back("t" + std::to_string(rng.below(30)));
      }
      v.add_tokens(toks);
      all.insert(all.end(), toks.begin(), toks.end());
    }
    check_dense_injective(v);

    TokenStream ts;
    for (const auto& t : all) ts.tokens.push_back({t, TokenKind::Identifier, {0, 1}});
    const auto ids = encode(ts, v, true);
    CHECK(decode(ids, v) == ts.texts());
  }
}
