#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hpcplp/tokenizer.hpp"

namespace hpcplp {

using TokenId = std::int32_t;

/// Dense, injective string -> id table. Ids 0..3 are reserved for the
/// special tokens; everything else is appended in insertion order.
///
/// Not synchronized: concurrent add_tokens calls need external locking.
class Vocabulary {
 public:
  static constexpr TokenId kCls = 0;
  static constexpr TokenId kSep = 1;
  static constexpr TokenId kUnk = 2;
  static constexpr TokenId kPad = 3;

  static constexpr std::string_view kClsText = "[CLS]";
  static constexpr std::string_view kSepText = "[SEP]";
  static constexpr std::string_view kUnkText = "[UNK]";
  static constexpr std::string_view kPadText = "[PAD]";

  Vocabulary();

  std::size_t size() const noexcept { return id_to_token_.size(); }
  std::optional<TokenId> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  const std::string& token(TokenId id) const;

  /// Tokens are stored verbatim. Returns how many were new.
  std::size_t add_tokens(std::span<const std::string> tokens);

 private:
  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::string> id_to_token_;
};

/// Maps each token to its id (UNK when absent); with add_special the result
/// is wrapped in CLS ... SEP.
std::vector<TokenId> encode(const TokenStream& stream, const Vocabulary& vocab, bool add_special);

/// Inverse of encode for in-vocabulary ids. Special ids decode to their
/// bracketed text; add_special framing is dropped when skip_special is set.
std::vector<std::string> decode(std::span<const TokenId> ids, const Vocabulary& vocab,
                                bool skip_special = true);

}  // namespace hpcplp
