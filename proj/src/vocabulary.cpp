#include "hpcplp/vocabulary.hpp"

#include <fmt/format.h>

#include "hpcplp/errors.hpp"

namespace hpcplp {

Vocabulary::Vocabulary() {
  for (auto special : {kClsText, kSepText, kUnkText, kPadText}) {
    token_to_id_.emplace(std::string(special), static_cast<TokenId>(id_to_token_.size()));
    id_to_token_.emplace_back(special);
  }
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  if (auto it = token_to_id_.find(std::string(token)); it != token_to_id_.end()) {
    return it->second;
  }
  return std::nullopt;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("token id {} out of range", id));
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::size_t Vocabulary::add_tokens(std::span<const std::string> tokens) {
  std::size_t added = 0;
  for (const auto& t : tokens) {
    const auto next = static_cast<TokenId>(id_to_token_.size());
    if (token_to_id_.emplace(t, next).second) {
      id_to_token_.push_back(t);
      ++added;
    }
  }
  return added;
}

std::vector<TokenId> encode(const TokenStream& stream, const Vocabulary& vocab, bool add_special) {
  std::vector<TokenId> ids;
  ids.reserve(stream.tokens.size() + 2);
  if (add_special) ids.push_back(Vocabulary::kCls);
  for (const auto& t : stream.tokens) ids.push_back(vocab.find(t.text).value_or(Vocabulary::kUnk));
  if (add_special) ids.push_back(Vocabulary::kSep);
  return ids;
}

std::vector<std::string> decode(std::span<const TokenId> ids, const Vocabulary& vocab,
                                bool skip_special) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) {
    if (skip_special && (id == Vocabulary::kCls || id == Vocabulary::kSep || id == Vocabulary::kPad))
      continue;
    out.push_back(vocab.token(id));
  }
  return out;
}

}  // namespace hpcplp
