#pragma once

#include <string>
#include <vector>

namespace reqgen {

using Tokens = std::vector<std::string>;
using Phrase = std::vector<std::string>;

// Lowercase, whitespace split, with . , ; : ( ) ? ! broken out as their own
// tokens. Deterministic; "" tokenizes to [].
Tokens tokenize(const std::string& text);

// Inverse-ish of tokenize for presentation: space-joined, no space before
// punctuation, final [SEP] stripped, first character capitalized.
std::string detokenize(const Tokens& tokens);

// Lowercase + collapse runs of whitespace to single spaces + trim. Used for
// keyword <-> ontology entity matching.
std::string normalize_name(const std::string& s);

std::string to_lower(const std::string& s);

bool is_punct_token(const std::string& tok);

// Phrase as display text (tokens joined by single spaces).
std::string phrase_text(const Phrase& phrase);

}  // namespace reqgen
