//
// Copyright 2026 The Perturbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef PERTURBENCH_TEXT_H_
#define PERTURBENCH_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace perturbench {

// Whitespace tokenization; punctuation stays attached to its word, so
// "1799.CDs" is one token.
std::vector<std::string> Tokenize(std::string_view text);

std::string JoinTokens(const std::vector<std::string>& tokens,
                       std::string_view separator = " ");

// Collapses whitespace runs to one space and trims both ends.
std::string NormalizeWhitespace(std::string_view text);

std::string Trim(std::string_view text);
std::string ToLowerAscii(std::string_view text);

// Strips leading and trailing ASCII punctuation.
std::string StripPunctuation(std::string_view word);

std::vector<std::string> Split(std::string_view text, char delimiter);

bool IsAsciiLetter(char c);
bool StartsWith(std::string_view text, std::string_view prefix);
bool EndsWith(std::string_view text, std::string_view suffix);

// Splits UTF-8 text into one string per code point. Malformed bytes are
// returned as single-byte pieces.
std::vector<std::string> Utf8Chars(std::string_view text);

// Appends the UTF-8 encoding of a code point.
void AppendUtf8(std::string& out, char32_t code_point);

}  // namespace perturbench

#endif  // PERTURBENCH_TEXT_H_
