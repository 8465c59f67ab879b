// Copyright 2026 The verilm Authors.
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

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "verilm/trial_store.hpp"

namespace verilm {

enum class TemplateId { confidence, binary };
std::string_view to_string(TemplateId id);

/// Scoring protocol. `confidence` reads a 0-100 score from generated text;
/// `llr` reads Yes/No logits.
enum class Protocol { confidence, llr };
std::string_view to_string(Protocol p);
Protocol protocol_from_string(std::string_view s);
constexpr TemplateId template_for(Protocol p) {
  return p == Protocol::confidence ? TemplateId::confidence : TemplateId::binary;
}
/// Accepts "confidence" or "binary"; throws ConfigError otherwise.
TemplateId template_id_from_string(std::string_view s);

// Slot markers inside template assets.
inline constexpr std::string_view kAudio1Marker = "{{AUDIO1}}";
inline constexpr std::string_view kAudio2Marker = "{{AUDIO2}}";

/// Validated prompt text with exactly one {{AUDIO1}} and one {{AUDIO2}} slot.
///
/// The binary template must ask for a Yes/No answer and must not carry the
/// 0-100 scale; the confidence template must carry the three anchor clauses.
class PromptTemplate {
 public:
  /// Throws ConfigError when `text` violates the rules for `id`.
  PromptTemplate(TemplateId id, std::string text);

  /// The shipped asset for `id`.
  static const PromptTemplate& builtin(TemplateId id);

  TemplateId id() const { return id_; }
  const std::string& text() const { return text_; }
  /// FNV-1a of the text, recorded with every run.
  const std::string& content_hash() const { return hash_; }

 private:
  TemplateId id_;
  std::string text_;
  std::string hash_;
};

struct TextSegment {
  std::string text;
  friend bool operator==(const TextSegment&, const TextSegment&) = default;
};

struct AudioRef {
  int slot = 1;  // 1 = enroll, 2 = test
  UtteranceId utterance;
  friend bool operator==(const AudioRef&, const AudioRef&) = default;
};

using PromptSegment = std::variant<TextSegment, AudioRef>;

struct RenderedPrompt {
  TemplateId template_id = TemplateId::binary;
  std::vector<PromptSegment> segments;
  UtteranceId enroll;
  UtteranceId test;

  friend bool operator==(const RenderedPrompt&, const RenderedPrompt&) = default;
};

RenderedPrompt render(const PromptTemplate& tmpl, const UtteranceId& enroll,
                      const UtteranceId& test);
RenderedPrompt render(TemplateId id, const UtteranceId& enroll, const UtteranceId& test);

/// Flattens a rendered prompt to text, writing audio references as
/// `[audio N: <path>]`. For logs and replay keys, not for transport.
std::string to_display_text(const RenderedPrompt& prompt);

}  // namespace verilm
