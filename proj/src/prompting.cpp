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

#include "verilm/prompting.hpp"

#include "verilm/embedded_assets.hpp"
#include "verilm/error.hpp"
#include "verilm/hash.hpp"

namespace verilm {
namespace {

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + needle.size()))
    ++n;
  return n;
}

constexpr std::string_view kAnchorDifferent =
    "0 corresponds to the certainty that they are from different speakers";
constexpr std::string_view kAnchorSame =
    "100 corresponds to the certainty that they are from the same speaker";
constexpr std::string_view kAnchorUncertain = "50 means you are uncertain";
constexpr std::string_view kScale = "between 0 and 100";
constexpr std::string_view kYesNo = "Answer by Yes or No";

}  // namespace

std::string_view to_string(TemplateId id) {
  return id == TemplateId::confidence ? "confidence" : "binary";
}

std::string_view to_string(Protocol p) { return p == Protocol::confidence ? "confidence" : "llr"; }

Protocol protocol_from_string(std::string_view s) {
  if (s == "confidence") return Protocol::confidence;
  if (s == "llr") return Protocol::llr;
  throw ConfigError("unknown protocol '" + std::string(s) + "' (expected confidence|llr)");
}

TemplateId template_id_from_string(std::string_view s) {
  if (s == "confidence") return TemplateId::confidence;
  if (s == "binary") return TemplateId::binary;
  throw ConfigError("unknown template id '" + std::string(s) + "'");
}

PromptTemplate::PromptTemplate(TemplateId id, std::string text)
    : id_(id), text_(std::move(text)) {
  while (!text_.empty() && (text_.back() == '\n' || text_.back() == '\r')) text_.pop_back();
  hash_ = fnv1a64_hex(text_);
  if (count_occurrences(text_, kAudio1Marker) != 1 || count_occurrences(text_, kAudio2Marker) != 1)
    throw ConfigError("template must contain {{AUDIO1}} and {{AUDIO2}} exactly once");
  if (text_.find(kAudio1Marker) > text_.find(kAudio2Marker))
    throw ConfigError("template must place {{AUDIO1}} before {{AUDIO2}}");
  if (text_.find(kYesNo) == std::string::npos)
    throw ConfigError("template must ask to '" + std::string(kYesNo) + "'");
  if (id_ == TemplateId::binary) {
    if (text_.find(kScale) != std::string::npos)
      throw ConfigError("binary template must not ask for a 0-100 score");
  } else {
    for (auto anchor : {kScale, kAnchorDifferent, kAnchorSame, kAnchorUncertain})
      if (text_.find(anchor) == std::string::npos)
        throw ConfigError("confidence template is missing '" + std::string(anchor) + "'");
  }
}

const PromptTemplate& PromptTemplate::builtin(TemplateId id) {
  static const PromptTemplate confidence(TemplateId::confidence,
                                         std::string(assets::prompt_confidence));
  static const PromptTemplate binary(TemplateId::binary, std::string(assets::prompt_binary));
  return id == TemplateId::confidence ? confidence : binary;
}

RenderedPrompt render(const PromptTemplate& tmpl, const UtteranceId& enroll,
                      const UtteranceId& test) {
  RenderedPrompt out;
  out.template_id = tmpl.id();
  out.enroll = enroll;
  out.test = test;
  std::string_view rest = tmpl.text();
  auto a1 = rest.find(kAudio1Marker);
  out.segments.emplace_back(TextSegment{std::string(rest.substr(0, a1))});
  out.segments.emplace_back(AudioRef{1, enroll});
  rest.remove_prefix(a1 + kAudio1Marker.size());
  auto a2 = rest.find(kAudio2Marker);
  out.segments.emplace_back(TextSegment{std::string(rest.substr(0, a2))});
  out.segments.emplace_back(AudioRef{2, test});
  rest.remove_prefix(a2 + kAudio2Marker.size());
  if (!rest.empty()) out.segments.emplace_back(TextSegment{std::string(rest)});
  // An empty leading or middle segment carries no text.
  std::erase_if(out.segments, [](const PromptSegment& s) {
    auto* t = std::get_if<TextSegment>(&s);
    return t && t->text.empty();
  });
  return out;
}

RenderedPrompt render(TemplateId id, const UtteranceId& enroll, const UtteranceId& test) {
  return render(PromptTemplate::builtin(id), enroll, test);
}

std::string to_display_text(const RenderedPrompt& prompt) {
  std::string out;
  for (const auto& seg : prompt.segments) {
    if (auto* t = std::get_if<TextSegment>(&seg)) {
      out += t->text;
    } else {
      const auto& a = std::get<AudioRef>(seg);
      out += "[audio " + std::to_string(a.slot) + ": " + a.utterance.str() + "]";
    }
  }
  return out;
}

}  // namespace verilm
