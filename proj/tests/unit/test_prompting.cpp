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

#include <gtest/gtest.h>

#include "verilm/error.hpp"
#include "verilm/prompting.hpp"

namespace verilm {
namespace {

std::string text_only(const RenderedPrompt& p) {
  std::string out;
  for (const auto& s : p.segments)
    if (const auto* t = std::get_if<TextSegment>(&s)) out += t->text;
  return out;
}

std::vector<AudioRef> audio_refs(const RenderedPrompt& p) {
  std::vector<AudioRef> out;
  for (const auto& s : p.segments)
    if (const auto* a = std::get_if<AudioRef>(&s)) out.push_back(*a);
  return out;
}

const UtteranceId kA("spk1/a/1.wav");
const UtteranceId kB("spk2/b/2.wav");

TEST(Render, ConfidenceHasTwoOrderedAudioRefs) {
  auto p = render(TemplateId::confidence, kA, kB);
  EXPECT_GE(p.segments.size(), 3u);
  auto refs = audio_refs(p);
  ASSERT_EQ(refs.size(), 2u);
  EXPECT_EQ(refs[0].slot, 1);
  EXPECT_EQ(refs[0].utterance, kA);
  EXPECT_EQ(refs[1].slot, 2);
  EXPECT_EQ(refs[1].utterance, kB);
  EXPECT_EQ(p.enroll, kA);
  EXPECT_EQ(p.test, kB);
}

TEST(Render, Deterministic) {
  for (auto id : {TemplateId::confidence, TemplateId::binary}) {
    auto a = render(id, kA, kB);
    auto b = render(id, kA, kB);
    EXPECT_EQ(a, b);
    EXPECT_EQ(to_display_text(a), to_display_text(b));
  }
}

TEST(Render, BinaryOmitsScale) {
  auto p = render(TemplateId::binary, kA, kB);
  const auto text = text_only(p);
  EXPECT_EQ(text.find("between 0 and 100"), std::string::npos);
  EXPECT_NE(text.find("Answer by Yes or No."), std::string::npos);
  EXPECT_EQ(audio_refs(p).size(), 2u);
}

TEST(Render, ConfidenceAnchorsVerbatim) {
  const auto text = text_only(render(TemplateId::confidence, kA, kB));
  for (const char* clause :
       {"Answer by Yes or No, and give a confidence score between 0 and 100",
        "0 corresponds to the certainty that they are from different speakers",
        "100 corresponds to the certainty that they are from the same speaker",
        "50 means you are uncertain"})
    EXPECT_NE(text.find(clause), std::string::npos) << clause;
}

TEST(Render, SwapChangesOnlyAudioOrder) {
  for (auto id : {TemplateId::confidence, TemplateId::binary}) {
    auto ab = render(id, kA, kB);
    auto ba = render(id, kB, kA);
    EXPECT_EQ(text_only(ab), text_only(ba));
    ASSERT_EQ(ab.segments.size(), ba.segments.size());
    EXPECT_EQ(audio_refs(ab)[0].utterance, audio_refs(ba)[1].utterance);
    EXPECT_EQ(audio_refs(ab)[1].utterance, audio_refs(ba)[0].utterance);
  }
}

TEST(Render, AudioLastAsInTemplate) {
  auto p = render(TemplateId::confidence, kA, kB);
  ASSERT_FALSE(p.segments.empty());
  const auto& last = p.segments.back();
  ASSERT_TRUE(std::holds_alternative<TextSegment>(last));
  EXPECT_EQ(std::get<TextSegment>(last).text, ".");
}

TEST(Template, ValidationRules) {
  EXPECT_THROW(PromptTemplate(TemplateId::binary, "Answer by Yes or No. {{AUDIO1}}"), ConfigError);
  EXPECT_THROW(PromptTemplate(TemplateId::binary, "Answer by Yes or No. {{AUDIO2}} {{AUDIO1}}"),
               ConfigError);
  EXPECT_THROW(
      PromptTemplate(TemplateId::binary, "Answer by Yes or No. {{AUDIO1}} {{AUDIO1}} {{AUDIO2}}"),
      ConfigError);
  EXPECT_THROW(PromptTemplate(TemplateId::binary, "Same? {{AUDIO1}} {{AUDIO2}}"), ConfigError);
  EXPECT_THROW(PromptTemplate(TemplateId::binary,
                              "Answer by Yes or No, and give a confidence score between 0 and 100 "
                              "{{AUDIO1}} {{AUDIO2}}"),
               ConfigError);
  EXPECT_THROW(PromptTemplate(TemplateId::confidence, "Answer by Yes or No. {{AUDIO1}} {{AUDIO2}}"),
               ConfigError);
  PromptTemplate ok(TemplateId::binary, "Answer by Yes or No.\nA: {{AUDIO1}} B: {{AUDIO2}}");
  auto p = render(ok, kA, kB);
  EXPECT_EQ(audio_refs(p).size(), 2u);
}

TEST(Template, ContentHashTracksText) {
  PromptTemplate a(TemplateId::binary, "Answer by Yes or No. {{AUDIO1}} {{AUDIO2}}");
  PromptTemplate b(TemplateId::binary, "Answer by Yes or No.  {{AUDIO1}} {{AUDIO2}}");
  EXPECT_NE(a.content_hash(), b.content_hash());
  EXPECT_EQ(a.content_hash(),
            PromptTemplate(TemplateId::binary, "Answer by Yes or No. {{AUDIO1}} {{AUDIO2}}").content_hash());
  EXPECT_NE(PromptTemplate::builtin(TemplateId::binary).content_hash(),
            PromptTemplate::builtin(TemplateId::confidence).content_hash());
}

TEST(Template, ProtocolMapping) {
  EXPECT_EQ(template_for(Protocol::confidence), TemplateId::confidence);
  EXPECT_EQ(template_for(Protocol::llr), TemplateId::binary);
  EXPECT_EQ(protocol_from_string("llr"), Protocol::llr);
  EXPECT_EQ(template_id_from_string("confidence"), TemplateId::confidence);
  EXPECT_THROW(protocol_from_string("logits"), ConfigError);
}

TEST(Render, DisplayText) {
  auto s = to_display_text(render(TemplateId::binary, kA, kB));
  EXPECT_NE(s.find("[audio 1: spk1/a/1.wav]"), std::string::npos);
  EXPECT_NE(s.find("[audio 2: spk2/b/2.wav]"), std::string::npos);
}

}  // namespace
}  // namespace verilm
