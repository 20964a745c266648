#pragma once

#include "tmr/evaluation.hpp"
#include "tmr/raster.hpp"
#include "tmr/textmask.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tmr {

struct SynthSpec {
  std::uint64_t seed = 1;
  int text_only = 63;
  int figure_only = 2;
  int combined = 35;
  int groups = 10;
  int members_per_group = 5;
  int image_size = 128;
  // member transformations
  bool scale = true;      // +-30%
  bool rotation = true;   // +-15 degrees
  bool contrast_inversion = true;
  bool text_contamination = false;  // distinct random word on every member
  bool inverted_duplicate = false;  // member 1 is the pixel-inverted member 0
  bool group_text = true;           // base marks may carry a word
};

/// Splits `total` distractors into text-only / figure-only / combined counts
/// in the proportions 63 : 2 : 35.
void set_distractor_counts(SynthSpec& spec, int total);

struct SynthImage {
  std::string id;
  RasterImage image;
  std::string kind;      // text, figure, combined, member
  std::string group_id;  // empty for distractors
  std::vector<TextBox> text_bounds;
  std::string transform;
};

struct SynthCorpus {
  std::vector<SynthImage> distractors;  // ids "dNNNNN.png"
  std::vector<SynthImage> members;      // ids "queries/gNNN_mNN.png"
  std::vector<QueryGroup> groups;
};

/// Deterministic in `spec`.
SynthCorpus synth_corpus(const SynthSpec& spec);

/// Writes corpus/<id>, <member id>, groups.csv (group_id,image_path) and
/// annotations.csv under `dir`.
void write_synth_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

/// Glyph rows of the built-in 5x7 font (A-Z), bit 4 = leftmost column.
const std::array<std::uint8_t, 7>& glyph_rows(char c);

}  // namespace tmr
