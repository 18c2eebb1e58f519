#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "t2t/autodiff.hpp"
#include "t2t/data.hpp"
#include "t2t/model.hpp"

namespace t2t {

// One position of the flattened infobox: either a field-name delimiter (id
// in the field vocabulary) or a value token (id in the word vocabulary).
// Surface strings are kept for copy post-processing.
struct FlatToken {
  bool is_field;
  int id;
  int field_index;  // 0-based field this position belongs to
  std::string surface;
};

// `[FieldName] v1 v2 ... [FieldName] ...` in infobox order.
std::vector<FlatToken> flatten(const Infobox& infobox, const Vocabulary& vocab);

// Per-field bi-GRU encodings of the value tokens, concatenated across fields
// in flattened order.
struct ValueEncoding {
  std::vector<ad::Var> value_reps;             // W vectors of size 2*hidden
  std::vector<int> field_of;                   // W entries, 0-based
  std::vector<std::pair<int, int>> field_spans;  // [start, end) per field
  std::vector<ad::Var> field_finals;           // final bi-GRU state per field
  std::vector<std::string> surfaces;           // original value strings
};

ValueEncoding encode_values(ad::Tape& tape, const ModelVars& vars, const Infobox& infobox,
                            const Vocabulary& vocab);

// Per-field representation (config.field_rep selects the variant, the
// paper's concatenation being the default) run through a bi-GRU across the M
// fields for neighbor context.
std::vector<ad::Var> encode_fields(ad::Tape& tape, const ModelVars& vars,
                                   const ModelConfig& config, const Infobox& infobox,
                                   const Vocabulary& vocab,
                                   std::span<const ad::Var> field_finals);

// Everything decode_step consumes. In basic (non-bifocal) mode field_reps
// and macro_keys are empty and value_reps hold the bi-GRU encodings of the
// flattened sequence, delimiters included.
struct EncodedInput {
  std::vector<ad::Var> field_reps;
  std::vector<ad::Var> value_reps;
  std::vector<int> field_of;
  std::vector<std::pair<int, int>> field_spans;
  std::vector<std::string> surfaces;
  std::vector<ad::Var> macro_keys;  // V_g h^g_i, step independent
  std::vector<ad::Var> micro_keys;  // V_w h^w_j
  int field_count() const { return static_cast<int>(field_spans.size()); }
};

EncodedInput encode_input(ad::Tape& tape, const ModelVars& vars, const ModelConfig& config,
                          const Infobox& infobox, const Vocabulary& vocab);

}  // namespace t2t
