#pragma once

#include "gppl/active.hpp"
#include "gppl/likelihood.hpp"
#include "gppl/mlii.hpp"
#include "gppl/model.hpp"
#include "gppl/predict.hpp"
#include "gppl/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace gppl {

/// Comma-separated rows of `id,x_1,...,x_D`, optional header row.
ItemSet parse_items(std::string_view text);
ItemSet load_items(const std::string& path);

/// Rows of `id_i,id_j,label` with label 2 = first preferred, 0 = second,
/// 1 = undecided. With `require_label` false a missing third column is allowed
/// and reads as undecided (used for query pairs).
std::vector<PreferencePair> parse_pairs(std::string_view text, const ItemSet& items, bool require_label = true);
std::vector<PreferencePair> load_pairs(const std::string& path, const ItemSet& items, bool require_label = true);

int raw_label(PreferenceLabel label);

/// Per-dimension arithmetic mean of equally sized vectors.
Vector mean_pool(std::span<const Vector> rows);

/// Shortest decimal text that parses back to the same double.
std::string format_real(double v);

std::string read_text(const std::string& path);

/// Writes through a temporary file in the same directory and renames it.
void write_text_atomic(const std::string& path, const std::string& text);

/// Versioned JSON document. Reals are stored as hexadecimal floating point
/// strings so every value round-trips bit for bit.
std::string serialize_model(const ModelState& model);
ModelState deserialize_model(std::string_view text);
void save_model(const ModelState& model, const std::string& path);
ModelState load_model(const std::string& path);

std::string format_items(const ItemSet& items);
std::string format_pairs(std::span<const PreferencePair> pairs, const ItemSet& items);
std::string format_ranking(std::span<const RankedItem> ranking);
std::string format_classifications(std::span<const PreferencePair> pairs, std::span<const double> probs,
                                   const ItemSet& items);
std::string format_curve(std::span<const CurvePoint> curve);
std::string format_history(const MliiResult& result);

/// Names accepted by toy_scenario.
const std::vector<std::string>& toy_scenario_names();

/// Identifiers arg0..arg4.
std::vector<std::string> toy_item_ids();

/// Preference edges of the five-item toy graphs:
///   no-cycle:     arg0>arg1, arg0>arg2, arg1>arg2, arg3>arg4
///   single-cycle: arg0>arg1, arg1>arg2, arg2>arg0, arg3>arg4
///   double-cycle: arg1>arg2, arg0>arg1, arg3>arg2, arg0>arg3, arg2>arg0
///   undecided:    no-cycle plus 9 undecided labels on (arg0, arg2)
std::vector<PreferencePair> toy_scenario(std::string_view name);

}  // namespace gppl
