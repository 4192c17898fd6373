#include "gppl/io.hpp"

#include "gppl/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unordered_map>
#include <unordered_set>

namespace gppl {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_int(std::string_view s, int& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Calls fn(fields, line_number) for every non-blank line.
template <typename Fn>
void for_each_row(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++line_no;
    if (!trim(line).empty()) fn(split_fields(line), line_no);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
}

std::string hex_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  (void)ec;
  return std::string(buf, ptr);
}

double parse_hex_real(const nlohmann::json& j) {
  const std::string s = j.get<std::string>();
  std::string_view body = s;
  bool negative = false;
  if (!body.empty() && body.front() == '-') {
    negative = true;
    body.remove_prefix(1);
  }
  if (body == "inf" || body == "nan") throw DataError("model file: non-finite value");
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v, std::chars_format::hex);
  if (ec != std::errc() || ptr != body.data() + body.size()) throw DataError("model file: bad real '" + s + "'");
  return negative ? -v : v;
}

nlohmann::json vector_json(const Vector& v) {
  auto arr = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(hex_real(v[i]));
  return arr;
}

Vector vector_from(const nlohmann::json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = parse_hex_real(j.at(static_cast<std::size_t>(i)));
  return v;
}

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  auto data = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) data.push_back(hex_real(m(r, c)));
  }
  j["data"] = std::move(data);
  return j;
}

Matrix matrix_from(const nlohmann::json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols) {
    throw DataError("model file: matrix data does not match declared dimensions");
  }
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = parse_hex_real(data.at(static_cast<std::size_t>(r * cols + c)));
  }
  return m;
}

}  // namespace

ItemSet parse_items(std::string_view text) {
  ItemSet items;
  std::vector<std::vector<double>> rows;
  std::unordered_set<std::string> seen;
  std::size_t width = 0;
  bool first = true;
  for_each_row(text, [&](const std::vector<std::string_view>& f, std::size_t line) {
    const bool is_first = first;
    first = false;
    if (f.size() < 2) throw DataError("item row needs an id and at least one feature", line);
    std::vector<double> values(f.size() - 1);
    for (std::size_t k = 1; k < f.size(); ++k) {
      if (!parse_double(f[k], values[k - 1])) {
        if (is_first) return;  // header row
        throw DataError("feature '" + std::string(f[k]) + "' is not a number", line);
      }
      if (!std::isfinite(values[k - 1])) throw DataError("non-finite feature value", line);
    }
    if (width == 0) width = f.size();
    if (f.size() != width) {
      throw DataError("expected " + std::to_string(width) + " columns, found " + std::to_string(f.size()), line);
    }
    std::string id(f[0]);
    if (id.empty()) throw DataError("empty item id", line);
    if (!seen.insert(id).second) throw DataError("duplicate item id '" + id + "'", line);
    items.ids.push_back(std::move(id));
    rows.push_back(std::move(values));
  });
  items.features.resize(static_cast<Index>(rows.size()), static_cast<Index>(width ? width - 1 : 0));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      items.features(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
  }
  return items;
}

ItemSet load_items(const std::string& path) { return parse_items(read_text(path)); }

std::vector<PreferencePair> parse_pairs(std::string_view text, const ItemSet& items, bool require_label) {
  std::unordered_map<std::string, Index> index_of;
  for (std::size_t k = 0; k < items.ids.size(); ++k) index_of.emplace(items.ids[k], static_cast<Index>(k));

  std::vector<PreferencePair> pairs;
  bool first = true;
  for_each_row(text, [&](const std::vector<std::string_view>& f, std::size_t line) {
    const bool is_first = first;
    first = false;
    const bool has_label = f.size() == 3;
    if (!(has_label || (!require_label && f.size() == 2))) {
      throw DataError("expected " + std::string(require_label ? "3" : "2 or 3") + " columns, found " +
                          std::to_string(f.size()),
                      line);
    }
    const auto a = index_of.find(std::string(f[0]));
    const auto b = index_of.find(std::string(f[1]));
    int raw = 1;
    const bool label_ok = !has_label || parse_int(f[2], raw);
    if (is_first && (a == index_of.end() || b == index_of.end()) && !label_ok) return;  // header row
    if (a == index_of.end()) throw DataError("unknown item id '" + std::string(f[0]) + "'", line);
    if (b == index_of.end()) throw DataError("unknown item id '" + std::string(f[1]) + "'", line);
    if (a->second == b->second) throw DataError("pair compares item '" + std::string(f[0]) + "' with itself", line);
    if (!label_ok || raw < 0 || raw > 2) {
      throw DataError("invalid label '" + std::string(f[2]) + "' (expected 0, 1 or 2)", line);
    }
    const PreferenceLabel label = raw == 2   ? PreferenceLabel::FirstPreferred
                                  : raw == 0 ? PreferenceLabel::SecondPreferred
                                             : PreferenceLabel::Undecided;
    pairs.push_back({a->second, b->second, label});
  });
  return pairs;
}

std::vector<PreferencePair> load_pairs(const std::string& path, const ItemSet& items, bool require_label) {
  return parse_pairs(read_text(path), items, require_label);
}

int raw_label(PreferenceLabel label) {
  switch (label) {
    case PreferenceLabel::FirstPreferred:
      return 2;
    case PreferenceLabel::SecondPreferred:
      return 0;
    case PreferenceLabel::Undecided:
      return 1;
  }
  return 1;
}

Vector mean_pool(std::span<const Vector> rows) {
  if (rows.empty()) throw std::invalid_argument("mean_pool: no vectors");
  Vector sum = Vector::Zero(rows.front().size());
  for (const auto& r : rows) {
    if (r.size() != sum.size()) throw std::invalid_argument("mean_pool: inconsistent dimensions");
    sum += r;
  }
  return sum / static_cast<double>(rows.size());
}

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out.flush()) throw DataError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw DataError("cannot rename to '" + path + "': " + ec.message());
}

std::string serialize_model(const ModelState& m) {
  nlohmann::json j;
  j["format_version"] = ModelState::kFormatVersion;
  j["kernel"] = {{"family", "matern32"}, {"lengthscales", vector_json(m.kernel.lengthscales)}};
  j["hyperparameters"] = {{"a0", hex_real(m.a0)},
                          {"b0", hex_real(m.b0)},
                          {"forgetting", hex_real(m.svi.forgetting)},
                          {"inducing", m.svi.inducing},
                          {"batch_pairs", m.svi.batch_pairs},
                          {"max_steps", m.svi.max_steps},
                          {"seed", m.svi.seed}};
  j["inducing_inputs"] = matrix_json(m.inducing);
  j["fhat_m"] = vector_json(m.fhat_m);
  j["cov_m"] = matrix_json(m.cov_m);
  j["scale"] = {{"a", hex_real(m.scale.a)},
                {"b", hex_real(m.scale.b)},
                {"prior_a", hex_real(m.scale.prior_a)},
                {"prior_b", hex_real(m.scale.prior_b)}};
  j["jitter"] = hex_real(m.jitter);
  j["feature_dim"] = m.dim;
  j["vocab_hash"] = m.vocab_hash;
  j["steps"] = m.steps;
  return j.dump(1) + "\n";
}

ModelState deserialize_model(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != ModelState::kFormatVersion) {
      throw DataError("model format version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(ModelState::kFormatVersion) + ")");
    }
    ModelState m;
    if (j.at("kernel").at("family").get<std::string>() != "matern32") throw DataError("unknown kernel family");
    m.kernel.lengthscales = vector_from(j.at("kernel").at("lengthscales"));
    const auto& h = j.at("hyperparameters");
    m.a0 = parse_hex_real(h.at("a0"));
    m.b0 = parse_hex_real(h.at("b0"));
    m.svi.forgetting = parse_hex_real(h.at("forgetting"));
    m.svi.inducing = h.at("inducing").get<Index>();
    m.svi.batch_pairs = h.at("batch_pairs").get<Index>();
    m.svi.max_steps = h.at("max_steps").get<int>();
    m.svi.seed = h.at("seed").get<std::uint64_t>();
    m.inducing = matrix_from(j.at("inducing_inputs"));
    m.fhat_m = vector_from(j.at("fhat_m"));
    m.cov_m = matrix_from(j.at("cov_m"));
    const auto& s = j.at("scale");
    m.scale = {parse_hex_real(s.at("a")), parse_hex_real(s.at("b")), parse_hex_real(s.at("prior_a")),
               parse_hex_real(s.at("prior_b"))};
    m.jitter = parse_hex_real(j.at("jitter"));
    m.dim = j.at("feature_dim").get<Index>();
    m.vocab_hash = j.at("vocab_hash").get<std::uint64_t>();
    m.steps = j.at("steps").get<int>();

    const Index nm = m.inducing.rows();
    if (m.inducing.cols() != m.dim || m.kernel.dim() != m.dim || m.fhat_m.size() != nm ||
        m.cov_m.rows() != nm || m.cov_m.cols() != nm) {
      throw DataError("model file: inconsistent dimensions");
    }
    m.kernel.validate(m.dim);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file is missing a field: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

void save_model(const ModelState& model, const std::string& path) {
  write_text_atomic(path, serialize_model(model));
}

ModelState load_model(const std::string& path) { return deserialize_model(read_text(path)); }

std::string format_items(const ItemSet& items) {
  std::string out;
  for (Index i = 0; i < items.size(); ++i) {
    out += items.ids[static_cast<std::size_t>(i)];
    for (Index d = 0; d < items.dim(); ++d) out += "," + format_real(items.features(i, d));
    out += "\n";
  }
  return out;
}

std::string format_pairs(std::span<const PreferencePair> pairs, const ItemSet& items) {
  std::string out;
  for (const auto& p : pairs) {
    out += items.ids[static_cast<std::size_t>(p.i)] + "," + items.ids[static_cast<std::size_t>(p.j)] + "," +
           std::to_string(raw_label(p.label)) + "\n";
  }
  return out;
}

std::string format_ranking(std::span<const RankedItem> ranking) {
  std::string out = "id,score,stdev\n";
  for (const auto& r : ranking) out += r.id + "," + format_real(r.score) + "," + format_real(r.stdev) + "\n";
  return out;
}

std::string format_classifications(std::span<const PreferencePair> pairs, std::span<const double> probs,
                                   const ItemSet& items) {
  std::string out = "id_i,id_j,p_i_beats_j,entropy_bits\n";
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out += items.ids[static_cast<std::size_t>(pairs[k].i)] + "," + items.ids[static_cast<std::size_t>(pairs[k].j)] +
           "," + format_real(probs[k]) + "," + format_real(pair_entropy(probs[k])) + "\n";
  }
  return out;
}

std::string format_curve(std::span<const CurvePoint> curve) {
  std::string out = "labels_used,accuracy\n";
  for (const auto& c : curve) out += std::to_string(c.labels_used) + "," + format_real(c.accuracy) + "\n";
  return out;
}

std::string format_history(const MliiResult& result) {
  std::string out = "iteration,objective,bound";
  const Index dim = result.reference.size();
  for (Index d = 0; d < dim; ++d) out += ",l" + std::to_string(d);
  for (Index d = 0; d < dim; ++d) out += ",l" + std::to_string(d) + "_normalized";
  out += "\n";
  for (const auto& h : result.history) {
    out += std::to_string(h.iteration) + "," + format_real(h.objective) + "," + format_real(h.bound);
    for (Index d = 0; d < dim; ++d) out += "," + format_real(h.lengthscales[d]);
    for (Index d = 0; d < dim; ++d) out += "," + format_real(h.normalized[d]);
    out += "\n";
  }
  return out;
}

const std::vector<std::string>& toy_scenario_names() {
  static const std::vector<std::string> names{"no-cycle", "single-cycle", "double-cycle", "undecided"};
  return names;
}

std::vector<std::string> toy_item_ids() { return {"arg0", "arg1", "arg2", "arg3", "arg4"}; }

std::vector<PreferencePair> toy_scenario(std::string_view name) {
  constexpr auto first = PreferenceLabel::FirstPreferred;
  if (name == "no-cycle") return {{0, 1, first}, {0, 2, first}, {1, 2, first}, {3, 4, first}};
  if (name == "single-cycle") return {{0, 1, first}, {1, 2, first}, {2, 0, first}, {3, 4, first}};
  if (name == "double-cycle") {
    return {{1, 2, first}, {0, 1, first}, {3, 2, first}, {0, 3, first}, {2, 0, first}};
  }
  if (name == "undecided") {
    auto pairs = toy_scenario("no-cycle");
    for (int k = 0; k < 9; ++k) pairs.push_back({0, 2, PreferenceLabel::Undecided});
    return pairs;
  }
  throw std::invalid_argument("unknown toy scenario '" + std::string(name) + "'");
}

}  // namespace gppl
