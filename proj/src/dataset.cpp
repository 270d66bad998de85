#include "ivbounds/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "json.hpp"

namespace ivbounds {

namespace {

std::size_t table_index(const Dims& d, int z, int x, int y) {
  return (static_cast<std::size_t>(z - 1) * static_cast<std::size_t>(d.K) + static_cast<std::size_t>(x - 1)) *
             static_cast<std::size_t>(d.M) +
         static_cast<std::size_t>(y - 1);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<std::uint64_t> parse_uint(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

int variable_slot(char variable) {
  switch (variable) {
    case 'z': return 0;
    case 'x': return 1;
    case 'y': return 2;
    default: throw Error(ErrorKind::InvalidArgument, std::string("unknown variable '") + variable + "'");
  }
}

// Rows as raw tokens, before levels are resolved. Shared by the CSV and JSON readers.
struct RawTable {
  struct Row {
    std::array<std::string, 3> level;
    std::uint64_t count = 0;
  };
  std::vector<Row> rows;
  std::array<std::vector<std::string>, 3> declared_labels;
  std::array<int, 3> declared_size{0, 0, 0};
};

Dataset resolve(const RawTable& raw) {
  static constexpr std::array<const char*, 3> kNames{"z", "x", "y"};
  std::array<std::vector<std::string>, 3> labels;
  std::array<bool, 3> integer_levels{};
  std::array<int, 3> sizes{};

  for (int v = 0; v < 3; ++v) {
    const auto& declared = raw.declared_labels[static_cast<std::size_t>(v)];
    if (!declared.empty()) {
      labels[static_cast<std::size_t>(v)] = declared;
      sizes[static_cast<std::size_t>(v)] = static_cast<int>(declared.size());
      continue;
    }
    bool all_int = true;
    int max_level = 0;
    for (const auto& r : raw.rows) {
      const auto n = parse_uint(r.level[static_cast<std::size_t>(v)]);
      if (!n || *n == 0) {
        all_int = false;
        break;
      }
      max_level = std::max<int>(max_level, static_cast<int>(*n));
    }
    integer_levels[static_cast<std::size_t>(v)] = all_int;
    if (all_int) {
      sizes[static_cast<std::size_t>(v)] = max_level;
    } else {
      // First-appearance order.
      auto& lab = labels[static_cast<std::size_t>(v)];
      for (const auto& r : raw.rows) {
        const auto& tok = r.level[static_cast<std::size_t>(v)];
        if (std::find(lab.begin(), lab.end(), tok) == lab.end()) lab.push_back(tok);
      }
      sizes[static_cast<std::size_t>(v)] = static_cast<int>(lab.size());
    }
  }

  for (int v = 0; v < 3; ++v) {
    const int declared = raw.declared_size[static_cast<std::size_t>(v)];
    if (declared == 0) continue;
    if (declared < sizes[static_cast<std::size_t>(v)] ||
        (!integer_levels[static_cast<std::size_t>(v)] && declared != sizes[static_cast<std::size_t>(v)])) {
      throw Error(ErrorKind::DimensionMismatch,
                  std::string("declared size for ") + kNames[static_cast<std::size_t>(v)] +
                      " disagrees with the levels present");
    }
    sizes[static_cast<std::size_t>(v)] = declared;
  }

  const Dims dims = Dims::make(sizes[0], sizes[1], sizes[2]);
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(dims.Q) * dims.cells(), 0);
  for (const auto& r : raw.rows) {
    std::array<int, 3> lv{};
    for (int v = 0; v < 3; ++v) {
      const auto& tok = r.level[static_cast<std::size_t>(v)];
      if (integer_levels[static_cast<std::size_t>(v)]) {
        lv[static_cast<std::size_t>(v)] = static_cast<int>(*parse_uint(tok));
      } else {
        const auto& lab = labels[static_cast<std::size_t>(v)];
        const auto it = std::find(lab.begin(), lab.end(), tok);
        if (it == lab.end()) {
          throw Error(ErrorKind::ParseError, std::string("unknown ") + kNames[static_cast<std::size_t>(v)] +
                                                 " level '" + tok + "'");
        }
        lv[static_cast<std::size_t>(v)] = static_cast<int>(it - lab.begin()) + 1;
      }
    }
    counts[table_index(dims, lv[0], lv[1], lv[2])] += r.count;
  }
  return Dataset(dims, std::move(counts), LevelLabels{labels[0], labels[1], labels[2]});
}

void parse_directive(const std::string& body, RawTable& raw) {
  // body is the comment text after '#', already trimmed.
  if (body.rfind("levels", 0) == 0) {
    const std::string rest = trim(std::string_view(body).substr(6));
    const auto eq = rest.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::ParseError, "malformed levels directive: " + body);
    const std::string var = trim(std::string_view(rest).substr(0, eq));
    if (var != "z" && var != "x" && var != "y") throw Error(ErrorKind::ParseError, "malformed levels directive: " + body);
    auto names = split(std::string_view(rest).substr(eq + 1), ',');
    for (const auto& n : names) {
      if (n.empty()) throw Error(ErrorKind::ParseError, "empty level name in directive: " + body);
    }
    raw.declared_labels[static_cast<std::size_t>(variable_slot(var[0]))] = std::move(names);
  } else if (body.rfind("dims", 0) == 0) {
    std::istringstream is(body.substr(4));
    std::string item;
    while (is >> item) {
      const auto eq = item.find('=');
      const auto value = eq == std::string::npos ? std::nullopt : parse_uint(item.substr(eq + 1));
      if (!value) throw Error(ErrorKind::ParseError, "malformed dims directive: " + body);
      const std::string key = item.substr(0, eq);
      const int slot = key == "Q" ? 0 : key == "K" ? 1 : key == "M" ? 2 : -1;
      if (slot < 0) throw Error(ErrorKind::ParseError, "malformed dims directive: " + body);
      raw.declared_size[static_cast<std::size_t>(slot)] = static_cast<int>(*value);
    }
  }
}

}  // namespace

Dataset::Dataset(Dims dims, std::vector<std::uint64_t> counts, LevelLabels labels)
    : dims_(Dims::make(dims.Q, dims.K, dims.M)), counts_(std::move(counts)), labels_(std::move(labels)) {
  if (counts_.size() != static_cast<std::size_t>(dims_.Q) * dims_.cells()) {
    throw Error(ErrorKind::DimensionMismatch, "count tensor shape differs from dims");
  }
  auto check_labels = [](const std::vector<std::string>& lab, int n, const char* what) {
    if (!lab.empty() && lab.size() != static_cast<std::size_t>(n)) {
      throw Error(ErrorKind::DimensionMismatch, std::string("label count for ") + what + " differs from dims");
    }
  };
  check_labels(labels_.z, dims_.Q, "z");
  check_labels(labels_.x, dims_.K, "x");
  check_labels(labels_.y, dims_.M, "y");
  bool any = false;
  for (int z = 1; z <= dims_.Q; ++z) any = any || arm_size(z) > 0;
  if (!any) throw Error(ErrorKind::ZeroArm, "dataset has no observations");
}

std::uint64_t Dataset::count(int z, int x, int y) const {
  if (z < 1 || z > dims_.Q || x < 1 || x > dims_.K || y < 1 || y > dims_.M) {
    throw Error(ErrorKind::DomainError, "count index out of range");
  }
  return counts_[table_index(dims_, z, x, y)];
}

std::uint64_t Dataset::arm_size(int z) const {
  std::uint64_t n = 0;
  for (int x = 1; x <= dims_.K; ++x) {
    for (int y = 1; y <= dims_.M; ++y) n += count(z, x, y);
  }
  return n;
}

int Dataset::level(char variable, const std::string& token) const {
  const int slot = variable_slot(variable);
  const std::vector<std::string>& lab = slot == 0 ? labels_.z : slot == 1 ? labels_.x : labels_.y;
  const int size = slot == 0 ? dims_.Q : slot == 1 ? dims_.K : dims_.M;
  const std::string t = trim(token);
  const auto it = std::find(lab.begin(), lab.end(), t);
  if (it != lab.end()) return static_cast<int>(it - lab.begin()) + 1;
  if (const auto n = parse_uint(t); n && *n >= 1 && *n <= static_cast<std::uint64_t>(size)) {
    return static_cast<int>(*n);
  }
  throw Error(ErrorKind::ParseError, std::string("unknown ") + variable + " level '" + t + "'");
}

std::string Dataset::level_name(char variable, int level) const {
  const int slot = variable_slot(variable);
  const std::vector<std::string>& lab = slot == 0 ? labels_.z : slot == 1 ? labels_.x : labels_.y;
  if (level >= 1 && static_cast<std::size_t>(level) <= lab.size()) return lab[static_cast<std::size_t>(level - 1)];
  return std::to_string(level);
}

std::vector<ObservedDistribution> empirical_distributions(const Dataset& ds) {
  const Dims& d = ds.dims();
  std::vector<ObservedDistribution> out;
  out.reserve(static_cast<std::size_t>(d.Q));
  for (int z = 1; z <= d.Q; ++z) {
    const std::uint64_t n = ds.arm_size(z);
    if (n == 0) {
      throw Error(ErrorKind::ZeroArm, "instrument arm " + ds.level_name('z', z) + " has no observations");
    }
    ObservedDistribution obs;
    obs.arm = z;
    obs.n = n;
    obs.probs.resize(d.cells());
    for (int x = 1; x <= d.K; ++x) {
      for (int y = 1; y <= d.M; ++y) {
        obs.probs[cell_flat(d, {x, y})] = static_cast<double>(ds.count(z, x, y)) / static_cast<double>(n);
      }
    }
    obs.validate(d);
    out.push_back(std::move(obs));
  }
  return out;
}

Dataset drop_treatment(const Dataset& ds, int x_drop) {
  const Dims& d = ds.dims();
  if (x_drop < 1 || x_drop > d.K) throw Error(ErrorKind::DomainError, "treatment level out of range");
  if (d.K == 2) throw Error(ErrorKind::InvalidArgument, "cannot drop a treatment level when K = 2");
  const Dims nd = Dims::make(d.Q, d.K - 1, d.M);
  std::vector<std::uint64_t> counts;
  counts.reserve(static_cast<std::size_t>(nd.Q) * nd.cells());
  for (int z = 1; z <= d.Q; ++z) {
    for (int x = 1; x <= d.K; ++x) {
      if (x == x_drop) continue;
      for (int y = 1; y <= d.M; ++y) counts.push_back(ds.count(z, x, y));
    }
  }
  LevelLabels labels = ds.labels();
  if (!labels.x.empty()) labels.x.erase(labels.x.begin() + (x_drop - 1));
  return Dataset(nd, std::move(counts), std::move(labels));
}

Dataset drop_arm(const Dataset& ds, int z_drop) {
  const Dims& d = ds.dims();
  if (z_drop < 1 || z_drop > d.Q) throw Error(ErrorKind::DomainError, "instrument level out of range");
  if (d.Q == 1) throw Error(ErrorKind::InvalidArgument, "cannot drop the only instrument arm");
  const Dims nd = Dims::make(d.Q - 1, d.K, d.M);
  std::vector<std::uint64_t> counts;
  counts.reserve(static_cast<std::size_t>(nd.Q) * nd.cells());
  for (int z = 1; z <= d.Q; ++z) {
    if (z == z_drop) continue;
    for (int x = 1; x <= d.K; ++x) {
      for (int y = 1; y <= d.M; ++y) counts.push_back(ds.count(z, x, y));
    }
  }
  LevelLabels labels = ds.labels();
  if (!labels.z.empty()) labels.z.erase(labels.z.begin() + (z_drop - 1));
  return Dataset(nd, std::move(counts), std::move(labels));
}

Dataset parse_csv(std::istream& in) {
  RawTable raw;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      parse_directive(trim(std::string_view(t).substr(1)), raw);
      continue;
    }
    auto fields = split(t, ',');
    if (!header_seen) {
      for (auto& f : fields) std::transform(f.begin(), f.end(), f.begin(), [](unsigned char c) { return std::tolower(c); });
      if (fields != std::vector<std::string>{"z", "x", "y", "count"}) {
        throw Error(ErrorKind::ParseError, "expected header 'z,x,y,count'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 4) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected 4 fields");
    }
    const auto count = parse_uint(fields[3]);
    if (!count) throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": bad count");
    raw.rows.push_back({{fields[0], fields[1], fields[2]}, *count});
  }
  if (!header_seen) throw Error(ErrorKind::ParseError, "missing header 'z,x,y,count'");
  if (raw.rows.empty()) throw Error(ErrorKind::ParseError, "no data rows");
  return resolve(raw);
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path.string());
  return parse_csv(in);
}

Dataset parse_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("invalid JSON: ") + e.what());
  }
  RawTable raw;
  try {
    if (j.contains("labels")) {
      const auto& lab = j.at("labels");
      for (const char* v : {"z", "x", "y"}) {
        if (lab.contains(v)) {
          raw.declared_labels[static_cast<std::size_t>(variable_slot(v[0]))] = lab.at(v).get<std::vector<std::string>>();
        }
      }
    }
    if (j.contains("dims")) {
      const auto& d = j.at("dims");
      raw.declared_size = {d.at("Q").get<int>(), d.at("K").get<int>(), d.at("M").get<int>()};
    }
    for (const auto& row : j.at("counts")) {
      if (!row.is_array() || row.size() != 4) throw Error(ErrorKind::ParseError, "count rows must be [z,x,y,count]");
      RawTable::Row r;
      for (std::size_t v = 0; v < 3; ++v) {
        r.level[v] = row[v].is_string() ? row[v].get<std::string>() : std::to_string(row[v].get<std::int64_t>());
      }
      r.count = row[3].get<std::uint64_t>();
      raw.rows.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed dataset JSON: ") + e.what());
  }
  if (raw.rows.empty()) throw Error(ErrorKind::ParseError, "no data rows");
  return resolve(raw);
}

Dataset read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str());
}

Dataset read_dataset(const std::filesystem::path& path) {
  return path.extension() == ".json" ? read_json(path) : read_csv(path);
}

}  // namespace ivbounds
