#include "ivbounds/inequality_system.hpp"

#include <bit>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace ivbounds {

namespace {

std::uint32_t full_mask(int M) { return (std::uint32_t{1} << M) - 1U; }

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    throw Error(ErrorKind::SizeOverflow, "inequality count overflows 64 bits");
  }
  return a * b;
}

std::uint64_t checked_pow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) r = checked_mul(r, base);
  return r;
}

void require_mask_width(const Dims& dims) {
  if (dims.M > 31) throw Error(ErrorKind::SizeOverflow, "M > 31 is not supported by the mask encoding");
}

}  // namespace

SubsetFamily make_family(const Dims& dims, const std::vector<std::vector<int>>& sets) {
  require_mask_width(dims);
  if (sets.size() != static_cast<std::size_t>(dims.K)) {
    throw Error(ErrorKind::DimensionMismatch, "a family needs exactly K subsets");
  }
  SubsetFamily f;
  for (const auto& s : sets) {
    std::uint32_t mask = 0;
    for (int m : s) {
      if (m < 1 || m > dims.M) throw Error(ErrorKind::DomainError, "subset level out of range");
      mask |= std::uint32_t{1} << (m - 1);
    }
    f.masks.push_back(mask);
  }
  return f;
}

std::string to_string(const SubsetFamily& family) {
  std::ostringstream os;
  os << '(';
  for (std::size_t k = 0; k < family.masks.size(); ++k) {
    if (k) os << ',';
    os << '{';
    bool first = true;
    for (int m = 0; m < 32; ++m) {
      if ((family.masks[k] >> m) & 1U) {
        if (!first) os << ',';
        os << m + 1;
        first = false;
      }
    }
    os << '}';
  }
  os << ')';
  return os.str();
}

bool is_valid_family(const Dims& dims, const SubsetFamily& family) {
  if (family.masks.size() != static_cast<std::size_t>(dims.K)) return false;
  const std::uint32_t full = full_mask(dims.M);
  bool strict = false;
  for (auto m : family.masks) {
    if (m == 0 || (m & ~full) != 0) return false;
    strict = strict || m != full;
  }
  return strict;
}

bool is_nonredundant_family(const Dims& dims, const SubsetFamily& family) {
  const std::uint32_t full = full_mask(dims.M);
  int strict = 0;
  std::uint32_t strict_mask = 0;
  for (auto m : family.masks) {
    if (m != full) {
      ++strict;
      strict_mask = m;
    }
  }
  if (strict >= 2) return true;
  return strict == 1 && std::popcount(strict_mask) == dims.M - 1;
}

InequalityRow make_row(const Dims& dims, const SubsetFamily& family) {
  if (!is_valid_family(dims, family)) {
    throw Error(ErrorKind::InvalidArgument, "invalid subset family " + to_string(family));
  }
  InequalityRow row;
  row.family = family;
  row.tag = is_nonredundant_family(dims, family) ? RowTag::Nonredundant : RowTag::Redundant;
  row.lhs = BinaryVector(dims.strata());
  row.rhs = BinaryVector(dims.cells());

  // Walk the strata in flat order with an odometer over outcome digits.
  std::vector<int> digits(static_cast<std::size_t>(dims.K), 0);
  for (std::size_t s = 0; s < dims.strata(); ++s) {
    bool member = true;
    for (int k = 0; k < dims.K && member; ++k) {
      member = (family.masks[static_cast<std::size_t>(k)] >> digits[static_cast<std::size_t>(k)]) & 1U;
    }
    if (member) row.lhs.set(s);
    for (int k = dims.K - 1; k >= 0; --k) {
      if (++digits[static_cast<std::size_t>(k)] < dims.M) break;
      digits[static_cast<std::size_t>(k)] = 0;
    }
  }
  for (int x = 1; x <= dims.K; ++x) {
    for (int y = 1; y <= dims.M; ++y) {
      if ((family.masks[static_cast<std::size_t>(x - 1)] >> (y - 1)) & 1U) row.rhs.set(cell_flat(dims, {x, y}));
    }
  }
  return row;
}

std::vector<std::vector<int>> InequalitySystem::lhs_matrix() const {
  std::vector<std::vector<int>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.lhs.dense<int>());
  return out;
}

std::vector<std::vector<int>> InequalitySystem::rhs_matrix() const {
  std::vector<std::vector<int>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.rhs.dense<int>());
  return out;
}

InequalitySystem enumerate_full(const Dims& dims, std::uint64_t cap) {
  require_mask_width(dims);
  const std::uint32_t full = full_mask(dims.M);
  const std::uint64_t families = checked_pow(full, dims.K);
  if (families - 1 > cap) {
    throw Error(ErrorKind::SizeOverflow, "enumeration would produce " + std::to_string(families - 1) +
                                             " rows per arm (cap " + std::to_string(cap) + ")");
  }
  InequalitySystem sys;
  sys.dims = dims;
  sys.rows.reserve(static_cast<std::size_t>(families - 1));
  SubsetFamily family;
  family.masks.assign(static_cast<std::size_t>(dims.K), 1U);
  for (std::uint64_t i = 0; i + 1 < families; ++i) {
    sys.rows.push_back(make_row(dims, family));
    for (int k = dims.K - 1; k >= 0; --k) {
      auto& m = family.masks[static_cast<std::size_t>(k)];
      if (m < full) {
        ++m;
        break;
      }
      m = 1U;
    }
  }
  return sys;
}

InequalitySystem filter_nonredundant(const InequalitySystem& sys) {
  InequalitySystem out;
  out.dims = sys.dims;
  for (const auto& r : sys.rows) {
    if (is_nonredundant_family(sys.dims, r.family)) out.rows.push_back(r);
  }
  return out;
}

InequalitySystem nonredundant_system(const Dims& dims, std::uint64_t cap) {
  return filter_nonredundant(enumerate_full(dims, cap));
}

InequalityCounts count_inequalities(const Dims& dims) {
  require_mask_width(dims);
  const std::uint64_t per = checked_pow(full_mask(dims.M), dims.K);
  const std::uint64_t dropped = checked_mul(static_cast<std::uint64_t>(dims.K),
                                            (std::uint64_t{1} << dims.M) - static_cast<std::uint64_t>(dims.M) - 2);
  InequalityCounts c;
  c.total = checked_mul(static_cast<std::uint64_t>(dims.Q), per - 1);
  c.nonredundant = checked_mul(static_cast<std::uint64_t>(dims.Q), per - dropped - 1);
  return c;
}

std::vector<InequalityRow> marginal_bound_rows(const Dims& dims) {
  require_mask_width(dims);
  const std::uint32_t full = full_mask(dims.M);
  // choice[k] == 0 means [M], otherwise the singleton {choice[k]}.
  std::vector<int> choice(static_cast<std::size_t>(dims.K), 0);
  std::vector<InequalityRow> out;
  while (true) {
    for (int k = dims.K - 1; k >= 0; --k) {
      if (++choice[static_cast<std::size_t>(k)] <= dims.M) break;
      choice[static_cast<std::size_t>(k)] = 0;
      if (k == 0) return out;
    }
    SubsetFamily f;
    for (int c : choice) f.masks.push_back(c == 0 ? full : std::uint32_t{1} << (c - 1));
    out.push_back(make_row(dims, f));
  }
}

std::string system_to_json(const InequalitySystem& sys) {
  nlohmann::json j;
  j["dims"] = {{"Q", sys.dims.Q}, {"K", sys.dims.K}, {"M", sys.dims.M}};
  j["rows_per_arm"] = sys.rows.size();
  auto rows = nlohmann::json::array();
  for (const auto& r : sys.rows) {
    rows.push_back({{"V", r.family.masks},
                    {"lhs_support", r.lhs.support()},
                    {"rhs_support", r.rhs.support()},
                    {"tag", r.tag == RowTag::Nonredundant ? "nonredundant" : "redundant"}});
  }
  j["rows"] = std::move(rows);
  return j.dump();
}

void write_dense_csv(const InequalitySystem& sys, std::ostream& out) {
  const Dims& d = sys.dims;
  for (std::size_t s = 0; s < d.strata(); ++s) {
    out << (s ? "," : "") << "-Hp";
    for (int y : stratum_from_flat(d, s).outcomes) out << '_' << y;
  }
  for (std::size_t c = 0; c < d.cells(); ++c) {
    const auto cell = cell_from_flat(d, c);
    out << ",H_x" << cell.x << "_y" << cell.y;
  }
  out << '\n';
  for (const auto& r : sys.rows) {
    for (std::size_t s = 0; s < d.strata(); ++s) out << (s ? "," : "") << (r.lhs.test(s) ? "-1" : "0");
    for (std::size_t c = 0; c < d.cells(); ++c) out << ',' << (r.rhs.test(c) ? "1" : "0");
    out << '\n';
  }
}

}  // namespace ivbounds
