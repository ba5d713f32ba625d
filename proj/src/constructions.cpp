#include "opideal/constructions.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace opideal {

namespace mp = boost::multiprecision;

ScheduleValue s_of(const ExtExponent& p, std::uint64_t u, std::uint64_t n) {
  if (!p.is_finite()) throw std::invalid_argument("s_of: p must be finite");
  if (u == 0 || n == 0) throw std::invalid_argument("s_of: u and n must be >= 1");
  const double pv = p.value();
  ScheduleValue out;
  if (pv <= 2.0) {
    out.value = BigInt(2) * u * n * n;
    return out;
  }
  if (pv == std::floor(pv) && pv <= 1e6) {
    // s² = (2u)^p · n^{2p}
    const auto e = static_cast<unsigned>(pv);
    const BigInt sq = mp::pow(BigInt(2 * u), e) * mp::pow(BigInt(n), 2 * e);
    BigInt root = mp::sqrt(sq);
    out.exact = root * root == sq;
    if (!out.exact) root += 1;
    out.value = root;
    return out;
  }
  using Float = mp::cpp_bin_float_50;
  const Float x = mp::pow(Float(2 * u), Float(pv) / 2) * mp::pow(Float(n), Float(pv));
  const Float c = mp::ceil(x);
  out.value = c.convert_to<BigInt>();
  out.exact = c == x;
  return out;
}

ParamSchedule::ParamSchedule(ExtExponent p, std::vector<LevelDims> levels, std::string name)
    : p_(p), levels_(std::move(levels)), name_(std::move(name)) {
  if (!p_.is_finite()) throw std::invalid_argument("schedule exponent p must be finite");
  for (const auto& l : levels_)
    if (l.u == 0 || l.v == 0) throw std::invalid_argument("schedule levels need u, v >= 1");
}

ParamSchedule ParamSchedule::preset(const std::string& name) {
  if (name == "tiny")
    return ParamSchedule(ExtExponent::finite(2.0), {{2, 6}, {16, 20}, {24, 40}}, name);
  if (name == "small")
    return ParamSchedule(ExtExponent::finite(2.0), {{4, 12}, {40, 60}, {96, 256}}, name);
  throw std::invalid_argument("unknown schedule preset '" + name + "'");
}

std::vector<std::string> ParamSchedule::preset_names() { return {"tiny", "small"}; }

const LevelDims& ParamSchedule::level(std::size_t n) const {
  if (n == 0 || n > levels_.size())
    throw std::out_of_range("schedule has no level " + std::to_string(n));
  return levels_[n - 1];
}

ScheduleValue ParamSchedule::s(std::size_t n) const {
  if (n == 0) return ScheduleValue{0, true};
  return s_of(p_, level(n).u, n);
}

std::uint64_t ParamSchedule::s_u64(std::size_t n) const {
  const BigInt v = s(n).value;
  if (v > BigInt(std::numeric_limits<std::uint64_t>::max()))
    throw std::overflow_error("s_" + std::to_string(n) + " does not fit in 64 bits");
  return v.convert_to<std::uint64_t>();
}

std::vector<std::pair<std::size_t, std::size_t>> ParamSchedule::dims() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& l : levels_) out.emplace_back(l.u, l.v);
  return out;
}

namespace {

std::vector<std::size_t> us(const std::vector<LevelDims>& levels) {
  std::vector<std::size_t> out;
  for (const auto& l : levels) out.push_back(l.u);
  return out;
}

std::vector<std::size_t> vs(const std::vector<LevelDims>& levels) {
  std::vector<std::size_t> out;
  for (const auto& l : levels) out.push_back(l.v);
  return out;
}

const ExtExponent kTwo = ExtExponent::finite(2.0);
const ExtExponent kOne = ExtExponent::finite(1.0);

}  // namespace

BlockSpace ParamSchedule::U() const { return BlockSpace::sum(kTwo, us(levels_), p_); }
BlockSpace ParamSchedule::V() const {
  return BlockSpace::sum(ExtExponent::infinity(), vs(levels_), ExtExponent::c0());
}
BlockSpace ParamSchedule::W() const {
  return BlockSpace::sum(ExtExponent::infinity(), vs(levels_), ExtExponent::infinity());
}
BlockSpace ParamSchedule::V_star() const { return BlockSpace::sum(kOne, vs(levels_), kOne); }
BlockSpace ParamSchedule::U_star() const {
  const ExtExponent q = p_.value() == 1.0 ? ExtExponent::c0() : p_.conjugate();
  return BlockSpace::sum(kTwo, us(levels_), q);
}
BlockSpace ParamSchedule::V_u() const {
  return BlockSpace::sum(ExtExponent::infinity(), us(levels_), ExtExponent::c0());
}

BlockSpace ParamSchedule::U_sub(const std::set<std::size_t>& levels) const {
  std::vector<std::size_t> d;
  for (auto n : levels) d.push_back(level(n).u);
  return BlockSpace::sum(kTwo, d, p_);
}

BlockSpace ParamSchedule::V_sub(const std::set<std::size_t>& levels) const {
  std::vector<std::size_t> d;
  for (auto n : levels) d.push_back(level(n).v);
  return BlockSpace::sum(ExtExponent::infinity(), d, ExtExponent::c0());
}

std::string big_to_string(const BigInt& x, std::size_t max_digits) {
  std::string s = x.str();
  const bool neg = !s.empty() && s.front() == '-';
  const std::string digits = neg ? s.substr(1) : s;
  if (digits.size() <= max_digits) return s;
  std::ostringstream os;
  os << (neg ? "-" : "") << digits[0] << '.' << digits.substr(1, 5) << "e+" << digits.size() - 1;
  return os.str();
}

std::vector<LevelCheck> schedule_check(const ParamSchedule& schedule) {
  std::vector<LevelCheck> out;
  std::uint64_t prefix = 0;  // u_1 + ... + u_{n-1}
  for (std::size_t n = 1; n <= schedule.level_count(); ++n) {
    const auto& l = schedule.level(n);
    LevelCheck c;
    c.n = n;
    c.u = l.u;
    c.v = l.v;
    c.s = schedule.s(n);
    const BigInt n3 = BigInt(n) * n * n;
    c.u_growth_rhs_log10 = std::log10(19.0 * static_cast<double>(n * n * n)) +
                      static_cast<double>(prefix) * std::log10(6.0 * static_cast<double>(n) + 1.0);
    if (prefix <= kMaxExpandedExponent) {
      c.u_growth_rhs = 19 * n3 * mp::pow(BigInt(6 * n + 1), static_cast<unsigned>(prefix));
      c.u_growth = BigInt(l.u) >= c.u_growth_rhs;
    } else {
      c.u_growth = false;  // u_n fits in 64 bits, the bound does not
    }
    c.v_width_rhs = 9 * n3 * c.s.value;
    c.v_width = BigInt(l.v) >= c.v_width_rhs;
    out.push_back(std::move(c));
    prefix += l.u;
  }
  return out;
}

DenseOperator build_T_n(const RipFamily& family, std::size_t n) {
  const RipLevel& level = family.level(n);
  return DenseOperator(level.columns.transpose(), BlockSpace::lp(kTwo, level.u),
                       BlockSpace::lp(ExtExponent::infinity(), level.v));
}

void check_family_matches(const ParamSchedule& schedule, const RipFamily& family) {
  if (family.level_count() != schedule.level_count())
    throw SpaceMismatch("family has " + std::to_string(family.level_count()) +
                        " levels, schedule has " + std::to_string(schedule.level_count()));
  for (std::size_t n = 1; n <= schedule.level_count(); ++n) {
    const auto& a = schedule.level(n);
    const auto& b = family.level(n);
    if (a.u != b.u || a.v != b.v)
      throw SpaceMismatch("family level " + std::to_string(n) + " does not match the schedule");
  }
}

void check_mask(const ParamSchedule& schedule, const std::set<std::size_t>& mask) {
  for (auto n : mask)
    if (n == 0 || n > schedule.level_count())
      throw std::invalid_argument("mask entry " + std::to_string(n) + " is not a level");
}

MaskedDiagonal build_T_M(const ParamSchedule& schedule, const RipFamily& family,
                         const std::set<std::size_t>& mask) {
  check_family_matches(schedule, family);
  check_mask(schedule, mask);
  // Off-mask blocks are scaled to zero so the block structure survives.
  std::vector<DenseOperator> parts;
  for (std::size_t n = 1; n <= schedule.level_count(); ++n) {
    DenseOperator t = build_T_n(family, n);
    parts.push_back(mask.contains(n) ? t : t.scaled(0.0));
  }
  DenseOperator d = block_diag(parts, schedule.p(), ExtExponent::c0());
  return MaskedDiagonal{mask, std::move(d)};
}

DenseOperator build_formal_inclusion(const ParamSchedule& schedule) {
  const BlockSpace u = schedule.U();
  return DenseOperator::identity(u, schedule.V_u());
}

DenseOperator build_J(const ParamSchedule& schedule) {
  return DenseOperator::identity(schedule.V(), schedule.W());
}

DenseOperator build_S_M(const ParamSchedule& schedule, const RipFamily& family,
                        const std::set<std::size_t>& mask) {
  const MaskedDiagonal t = build_T_M(schedule, family, mask);
  return DenseOperator(t.realized.matrix().transpose(), schedule.V_star(), schedule.U_star());
}

}  // namespace opideal
