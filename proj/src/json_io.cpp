#include "opideal/json_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <sstream>

namespace opideal {

json number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

std::string family_digest(const RipFamily& family) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](std::uint64_t word) {
    for (int b = 0; b < 8; ++b) {
      h ^= (word >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& lvl : family.levels) {
    feed(lvl.u);
    feed(lvl.v);
    for (Eigen::Index j = 0; j < lvl.columns.cols(); ++j)
      for (Eigen::Index i = 0; i < lvl.columns.rows(); ++i) {
        std::uint64_t bits = 0;
        const double x = lvl.columns(i, j);
        std::memcpy(&bits, &x, sizeof bits);
        feed(bits);
      }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

json space_json(const BlockSpace& space) {
  json blocks = json::array();
  for (const auto& b : space.blocks()) blocks.push_back({{"inner", b.inner.to_string()}, {"dim", b.dim}});
  return {{"outer", space.outer().to_string()}, {"blocks", blocks}, {"describe", space.describe()}};
}

json norm_json(const NormBound& b) {
  return {{"lower", number(b.lower)}, {"upper", number(b.upper)}, {"mode", to_string(b.mode)}};
}

json certificate_json(const RipCertificate& c, const std::string& name) {
  json j = {{"name", name},
            {"kind", c.besselian_only ? "besselian" : "almost_orthonormal"},
            {"level", c.level},
            {"order", c.order},
            {"mode", to_string(c.mode)},
            {"samples", c.samples},
            {"lambda_max", number(c.lambda_max)}};
  if (!c.besselian_only) j["lambda_min"] = number(c.lambda_min);
  j["holds"] = c.besselian_only ? c.besselian() : c.almost_orthonormal();
  j["elapsed_ms"] = c.elapsed_ms;
  return j;
}

json level_check_json(const LevelCheck& c) {
  return {{"n", c.n},
          {"u", c.u},
          {"v", c.v},
          {"s", big_to_string(c.s.value)},
          {"s_exact", c.s.exact},
          {"u_growth", c.u_growth},
          {"u_growth_rhs", c.u_growth_rhs_log10 > 40.0 ? "1e" + std::to_string(c.u_growth_rhs_log10)
                                              : big_to_string(c.u_growth_rhs)},
          {"u_growth_rhs_log10", c.u_growth_rhs_log10},
          {"v_width", c.v_width},
          {"v_width_rhs", big_to_string(c.v_width_rhs)}};
}

json schedule_json(const ParamSchedule& s) {
  json levels = json::array();
  for (const auto& l : s.levels()) levels.push_back({{"u", l.u}, {"v", l.v}});
  json j = {{"p", s.p().to_string()}, {"levels", levels}};
  if (!s.name().empty()) j["name"] = s.name();
  return j;
}

json factorization_json(const ApproxFactorization& f) {
  json sets = json::array();
  for (const auto& [n, js] : f.index_sets) sets.push_back({{"n", n}, {"J", js}});
  return {{"m", f.m},
          {"levels", f.levels},
          {"index_sets", sets},
          {"selected", f.selected()},
          {"budget_s_m", f.budget_s_m},
          {"t", f.t},
          {"threshold", f.threshold},
          {"max_excluded", f.max_excluded},
          {"residual", f.residual_norm},
          {"P_norm", norm_json(f.P_norm)},
          {"R_norm", norm_json(f.R_norm)},
          {"B_norm_upper", f.B_norm_upper},
          {"relocated", f.relocated},
          {"note", f.note}};
}

json identity_json(const IdentityFactorization& f) {
  return {{"accepted", f.accepted},
          {"tries", f.tries},
          {"subset", f.subset},
          {"gram_energy", f.gram_energy},
          {"energy_bound", f.energy_bound},
          {"diagonal_defect", f.diagonal_defect},
          {"reconstruction_error", f.reconstruction_error},
          {"A_norm", norm_json(f.A_norm)},
          {"B_norm", norm_json(f.B_norm)},
          {"hypothesis_lhs", f.hypothesis_lhs}};
}

json hypothesis_json(const HypothesisCertificate& h) {
  return {{"name", h.name},   {"level", h.level}, {"order", h.order}, {"available", h.available},
          {"exhaustive", h.exhaustive}, {"holds", h.holds}, {"value", number(h.value)},
          {"detail", h.detail}};
}

json separation_json(const SeparationReport& r) {
  json certs = json::array();
  for (const auto& h : r.hypothesis_certificates) certs.push_back(hypothesis_json(h));
  return {{"m", r.m},
          {"M", r.M},
          {"N", r.N},
          {"samples", r.samples},
          {"phi_T_M", r.phi_T_M},
          {"phi_T_N", r.phi_T_N},
          {"max_random", r.max_random},
          {"max_adversarial", r.max_adversarial},
          {"bound_6_over_m", r.bound_6_over_m},
          {"bound_vacuous", r.bound_vacuous},
          {"bound_status", r.bound_status},
          {"hypotheses_certified", r.hypotheses_certified},
          {"hypothesis_certificates", certs},
          {"verdict", r.verdict},
          {"detail", r.detail}};
}

json remark_json(const RemarkReport& r) {
  json levels = json::array();
  for (const auto& l : r.levels)
    levels.push_back({{"m", l.m},
                      {"psi_identity", l.psi_identity},
                      {"max_sampled", l.max_sampled},
                      {"max_bound", l.max_bound}});
  return {{"samples", r.samples},
          {"p_in_range", r.p_in_range},
          {"non_increasing", r.non_increasing},
          {"levels", levels},
          {"note", r.note}};
}

json profile_json(const FssProfile& p) {
  json out = json::array();
  for (const auto& e : p.entries)
    out.push_back({{"d", e.d},
                   {"value", number(e.value)},
                   {"raw_value", number(e.raw_value)},
                   {"worst", number(e.worst)},
                   {"trials", e.trials},
                   {"method", e.method}});
  return out;
}

json corollary_json(const CorollaryReport& r) {
  return {{"m", r.m},
          {"q", r.q},
          {"N", r.N},
          {"bound", r.bound},
          {"branch", r.branch},
          {"ratio", r.ratio},
          {"holds", r.holds},
          {"ties", r.ties},
          {"selected", r.selected},
          {"residual", r.residual},
          {"P_norm_upper", r.P_norm_upper},
          {"milman_mode", r.mode}};
}

json milman_json(const MilmanResult& r) {
  std::vector<double> y(r.y.data(), r.y.data() + r.y.size());
  return {{"found", r.found}, {"mode", r.mode}, {"ties", r.ties}, {"systems", r.systems},
          {"support", r.support}, {"y", y}};
}

}  // namespace opideal
