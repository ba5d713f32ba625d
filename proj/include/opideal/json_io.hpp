#pragma once

// JSON encodings of the library's result types.

#include "opideal/constructions.hpp"
#include "opideal/core_spaces.hpp"
#include "opideal/factorization.hpp"
#include "opideal/fss_probe.hpp"
#include "opideal/rip.hpp"
#include "opideal/separation.hpp"

#include <json.hpp>

#include <string>

namespace opideal {

using json = nlohmann::ordered_json;

/// FNV-1a over the little-endian bytes of every column matrix, as 16 hex digits.
std::string family_digest(const RipFamily& family);

json space_json(const BlockSpace& space);
json norm_json(const NormBound& bound);
json certificate_json(const RipCertificate& cert, const std::string& name);
json level_check_json(const LevelCheck& check);
json schedule_json(const ParamSchedule& schedule);
json factorization_json(const ApproxFactorization& f);
json identity_json(const IdentityFactorization& f);
json separation_json(const SeparationReport& r);
json hypothesis_json(const HypothesisCertificate& h);
json remark_json(const RemarkReport& r);
json profile_json(const FssProfile& p);
json corollary_json(const CorollaryReport& r);
json milman_json(const MilmanResult& r);

/// Finite doubles pass through; ±inf and NaN become strings.
json number(double x);

}  // namespace opideal
