#pragma once

#include <string>

#include "palign/certify.hpp"
#include "palign/rgd.hpp"
#include "palign/rigidity.hpp"
#include "palign/spectral.hpp"

namespace palign {

// JSON documents written by the CLI. Non-finite numbers become null.
std::string certification_json(const CertificationReport& r);
std::string rigidity_json(const RigidityReport& r);
// Includes an "alignment" member readable by parse_alignment.
std::string align_result_json(const RgdResult& r, const StressSystem& sys, const std::string& init);
std::string sweep_summary_json(const NoiseSweepResult& r);

}  // namespace palign
