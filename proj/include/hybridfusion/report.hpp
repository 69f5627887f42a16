#pragma once

#include <filesystem>
#include <string>

#include "hybridfusion/evaluation.hpp"
#include "hybridfusion/ndt.hpp"
#include "hybridfusion/pipeline.hpp"
#include "hybridfusion/synth.hpp"

namespace hybridfusion {

/// transform.json: final transform (quaternion w, x, y, z with w >= 0 and
/// translation), the per-patch set K with ids and match scores, and stage
/// counts. Contains no timings, so identical runs give identical bytes.
std::string transform_json(const PipelineResult& result);

/// transform.json for the ICP baseline (no patches).
std::string baseline_transform_json(const RegistrationResult3& result);

/// report.json: counts, sizes, timings and the parameters used.
std::string report_json(const PipelineResult& result, const PipelineParams& params);

/// truth.json: ground-truth transform and the noisy GNSS origin.
std::string truth_json(const SyntheticScene& scene);

/// metrics.json: volumes, supplement degree and boundary accuracy.
std::string metrics_json(const EvaluationReport& report);

/// Reads the final transform back from transform.json text.
RigidTransform3 parse_transform_json(const std::string& text);

/// Writes text to a file; throws IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace hybridfusion
