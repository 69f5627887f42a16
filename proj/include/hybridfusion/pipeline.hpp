#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hybridfusion/boundary.hpp"
#include "hybridfusion/candidates.hpp"
#include "hybridfusion/cloud.hpp"
#include "hybridfusion/errors.hpp"
#include "hybridfusion/fusion.hpp"
#include "hybridfusion/ndt.hpp"
#include "hybridfusion/patch_grid.hpp"

namespace hybridfusion {

struct PipelineParams {
  SelectionParams selection;
  BoundaryParams boundary;
  NdtParams ndt_2d{2.0, 50, 1e-4, 0.05, 5};
  NdtParams ndt_3d{3.0, 50, 1e-4, 0.05, 5};
  /// Whole-cloud refinement after fusion.
  NdtParams ndt_final{5.0, 50, 1e-4, 0.05, 5};
  /// The 2D stage runs NDT at cell sizes ndt_2d.cell_size * 2^(levels-1), ..., ndt_2d.cell_size.
  std::size_t ndt_2d_levels = 3;
  /// Yaw inits about the GNSS origin sweep [-yaw_search, yaw_search] in steps of yaw_step.
  double yaw_search = std::numbers::pi / 6.0;
  double yaw_step = std::numbers::pi / 36.0;
  ClusterParams cluster;
  /// A patch registration is kept only when its boundary match score is below this.
  double match_dist = 1.0;
  /// Patch edge as a fraction of the larger X-Y extent of the visual cloud.
  double grid_step_ratio = 0.1;
  /// Shift the GNSS-aligned LiDAR cloud vertically so both clouds' ground
  /// levels (boundary.ground_percentile height quantile) coincide.
  bool level_ground = true;
  /// Voxel edge used to downsample both clouds on entry.
  double voxel_leaf = 0.5;
  std::size_t esf_samples = kDefaultEsfSamples;
  std::uint64_t seed = 0;
  /// Worker threads; results do not depend on this.
  std::size_t workers = 1;

  void validate() const;
};

/// Outcome of the 2D-then-3D registration of one LiDAR patch.
struct PatchRegistration {
  RigidTransform2 transform_2d;
  RigidTransform3 transform_3d;
  PatchTransform patch;
  double score_2d = 0.0;
  bool converged_3d = false;
};

/// Inputs shared by every per-patch registration. Clouds are already
/// downsampled and GNSS-aligned.
struct PatchContext {
  const PatchGrid& lidar_grid;
  const PatchGrid& visual_grid;
  Point3 gnss_origin;
};

/// Inits tried for each candidate's 2D registration, in order: rotations about
/// the GNSS origin over the yaw sweep (starting with identity), then the
/// rotation taking the LiDAR patch centroid's bearing onto the candidate's.
std::vector<RigidTransform2> initial_guesses_2d(const Point3& gnss_origin, const Point3& lidar_centroid,
                                                const Point3& candidate_centroid, double yaw_search = 0.0,
                                                double yaw_step = 0.0);

/// Register one salient LiDAR patch against its filtered candidates. Returns
/// nullopt when no candidate yields a converged 3D registration whose match
/// score is below `params.match_dist`.
std::optional<PatchRegistration> register_patch(const PatchId& lidar_patch_id, const CandidateSet& candidates,
                                                const PatchContext& context, const PipelineParams& params);

struct StageCounts {
  std::size_t lidar_patches = 0;
  std::size_t visual_patches = 0;
  std::size_t salient = 0;
  std::size_t with_annulus_candidates = 0;
  std::size_t annulus_candidates = 0;
  std::size_t with_descriptor_candidates = 0;
  std::size_t descriptor_candidates = 0;
  std::size_t with_neighbor_candidates = 0;
  std::size_t neighbor_candidates = 0;
  std::size_t registered = 0;
  std::size_t clusters = 0;
  std::size_t winning_cluster = 0;
};

struct PipelineReport {
  StageCounts counts;
  double grid_step = 0.0;
  std::size_t visual_points = 0;
  std::size_t lidar_points = 0;
  /// Vertical shift applied after the GNSS alignment.
  double ground_offset = 0.0;
  bool final_refinement_converged = false;
  double final_refinement_score = 0.0;
  /// Wall-clock milliseconds per stage, in execution order.
  std::vector<std::pair<std::string, double>> timings_ms;
};

struct PipelineResult {
  /// Per-patch transforms mapping the GNSS-aligned LiDAR cloud into G.
  std::vector<PatchTransform> patch_transforms;
  /// Cluster average of `patch_transforms`, same frame.
  RigidTransform3 fused;
  /// Maps the LiDAR cloud's own frame into G.
  RigidTransform3 final_transform;
  PipelineReport report;
};

/// Translation that places the LiDAR frame's origin at the GNSS position.
RigidTransform3 gnss_alignment(const Point3& gnss_origin);

/// Vertical offset taking `moving`'s ground level onto `fixed`'s.
double ground_level_offset(const PointCloud3& fixed, const PointCloud3& moving, double percentile);

/// Full cross-source registration of LiDAR cloud `lidar` (own frame) into the
/// visual cloud `visual`. Throws PipelineFailure when no patch registers.
PipelineResult run_pipeline(const PointCloud3& visual, const PointCloud3& lidar, const Point3& gnss_origin,
                            const PipelineParams& params);

/// Thrown by run_pipeline with the counts reached before failing.
class PipelineFailure : public PipelineError {
 public:
  PipelineFailure(const std::string& what, StageCounts counts) : PipelineError(what), counts_(counts) {}
  const StageCounts& counts() const { return counts_; }

 private:
  StageCounts counts_;
};

/// ICP baseline from the GNSS alignment; returns the LiDAR-to-G transform.
RegistrationResult3 run_icp_baseline(const PointCloud3& visual, const PointCloud3& lidar, const Point3& gnss_origin,
                                     const PipelineParams& params, std::size_t max_iterations = 50,
                                     double max_corr_dist = 2.0);

}  // namespace hybridfusion
