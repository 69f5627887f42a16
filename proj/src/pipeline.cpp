#include "hybridfusion/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>
#include <thread>

#include "hybridfusion/errors.hpp"
#include "hybridfusion/icp.hpp"
#include "hybridfusion/spatial_index.hpp"

namespace hybridfusion {

namespace {

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

class StageTimer {
 public:
  explicit StageTimer(PipelineReport& report) : report_(report), start_(Clock::now()) {}

  void lap(const std::string& stage) {
    const auto now = Clock::now();
    report_.timings_ms.emplace_back(stage, std::chrono::duration<double, std::milli>(now - start_).count());
    start_ = now;
  }

 private:
  using Clock = std::chrono::steady_clock;
  PipelineReport& report_;
  Clock::time_point start_;
};

std::uint64_t descriptor_seed(std::uint64_t base, const PatchId& id, std::uint64_t side) {
  // splitmix64 over the id so neighboring patches get unrelated streams
  std::uint64_t z = base ^ (side << 62) ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(id.row)) << 32) ^
                    static_cast<std::uint32_t>(id.col);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

DescriptorCache compute_descriptors(const PatchGrid& grid, const std::set<PatchId>& ids, std::uint64_t side,
                                    const PipelineParams& params) {
  const std::vector<PatchId> order(ids.begin(), ids.end());
  std::vector<std::optional<CenteredVector>> slots(order.size());
  parallel_for(order.size(), params.workers, [&](std::size_t i) {
    const Patch& patch = grid.at(order[i]);
    if (patch.size() < 3) return;
    const Descriptor640 d = compute_esf(patch.points, params.esf_samples, descriptor_seed(params.seed, order[i], side));
    slots[i] = CenteredVector::from(d.bins);
  });
  DescriptorCache cache;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (slots[i]) cache.emplace(order[i], std::move(*slots[i]));
  }
  return cache;
}

void add_qualifying_neighbors(const PatchGrid& grid, const PatchId& id, std::size_t min_points, std::set<PatchId>& out) {
  for (const Patch* n : neighbors(grid, id)) {
    if (n->size() > min_points) out.insert(n->id);
  }
}

std::string describe(const StageCounts& c) {
  std::ostringstream s;
  s << "lidar_patches=" << c.lidar_patches << " salient=" << c.salient
    << " with_annulus_candidates=" << c.with_annulus_candidates
    << " with_descriptor_candidates=" << c.with_descriptor_candidates
    << " with_neighbor_candidates=" << c.with_neighbor_candidates << " registered=" << c.registered;
  return s.str();
}

}  // namespace

void PipelineParams::validate() const {
  selection.validate();
  boundary.validate();
  ndt_2d.validate();
  ndt_3d.validate();
  ndt_final.validate();
  cluster.validate();
  if (ndt_2d_levels == 0 || ndt_2d_levels > 8) throw ParameterError("ndt_2d_levels must lie in [1, 8]");
  if (!(yaw_search >= 0.0 && yaw_step >= 0.0)) throw ParameterError("yaw_search and yaw_step must be non-negative");
  if (yaw_search > 0.0 && !(yaw_step > 0.0)) throw ParameterError("yaw_step must be positive when yaw_search is");
  if (!(match_dist > 0.0)) throw ParameterError("match_dist must be positive");
  if (!(grid_step_ratio > 0.0 && grid_step_ratio <= 1.0)) throw ParameterError("grid_step_ratio must lie in (0, 1]");
  if (!(voxel_leaf > 0.0)) throw ParameterError("voxel_leaf must be positive");
  if (esf_samples == 0) throw ParameterError("esf_samples must be positive");
  if (selection.eta < 2 || selection.neighbor_min_points < 2) {
    throw ParameterError("eta and neighbor_min_points must be at least 2");
  }
}

RigidTransform3 gnss_alignment(const Point3& gnss_origin) { return {Eigen::Quaterniond::Identity(), gnss_origin}; }

double ground_level_offset(const PointCloud3& fixed, const PointCloud3& moving, double percentile) {
  return z_quantile(fixed, percentile) - z_quantile(moving, percentile);
}

std::vector<RigidTransform2> initial_guesses_2d(const Point3& gnss_origin, const Point3& lidar_centroid,
                                                const Point3& candidate_centroid, double yaw_search,
                                                double yaw_step) {
  const Point2 o = gnss_origin.head<2>();
  const auto about_origin = [&](double yaw) {
    return RigidTransform2(yaw, o - RigidTransform2(yaw, Point2::Zero()).apply(o));
  };
  std::vector<RigidTransform2> out{RigidTransform2::identity()};
  if (yaw_search > 0.0 && yaw_step > 0.0) {
    const auto n = static_cast<int>(std::floor(yaw_search / yaw_step + 1e-9));
    for (int k = 1; k <= n; ++k) {
      out.push_back(about_origin(k * yaw_step));
      out.push_back(about_origin(-k * yaw_step));
    }
  }
  const Point2 a = (lidar_centroid.head<2>() - o);
  const Point2 b = (candidate_centroid.head<2>() - o);
  if (a.squaredNorm() == 0.0 || b.squaredNorm() == 0.0) return out;
  const double theta = std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
  if (std::abs(theta) > 0.0) out.push_back(about_origin(theta));
  return out;
}

std::optional<PatchRegistration> register_patch(const PatchId& lidar_patch_id, const CandidateSet& candidates,
                                                const PatchContext& context, const PipelineParams& params) {
  if (candidates.empty()) return std::nullopt;
  const std::size_t min_nbr = params.selection.neighbor_min_points;
  const PointCloud3 lidar_spliced = splice_with_neighbors(context.lidar_grid, lidar_patch_id, min_nbr);
  const Point3 lidar_centroid = context.lidar_grid.at(lidar_patch_id).centroid;

  std::vector<Point2> lidar_boundary;
  try {
    lidar_boundary = extract_boundary(lidar_spliced, params.boundary);
  } catch (const BoundaryError&) {
    return std::nullopt;
  }

  // Deterministic candidate order: the minimum is tie-broken by the smaller id.
  std::vector<PatchId> order;
  for (const Candidate& c : candidates.candidates) order.push_back(c.id);
  std::sort(order.begin(), order.end());

  struct Best {
    PatchId id;
    BoundaryMatch2 registration;
    PointCloud3 spliced;
    std::vector<Point2> boundary;
  };
  std::optional<Best> best;
  for (const PatchId& cid : order) {
    PointCloud3 spliced = splice_with_neighbors(context.visual_grid, cid, min_nbr);
    try {
      std::vector<Point2> boundary = extract_boundary(spliced, params.boundary);
      const auto inits = initial_guesses_2d(context.gnss_origin, lidar_centroid, context.visual_grid.at(cid).centroid,
                                            params.yaw_search, params.yaw_step);
      const auto reg = register_boundary_2d(lidar_boundary, boundary, inits, params.ndt_2d, params.ndt_2d_levels);
      if (reg && (!best || reg->match_score < best->registration.match_score)) {
        best = Best{cid, *reg, std::move(spliced), std::move(boundary)};
      }
    } catch (const BoundaryError&) {
      continue;
    } catch (const GridError&) {
      continue;
    }
  }
  if (!best) return std::nullopt;

  const RigidTransform3 lifted = best->registration.transform.lift();
  RegistrationResult3 reg3;
  try {
    reg3 = register_3d(lidar_spliced, best->spliced, lifted, params.ndt_3d);
  } catch (const GridError&) {
    return std::nullopt;
  }

  PatchRegistration out;
  out.transform_2d = best->registration.transform;
  out.score_2d = best->registration.match_score;
  out.transform_3d = compose(reg3.transform, lifted.inverse());
  out.converged_3d = reg3.converged;
  out.patch.lidar_patch_id = lidar_patch_id;
  out.patch.matched_visual_patch_id = best->id;
  out.patch.transform = compose(out.transform_3d, lifted);
  try {
    const std::vector<Point2> moved = extract_boundary(apply_transform(lidar_spliced, out.patch.transform), params.boundary);
    out.patch.match_score = avg_nearest_distance(moved, SpatialIndex2(best->boundary));
  } catch (const BoundaryError&) {
    return std::nullopt;
  }
  if (!out.converged_3d || !(out.patch.match_score < params.match_dist)) return std::nullopt;
  return out;
}

PipelineResult run_pipeline(const PointCloud3& visual, const PointCloud3& lidar, const Point3& gnss_origin,
                            const PipelineParams& params) {
  params.validate();
  if (visual.empty() || lidar.empty()) throw ParameterError("run_pipeline: empty input cloud");

  PipelineResult result;
  PipelineReport& report = result.report;
  StageCounts& counts = report.counts;
  StageTimer timer(report);

  const PointCloud3 g = voxel_downsample(visual, params.voxel_leaf);
  RigidTransform3 coarse = gnss_alignment(gnss_origin);
  PointCloud3 l = apply_transform(voxel_downsample(lidar, params.voxel_leaf), coarse);
  if (params.level_ground) {
    report.ground_offset = ground_level_offset(g, l, params.boundary.ground_percentile);
    const RigidTransform3 lift(Eigen::Quaterniond::Identity(), Point3(0.0, 0.0, report.ground_offset));
    l = apply_transform(l, lift);
    coarse = compose(lift, coarse);
  }
  report.visual_points = g.size();
  report.lidar_points = l.size();
  timer.lap("downsample");

  report.grid_step = default_grid_step(g, params.grid_step_ratio);
  const PatchGrid visual_grid = partition(g, report.grid_step);
  const PatchGrid lidar_grid = partition(l, report.grid_step);
  counts.visual_patches = visual_grid.patches.size();
  counts.lidar_patches = lidar_grid.patches.size();
  timer.lap("partition");

  const SelectionParams& sel = params.selection;
  const std::vector<PatchId> salient = select_salient(lidar_grid, sel.eta);
  counts.salient = salient.size();

  std::vector<CandidateSet> annulus(salient.size());
  std::set<PatchId> lidar_needed;
  std::set<PatchId> visual_needed;
  for (std::size_t i = 0; i < salient.size(); ++i) {
    annulus[i].lidar_patch_id = salient[i];
    std::vector<PatchId> ids;
    try {
      ids = annulus_candidates(visual_grid, gnss_origin, lidar_grid.at(salient[i]).centroid, sel.lambda, sel.phi);
    } catch (const GeometryError&) {
      continue;
    }
    for (const PatchId& id : ids) {
      if (visual_grid.at(id).size() < 3) continue;
      annulus[i].candidates.push_back({id, 0.0});
      visual_needed.insert(id);
      add_qualifying_neighbors(visual_grid, id, sel.neighbor_min_points, visual_needed);
    }
    if (!annulus[i].empty()) {
      ++counts.with_annulus_candidates;
      counts.annulus_candidates += annulus[i].size();
      lidar_needed.insert(salient[i]);
      add_qualifying_neighbors(lidar_grid, salient[i], sel.neighbor_min_points, lidar_needed);
    }
  }
  timer.lap("annulus");

  const DescriptorCache lidar_desc = compute_descriptors(lidar_grid, lidar_needed, 1, params);
  const DescriptorCache visual_desc = compute_descriptors(visual_grid, visual_needed, 2, params);
  timer.lap("descriptors");

  std::vector<CandidateSet> filtered(salient.size());
  for (std::size_t i = 0; i < salient.size(); ++i) {
    filtered[i].lidar_patch_id = salient[i];
    if (annulus[i].empty()) continue;
    const CandidateSet by_descriptor =
        descriptor_filter(lidar_desc.at(salient[i]), annulus[i], visual_desc, sel.rho_min);
    if (by_descriptor.empty()) continue;
    ++counts.with_descriptor_candidates;
    counts.descriptor_candidates += by_descriptor.size();
    filtered[i] = neighbor_filter(salient[i], by_descriptor, lidar_grid, visual_grid, lidar_desc, visual_desc, sel);
    if (!filtered[i].empty()) {
      ++counts.with_neighbor_candidates;
      counts.neighbor_candidates += filtered[i].size();
    }
  }
  timer.lap("filter");

  const PatchContext context{lidar_grid, visual_grid, gnss_origin};
  std::vector<std::optional<PatchRegistration>> registrations(salient.size());
  parallel_for(salient.size(), params.workers,
               [&](std::size_t i) { registrations[i] = register_patch(salient[i], filtered[i], context, params); });
  for (const auto& r : registrations) {
    if (r) result.patch_transforms.push_back(r->patch);
  }
  counts.registered = result.patch_transforms.size();
  timer.lap("register");

  if (result.patch_transforms.empty()) {
    throw PipelineFailure("no patch registered (" + describe(counts) + ")", counts);
  }

  const FusionResult fusion = fuse_detailed(result.patch_transforms, params.cluster);
  counts.clusters = fusion.clusters.size();
  counts.winning_cluster = fusion.clusters[fusion.winner].size();
  result.fused = fusion.transform;
  timer.lap("fusion");

  RigidTransform3 refined = result.fused;
  try {
    const RegistrationResult3 fin = register_3d(l, g, result.fused, params.ndt_final);
    report.final_refinement_converged = fin.converged;
    report.final_refinement_score = fin.final_score;
    refined = fin.transform;
  } catch (const GridError&) {
    report.final_refinement_converged = false;
  }
  result.final_transform = compose(refined, coarse);
  timer.lap("refine");
  return result;
}

RegistrationResult3 run_icp_baseline(const PointCloud3& visual, const PointCloud3& lidar, const Point3& gnss_origin,
                                     const PipelineParams& params, std::size_t max_iterations, double max_corr_dist) {
  params.validate();
  const PointCloud3 g = voxel_downsample(visual, params.voxel_leaf);
  const PointCloud3 l = voxel_downsample(lidar, params.voxel_leaf);
  return icp_register(l, g, gnss_alignment(gnss_origin), max_iterations, max_corr_dist);
}

}  // namespace hybridfusion
