#include "caldoe/pipeline.hpp"

#include "caldoe/parallel.hpp"
#include "caldoe/rng.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>

namespace caldoe {

void validate_request(const DesignRequest& req, int q) {
  if (req.r < 0) throw ValidationError("design.r must be >= 0, got " + std::to_string(req.r));
  if (req.m < 1) throw ValidationError("design.m must be >= 1, got " + std::to_string(req.m));
  if (!(req.rho >= 0.0)) throw ValidationError("design.rho must be >= 0");
  if (req.anchor_density < 1) throw ValidationError("surrogate anchor density must be >= 1");
  const int fixed = q * req.r + (req.include_location_scale ? 2 : 0);
  if (req.n < fixed) {
    throw ValidationError("budget infeasible: n = " + std::to_string(req.n) + " < q*r" +
                          (req.include_location_scale ? std::string(" + 2") : std::string()) + " = " +
                          std::to_string(fixed));
  }
  if (req.n < 1) throw ValidationError("budget infeasible: n must be >= 1");
}

namespace {

// Union-find over point indices.
struct Components {
  std::vector<int> parent;
  explicit Components(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
      i = parent[static_cast<std::size_t>(i)];
    }
    return i;
  }
  void join(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

Design renumber_groups(Design d) {
  std::map<int, int> ids;
  for (int& g : d.groups) {
    const auto it = ids.try_emplace(g, static_cast<int>(ids.size())).first;
    g = it->second;
  }
  return d;
}

struct SampleResult {
  DOptimalResult dopt;
  Extrema extrema;
};

SearchConfig derived_search(const DesignRequest& req, std::string_view stream, int index) {
  SearchConfig s = req.search;
  s.seed = derive_seed(derive_seed(req.seed, stream), static_cast<std::uint64_t>(index));
  return s;
}

// Shared assembly for every regime. `model_for(i)` supplies the model the
// i-th local search runs against.
PipelineResult assemble(const std::function<ComputerModel(int)>& model_for, const PointSet& etas, int p, int q,
                        const DesignRequest& req) {
  const int m = static_cast<int>(etas.rows());
  const bool want_dopt = req.r > 0;
  const bool want_ext = req.include_location_scale;
  std::vector<SampleResult> samples(static_cast<std::size_t>(m));
  if (want_dopt || want_ext) {
    parallel_for(m, req.jobs, [&](int i) {
      const ComputerModel model = model_for(i);
      const Vector eta = model.clamp_eta(as_span(Vector(etas.row(i).transpose())));
      auto& s = samples[static_cast<std::size_t>(i)];
      if (want_dopt) s.dopt = d_optimal_design(model, eta, q, derived_search(req, "dopt", i));
      if (want_ext) s.extrema = find_extrema(model, eta, derived_search(req, "extrema", i));
    });
  }

  PipelineResult out;
  out.eta_samples = etas;
  Design design(p);

  if (want_dopt) {
    out.local_points.resize(static_cast<Eigen::Index>(m) * q, p);
    PointSet candidates(static_cast<Eigen::Index>(m) * q * req.r, p);
    Eigen::Index row = 0;
    for (int i = 0; i < m; ++i) {
      const auto& s = samples[static_cast<std::size_t>(i)];
      out.log_objectives.push_back(s.dopt.log_objective);
      for (int k = 0; k < q; ++k) {
        out.local_points.row(static_cast<Eigen::Index>(i) * q + k) = s.dopt.design.points.row(k);
        for (int rep = 0; rep < req.r; ++rep) candidates.row(row++) = s.dopt.design.points.row(k);
      }
    }
    SupportPointsOptions sp;
    sp.clamp_unit = true;
    const PointSet reduced = support_points(candidates, q * req.r, derive_seed(req.seed, "reduce-dopt"), sp);
    Design dopt(p);
    for (Eigen::Index i = 0; i < reduced.rows(); ++i) {
      int group = static_cast<int>(i);
      for (Eigen::Index j = 0; j < i; ++j) {
        if (reduced.row(j) == reduced.row(i)) {
          group = dopt.groups[static_cast<std::size_t>(j)];
          break;
        }
      }
      dopt.append(reduced.row(i).transpose(), Role::DOpt, group);
    }
    design.append(merge_replicates(renumber_groups(dopt), req.rho));
  }

  if (want_ext) {
    out.maxima.resize(m, p);
    out.minima.resize(m, p);
    for (int i = 0; i < m; ++i) {
      out.maxima.row(i) = samples[static_cast<std::size_t>(i)].extrema.x_max.transpose();
      out.minima.row(i) = samples[static_cast<std::size_t>(i)].extrema.x_min.transpose();
    }
    SupportPointsOptions sp;
    sp.clamp_unit = true;
    const PointSet xmax = support_points(out.maxima, 1, derive_seed(req.seed, "reduce-max"), sp);
    const PointSet xmin = support_points(out.minima, 1, derive_seed(req.seed, "reduce-min"), sp);
    design.append(xmax.row(0).transpose(), Role::ExtremumMax, design.next_group());
    design.append(xmin.row(0).transpose(), Role::ExtremumMin, design.next_group());
    design = attach_extrema(design, req.rho);
  }

  AugmentPlan plan;
  plan.existing = design;
  plan.n_add = req.n - design.size();
  plan.levels = req.levels;
  plan.criterion = req.criterion;
  plan.seed = derive_seed(req.seed, "augment");
  out.design = renumber_groups(augment(p, plan));
  return out;
}

}  // namespace

PipelineResult robust_design_local(const ComputerModel& model, const DesignRequest& req) {
  validate_request(req, model.q());
  if (req.eta0.size() != model.q()) {
    throw ValidationError("eta0 has " + std::to_string(req.eta0.size()) + " entries, model has q = " +
                          std::to_string(model.q()));
  }
  for (int j = 0; j < model.q(); ++j) {
    if (!model.eta_bounds()[j].contains(req.eta0[j])) {
      throw ValidationError("eta0[" + std::to_string(j + 1) + "] = " + std::to_string(req.eta0[j]) +
                            " is outside eta_bounds");
    }
  }
  return assemble([&](int) { return model; }, req.eta0.transpose(), model.p(), model.q(), req);
}

PipelineResult robust_design_bayes(const ComputerModel& model, const DesignRequest& req) {
  validate_request(req, model.q());
  req.prior.validate(model.q());
  const PointSet etas = prior_representatives(req.prior, req.m, derive_seed(req.seed, "prior"));
  return assemble([&](int) { return model; }, etas, model.p(), model.q(), req);
}

PipelineResult robust_design_surrogate(const GPSurrogate& surrogate, const DesignRequest& req) {
  validate_request(req, surrogate.q());
  req.prior.validate(surrogate.q());
  const PointSet etas = prior_representatives(req.prior, req.m, derive_seed(req.seed, "prior"));
  const std::uint64_t paths = derive_seed(req.seed, "realization");
  auto model_for = [&](int i) {
    Vector eta = etas.row(i).transpose();
    for (int j = 0; j < surrogate.q(); ++j) {
      eta[j] = std::clamp(eta[j], surrogate.eta_bounds()[j].lo, surrogate.eta_bounds()[j].hi);
    }
    auto path = std::make_shared<const Realization>(
        sample_realization(surrogate, eta, req.anchor_density, derive_seed(paths, static_cast<std::uint64_t>(i))));
    return realization_model(surrogate, path, "realization-" + std::to_string(i + 1));
  };
  return assemble(model_for, etas, surrogate.p(), surrogate.q(), req);
}

Design merge_replicates(const Design& design, double rho) {
  if (!(rho >= 0.0)) throw ValidationError("merge radius rho must be >= 0");
  if (rho == 0.0) return design;
  const int n = design.size();
  Components comp(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (design.roles[i] == design.roles[j] && (design.points.row(i) - design.points.row(j)).norm() <= rho) {
        comp.join(i, j);
      }
    }
  }
  // Roots are the smallest member index, so cluster ids follow first appearance.
  Design out = design;
  std::map<int, std::vector<int>> clusters;
  for (int i = 0; i < n; ++i) clusters[comp.find(i)].push_back(i);
  int id = 0;
  for (const auto& [root, members] : clusters) {
    Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(design.dims());
    for (int i : members) centroid += design.points.row(i);
    centroid /= static_cast<double>(members.size());
    for (int i : members) {
      if (members.size() > 1) out.points.row(i) = centroid;
      out.groups[static_cast<std::size_t>(i)] = id;
    }
    ++id;
  }
  return out;
}

Design attach_extrema(const Design& design, double rho) {
  if (!(rho >= 0.0)) throw ValidationError("merge radius rho must be >= 0");
  Design out = design;
  for (int i = 0; i < design.size(); ++i) {
    if (design.roles[i] != Role::ExtremumMax && design.roles[i] != Role::ExtremumMin) continue;
    int best = -1;
    double best_d = kInf;
    for (int j = 0; j < design.size(); ++j) {
      if (design.roles[j] != Role::DOpt) continue;
      const double d = (design.points.row(i) - design.points.row(j)).norm();
      if (d < best_d) best_d = d, best = j;
    }
    if (best >= 0 && best_d <= rho) {
      out.points.row(i) = design.points.row(best);
      out.groups[static_cast<std::size_t>(i)] = design.groups[static_cast<std::size_t>(best)];
    }
  }
  return renumber_groups(out);
}

}  // namespace caldoe
