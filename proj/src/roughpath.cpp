#include "kbm/roughpath.hpp"

#include <cmath>
#include <limits>

namespace kbm {

LiftedPath lift_piecewise_linear(const PathSample& path) {
  path.validate();
  LiftedPath out;
  out.base = path;
  const int d = path.dim();
  out.cells.reserve(path.size() - 1);
  out.cumulative = RoughIncrement::zero(d);
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    Vec w = path.points[k + 1] - path.points[k];
    out.cells.push_back(RoughIncrement::segment(w));
    chen_append_segment(out.cumulative, w);
  }
  return out;
}

Mat levy_area(const RoughIncrement& r) {
  const int d = r.dim();
  Mat a = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const double v = 0.5 * (r.second(i, j) - r.second(j, i));
      a(i, j) = v;
      a(j, i) = -v;
    }
  return a;
}

MomentScalingReport moment_scaling_report(const std::vector<double>& sigmas,
                                          const std::vector<std::vector<DyadicLift>>& ensembles,
                                          const std::vector<double>& exponents,
                                          int coarsest_level) {
  MomentScalingReport rep;
  rep.exponents = exponents;
  rep.sigmas = sigmas;
  if (ensembles.size() != sigmas.size() || sigmas.empty())
    throw ConfigError("moment_scaling_report: one ensemble per sigma required");
  const int finest = ensembles.front().empty() ? 0 : ensembles.front().front().finest_level;
  for (const auto& ens : ensembles) {
    if (ens.size() < 1000) rep.underpowered = true;
    for (const auto& lift : ens)
      if (lift.finest_level != finest || lift.cells.size() != (1u << finest))
        throw ConfigError("moment_scaling_report: inconsistent dyadic grids");
  }
  for (int k = finest; k >= coarsest_level; --k) rep.levels.push_back(k);

  const std::size_t na = exponents.size(), ns = sigmas.size(), nl = rep.levels.size();
  auto cube = [&] {
    return std::vector<std::vector<std::vector<double>>>(
        na, std::vector<std::vector<double>>(ns, std::vector<double>(nl, 0.0)));
  };
  rep.path_pooled = cube();
  rep.path_cell_max = cube();
  rep.area_pooled = cube();
  rep.area_cell_max = cube();

  for (std::size_t is = 0; is < ns; ++is) {
    const auto& ens = ensembles[is];
    // cells at the current scale, coarsened in place level by level
    std::vector<std::vector<RoughIncrement>> scale_cells(ens.size());
    for (std::size_t t = 0; t < ens.size(); ++t) scale_cells[t] = ens[t].cells;
    for (std::size_t il = 0; il < nl; ++il) {
      const int level = rep.levels[il];
      if (il > 0) {  // merge pairs: 2^-(k+1) cells -> 2^-k cells
        for (auto& cells : scale_cells) {
          std::vector<RoughIncrement> merged(cells.size() / 2, RoughIncrement::zero(0));
          for (std::size_t j = 0; j < merged.size(); ++j)
            merged[j] = chen_compose(cells[2 * j], cells[2 * j + 1]);
          cells = std::move(merged);
        }
      }
      const double dt = std::ldexp(1.0, -level);
      const std::size_t ncells = std::size_t{1} << level;
      for (std::size_t ia = 0; ia < na; ++ia) {
        const double a = exponents[ia];
        double path_sum = 0.0, area_sum = 0.0, path_max = 0.0, area_max = 0.0;
        for (std::size_t j = 0; j < ncells; ++j) {
          double pj = 0.0, aj = 0.0;
          for (const auto& cells : scale_cells) {
            pj += std::pow(cells[j].delta.norm(), a);
            aj += std::pow(cells[j].second.norm(), a);  // Frobenius = Hilbert-Schmidt
          }
          pj /= ens.size();
          aj /= ens.size();
          path_sum += pj;
          area_sum += aj;
          path_max = std::max(path_max, pj);
          area_max = std::max(area_max, aj);
        }
        rep.path_pooled[ia][is][il] = (path_sum / ncells) / std::pow(dt, a / 2.0);
        rep.path_cell_max[ia][is][il] = path_max / std::pow(dt, a / 2.0);
        rep.area_pooled[ia][is][il] = (area_sum / ncells) / std::pow(dt, a);
        rep.area_cell_max[ia][is][il] = area_max / std::pow(dt, a);
      }
    }
  }

  rep.path_sup.assign(na, std::vector<double>(nl, 0.0));
  rep.area_sup.assign(na, std::vector<double>(nl, 0.0));
  rep.path_blowup.assign(na, 0.0);
  rep.area_blowup.assign(na, 0.0);
  rep.path_spread.assign(na, 0.0);
  rep.area_spread.assign(na, 0.0);
  for (std::size_t ia = 0; ia < na; ++ia) {
    for (std::size_t il = 0; il < nl; ++il) {
      double ps = 0.0, as = 0.0;
      for (std::size_t is = 0; is < ns; ++is) {
        ps = std::max(ps, rep.path_pooled[ia][is][il]);
        as = std::max(as, rep.area_pooled[ia][is][il]);
      }
      rep.path_sup[ia][il] = ps;
      rep.area_sup[ia][il] = as;
    }
    auto spread = [](const std::vector<double>& v) {
      double lo = v.front(), hi = v.front();
      for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    };
    // levels run finest -> coarsest; the coarsest entry is the plateau
    auto blowup = [](const std::vector<double>& v) {
      double hi = v.front();
      for (double x : v) hi = std::max(hi, x);
      return v.back() > 0.0 ? hi / v.back() : std::numeric_limits<double>::infinity();
    };
    rep.path_blowup[ia] = blowup(rep.path_sup[ia]);
    rep.area_blowup[ia] = blowup(rep.area_sup[ia]);
    rep.path_spread[ia] = spread(rep.path_sup[ia]);
    rep.area_spread[ia] = spread(rep.area_sup[ia]);
  }
  return rep;
}

}  // namespace kbm
