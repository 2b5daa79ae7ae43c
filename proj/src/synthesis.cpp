#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>

#include "ionaddr/constants.h"
#include "ionaddr/designer.h"
#include "ionaddr/error.h"
#include "numerics.h"

namespace ionaddr::design {

namespace {

using gauss::Axis;
using gauss::RayMatrix;

// Lens positions and powers; single-lens layouts leave d and p2 at zero.
struct Layout {
  double s1 = 0.0;  // source to first lens
  double d = 0.0;   // first to second lens
  double p1 = 0.0;  // lens powers, 1/m
  double p2 = 0.0;
  int lens_count = 2;
};

RayMatrix layout_matrix(const Layout& l) {
  const RayMatrix t1{1.0, l.s1, 0.0, 1.0};
  const RayMatrix lens1{1.0, 0.0, -l.p1, 1.0};
  if (l.lens_count == 1) return lens1 * t1;
  const RayMatrix t2{1.0, l.d, 0.0, 1.0};
  const RayMatrix lens2{1.0, 0.0, -l.p2, 1.0};
  return lens2 * t2 * lens1 * t1;
}

struct Ray {
  double y1 = 0.0, y2 = 0.0;  // heights at the lenses
  double slope = 0.0;         // after the last lens
};

Ray trace(const Layout& l, double y, double u) {
  Ray r;
  r.y1 = y + l.s1 * u;
  double slope = u - l.p1 * r.y1;
  if (l.lens_count == 1) {
    r.slope = slope;
    return r;
  }
  r.y2 = r.y1 + l.d * slope;
  r.slope = slope - l.p2 * r.y2;
  return r;
}

gauss::AxisBeam image_of(const Layout& l, const gauss::AstigmaticGaussian& source, Axis axis) {
  const auto q = gauss::transform_q(layout_matrix(l), gauss::q_parameter(source, axis));
  return gauss::axis_beam_from_q(q, source.wavelength, source.ambient_index);
}

struct Apertures {
  double a1 = 0.0, a2 = 0.0;
  double max() const { return std::max(a1, a2); }
};

// Clear semi-apertures passing the object-side NA cone from every source
// within the field radius: marginal plus chief-ray height at each lens.
Apertures clear_apertures(const Layout& l, double na, double field_radius) {
  const double u = std::tan(std::asin(na));
  const Ray marginal = trace(l, 0.0, u);
  const Ray chief = trace(l, field_radius, 0.0);
  Apertures a;
  a.a1 = std::abs(marginal.y1) + std::abs(chief.y1);
  if (l.lens_count == 2) a.a2 = std::abs(marginal.y2) + std::abs(chief.y2);
  return a;
}

struct Candidate {
  Layout layout;
  Apertures apertures;
  double height = 0.0;
};

class ConstraintCheck {
 public:
  ConstraintCheck(const DesignTargets& t, const SynthesisOptions& o) : targets_(t), options_(o) {}

  std::optional<Candidate> operator()(const Layout& l) {
    const std::array<double, 2> powers{l.p1, l.p2};
    for (int i = 0; i < l.lens_count; ++i) {
      const double f = std::abs(1.0 / powers[i]);
      if (!(f >= options_.min_focal_length && f <= options_.max_focal_length))
        return reject("focal_length_bounds");
    }
    const Apertures a = clear_apertures(l, targets_.numerical_aperture, targets_.field_radius);
    if (2.0 * a.max() > targets_.aperture_budget) return reject("aperture_budget");
    const std::array<double, 2> radii{a.a1, a.a2};
    for (int i = 0; i < l.lens_count; ++i)
      if (radii[i] * std::abs(powers[i]) > options_.max_lens_aperture_ratio) return reject("lens_speed");
    const double height = l.lens_count == 1 ? l.s1 : l.s1 + l.d;
    if (height > targets_.max_stack_height * (1.0 + 1e-12)) return reject("max_stack_height");
    return Candidate{l, a, height};
  }

  std::optional<Candidate> reject(const std::string& reason) {
    ++rejections_[reason];
    return std::nullopt;
  }

  std::string summary() const {
    std::string s;
    for (const auto& [reason, count] : rejections_)
      s += fmt::format("{}{}: {}", s.empty() ? "" : ", ", reason, count);
    return s.empty() ? "none" : s;
  }

  std::string binding() const {
    std::string best = "max_stack_height";
    int most = 0;
    for (const auto& [reason, count] : rejections_)
      if (reason != "no_solution" && count > most) {
        best = reason;
        most = count;
      }
    return best;
  }

 private:
  const DesignTargets& targets_;
  const SynthesisOptions& options_;
  std::map<std::string, int> rejections_;
};

[[noreturn]] void infeasible(const std::string& constraint, const std::string& detail) {
  fail(ErrorKind::kInfeasible, fmt::format("infeasible targets: constraint '{}' violated: {}", constraint, detail));
}

// Image-side NA demanded at the last lens from the image distance; a lens
// smaller than this cannot deliver the target NA at any stack geometry.
void check_etendue(const DesignTargets& t) {
  const double na_image = t.numerical_aperture / t.magnification;
  if (na_image >= 1.0)
    infeasible("numerical_aperture",
               fmt::format("object-side NA {} at magnification {} needs image-side NA {:.3f} >= 1",
                           t.numerical_aperture, t.magnification, na_image));
  const double radius = t.image_distance * std::tan(std::asin(na_image));
  if (2.0 * radius > t.aperture_budget)
    infeasible("aperture_budget",
               fmt::format("image-side NA {:.3f} at image distance {:.1f} um needs a last-lens clear "
                           "aperture of {:.1f} um, budget {:.1f} um",
                           na_image, t.image_distance * 1e6, 2e6 * radius, t.aperture_budget * 1e6));
}

Candidate single_lens(const DesignTargets& t, const gauss::AstigmaticGaussian& source,
                      ConstraintCheck& check) {
  const double m = t.magnification;
  const double dist = t.image_distance;
  const double zr = gauss::rayleigh_length(source, Axis::kX);
  // Gaussian conjugates for waist ratio m at waist distance D after the lens:
  // (1 - m^2) f^2 - 2 D f + D^2 + m^4 zR^2 = 0 and s = f + (D - f) / m^2.
  double f = 0.0;
  if (std::abs(1.0 - m * m) < 1e-12) {
    f = (dist * dist + zr * zr) / (2.0 * dist);
  } else {
    const double disc = dist * dist - (1.0 - m * m) * m * m * zr * zr;
    if (disc < 0.0)
      infeasible("magnification", fmt::format("no single-lens Gaussian conjugate gives waist ratio {} at "
                                              "{:.1f} um",
                                              m, dist * 1e6));
    f = (dist - m * std::sqrt(disc)) / (1.0 - m * m);
  }
  const double s = f + (dist - f) / (m * m);
  if (!(s > 0.0)) infeasible("image_distance", "single-lens conjugate puts the lens behind the source");
  Layout l;
  l.lens_count = 1;
  l.s1 = s;
  l.p1 = 1.0 / f;
  if (auto c = check(l)) return *c;
  infeasible(check.binding(), fmt::format("single lens f = {:.2f} um at {:.2f} um ({})", f * 1e6, s * 1e6,
                                          check.summary()));
}

std::optional<Layout> polish(Layout seed, const DesignTargets& t, const gauss::AstigmaticGaussian& source) {
  const double dist = t.image_distance;
  const double wx = source.x.waist_radius;
  const auto residuals = [&](std::span<const double> x) -> std::array<double, 2> {
    Layout l = seed;
    l.p1 = x[0] / dist;
    l.p2 = x[1] / dist;
    try {
      const auto img = image_of(l, source, Axis::kX);
      return {(img.waist_radius / wx - t.magnification) / t.magnification,
              (img.waist_position - dist) / dist};
    } catch (const Error&) {
      return {1e3, 1e3};
    }
  };
  const auto objective = [&](std::span<const double> x) {
    const auto r = residuals(x);
    return r[0] * r[0] + r[1] * r[1];
  };
  const auto result = numerics::nelder_mead(objective, {seed.p1 * dist, seed.p2 * dist}, {0.02, 0.02},
                                            1e-13, 1e-24, 4000);
  const auto r = residuals(result.x);
  if (!(std::abs(r[0]) < 1e-7 && std::abs(r[1]) < 1e-7)) return std::nullopt;
  seed.p1 = result.x[0] / dist;
  seed.p2 = result.x[1] / dist;
  return seed;
}

Candidate two_lens(const DesignTargets& t, const gauss::AstigmaticGaussian& source,
                   const SynthesisOptions& o, ConstraintCheck& check) {
  const double dist = t.image_distance;
  const int n = static_cast<int>(std::floor(t.max_stack_height / o.grid_step + 1e-9));
  std::optional<Candidate> best;
  const auto better = [](const Candidate& a, const Candidate& b) {
    constexpr double kEps = 1e-12;
    if (std::abs(a.height - b.height) > kEps) return a.height < b.height;
    if (std::abs(a.apertures.max() - b.apertures.max()) > kEps)
      return a.apertures.max() < b.apertures.max();
    return a.layout.s1 < b.layout.s1;
  };
  for (int i = 1; i < n; ++i) {
    for (int j = 1; i + j <= n; ++j) {
      const double s1 = i * o.grid_step, d = j * o.grid_step;
      for (double sign : {1.0, -1.0}) {
        // Geometric seed: intermediate image s1' after L1 relayed by L2.
        const double ms = sign * t.magnification;
        const double den = dist + ms * s1;
        if (std::abs(den) < 1e-15) continue;
        const double s1p = ms * s1 * d / den;
        const double o2 = d - s1p;
        if (std::abs(s1p) < 1e-15 || std::abs(o2) < 1e-15) continue;
        Layout seed{s1, d, 1.0 / s1 + 1.0 / s1p, 1.0 / o2 + 1.0 / dist, 2};
        const auto solved = polish(seed, t, source);
        if (!solved) {
          check.reject("no_solution");
          continue;
        }
        if (auto c = check(*solved); c && (!best || better(*c, *best))) best = c;
      }
    }
  }
  if (!best)
    infeasible(check.binding(),
               fmt::format("no two-lens stack within {:.1f} um meets the targets (rejected: {})",
                           t.max_stack_height * 1e6, check.summary()));
  return *best;
}

std::vector<gauss::AbcdElement> chain_of(const Layout& l, double n) {
  std::vector<gauss::AbcdElement> chain{gauss::FreeSpace{l.s1, n}, gauss::ThinLens{1.0 / l.p1}};
  if (l.lens_count == 2) {
    chain.push_back(gauss::FreeSpace{l.d, n});
    chain.push_back(gauss::ThinLens{1.0 / l.p2});
  }
  return chain;
}

PredictedPerformance predict(const Candidate& c, const DesignTargets& t,
                             const gauss::AstigmaticGaussian& source) {
  const Layout& l = c.layout;
  PredictedPerformance p;
  const auto chain = chain_of(l, source.ambient_index);
  const auto image = gauss::propagate_abcd(source, chain);
  for (Axis a : {Axis::kX, Axis::kY}) {
    const int i = a == Axis::kX ? 0 : 1;
    p.magnification[i] = gauss::waist_ratio(source, image, a);
    p.image_distance[i] = image.axis(a).waist_position;
    p.image_mfd[i] = 2.0 * image.axis(a).waist_radius;
  }
  const RayMatrix to_image = RayMatrix{1.0, t.image_distance, 0.0, 1.0} * layout_matrix(l);
  p.lateral_magnification = to_image.a;

  // Steepest axial ray every clear aperture still passes.
  const Ray unit = trace(l, 0.0, 1.0);
  const Ray chief = trace(l, t.field_radius, 0.0);
  double u_max = (c.apertures.a1 - std::abs(chief.y1)) / std::abs(unit.y1);
  if (l.lens_count == 2) u_max = std::min(u_max, (c.apertures.a2 - std::abs(chief.y2)) / std::abs(unit.y2));
  p.numerical_aperture = std::sin(std::atan(u_max));
  p.image_side_na = std::sin(std::atan(std::abs(trace(l, 0.0, u_max).slope)));
  p.stack_height = c.height;
  return p;
}

void check_prediction(const PredictedPerformance& p, const DesignTargets& t) {
  const double dm = std::abs(p.magnification[0] - t.magnification) / t.magnification;
  const double dd = std::abs(p.image_distance[0] - t.image_distance) / t.image_distance;
  const double dn = std::abs(p.numerical_aperture - t.numerical_aperture) / t.numerical_aperture;
  if (dm > kMagnificationTolerance)
    infeasible("magnification", fmt::format("predicted waist ratio {:.4f} misses {:.4f}", p.magnification[0],
                                            t.magnification));
  if (dd > kImageDistanceTolerance)
    infeasible("image_distance", fmt::format("predicted image distance {:.2f} um misses {:.2f} um",
                                             p.image_distance[0] * 1e6, t.image_distance * 1e6));
  if (dn > kNaTolerance)
    infeasible("numerical_aperture", fmt::format("admitted NA {:.4f} misses {:.4f}", p.numerical_aperture,
                                                 t.numerical_aperture));
}

WaveVerification verify(const LensStackPrescription& rx, const DesignTargets& t,
                        const gauss::AstigmaticGaussian& source, const SynthesisOptions& o) {
  std::vector<wave::StackElement> lenses;
  for (const auto& e : rx.elements)
    if (std::holds_alternative<wave::ThinLensPhase>(e.element.kind)) lenses.push_back({e.z, e.element, {}});
  const auto field = wave::make_gaussian_field(source, {}, o.verification_grid);
  const double zd = rx.predicted.image_distance[0];
  const wave::FocusSearch search{0.8 * zd, 1.2 * zd, 33};
  const auto focus = wave::find_focus(field, lenses, search, o.model);

  WaveVerification v;
  v.z_focus = focus.z_focus;
  v.mfd_fit = focus.metrics.mfd_fit;
  v.waist_ratio_x = focus.metrics.mfd_fit[0] / t.source_mfd[0];
  v.waist_ratio_deviation = (v.waist_ratio_x - rx.predicted.magnification[0]) / rx.predicted.magnification[0];
  v.focus_deviation = (v.z_focus - zd) / zd;
  if (std::abs(v.waist_ratio_deviation) > kVerificationTolerance ||
      std::abs(v.focus_deviation) > kImageDistanceTolerance)
    infeasible("wave_verification",
               fmt::format("wave optics gives waist ratio {:.4f} at {:.2f} um against ABCD {:.4f} at "
                           "{:.2f} um",
                           v.waist_ratio_x, v.z_focus * 1e6, rx.predicted.magnification[0], zd * 1e6));
  return v;
}

}  // namespace

void DesignTargets::validate() const {
  require(magnification > 0.0 && std::isfinite(magnification), ErrorKind::kInvalidInput,
          fmt::format("magnification must be positive, got {}", magnification));
  require(numerical_aperture > 0.0 && numerical_aperture < 1.0, ErrorKind::kInvalidInput,
          fmt::format("numerical_aperture must lie in (0, 1), got {}", numerical_aperture));
  require(image_distance > 0.0, ErrorKind::kInvalidInput,
          fmt::format("image_distance must be positive, got {}", image_distance));
  require(source_mfd[0] > 0.0 && source_mfd[1] > 0.0, ErrorKind::kInvalidInput,
          "source_mfd must be positive");
  require(wavelength > 0.0, ErrorKind::kInvalidInput, "wavelength must be positive");
  require(max_stack_height > 0.0, ErrorKind::kInvalidInput, "max_stack_height must be positive");
  require(aperture_budget > 0.0, ErrorKind::kInvalidInput, "aperture_budget must be positive");
  require(field_radius >= 0.0, ErrorKind::kInvalidInput, "field_radius must be non-negative");
}

double LensStackPrescription::stack_top() const { return elements.empty() ? 0.0 : elements.back().z; }

std::vector<double> LensStackPrescription::focal_lengths() const {
  std::vector<double> f;
  for (const auto& e : elements)
    if (const auto* lens = std::get_if<wave::ThinLensPhase>(&e.element.kind)) f.push_back(lens->focal_length);
  return f;
}

std::vector<gauss::AbcdElement> LensStackPrescription::abcd_chain() const {
  std::vector<gauss::AbcdElement> chain;
  double z = 0.0;
  for (const auto& e : elements) {
    const auto* lens = std::get_if<wave::ThinLensPhase>(&e.element.kind);
    if (!lens) continue;
    chain.push_back(gauss::FreeSpace{e.z - z, ambient_index});
    chain.push_back(gauss::ThinLens{lens->focal_length});
    z = e.z;
  }
  return chain;
}

std::vector<double> pitch_plan(const crystal::IonCrystal& crystal, double magnification) {
  require(magnification > 0.0 && std::isfinite(magnification), ErrorKind::kInvalidInput,
          fmt::format("magnification must be positive, got {}", magnification));
  std::vector<double> p = crystal.positions();
  for (double& x : p) x /= magnification;
  return p;
}

std::vector<double> position_gaps(const std::vector<double>& positions) {
  std::vector<double> g;
  for (std::size_t i = 1; i < positions.size(); ++i) g.push_back(positions[i] - positions[i - 1]);
  return g;
}

LensStackPrescription synthesize_lens_stack(const DesignTargets& targets, double source_tilt_deg,
                                            const SynthesisOptions& options) {
  targets.validate();
  require(options.lens_count == 1 || options.lens_count == 2, ErrorKind::kInvalidInput,
          fmt::format("lens_count must be 1 or 2, got {}", options.lens_count));
  require(options.grid_step > 0.0 && options.min_focal_length > 0.0 &&
              options.max_focal_length > options.min_focal_length && options.max_lens_aperture_ratio > 0.0,
          ErrorKind::kInvalidInput, "synthesis bounds must be positive and ordered");
  require(std::abs(source_tilt_deg) < wave::kMaxWedgeTiltDeg, ErrorKind::kInvalidInput,
          fmt::format("source tilt {} deg exceeds the wedge bound of {} deg", source_tilt_deg,
                      wave::kMaxWedgeTiltDeg));

  check_etendue(targets);
  const auto source = gauss::beam_from_mfd(targets.source_mfd[0], targets.source_mfd[1], targets.wavelength,
                                           options.ambient_index);
  ConstraintCheck check(targets, options);
  const Candidate best = options.lens_count == 1 ? single_lens(targets, source, check)
                                                 : two_lens(targets, source, options, check);

  LensStackPrescription rx;
  rx.source_tilt_deg = source_tilt_deg;
  rx.wavelength = targets.wavelength;
  rx.ambient_index = options.ambient_index;
  if (source_tilt_deg != 0.0)
    rx.elements.push_back({0.0, {wave::Wedge{0.0, -source_tilt_deg, options.wedge_index_step}}, {}});
  rx.elements.push_back({best.layout.s1, {wave::ThinLensPhase{1.0 / best.layout.p1}}, best.apertures.a1});
  if (best.layout.lens_count == 2)
    rx.elements.push_back({best.layout.s1 + best.layout.d, {wave::ThinLensPhase{1.0 / best.layout.p2}},
                           best.apertures.a2});
  rx.predicted = predict(best, targets, source);
  check_prediction(rx.predicted, targets);
  if (options.verify) rx.verification = verify(rx, targets, source, options);
  return rx;
}

}  // namespace ionaddr::design
