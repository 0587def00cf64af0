#include "sns/noise.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <stdexcept>
#include <utility>

#include "sns/rng.hpp"

namespace sns {

namespace {

constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Exact 1D trigonometric algebra on [0,1].  A polynomial is a map
// (kind, f) -> coefficient with kind 0 = 1, kind 1 = cos(2 f pi t),
// kind 2 = sin(2 f pi t).  This family is closed under differentiation and
// has a diagonal inner product, so Sobolev Gram matrices of the noise modes
// come out exact (no quadrature).
struct Trig1 {
  std::map<std::pair<int, int>, double> c;

  void add(int kind, int f, double v) {
    if (v != 0.0) c[{kind, f}] += v;
  }
};

Trig1 deriv(const Trig1& a) {
  Trig1 d;
  for (const auto& [key, v] : a.c) {
    const auto [kind, f] = key;
    const double w = 2.0 * kPi * f;
    if (kind == 1) d.add(2, f, -w * v);   // cos' = -w sin
    if (kind == 2) d.add(1, f, w * v);    // sin' =  w cos
  }
  return d;
}

double inner(const Trig1& a, const Trig1& b) {
  double s = 0.0;
  for (const auto& [key, va] : a.c) {
    auto it = b.c.find(key);
    if (it == b.c.end()) continue;
    const double factor = (key.first == 0) ? 1.0 : 0.5;
    s += factor * va * it->second;
  }
  return s;
}

// sin^2(n pi t) = 1/2 - 1/2 cos(2 n pi t)
Trig1 sin_sq(int n) {
  Trig1 a;
  a.add(0, 0, 0.5);
  a.add(1, n, -0.5);
  return a;
}

Trig1 sin_2pin(int n) {
  Trig1 a;
  a.add(2, n, 1.0);
  return a;
}

Trig1 scaled(const Trig1& a, double s) {
  Trig1 b;
  for (const auto& [key, v] : a.c) b.c[key] = v * s;
  return b;
}

// Separable factors of one mode component and their t-derivatives.
struct SepFactor {
  Trig1 d[4];  // derivative orders 0..3
};

SepFactor make_factor(const Trig1& base) {
  SepFactor f;
  f.d[0] = base;
  for (int o = 1; o < 4; ++o) f.d[o] = deriv(f.d[o - 1]);
  return f;
}

}  // namespace

void NoiseModel::eval_mode(int m, double x, double y, double out[2]) const {
  const int j = mode_j[m];
  const int k = mode_k[m];
  const double c = amplitude[m];
  const double sx = std::sin(j * kPi * x);
  const double sy = std::sin(k * kPi * y);
  out[0] = c * k * kPi * sx * sx * std::sin(2.0 * k * kPi * y);
  out[1] = -c * j * kPi * std::sin(2.0 * j * kPi * x) * sy * sy;
}

double NoiseModel::eval_mode_div(int m, double x, double y) const {
  const int j = mode_j[m];
  const int k = mode_k[m];
  const double c = amplitude[m];
  const double dpsix_dx =
      c * k * kPi * j * kPi * std::sin(2.0 * j * kPi * x) *
      std::sin(2.0 * k * kPi * y);
  const double dpsiy_dy =
      -c * j * kPi * k * kPi * std::sin(2.0 * j * kPi * x) *
      std::sin(2.0 * k * kPi * y);
  return dpsix_dx + dpsiy_dy;
}

NoiseModel build_noise(int j_max, double decay_r, double scale) {
  if (j_max < 1) throw std::invalid_argument("build_noise: j_max must be >= 1");
  if (!(decay_r > 4.0))
    throw std::invalid_argument(
        "build_noise: W^{3,2} summability violated (decay_r must be > 4)");
  if (!(scale > 0.0))
    throw std::invalid_argument("build_noise: scale must be positive");

  NoiseModel nm;
  nm.j_max = j_max;
  nm.decay_r = decay_r;
  nm.scale = scale;
  nm.num_modes = j_max * j_max;
  nm.mode_j.resize(nm.num_modes);
  nm.mode_k.resize(nm.num_modes);
  nm.sigma = Vec::Zero(nm.num_modes);
  nm.amplitude = Vec::Zero(nm.num_modes);

  for (int j = 1; j <= j_max; ++j) {
    for (int k = 1; k <= j_max; ++k) {
      const int m = nm.mode_index(j, k);
      nm.mode_j[m] = j;
      nm.mode_k[m] = k;
      const double kappa = std::sqrt(double(j) * j + double(k) * k);
      nm.amplitude[m] = 4.0 / (std::sqrt(3.0) * kPi * kappa);
      nm.sigma[m] = scale * std::pow(kappa, -decay_r);
    }
  }

  // psi = amplitude * (k pi sin^2(j pi x) sin(2 k pi y),
  //                    -j pi sin(2 j pi x) sin^2(k pi y)),
  // each component a single separable product.
  std::vector<SepFactor> fx(2 * nm.num_modes), fy(2 * nm.num_modes);
  for (int m = 0; m < nm.num_modes; ++m) {
    const int j = nm.mode_j[m];
    const int k = nm.mode_k[m];
    const double c = nm.amplitude[m];
    fx[2 * m + 0] = make_factor(scaled(sin_sq(j), c * k * kPi));
    fy[2 * m + 0] = make_factor(sin_2pin(k));
    fx[2 * m + 1] = make_factor(scaled(sin_2pin(j), -c * j * kPi));
    fy[2 * m + 1] = make_factor(sin_sq(k));
  }

  auto gram = [&](int order) {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nm.num_modes, nm.num_modes);
    for (int a = 0; a < nm.num_modes; ++a) {
      for (int b = a; b < nm.num_modes; ++b) {
        double s = 0.0;
        for (int comp = 0; comp < 2; ++comp) {
          for (int p = 0; p <= order; ++p) {
            for (int q = 0; p + q <= order; ++q) {
              s += inner(fx[2 * a + comp].d[p], fx[2 * b + comp].d[p]) *
                   inner(fy[2 * a + comp].d[q], fy[2 * b + comp].d[q]);
            }
          }
        }
        G(a, b) = s;
        G(b, a) = s;
      }
    }
    return G;
  };

  nm.gram_l2 = gram(0);
  nm.gram_w1 = gram(1);
  nm.gram_w2 = gram(2);
  nm.gram_w3 = gram(3);
  nm.hs_l2 = nm.hs_w1 = nm.hs_w2 = nm.hs_w3 = 0.0;
  for (int m = 0; m < nm.num_modes; ++m) {
    const double s2 = nm.sigma[m] * nm.sigma[m];
    nm.hs_l2 += s2 * nm.gram_l2(m, m);
    nm.hs_w1 += s2 * nm.gram_w1(m, m);
    nm.hs_w2 += s2 * nm.gram_w2(m, m);
    nm.hs_w3 += s2 * nm.gram_w3(m, m);
  }
  return nm;
}

// ---------------------------------------------------------------------------
// paths

BrownianPath sample_path(const NoiseModel& noise, int steps, double T,
                         std::uint64_t seed) {
  if (steps < 1) throw std::invalid_argument("sample_path: steps must be >= 1");
  if (!(T > 0.0)) throw std::invalid_argument("sample_path: T must be > 0");
  BrownianPath p;
  p.seed = seed;
  p.T = T;
  p.dt = T / steps;
  const double sd = std::sqrt(p.dt);
  p.increments.resize(noise.num_modes, steps);
  for (int m = 0; m < noise.num_modes; ++m)
    for (int s = 0; s < steps; ++s)
      p.increments(m, s) = sd * gaussian_at(seed, m, s);
  return p;
}

BrownianPath coarsen(const BrownianPath& path, int coarse_steps) {
  if (coarse_steps < 1 || path.steps() % coarse_steps != 0)
    throw std::invalid_argument(
        "coarsen: coarse step count must divide the fine one");
  const int ratio = path.steps() / coarse_steps;
  BrownianPath c;
  c.seed = path.seed;
  c.T = path.T;
  c.dt = path.T / coarse_steps;
  c.increments.resize(path.num_modes(), coarse_steps);
  for (int m = 0; m < path.num_modes(); ++m) {
    for (int s = 0; s < coarse_steps; ++s) {
      double acc = 0.0;  // left-to-right, bitwise reproducible
      for (int r = 0; r < ratio; ++r) acc += path.increments(m, s * ratio + r);
      c.increments(m, s) = acc;
    }
  }
  return c;
}

std::uint64_t path_checksum(const BrownianPath& path) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto eat = [&h](const void* data, size_t len) {
    const unsigned char* b = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  for (int m = 0; m < path.num_modes(); ++m) {
    for (int s = 0; s < path.steps(); ++s) {
      const double v = path.increments(m, s);
      eat(&v, sizeof(v));
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// discrete modes

NoiseProjection project_noise_modes(const FemSystem& fem,
                                    const FemSolvers& solvers,
                                    const NoiseModel& noise) {
  NoiseProjection proj;
  proj.noise = &noise;
  proj.mode_load.reserve(noise.num_modes);
  proj.mode_field.reserve(noise.num_modes);
  for (int m = 0; m < noise.num_modes; ++m) {
    Vec load = assemble_velocity_load(
        fem, [&](double x, double y, double out[2]) {
          noise.eval_mode(m, x, y, out);
        });
    proj.mode_field.push_back(solvers.project_div_free_load(load));
    proj.mode_load.push_back(std::move(load));
  }
  return proj;
}

PhiWEvaluator::PhiWEvaluator(const NoiseProjection& proj,
                             const BrownianPath& path)
    : proj_(&proj), steps_(path.steps()) {
  const int nm = path.num_modes();
  beta_.resize(nm, steps_ + 1);
  for (int m = 0; m < nm; ++m) {
    beta_(m, 0) = 0.0;
    for (int s = 0; s < steps_; ++s)
      beta_(m, s + 1) = beta_(m, s) + path.increments(m, s);
  }
}

Vec PhiWEvaluator::field(int m) const {
  const NoiseModel& nm = *proj_->noise;
  Vec z = Vec::Zero(proj_->mode_field.front().size());
  for (int mode = 0; mode < nm.num_modes; ++mode)
    z += nm.sigma[mode] * beta_(mode, m) * proj_->mode_field[mode];
  return z;
}

Vec PhiWEvaluator::load_increment(int m) const {
  const NoiseModel& nm = *proj_->noise;
  Vec l = Vec::Zero(proj_->mode_load.front().size());
  for (int mode = 0; mode < nm.num_modes; ++mode)
    l += nm.sigma[mode] * (beta_(mode, m) - beta_(mode, m - 1)) *
         proj_->mode_load[mode];
  return l;
}

double PhiWEvaluator::w22_norm(int m) const {
  const NoiseModel& nm = *proj_->noise;
  const Vec v = nm.sigma.array() * beta_.col(m).array();
  return std::sqrt(std::max(0.0, v.dot(nm.gram_w2 * v)));
}

}  // namespace sns
