#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tamed {

using Vec = std::vector<double>;

// Coefficient callbacks write into caller-owned buffers so the stepping loop
// never allocates. Layouts (row-major):
//   drift               out[i]                 = b^i(x)                 (d)
//   diffusion           out[i*m + j]           = sigma^{(i,j)}(x)       (d x m)
//   diffusion_jacobian  out[(i*m + j)*d + u]   = d sigma^{(i,j)} / dx^u (d x m x d)
//   jump coefficient    out[i]                 = gamma^i(x, z)          (d)
//   jump jacobian       out[i*d + u]           = d gamma^i / dx^u       (d x d)
using VectorField = std::function<void(std::span<const double> x, std::span<double> out)>;
using MarkedField =
    std::function<void(std::span<const double> x, double mark, std::span<double> out)>;

struct NormalMarks {
  double mean = 0.0;
  double variance = 1.0;
};

struct UniformMarks {
  double lo = 0.0;
  double hi = 1.0;
};

struct DegenerateMarks {
  double value = 0.0;
};

// Law of the scalar jump mark z.
class MarkDistribution {
 public:
  using Variant = std::variant<NormalMarks, UniformMarks, DegenerateMarks>;

  static MarkDistribution normal(double mean, double variance);
  static MarkDistribution uniform(double lo, double hi);
  static MarkDistribution degenerate(double value);

  double mean() const;
  double variance() const;

  // Maps u in (0, 1) to a mark through the inverse CDF.
  double from_uniform(double u) const;

  const Variant& law() const { return law_; }
  std::string describe() const;

 private:
  explicit MarkDistribution(Variant law) : law_(law) {}
  Variant law_;
};

struct JumpSpec {
  double intensity = 0.0;  // lambda = nu(Z)
  MarkDistribution mark_law = MarkDistribution::degenerate(0.0);
  MarkedField coefficient;
  MarkedField coefficient_jacobian;
  bool mark_mean_zero = true;
  bool mark_dependent = true;
  // Closed form of E[gamma(x, Z)] under mark_law. Needed only when marks are
  // not mean-zero and gamma depends on the mark.
  VectorField mark_expectation;
};

struct SdeProblem {
  std::size_t dim_state = 1;
  std::size_t dim_noise = 1;
  VectorField drift;
  VectorField diffusion;
  VectorField diffusion_jacobian;
  std::optional<JumpSpec> jump;
  Vec initial_value;
  double horizon = 1.0;
  double growth_exponent = 0.0;
  std::string name;

  bool has_jumps() const { return jump.has_value(); }
  double intensity() const { return jump ? jump->intensity : 0.0; }

  // Throws ConfigError when dimensions or callbacks are inconsistent.
  void validate() const;

  SdeProblem with_initial_value(Vec xi) const;

  Vec eval_drift(std::span<const double> x) const;
  Vec eval_diffusion(std::span<const double> x) const;
  Vec eval_diffusion_jacobian(std::span<const double> x) const;
  Vec eval_jump(std::span<const double> x, double mark) const;
  Vec eval_jump_jacobian(std::span<const double> x, double mark) const;
};

// Names accepted by builtin_problem, in canonical spelling.
const std::vector<std::string>& builtin_problem_names();

// Benchmark problems:
//   example1                 dx = (x - x^5) dt + x dw,                          x0 = 1
//   example2-<law>-λ<rate>   dx = -0.1 x^3 dt + x dw + \int x z N~(dt, dz),     x0 = 1
// with <law> in {normal (mean 0, variance 0.125), uniform on [-1/4, 1/4]} and
// rate in {3, 5}. ASCII spelling "lambda" is accepted in place of "λ".
SdeProblem builtin_problem(std::string_view name);

struct CommutativityReport {
  double max_violation = 0.0;
  bool ok = true;
};

// 64 quasi-uniform (Halton) points in [-2, 2]^d.
std::vector<Vec> default_samples(std::size_t dim, std::size_t count = 64);

// max over samples and (i, j, k) of
//   | sum_u sigma^{(u,j)} d_u sigma^{(i,k)} - sum_u sigma^{(u,k)} d_u sigma^{(i,j)} |
CommutativityReport check_diffusion_commutativity(const SdeProblem& problem,
                                                  const std::vector<Vec>& samples, double tol);

// max over samples and (k, j) of
//   | sigma^{(k,j)}(x + gamma(x)) - sigma^{(k,j)}(x) - sum_u d_u gamma^k(x) sigma^{(u,j)}(x) |
// Only defined for mark-independent gamma; throws PreconditionError otherwise.
CommutativityReport check_jump_commutativity(const SdeProblem& problem,
                                             const std::vector<Vec>& samples, double tol);

// Largest mismatch between the declared Jacobians and central finite
// differences, measured as |fd - J| / max(1, |J|) entrywise.
double jacobian_consistency(const SdeProblem& problem, const std::vector<Vec>& samples,
                            double step = 1e-6);

}  // namespace tamed
