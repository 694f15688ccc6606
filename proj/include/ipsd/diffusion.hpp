#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "ipsd/dualspin.hpp"
#include "ipsd/kernel.hpp"
#include "ipsd/rng.hpp"
#include "ipsd/stats.hpp"

namespace ipsd {

struct StencilEntry {
  std::vector<int> displacement;
  double weight = 0.0;
};

/// Homogeneous finite-range migration rates m_xy realised on a torus.
/// Displacements that wrap onto the same target are merged; a displacement
/// wrapping back onto x itself is dropped (it never moves mass).
class Migration {
 public:
  Migration(const Torus& torus, std::vector<StencilEntry> stencil);

  /// m_{x,x+-e_i} = rho / (2d).
  static Migration nearest_neighbor(const Torus& torus, double rho);
  /// "nn:rho", "box:R:w" (every 0 < |dx|_inf < R has weight w) or "none".
  static Migration parse(std::string_view spec, const Torus& torus);

  std::size_t size() const { return out_.size(); }
  const Torus& torus() const { return torus_; }
  std::span<const Neighbor> out(Site x) const { return out_[x]; }
  /// Total jump rate sum_y m_xy; the same at every site.
  double total_rate() const { return total_; }

 private:
  Torus torus_;
  std::vector<std::vector<Neighbor>> out_;
  double total_ = 0.0;
};

/// Lattice Wright–Fisher density system
///   dp = sum_y m_xy (p(y)-p(x)) dt + s p(1-p)(1-mu p) dt + sqrt(p(1-p)/N) dW.
/// Time stepping. EulerClamp is Euler–Maruyama with clamping to [0,1].
/// BoundarySplit freezes the coefficients over a step and draws the exact
/// square-root (CIR) transition for p when p <= 1/2 and for 1-p otherwise;
/// it avoids the upward bias that clamping creates at a boundary fed by a
/// small migration inflow.
enum class Scheme { EulerClamp, BoundarySplit };

/// "em" or "split".
Scheme parse_scheme(std::string_view name);
std::string_view scheme_name(Scheme s);

struct DiffusionParams {
  double s = 0.0;
  double mu = 2.0;
  double noise_n = 1.0;
  Scheme scheme = Scheme::EulerClamp;

  void validate() const;
};

struct DiffusionState {
  std::vector<double> p;
};

double drift(const DiffusionParams& prm, const Migration& m, std::span<const double> p, Site x);

/// One synchronous Euler–Maruyama step with clamping to [0,1]. Normals are
/// drawn in site order; noise_sign = -1 mirrors the stream.
void em_step(const DiffusionParams& prm, const Migration& m, std::vector<double>& p, double dt, Rng& rng,
             double noise_sign = 1.0);

/// One BoundarySplit step (see Scheme).
void split_step(const DiffusionParams& prm, const Migration& m, std::vector<double>& p, double dt, Rng& rng);

/// sigma = 1 - 2p and back.
DiffusionState sigma_transform(const DiffusionState& state);
DiffusionState sigma_inverse(const DiffusionState& sigma);

/// Called at each grid time with the grid index and current state.
using DiffusionObserver = std::function<void(std::size_t, std::span<const double>)>;

/// Steps from p0 through the grid (times rounded to whole steps of dt).
/// With paired_noise each step uses (Z1 + Z2)/sqrt(2) per site, Z1 and Z2
/// drawn as two site-ordered blocks: a run at dt then follows the same
/// Brownian path as an unpaired run at dt/2 on the same stream. Mirrored
/// and paired noise exist only for EulerClamp.
void simulate_diffusion(const DiffusionParams& prm, const Migration& m, std::vector<double> p0,
                        std::span<const double> grid, double dt, Rng& rng, const DiffusionObserver& observe,
                        double noise_sign = 1.0, bool paired_noise = false);

/// "const:c" or "values:v0,v1,...".
std::vector<double> parse_diffusion_initial(std::string_view spec, std::size_t n);

/// P(kappa < p_t(x0) < 1-kappa) over the grid, from independent runs.
std::vector<MCEstimate> heterozygosity_stat(const DiffusionParams& prm, const Migration& m,
                                            const std::vector<double>& p0, std::span<const double> grid,
                                            double kappa, Site x0, double dt, const McOptions& mc);

/// Same statistic from recorded paths: paths[rep][grid index] = p_t(x0).
std::vector<MCEstimate> heterozygosity_stat(const std::vector<std::vector<double>>& paths, double kappa);

}  // namespace ipsd
