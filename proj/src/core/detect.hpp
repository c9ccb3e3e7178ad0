#pragma once

#include <memory>

#include "dichotomy.hpp"
#include "gramian.hpp"
#include "observer.hpp"
#include "reduce.hpp"

namespace ltvdet {

enum class Verdict { detectable, not_detectable, inconclusive };

const char* to_string(Verdict v);

enum class Route { triangular, diagonal };

struct AnalyzeOptions {
  double horizon = 50.0;
  std::optional<int> pinned_k;  // skip the exponent proposal and use this k
  Route route = Route::triangular;

  std::vector<double> sigma_list = {1.0, 2.0, 5.0};  // UCO windows, ascending
  int gramian_starts = 32;
  double beta1_threshold = -1.0;  // negative picks the UCO default

  CertGrid cert_grid;
  double cert_tol = 1e-3;
  ExponentSettings exponents;

  double qw_scale = 1.0;  // Qw = qw_scale I
  double rv_scale = 1.0;  // Rv = rv_scale I

  IntegratorSettings integ;
  uint64_t seed = 0;  // recorded for reproducibility; the pipeline is deterministic
};

// Outcome of the full pipeline. verdict == inconclusive names the failing
// stage; not-detectable is a definite negative (UCO failed on the anti-stable
// block); detectable always carries a valid decay certificate.
struct DetectabilityReport {
  std::string system_name;
  int n = 0, p = 0;
  double horizon = 0.0;

  Verdict verdict = Verdict::inconclusive;
  std::string failed_stage;  // "exponents" | "exponent-order" | "dichotomy" |
                             // "riccati" | "decay" (empty otherwise)
  std::string detail;

  int k = -1;
  bool k_pinned = false;
  bool triangularized = false;

  std::optional<ExponentEstimate> exponents;
  std::optional<DichotomyCertificate> dichotomy;

  std::optional<GramianReport> uco;  // on the anti-stable pair (B11, C1)
  bool uco_vacuous = false;          // k == n leaves no anti-stable block
  std::vector<double> sigmas_tried;
  double sigma_used = 0.0;

  std::optional<double> riccati_settle, riccati_sup, riccati_inf;
  double gain_bound = 0.0;
  std::optional<CoefficientFunction> gain;  // L(t) in the input coordinates
  std::optional<DecayCertificate> decay;

  // Diagonal route extras.
  std::optional<ReductionResult> reduction;
  std::optional<double> ctilde2_bound;    // sup ||C1 S12 + C2 S22||
  std::optional<double> c1_preservation;  // max ||(C S) leading block - C1||
  std::string reduction_note;

  std::shared_ptr<const QrFlowResult> flow;  // curves for reporting
};

// Full pipeline: triangularize (if needed), propose k from windowed flow
// rates, certify the dichotomy, probe UCO of (B11, C1) over the sigma list,
// synthesize the structured observer gain, and certify error decay in the
// original coordinates.
DetectabilityReport analyze(const LtvSystem& sys, const AnalyzeOptions& options);

// Block-diagonal specialization: the partition is supplied, triangularization
// and the exponent proposal are skipped. FormError when the system is not
// block-diagonal for the partition.
DetectabilityReport analyze_diagonal(const LtvSystem& sys, const BlockPartition& part,
                                     const AnalyzeOptions& options);

}  // namespace ltvdet
