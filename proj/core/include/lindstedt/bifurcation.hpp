#pragma once

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lindstedt/matrix.hpp"
#include "lindstedt/numeric.hpp"
#include "lindstedt/series.hpp"

namespace lindstedt {

// Wave-packet support M_+ in the positive sector; members[0] has the smallest modulus.
struct PacketSet {
  int D = 2;
  double s = 1.0;
  std::vector<IVec> members;
  std::vector<double> alphas;  // shell limits alpha_1 = 1 < alpha_2 < ... < alpha_N
  double r = 0.0;              // |m_1|

  int N() const { return static_cast<int>(members.size()); }
};

struct PacketOptions {
  int N = 1;
  int D = 2;
  double s = 1.0;
  std::vector<double> alphas;  // alpha_2..alpha_N; empty selects evenly spaced admissible values
  double r_min = 0.0;
  double r_max = 200.0;
};

struct PacketCheck {
  bool ok = true;
  std::string failure;
  std::vector<IVec> witness;
};

// Sign orbit {m : |m_i| = |(m_0)_i|}.
std::vector<IVec> sign_orbit(const IVec& m, int D);
// M = union of the sign orbits of the packet.
std::vector<IVec> full_support(const PacketSet& P);
// prod_i sign(m_i)
int sign_of(const IVec& m, int D);

// Shell constraint on the alphas: 2^{D+1} sum alpha_i^{2+2s} <= 3^D + 2^{D+1}(N-2).
bool alphas_admissible(const std::vector<double>& alphas, int D, double s, int N);
// Greedy shell search with plane/sphere avoidance; every accepted packet is
// re-verified by check_packet. Throws SearchExhausted, ConfigError.
PacketSet construct_packet(const PacketOptions& opt);

PacketCheck check_divisibility(const PacketSet& P);
// Condition (a): 2^{D+1} sum_{m != m_1} |m|^{2+2s} <= (3^D + 2^{D+1}(N-2)) |m_1|^{2+2s}.
PacketCheck check_condition_a(const PacketSet& P);
// Condition (b) by an exhaustive triple scan over M^3.
PacketCheck check_condition_b(const PacketSet& P);
PacketCheck check_packet(const PacketSet& P);

struct Amplitudes {
  std::optional<Rational> A2_exact;
  std::vector<Rational> a2_exact;  // filled for integer s
  double A2 = 0.0;
  std::vector<double> a2;
  std::vector<double> a;
  double M = 0.0;  // sum |m|^{2+2s}
};

// A^2 = M / (D (2^{D+1}(N-1) + 3^D)), a_m^2 = (|m|^{2+2s}/D - 2^{D+1} A^2) / (3^D - 2^{D+1}).
// Throws NegativeAmplitudeSquare.
Amplitudes amplitudes(const PacketSet& P);

struct BifurcationResidual {
  bool exact = false;
  bool zero = false;
  double max_abs = 0.0;
  long modes = 0;
  long triples = 0;
};

// Plugs q^{(0)}_m = sign(m) a_{|m|} into |m|^{2+2s} q_m / D = sum q q conj q over orthogonal
// triples of M; exact (monomials in the a_m, squares reduced) for integer s.
BifurcationResidual bifurcation_residual(const PacketSet& P, const Amplitudes& amp);
// Residual of the amplitude equations themselves, exact for integer s.
BifurcationResidual amplitude_residual(const PacketSet& P, const Amplitudes& amp);

// Positive-sector linearized kernel operator.
class JOperator {
 public:
  JOperator(const PacketSet& P, const Amplitudes& amp);

  const PacketSet& packet() const { return P_; }
  double A2() const { return A2_; }
  bool is_kernel_mode(const IVec& m) const;  // |m|^2 divisible by D, all components positive
  // Entry J_+(m, m') for positive-sector modes.
  double entry(const IVec& m, const IVec& mp) const;
  // Positive-sector modes linked to m by a structurally nonzero entry (m itself excluded).
  std::vector<IVec> neighbours(const IVec& m) const;
  double q0(const IVec& m) const;  // sign(m) a_{|m|}, zero off M

 private:
  PacketSet P_;
  std::vector<IVec> support_;
  std::map<IVec, double> q_;
  double A2_;
};

struct JBlock {
  std::vector<IVec> modes;
};

struct BlockPartition {
  std::vector<JBlock> blocks;
  std::size_t max_size = 0;
  std::size_t bound = 0;  // configured M_1
  double log10_K = 0.0;   // chain-length bound, +inf when astronomical
  bool offblock_zero = true;
};

// Blocks of J_+ over the kernel modes with |m|^2 <= p_max; blocks are closed under the
// link relation even when they leave the window. Throws BlockBoundViolation.
BlockPartition find_blocks(const JOperator& J, long p_max, std::size_t bound = 50);
JBlock block_of(const JOperator& J, const IVec& m, std::size_t bound);
Matrix<double> restrict(const JOperator& J, const std::vector<IVec>& modes);

// Words over the alphabet of ordered pairs v = (m, m') of distinct elements of M.
struct Letter {
  IVec first;
  IVec second;
  IVec w() const { return first - second; }
};
std::vector<Letter> alphabet(const PacketSet& P);
// log10 of the bound K(L) from K(1) = 2, K(L+1) = K(L)(N(L) + 1), N(L) = (L+1)^{K(L)}.
double log10_chain_bound(long L);

struct ChainSample {
  IVec q0;
  std::vector<int> word;  // letter indices
  std::vector<IVec> points;
};

struct LoopReport {
  long chains = 0;
  long longest = 0;
  long longest_loop_free = 0;
  long repeats_checked = 0;  // v0 a0 v0 patterns tested
  long repeat_failures = 0;
  long long_chains = 0;       // chains of length >= K
  long long_without_loop = 0;
  double log10_K = 0.0;
  std::size_t max_block = 0;
  bool ok = true;
};

// Random walks q_k = q_{k-1} + w(v_k) with <q_{k-1} - v_k(2), w(v_k)> = 0.
ChainSample sample_chain(const std::vector<Letter>& A, const IVec& q0, int max_len, std::mt19937_64& rng, int D);
bool has_loop(const std::vector<Letter>& A, const std::vector<int>& word, int D);
LoopReport loop_scan(const PacketSet& P, const BlockPartition& blocks, long chains, int max_len, std::uint64_t seed,
                     long p_start);

// Head-block modes |m|^2 <= 16 A^2 D 2^{D+1}.
long head_block_bound(const PacketSet& P, double A2);

struct DetSample {
  double s;
  int sign;               // sign of det J11, 0 when singular
  double log10_abs_det;
  double log10_abs_diag;  // product of the diagonal entries
  double ratio;           // det J11 / product of the diagonal entries
  std::size_t size;
};
struct DetScan {
  std::vector<DetSample> samples;
  std::vector<double> zero_crossings;
  bool identically_zero = false;
};
DetScan scan_J11(const PacketSet& P, const std::vector<double>& s_grid, long p_max = 0);

// Resonant series at mu = 0: P modes by division, kernel modes through J_+ blocks.
struct ResonantSeries {
  std::vector<Coefficients<double>> orders;
  long blocks_solved = 0;
  std::size_t largest_block = 0;
};
ResonantSeries resonant_series(const PacketSet& P, const Amplitudes& amp, double eps, int K,
                               std::size_t block_bound = 50);
ResidualSample resonant_residual(const PacketSet& P, const Amplitudes& amp, double eta, int K);

}  // namespace lindstedt
