#include "wavemollify/eigen.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "wavemollify/errors.hpp"

namespace wavemollify {
namespace {

namespace fs = std::filesystem;

constexpr char kMagic[8] = {'W', 'M', 'E', 'I', 'G', '0', '0', '1'};

EigenSystem dense_solve(const LaplaceBeltrami& op, std::size_t count) {
  const Eigen::MatrixXd S = Eigen::MatrixXd(op.symmetric_form());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
  if (solver.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed");
  const auto k = static_cast<Eigen::Index>(count);
  EigenSystem es;
  es.values = solver.eigenvalues().head(k).cwiseMax(0.0);
  const Vector d = op.weights().array().rsqrt();
  es.vectors = d.asDiagonal() * solver.eigenvectors().leftCols(k);
  return es;
}

// Orthonormalizes column j of Q against columns [0, j) with two passes of
// modified Gram-Schmidt. Returns false when the column is numerically dependent.
bool orthonormalize_column(Eigen::MatrixXd& Q, Eigen::Index j) {
  const double before = Q.col(j).norm();
  if (before == 0.0) return false;
  for (int pass = 0; pass < 2; ++pass) {
    if (j > 0) {
      const Vector proj = Q.leftCols(j).transpose() * Q.col(j);
      Q.col(j) -= Q.leftCols(j) * proj;
    }
  }
  const double after = Q.col(j).norm();
  if (after < 1e-10 * before) return false;
  Q.col(j) /= after;
  return true;
}

EigenSystem krylov_solve(const LaplaceBeltrami& op, std::size_t count, const EigenOptions& opt) {
  const auto n = static_cast<Eigen::Index>(op.size());
  const Eigen::SparseMatrix<double> S = op.symmetric_form();
  const double shift = 1.0;
  Eigen::SparseMatrix<double> shifted = S;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) throw ConvergenceError("sparse factorization failed");

  const auto p = static_cast<Eigen::Index>(opt.block);
  const auto k = static_cast<Eigen::Index>(count);
  auto round_up = [p, n](Eigen::Index m) { return std::min(n, ((m + p - 1) / p) * p); };
  Eigen::Index target = round_up(2 * k + 4 * p);

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  auto random_column = [&](Eigen::MatrixXd& M, Eigen::Index j) {
    for (Eigen::Index i = 0; i < n; ++i) M(i, j) = normal(rng);
  };

  Eigen::MatrixXd Q(n, target);
  Eigen::MatrixXd AQ(n, target);
  Eigen::Index used = 0;
  auto append = [&](Eigen::Index j) {
    int attempts = 0;
    while (!orthonormalize_column(Q, j)) {
      if (++attempts > 8) throw ConvergenceError("Krylov basis lost rank repeatedly");
      random_column(Q, j);
    }
    AQ.col(j) = ldlt.solve(Q.col(j));
  };
  for (Eigen::Index j = 0; j < std::min(p, n); ++j) {
    random_column(Q, j);
    append(j);
  }
  used = std::min(p, n);

  double worst = 0.0;
  for (int round = 0; round < 64; ++round) {
    while (used < target) {
      const Eigen::Index width = std::min(p, target - used);
      // Next block: the operator applied to the most recent block.
      for (Eigen::Index j = 0; j < width; ++j) {
        Q.col(used + j) = AQ.col(used - p + j);
        append(used + j);
      }
      used += width;
    }
    Eigen::MatrixXd H = Q.leftCols(used).transpose() * AQ.leftCols(used);
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rr(H);
    if (rr.info() != Eigen::Success) throw ConvergenceError("Rayleigh-Ritz solve failed");
    EigenSystem es;
    es.values.resize(k);
    Eigen::MatrixXd V(n, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const Eigen::Index col = used - 1 - i;  // largest theta first
      es.values[i] = std::max(0.0, 1.0 / rr.eigenvalues()[col] - shift);
      V.col(i) = Q.leftCols(used) * rr.eigenvectors().col(col);
      V.col(i).normalize();
    }
    worst = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      const double r = (S * V.col(i) - es.values[i] * V.col(i)).norm();
      worst = std::max(worst, r / (1.0 + es.values[i]));
    }
    if (worst <= opt.residual_tol || used == n) {
      if (worst > opt.residual_tol) break;
      const Vector d = op.weights().array().rsqrt();
      es.vectors = d.asDiagonal() * V;
      return es;
    }
    const Eigen::Index grown = round_up(used + std::max(p, used / 2));
    Q.conservativeResize(n, grown);
    AQ.conservativeResize(n, grown);
    target = grown;
  }
  std::ostringstream msg;
  msg << "Krylov eigensolver did not reach residual " << opt.residual_tol << " (worst " << worst
      << ")";
  throw ConvergenceError(msg.str());
}

class FileLock {
 public:
  FileLock(const fs::path& dir, bool exclusive) {
    fd_ = ::open((dir / ".lock").c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ >= 0) ::flock(fd_, exclusive ? LOCK_EX : LOCK_SH);
  }
  ~FileLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

std::string hex(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << v;
  return out.str();
}

struct Reader {
  std::vector<char> bytes;
  std::size_t pos = 0;

  template <class T>
  bool read(T& v) {
    if (pos + sizeof(T) > bytes.size()) return false;
    std::memcpy(&v, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return true;
  }
  bool read_raw(void* dst, std::size_t n) {
    if (pos + n > bytes.size()) return false;
    std::memcpy(dst, bytes.data() + pos, n);
    pos += n;
    return true;
  }
};

// Parses one cache file; `entry.problem` is set when it is unusable.
std::optional<EigenSystem> read_entry(const fs::path& path, CacheEntry& entry, bool payload) {
  entry.path = path;
  std::error_code ec;
  entry.bytes = fs::file_size(path, ec);
  std::ifstream in(path, std::ios::binary);
  Reader r;
  r.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  if (r.bytes.size() < sizeof(kMagic) + 5 * sizeof(std::uint64_t)) {
    entry.problem = "truncated header";
    return std::nullopt;
  }
  const std::size_t body = r.bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored = 0;
  std::memcpy(&stored, r.bytes.data() + body, sizeof(stored));
  if (fnv1a(r.bytes.data(), body) != stored) {
    entry.problem = "checksum mismatch";
    return std::nullopt;
  }
  char magic[8] = {};
  std::uint64_t fp = 0, n = 0, count = 0, text_len = 0;
  r.read_raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    entry.problem = "bad magic";
    return std::nullopt;
  }
  r.read(fp);
  r.read(n);
  r.read(count);
  r.read(text_len);
  entry.fingerprint = fp;
  entry.unknowns = n;
  entry.count = count;
  entry.geometry_text.resize(text_len);
  if (!r.read_raw(entry.geometry_text.data(), text_len) ||
      body - r.pos != (count + n * count) * sizeof(double)) {
    entry.problem = "inconsistent sizes";
    return std::nullopt;
  }
  entry.intact = true;
  if (!payload) return std::nullopt;
  EigenSystem es;
  es.fingerprint = fp;
  es.geometry_text = entry.geometry_text;
  es.values.resize(static_cast<Eigen::Index>(count));
  es.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(count));
  r.read_raw(es.values.data(), count * sizeof(double));
  r.read_raw(es.vectors.data(), n * count * sizeof(double));
  return es;
}

}  // namespace

double EigenSystem::max_residual(const LaplaceBeltrami& op) const {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const Vector e = vectors.col(i);
    const Vector r = -op.apply(e) - values[i] * e;
    worst = std::max(worst, weighted_norm(r, op.weights()) / (1.0 + values[i]));
  }
  return worst;
}

double EigenSystem::orthonormality_error(const Vector& weights) const {
  const Eigen::MatrixXd G = vectors.transpose() * weights.asDiagonal() * vectors;
  return (G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

EigenSystem compute_eigensystem(const LaplaceBeltrami& op, std::size_t count,
                                const EigenOptions& opt) {
  if (count == 0 || count > op.size()) {
    std::ostringstream msg;
    msg << "eigensystem request for " << count << " pairs on a grid of " << op.size() << " nodes";
    throw ValidationError(msg.str());
  }
  EigenSystem es = op.size() <= opt.dense_limit ? dense_solve(op, count) : krylov_solve(op, count, opt);
  es.fingerprint = op.fingerprint();
  es.geometry_text = op.geometry().serialize();
  return es;
}

EigenCache::EigenCache(fs::path dir) : dir_(std::move(dir)) {}

fs::path EigenCache::default_dir() {
  if (const char* env = std::getenv("WAVEMOLLIFY_CACHE_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return fs::current_path() / ".wavemollify-cache";
}

std::optional<EigenSystem> EigenCache::load(std::uint64_t fingerprint, std::size_t count) const {
  if (!fs::is_directory(dir_)) return std::nullopt;
  FileLock lock(dir_, false);
  const std::string prefix = hex(fingerprint) + "-";
  std::optional<EigenSystem> best;
  for (const auto& item : fs::directory_iterator(dir_)) {
    const std::string name = item.path().filename().string();
    if (name.rfind(prefix, 0) != 0 || item.path().extension() != ".eig") continue;
    CacheEntry entry;
    auto es = read_entry(item.path(), entry, true);
    if (!es || es->fingerprint != fingerprint || es->count() < count) continue;
    if (!best || es->count() < best->count()) best = std::move(es);
  }
  if (best && best->count() > count) {
    const auto k = static_cast<Eigen::Index>(count);
    best->values = best->values.head(k).eval();
    best->vectors = best->vectors.leftCols(k).eval();
  }
  return best;
}

void EigenCache::store(const EigenSystem& es) const {
  fs::create_directories(dir_);
  FileLock lock(dir_, true);
  std::vector<char> buf;
  auto put = [&buf](const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf.insert(buf.end(), c, c + n);
  };
  const std::uint64_t n = static_cast<std::uint64_t>(es.vectors.rows());
  const std::uint64_t count = es.count();
  const std::uint64_t text_len = es.geometry_text.size();
  put(kMagic, sizeof(kMagic));
  put(&es.fingerprint, sizeof(es.fingerprint));
  put(&n, sizeof(n));
  put(&count, sizeof(count));
  put(&text_len, sizeof(text_len));
  put(es.geometry_text.data(), text_len);
  put(es.values.data(), count * sizeof(double));
  put(es.vectors.data(), n * count * sizeof(double));
  const std::uint64_t sum = fnv1a(buf.data(), buf.size());
  put(&sum, sizeof(sum));

  const fs::path final_path = dir_ / (hex(es.fingerprint) + "-" + std::to_string(count) + ".eig");
  const fs::path tmp = final_path.string() + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error("cannot write eigensystem cache file " + tmp.string());
  }
  fs::rename(tmp, final_path);
}

std::vector<CacheEntry> EigenCache::list() const {
  std::vector<CacheEntry> out;
  if (!fs::is_directory(dir_)) return out;
  FileLock lock(dir_, false);
  for (const auto& item : fs::directory_iterator(dir_)) {
    if (item.path().extension() != ".eig") continue;
    CacheEntry entry;
    read_entry(item.path(), entry, false);
    out.push_back(std::move(entry));
  }
  std::sort(out.begin(), out.end(),
            [](const CacheEntry& a, const CacheEntry& b) { return a.path < b.path; });
  return out;
}

std::size_t EigenCache::purge() const {
  if (!fs::is_directory(dir_)) return 0;
  FileLock lock(dir_, true);
  std::size_t removed = 0;
  for (const auto& item : fs::directory_iterator(dir_)) {
    const auto ext = item.path().extension();
    if (ext == ".eig" || item.path().string().find(".eig.tmp") != std::string::npos) {
      fs::remove(item.path());
      ++removed;
    }
  }
  return removed;
}

EigenSystem eigensystem(const LaplaceBeltrami& op, std::size_t count, const EigenCache* cache,
                        const EigenOptions& opt) {
  if (cache != nullptr) {
    if (auto hit = cache->load(op.fingerprint(), count)) return std::move(*hit);
  }
  EigenSystem es = compute_eigensystem(op, count, opt);
  if (cache != nullptr) {
    try {
      cache->store(es);
    } catch (const std::exception& e) {
      std::cerr << "warning: eigensystem cache write failed: " << e.what() << '\n';
    }
  }
  return es;
}

double trusted_threshold(const Geometry& g) {
  const double k_nyq = std::numbers::pi / g.max_edge_length();
  return 0.0625 * k_nyq * k_nyq;
}

WeylFit weyl_exponent(const Vector& eigenvalues, double threshold) {
  std::vector<double> lam(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
  std::sort(lam.begin(), lam.end());
  WeylFit fit;
  fit.threshold = threshold;
  fit.trusted = static_cast<std::size_t>(std::count_if(
      lam.begin(), lam.end(), [&](double l) { return l > 1e-9 && l <= threshold; }));
  if (fit.trusted < 100) {
    std::ostringstream msg;
    msg << "Weyl fit needs at least 100 trusted eigenvalues, have " << fit.trusted
        << " below threshold " << threshold;
    throw ValidationError(msg.str());
  }
  // One point per distinct eigenvalue; N is taken at the midpoint of its jump,
  // (#{lambda_i < lambda} + #{lambda_i <= lambda}) / 2.
  std::vector<double> xs, ys;
  std::size_t below = 0;
  for (std::size_t i = 0; i < lam.size(); ++i) {
    if (i + 1 < lam.size() && lam[i + 1] - lam[i] <= 1e-9 * (1.0 + lam[i])) continue;
    const std::size_t upto = i + 1;
    if (lam[i] > 1e-9 && lam[i] <= threshold) {
      xs.push_back(std::log(lam[i]));
      ys.push_back(std::log(0.5 * static_cast<double>(below + upto)));
    }
    below = upto;
  }
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double cov = n * sxy - sx * sy;
  fit.exponent = cov / (n * sxx - sx * sx);
  fit.r_squared = cov * cov / ((n * sxx - sx * sx) * (n * syy - sy * sy));
  return fit;
}

}  // namespace wavemollify
