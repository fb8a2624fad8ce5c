#include "rim/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "rim/error.hpp"
#include "rim/metrics.hpp"
#include "rim/phantom.hpp"
#include "rim/random.hpp"

namespace rim {
namespace {

enum Stream : std::uint64_t { kEvalCoils = 101, kEvalMask, kEvalNoise, kLesionCoils, kLesionMask, kLesionNoise, kBench };

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double mean_magnitude(const ComplexImage& img) {
  double s = 0.0;
  for (const auto& v : img.data()) s += std::abs(v);
  return s / static_cast<double>(img.size());
}

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

// Acceleration as an integer-ish stream index (so 4 and 4.0 agree).
std::uint64_t accel_key(double r) { return static_cast<std::uint64_t>(std::llround(r * 1000.0)); }

}  // namespace

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::size_t env_thread_cap() {
  const char* v = std::getenv("RIM_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw_error(ErrorKind::Config, std::string("RIM_THREADS must be a positive integer, got '") + v + "'");
  return static_cast<std::size_t>(n);
}

TimingStats time_repeated(const std::function<void()>& fn, std::size_t repetitions, std::size_t warmup) {
  using clock = std::chrono::steady_clock;
  for (std::size_t i = 0; i < warmup; ++i) fn();
  std::vector<double> ms(repetitions);
  for (auto& m : ms) {
    const auto t0 = clock::now();
    fn();
    m = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  }
  return {mean_of(ms), std_of(ms), repetitions};
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw_error(ErrorKind::InvalidShape, "spearman needs two equal-length series");
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = mean_of(ra), mb = mean_of(rb);
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

std::vector<BenchRow> bench_inference(const BenchConfig& cfg, const BenchProgress& progress) {
  if (cfg.repetitions == 0) throw_error(ErrorKind::Config, "bench repetitions must be positive");
  const ComplexImage reference = gen_phantom(PhantomKind::Ellipses, std::max<std::size_t>(cfg.size, 32), cfg.seed);
  const ComplexImage ref = reference.height() == cfg.size ? reference : crop(reference, 0, 0, cfg.size, cfg.size);
  const SamplingMask mask = gaussian_mask(cfg.size, cfg.size, cfg.acceleration, derive_seed(cfg.seed, kBench, 1));
  const CoilSet coils = acquire(ref, synth_sensitivities(cfg.size, cfg.size, cfg.coils, derive_seed(cfg.seed, kBench, 2)).sensitivities, mask);

  std::vector<BenchRow> rows;
  auto emit = [&](BenchRow row) {
    if (progress) progress(row);
    rows.push_back(std::move(row));
  };
  for (CellKind cell : cfg.cells) {
    for (std::size_t f : cfg.features) {
      for (std::size_t t : cfg.time_steps) {
        const RimModel model = RimModel::initialized({f, t, cell}, derive_seed(cfg.seed, kBench, 3));
        const auto stats = time_repeated([&] { (void)rim_forward(model, coils, mask, cfg.sigma); }, cfg.repetitions, cfg.warmup);
        emit({std::string(to_string(cell)), t, f, stats});
      }
    }
  }
  if (cfg.include_cs) {
    const auto stats = time_repeated([&] { (void)cs_reconstruct(coils, mask, cfg.cs); }, cfg.cs_repetitions, cfg.warmup);
    emit({"cs", 0, 0, stats});
  }
  return rows;
}

std::string bench_csv(std::span<const BenchRow> rows) {
  std::ostringstream os;
  os << "method,time_steps,features,repetitions,mean_ms,std_ms\n";
  for (const auto& r : rows)
    os << r.method << ',' << r.time_steps << ',' << r.features << ',' << r.stats.repetitions << ','
       << fmt(r.stats.mean_ms) << ',' << fmt(r.stats.std_ms) << '\n';
  return os.str();
}

std::pair<double, double> score(const ComplexImage& estimate, const ComplexImage& reference) {
  const RealImage a = magnitude(estimate), b = magnitude(reference);
  const double peak = *std::max_element(b.data.begin(), b.data.end());
  const double range = peak > 0.0 ? peak : 1.0;
  return {ssim(a, b, range), psnr(a, b, range)};
}

Quantiles quantiles(std::vector<double> values) {
  Quantiles q;
  if (values.empty()) {
    q.fill(std::numeric_limits<double>::quiet_NaN());
    return q;
  }
  std::sort(values.begin(), values.end());
  const double n1 = static_cast<double>(values.size() - 1);
  for (std::size_t i = 0; i < 5; ++i) {
    const double pos = n1 * static_cast<double>(i) / 4.0;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    q[i] = values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  }
  return q;
}

EvalResult eval_generalization(std::span<const NamedModel> models, std::span<const Dataset> eval_sets,
                               const EvalConfig& cfg) {
  if (cfg.accelerations.empty()) throw_error(ErrorKind::Config, "eval needs at least one acceleration");
  EvalResult out;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  struct Job {
    std::size_t set;
    double accel;
    std::size_t slice;
  };
  std::vector<Job> jobs;
  for (std::size_t si = 0; si < eval_sets.size(); ++si)
    for (double accel : cfg.accelerations)
      for (std::size_t j = 0; j < eval_sets[si].images.size(); ++j) jobs.push_back({si, accel, j});

  std::vector<std::vector<EvalRow>> slots(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t k) {
    const auto [si, accel, j] = jobs[k];
    const Dataset& ds = eval_sets[si];
    const std::uint64_t cell_seed = derive_seed(cfg.seed, si, accel_key(accel));
    const ComplexImage& ref = ds.images[j];
    const auto sens = synth_sensitivities(ref.height(), ref.width(), cfg.coils, derive_seed(cell_seed, kEvalCoils, j));
    const SamplingMask mask = gaussian_mask(ref.height(), ref.width(), accel, derive_seed(cell_seed, kEvalMask, j));
    const NoiseSpec noise{cfg.noise_fraction * mean_magnitude(ref), derive_seed(cell_seed, kEvalNoise, j)};
    const CoilSet coils = acquire(ref, sens.sensitivities, mask, noise);

    auto push = [&](const std::string& method, const std::string& train_set, const ComplexImage* est) {
      EvalRow row{method, train_set, ds.name, accel, j, mask.seed, nan, nan, "missing"};
      if (est) {
        std::tie(row.ssim, row.psnr) = score(*est, ref);
        row.status = "ok";
      }
      slots[k].push_back(std::move(row));
    };
    const ComplexImage zf = adjoint_op(*coils.measurements, coils, mask);
    push("zero-filled", "-", &zf);
    if (cfg.include_cs) {
      const ComplexImage cs = cs_reconstruct(coils, mask, cfg.cs);
      push("cs", "-", &cs);
    }
    for (const auto& m : models) {
      if (!m.model) {
        push(m.name, m.train_set, nullptr);
        continue;
      }
      const ComplexImage est = rim_forward(*m.model, coils, mask, cfg.sigma).back();
      push(m.name, m.train_set, &est);
    }
  });
  for (auto& slot : slots)
    for (auto& row : slot) out.rows.push_back(std::move(row));

  // Aggregate in first-appearance order.
  for (const auto& row : out.rows) {
    auto it = std::find_if(out.cells.begin(), out.cells.end(), [&](const EvalCell& c) {
      return c.method == row.method && c.train_set == row.train_set && c.eval_set == row.eval_set &&
             c.acceleration == row.acceleration;
    });
    if (it == out.cells.end()) {
      out.cells.push_back({row.method, row.train_set, row.eval_set, row.acceleration, 0, row.status});
    }
  }
  for (auto& cell : out.cells) {
    std::vector<double> s, p;
    for (const auto& row : out.rows) {
      if (row.method == cell.method && row.train_set == cell.train_set && row.eval_set == cell.eval_set &&
          row.acceleration == cell.acceleration && row.status == "ok") {
        s.push_back(row.ssim);
        p.push_back(row.psnr);
      }
    }
    cell.count = s.size();
    cell.mean_ssim = s.empty() ? nan : mean_of(s);
    cell.mean_psnr = p.empty() ? nan : mean_of(p);
    cell.ssim = quantiles(s);
    cell.psnr = quantiles(p);
  }
  return out;
}

std::string eval_rows_csv(std::span<const EvalRow> rows) {
  std::ostringstream os;
  os << "method,train_set,eval_set,acceleration,slice,seed,ssim,psnr,status\n";
  for (const auto& r : rows)
    os << r.method << ',' << r.train_set << ',' << r.eval_set << ',' << fmt(r.acceleration) << ',' << r.slice << ','
       << r.seed << ',' << fmt(r.ssim) << ',' << fmt(r.psnr) << ',' << r.status << '\n';
  return os.str();
}

std::string eval_cells_csv(std::span<const EvalCell> cells) {
  std::ostringstream os;
  os << "method,train_set,eval_set,acceleration,count,status,mean_ssim,mean_psnr,"
        "ssim_min,ssim_q1,ssim_median,ssim_q3,ssim_max,psnr_min,psnr_q1,psnr_median,psnr_q3,psnr_max\n";
  for (const auto& c : cells) {
    os << c.method << ',' << c.train_set << ',' << c.eval_set << ',' << fmt(c.acceleration) << ',' << c.count << ','
       << c.status << ',' << fmt(c.mean_ssim) << ',' << fmt(c.mean_psnr);
    for (double v : c.ssim) os << ',' << fmt(v);
    for (double v : c.psnr) os << ',' << fmt(v);
    os << '\n';
  }
  return os.str();
}

void LesionSpec::validate(std::size_t height, std::size_t width) const {
  if (!(sigma > 0.0)) throw_error(ErrorKind::Config, "lesion sigma must be positive");
  for (double f : factors)
    if (!(f >= 0.0)) throw_error(ErrorKind::Config, "lesion factor must be non-negative");
  if (factors.empty()) throw_error(ErrorKind::Config, "lesion study needs at least one factor");
  if (mask_seeds == 0) throw_error(ErrorKind::Config, "lesion study needs at least one mask seed");
  if (!(annulus_inner >= 0.0 && annulus_outer > annulus_inner))
    throw_error(ErrorKind::Config, "lesion annulus radii must satisfy 0 <= inner < outer");
  if (row >= height || col >= width) throw_error(ErrorKind::Config, "lesion center lies outside the image");
  const double r = static_cast<double>(row), c = static_cast<double>(col);
  if (r - annulus_outer < 0.0 || c - annulus_outer < 0.0 || r + annulus_outer > static_cast<double>(height - 1) ||
      c + annulus_outer > static_cast<double>(width - 1))
    throw_error(ErrorKind::Config, "lesion annulus extends past the image border");
}

RealImage bandlimited_gaussian(std::size_t height, std::size_t width, double row, double col, double sigma) {
  if (!(sigma > 0.0)) throw_error(ErrorKind::Config, "bump sigma must be positive");
  // Separable: each axis is the inverse DFT of the sampled continuous spectrum.
  auto axis = [sigma](std::size_t n, double center) {
    std::vector<double> out(n, 0.0);
    const auto nn = static_cast<double>(n);
    const auto half = static_cast<long>(n / 2);
    for (std::size_t p = 0; p < n; ++p) {
      double acc = 0.0;
      for (long k = -half; k < static_cast<long>(n) - half; ++k) {
        const double f = static_cast<double>(k) / nn;
        const double amp = std::sqrt(2.0 * std::numbers::pi) * sigma *
                           std::exp(-2.0 * std::numbers::pi * std::numbers::pi * sigma * sigma * f * f);
        acc += amp * std::cos(2.0 * std::numbers::pi * f * (static_cast<double>(p) - center));
      }
      out[p] = acc / nn;
    }
    return out;
  };
  const auto gr = axis(height, row), gc = axis(width, col);
  RealImage img(height, width);
  const auto r0 = static_cast<std::size_t>(std::lround(row)), c0 = static_cast<std::size_t>(std::lround(col));
  const double peak = gr[std::min(r0, height - 1)] * gc[std::min(c0, width - 1)];
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) img(r, c) = gr[r] * gc[c] / peak;
  return img;
}

double annulus_mean(const RealImage& img, std::size_t row, std::size_t col, double inner, double outer) {
  double sum = 0.0;
  std::size_t n = 0;
  const auto reach = static_cast<long>(std::ceil(outer));
  for (long dr = -reach; dr <= reach; ++dr) {
    for (long dc = -reach; dc <= reach; ++dc) {
      const double d = std::hypot(static_cast<double>(dr), static_cast<double>(dc));
      if (d < inner || d > outer) continue;
      const long r = static_cast<long>(row) + dr, c = static_cast<long>(col) + dc;
      if (r < 0 || c < 0 || r >= static_cast<long>(img.height) || c >= static_cast<long>(img.width)) continue;
      sum += img(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      ++n;
    }
  }
  if (n == 0) throw_error(ErrorKind::Config, "empty annulus");
  return sum / static_cast<double>(n);
}

double lesion_intensity(const RealImage& img, std::size_t row, std::size_t col, double inner, double outer) {
  return img(row, col) - annulus_mean(img, row, col, inner, outer);
}

ComplexImage insert_lesion(const ComplexImage& base, const LesionSpec& spec, double factor) {
  spec.validate(base.height(), base.width());
  const RealImage mag = magnitude(base);
  const double amplitude = factor * annulus_mean(mag, spec.row, spec.col, spec.annulus_inner, spec.annulus_outer);
  const RealImage bump = bandlimited_gaussian(base.height(), base.width(), static_cast<double>(spec.row),
                                              static_cast<double>(spec.col), spec.sigma);
  ComplexImage out = base;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += std::polar(amplitude * bump.data[i], std::arg(base[i]));
  return out;
}

std::pair<std::size_t, std::size_t> homogeneous_center(const ComplexImage& img, double radius, double min_level) {
  const RealImage mag = magnitude(img);
  const double peak = *std::max_element(mag.data.begin(), mag.data.end());
  const auto reach = static_cast<long>(std::ceil(radius));
  double best = std::numeric_limits<double>::infinity();
  std::pair<std::size_t, std::size_t> at{img.height() / 2, img.width() / 2};
  for (long r = reach; r + reach < static_cast<long>(img.height()); ++r) {
    for (long c = reach; c + reach < static_cast<long>(img.width()); ++c) {
      if (mag(r, c) < min_level * peak) continue;
      double s = 0.0, s2 = 0.0;
      std::size_t n = 0;
      bool ok = true;
      for (long dr = -reach; dr <= reach && ok; ++dr) {
        for (long dc = -reach; dc <= reach; ++dc) {
          if (std::hypot(static_cast<double>(dr), static_cast<double>(dc)) > radius) continue;
          const double v = mag(r + dr, c + dc);
          if (v < min_level * peak) {
            ok = false;
            break;
          }
          s += v;
          s2 += v * v;
          ++n;
        }
      }
      if (!ok) continue;
      const double var = s2 / static_cast<double>(n) - (s / static_cast<double>(n)) * (s / static_cast<double>(n));
      if (var < best) {
        best = var;
        at = {static_cast<std::size_t>(r), static_cast<std::size_t>(c)};
      }
    }
  }
  return at;
}

ReconMethod zero_filled_method() {
  return {"zero-filled", [](const CoilSet& coils, const SamplingMask& mask) {
            return adjoint_op(*coils.measurements, coils, mask);
          }};
}

ReconMethod cs_method(const CsConfig& config) {
  return {"cs", [config](const CoilSet& coils, const SamplingMask& mask) { return cs_reconstruct(coils, mask, config); }};
}

ReconMethod rim_method(std::string name, const RimModel& model, double sigma) {
  return {std::move(name), [model, sigma](const CoilSet& coils, const SamplingMask& mask) {
            return rim_forward(model, coils, mask, sigma).back();
          }};
}

LesionResult lesion_study(const ComplexImage& base, const LesionSpec& spec, std::span<const ReconMethod> methods,
                          std::size_t threads) {
  spec.validate(base.height(), base.width());
  const std::size_t h = base.height(), w = base.width();
  const auto sens = synth_sensitivities(h, w, spec.coils, derive_seed(spec.seed, kLesionCoils)).sensitivities;

  std::vector<double> accels;
  if (spec.include_full_sampling) accels.push_back(1.0);
  accels.insert(accels.end(), spec.accelerations.begin(), spec.accelerations.end());
  const double panel_accel = *std::max_element(accels.begin(), accels.end());
  const double panel_factor = spec.factors.back();

  LesionResult out;
  for (std::size_t fi = 0; fi < spec.factors.size(); ++fi) {
    const double factor = spec.factors[fi];
    const ComplexImage lesioned = insert_lesion(base, spec, factor);
    const double simulated =
        lesion_intensity(magnitude(lesioned), spec.row, spec.col, spec.annulus_inner, spec.annulus_outer);
    const double noise_sigma = spec.noise_fraction * mean_magnitude(lesioned);
    const bool panel_factor_here = factor == panel_factor && fi + 1 == spec.factors.size();
    if (panel_factor_here) out.panels.push_back({"reference", magnitude(lesioned)});

    for (double accel : accels) {
      std::vector<std::vector<double>> measured(methods.size(), std::vector<double>(spec.mask_seeds));
      std::vector<LesionPanel> panels(methods.size());
      const bool panel_here = panel_factor_here && accel == panel_accel;
      parallel_for(spec.mask_seeds, threads, [&](std::size_t s) {
        // Masks depend on (acceleration, seed) only, so every factor sees the same masks.
        const std::uint64_t key = accel_key(accel) * 1000 + s;
        const SamplingMask mask =
            accel <= 1.0 ? SamplingMask::full(h, w) : gaussian_mask(h, w, accel, derive_seed(spec.seed, kLesionMask, key));
        const CoilSet coils = acquire(lesioned, sens, mask, {noise_sigma, derive_seed(spec.seed, kLesionNoise, key)});
        for (std::size_t m = 0; m < methods.size(); ++m) {
          const RealImage mag = magnitude(methods[m].reconstruct(coils, mask));
          measured[m][s] = lesion_intensity(mag, spec.row, spec.col, spec.annulus_inner, spec.annulus_outer);
          if (panel_here && s == 0) panels[m] = {methods[m].name, mag};
        }
      });
      if (panel_here)
        for (auto& p : panels) out.panels.push_back(std::move(p));
      for (std::size_t m = 0; m < methods.size(); ++m) {
        const double mean = mean_of(measured[m]);
        out.rows.push_back({methods[m].name, accel, factor, simulated, mean, std_of(measured[m]), mean - simulated,
                            measured[m].size()});
      }
    }
  }
  return out;
}

std::string lesion_csv(std::span<const LesionRow> rows) {
  std::ostringstream os;
  os << "method,acceleration,factor,simulated,measured_mean,measured_std,bias,count\n";
  for (const auto& r : rows)
    os << r.method << ',' << fmt(r.acceleration) << ',' << fmt(r.factor) << ',' << fmt(r.simulated) << ','
       << fmt(r.measured_mean) << ',' << fmt(r.measured_std) << ',' << fmt(r.bias) << ',' << r.count << '\n';
  return os.str();
}

}  // namespace rim
