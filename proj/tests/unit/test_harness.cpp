#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rim/binary_io.hpp"
#include "rim/error.hpp"
#include "rim/experiments.hpp"
#include "rim/fft.hpp"
#include "rim/phantom.hpp"
#include "rim/png_writer.hpp"
#include "rim/volume.hpp"

using namespace rim;

namespace fs = std::filesystem;

TEST_CASE("phantoms are deterministic, normalized, and size-checked") {
  for (PhantomKind k : {PhantomKind::SheppLogan, PhantomKind::Ellipses, PhantomKind::Textured}) {
    CAPTURE(to_string(k));
    const auto a = gen_phantom(k, 48, 3);
    CHECK(a == gen_phantom(k, 48, 3));
    CHECK_FALSE(a == gen_phantom(k, 48, 4));
    double peak = 0.0;
    for (const auto& v : a.data()) {
      CHECK(std::abs(v) <= 1.0 + 1e-12);
      peak = std::max(peak, std::abs(v));
    }
    CHECK(peak == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(parse_phantom_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(gen_phantom(PhantomKind::SheppLogan, 31, 0), Error);
}

TEST_CASE("textured phantoms carry more high-frequency energy than plain ones") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double plain = high_frequency_fraction(gen_phantom(PhantomKind::Ellipses, 64, seed));
    const double textured = high_frequency_fraction(gen_phantom(PhantomKind::Textured, 64, seed));
    CHECK(textured > plain);
  }
}

TEST_CASE("phantom phase is smooth") {
  const auto p = gen_phantom(PhantomKind::Ellipses, 64, 2);
  // neighbouring foreground pixels differ in phase by far less than a radian
  for (std::size_t r = 20; r < 44; ++r)
    for (std::size_t c = 20; c < 43; ++c)
      if (std::abs(p(r, c)) > 0.05 && std::abs(p(r, c + 1)) > 0.05)
        CHECK(std::abs(std::arg(p(r, c + 1) / p(r, c))) < 0.2);
}

namespace {

Volume random_volume(std::array<std::size_t, 3> dims, std::size_t coils, Domain domain, std::uint8_t axis,
                     std::mt19937_64& rng) {
  Volume v;
  v.dims = dims;
  v.coils = coils;
  v.domain = domain;
  v.readout_axis = axis;
  std::normal_distribution<float> n;
  v.samples.resize(coils * dims[0] * dims[1] * dims[2]);
  for (auto& s : v.samples) s = {n(rng), n(rng)};
  v.meta.set("modality", "synthetic");
  v.meta.set("normalization", "1");
  v.meta.set("provenance", "unit test");
  return v;
}

}  // namespace

TEST_CASE("volume files round trip bit-exactly") {
  std::mt19937_64 rng(71);
  const auto v = random_volume({3, 4, 5}, 2, Domain::KSpace, 1, rng);
  const auto path = fs::temp_directory_path() / "rim_unit_volume.rimv";
  write_volume(path, v);
  const auto back = read_volume(path);
  CHECK(back.samples == v.samples);
  CHECK(back.dims == v.dims);
  CHECK(back.coils == 2);
  CHECK(back.domain == Domain::KSpace);
  CHECK(back.readout_axis == 1);
  CHECK(back.meta.get("provenance") == "unit test");
  fs::remove(path);
  fs::remove(sidecar_path(path));
}

TEST_CASE("corrupt volume headers are parse errors") {
  std::mt19937_64 rng(72);
  const auto bytes = encode_volume(random_volume({2, 2, 2}, 1, Domain::Image, 0, rng));
  auto bad = bytes;
  bad[1] = 'X';
  CHECK_THROWS_AS(decode_volume(bad), ParseError);
  bad = bytes;
  bad[5] = 7;  // domain flag
  try {
    decode_volume(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset() == 5);
  }
  bad = bytes;
  bad.pop_back();
  CHECK_THROWS_AS(decode_volume(bad), ParseError);
  bad = bytes;
  bad[8] = 3;  // first dim no longer matches the payload
  CHECK_THROWS_AS(decode_volume(bad), ParseError);

  auto v = random_volume({2, 2, 2}, 1, Domain::Image, 0, rng);
  v.meta.set("normalization", "0");
  CHECK_THROWS_AS(v.validate(), Error);
}

TEST_CASE("slice ingestion of a separable k-space volume") {
  // volume(k, i, j) = F_1d[a](k) * b(i) * c(j) along readout axis 0, so
  // each slice after the inverse transform is a(k) * outer(b, c).
  std::mt19937_64 rng(73);
  for (std::uint8_t axis : {0, 1, 2}) {
    CAPTURE(int(axis));
    const std::array<std::size_t, 3> dims{6, 5, 4};
    std::array<std::vector<cdouble>, 3> f;
    for (std::size_t d = 0; d < 3; ++d) {
      const auto img = oracle::random_image(1, dims[d], rng);
      f[d].assign(img.data().begin(), img.data().end());
    }
    std::vector<cdouble> spectrum = f[axis];
    fft1_centered(spectrum);
    Volume v;
    v.dims = dims;
    v.coils = 1;
    v.domain = Domain::KSpace;
    v.readout_axis = axis;
    v.samples.resize(6 * 5 * 4);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t k = 0; k < 4; ++k) {
          const std::array<std::size_t, 3> idx{i, j, k};
          cdouble val = 1.0;
          for (std::size_t d = 0; d < 3; ++d) val *= d == axis ? spectrum[idx[d]] : f[d][idx[d]];
          v.samples[v.index(0, i, j, k)] = std::complex<float>(val);
        }
    const auto slices = slice_ingest(v);
    REQUIRE(slices.size() == dims[axis]);
    const std::size_t a = axis == 0 ? 1 : 0, b = axis == 2 ? 1 : 2;
    double worst = 0.0;
    for (const auto& s : slices) {
      REQUIRE(s.coils.size() == 1);
      CHECK(s.coils[0].height() == dims[a]);
      CHECK(s.coils[0].width() == dims[b]);
      for (std::size_t r = 0; r < dims[a]; ++r)
        for (std::size_t c = 0; c < dims[b]; ++c)
          worst = std::max(worst, std::abs(s.coils[0](r, c) - f[axis][s.index] * f[a][r] * f[b][c]));
    }
    CHECK(worst < 1e-5);  // float32 storage
  }
}

TEST_CASE("image-domain volumes slice without a transform") {
  std::mt19937_64 rng(74);
  const auto v = random_volume({3, 4, 5}, 2, Domain::Image, 0, rng);
  const auto slices = slice_ingest(v);
  REQUIRE(slices.size() == 3);
  CHECK(slices[2].coils[1](3, 4) == cdouble(v.samples[v.index(1, 2, 3, 4)]));
}

TEST_CASE("png and float dumps") {
  RealImage img(4, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<double>(i) / 11.0;
  const auto dir = fs::temp_directory_path() / "rim_unit_png";
  fs::create_directories(dir);
  write_png(dir / "a.png", img);
  const auto bytes = io::read_file(dir / "a.png");
  REQUIRE(bytes.size() > 8);
  CHECK(bytes[1] == 'P');
  CHECK(bytes[2] == 'N');
  write_float_dump(dir / "a.rimf", img);
  CHECK(read_float_dump(dir / "a.rimf").data == img.data);
  fs::remove_all(dir);
}

TEST_CASE("timing and rank correlation helpers") {
  const auto t = time_repeated([] {}, 300, 5);
  CHECK(t.repetitions == 300);
  CHECK(t.mean_ms < 0.01);
  const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 5, 9, 10}, z{5, 4, 3, 2, 1};
  CHECK(spearman(x, y) == doctest::Approx(1.0));
  CHECK(spearman(x, z) == doctest::Approx(-1.0));
  const std::vector<double> ties{1, 1, 2, 2, 3};
  CHECK(spearman(x, ties) == doctest::Approx(0.9486832980505138));
}

TEST_CASE("parallel_for visits every index once") {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw_error(ErrorKind::Numerical, "boom");
                  }),
                  Error);
}

TEST_CASE("bench grid produces one row per setting plus the baseline") {
  BenchConfig cfg;
  cfg.time_steps = {1, 2};
  cfg.features = {2};
  cfg.repetitions = 2;
  cfg.warmup = 1;
  cfg.size = 32;
  cfg.cs_repetitions = 1;
  cfg.cs.max_iters = 2;
  const auto rows = bench_inference(cfg);
  CHECK(rows.size() == 3 * 2 + 1);
  CHECK(rows.back().method == "cs");
  const auto csv = bench_csv(rows);
  CHECK(csv.starts_with("method,time_steps,features,repetitions,mean_ms,std_ms\n"));
}

TEST_CASE("evaluation always reports zero-filled and marks missing models") {
  const std::vector<Dataset> sets{{"ellipses", {gen_phantom(PhantomKind::Ellipses, 32, 1)}}};
  std::vector<NamedModel> models;
  models.push_back({"indrnn", "ellipses", RimModel::initialized({2, 2, CellKind::IndRNN}, 1)});
  models.push_back({"gru", "ellipses", std::nullopt, "missing"});
  EvalConfig cfg;
  cfg.accelerations = {4.0, 6.0};
  cfg.cs.max_iters = 3;
  cfg.coils = 2;
  const auto r = eval_generalization(models, sets, cfg);
  CHECK(r.rows.size() == 2 * 4);
  CHECK(r.cells.size() == 2 * 4);
  std::size_t zero_filled = 0, missing = 0;
  for (const auto& row : r.rows) {
    zero_filled += row.method == "zero-filled";
    if (row.method == "gru") {
      CHECK(row.status == "missing");
      CHECK(std::isnan(row.ssim));
      ++missing;
    }
  }
  CHECK(zero_filled == 2);
  CHECK(missing == 2);
  const auto csv = eval_cells_csv(r.cells);
  CHECK(csv.find("gru,ellipses,ellipses,4,0,missing") != std::string::npos);
  cfg.threads = 3;
  const auto again = eval_generalization(models, sets, cfg);
  CHECK(eval_rows_csv(again.rows) == eval_rows_csv(r.rows));
}

TEST_CASE("quantiles") {
  const auto q = quantiles({5, 1, 3, 2, 4});
  CHECK(q == Quantiles{1, 2, 3, 4, 5});
  CHECK(std::isnan(quantiles({})[2]));
}

TEST_CASE("band-limited bump") {
  const auto g = bandlimited_gaussian(32, 32, 12, 20, 1.0);
  CHECK(g(12, 20) == doctest::Approx(1.0));
  CHECK(g(11, 20) == doctest::Approx(g(13, 20)).epsilon(1e-10));
  CHECK(g(12, 21) == doctest::Approx(std::exp(-0.5)).epsilon(2e-3));
  // its spectrum carries the sampled Gaussian magnitude
  ComplexImage c(32, 32);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = g.data[i];
  const auto k = fft2_centered(c);
  CHECK(std::abs(k(16, 16 + 4)) / std::abs(k(16, 16)) ==
        doctest::Approx(std::exp(-2.0 * std::numbers::pi * std::numbers::pi * (4.0 / 32.0) * (4.0 / 32.0))).epsilon(1e-9));
}

namespace {

LesionSpec quiet_spec(std::size_t r, std::size_t c) {
  LesionSpec s;
  s.row = r;
  s.col = c;
  s.noise_fraction = 0.0;
  s.accelerations = {};
  s.mask_seeds = 2;
  return s;
}

}  // namespace

TEST_CASE("lesion study: fully sampled, noise-free limb is bias-free and linear") {
  const auto base = gen_phantom(PhantomKind::Ellipses, 48, 5);
  const auto [r, c] = homogeneous_center(base, 6.0);
  auto spec = quiet_spec(r, c);
  spec.factors = {0.0, 0.5, 1.0};
  const std::vector<ReconMethod> methods{zero_filled_method()};
  const auto res = lesion_study(base, spec, methods);
  REQUIRE(res.rows.size() == 3);
  for (const auto& row : res.rows) CHECK(std::abs(row.bias) < 1e-10);
  // delta measured intensity doubles with the amplitude
  const double d1 = res.rows[1].measured_mean - res.rows[0].measured_mean;
  const double d2 = res.rows[2].measured_mean - res.rows[0].measured_mean;
  CHECK(std::abs(d2 - 2 * d1) < 1e-8);
  CHECK(d1 > 0.0);
  CHECK(lesion_csv(res.rows).starts_with("method,acceleration,factor,simulated,measured_mean,measured_std,bias,count\n"));
}

TEST_CASE("lesion configuration errors") {
  const auto base = gen_phantom(PhantomKind::Ellipses, 32, 5);
  const std::vector<ReconMethod> methods{zero_filled_method()};
  auto spec = quiet_spec(40, 10);
  try {
    lesion_study(base, spec, methods);
    FAIL("expected a configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
  spec = quiet_spec(16, 16);
  spec.sigma = 0.0;
  CHECK_THROWS_AS(lesion_study(base, spec, methods), Error);
  spec = quiet_spec(16, 16);
  spec.factors = {-1.0};
  CHECK_THROWS_AS(lesion_study(base, spec, methods), Error);
}

TEST_CASE("lesion study emits panels for every method") {
  const auto base = gen_phantom(PhantomKind::Ellipses, 32, 6);
  auto spec = quiet_spec(16, 16);
  spec.accelerations = {4.0};
  spec.factors = {1.0};
  std::vector<ReconMethod> methods{zero_filled_method(), cs_method({0.005, 3, 3, 5})};
  const auto res = lesion_study(base, spec, methods, 2);
  CHECK(res.rows.size() == 2 * 2);
  REQUIRE(res.panels.size() == 3);
  CHECK(res.panels[0].name == "reference");
  CHECK(res.panels[2].name == "cs");
  CHECK(lesion_study(base, spec, methods, 1).rows.size() == res.rows.size());
}
