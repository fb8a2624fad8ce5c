#include <chrono>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "acceptance.hpp"
#include "rim/error.hpp"

namespace acceptance {

bool Report::check(bool ok, const std::string& what) {
  ++checks_;
  if (!ok) ++failures_;
  log_ << (ok ? "    ok    " : "    FAILED ") << what << "\n";
  return ok;
}

void Report::note(const std::string& text) { log_ << "    note  " << text << "\n"; }

}  // namespace acceptance

namespace {

const acceptance::Criterion kCriteria[] = {
    {"c01", "parameter counts reproduce the published table", acceptance::c01_parameter_counts},
    {"c02", "forward/adjoint inner-product identity", acceptance::c02_adjoint},
    {"c03", "log-likelihood and unrolled training gradients", acceptance::c03_gradients},
    {"c04", "loss-weight schedule endpoints", acceptance::c04_loss_weights},
    {"c05", "mask cardinality, calibration region, radial density", acceptance::c05_masks},
    {"c06", "trained IRIM beats zero-filled by 6 dB and the CS baseline", acceptance::c06_reconstruction_quality},
    {"c07", "l1-trained IRIM SSIM at least l2-trained SSIM - 0.005", acceptance::c07_loss_comparison},
    {"c08", "inference time monotone in t; IRIM not slower than GRIM", acceptance::c08_timing_trends},
    {"c09", "lesion intensity bias ordering", acceptance::c09_lesion},
    {"c10", "SSIM and PSNR oracles", acceptance::c10_image_metrics},
    {"c11", "manifest reruns are bit-identical", acceptance::c11_determinism},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria runner"};
  std::vector<std::string> only;
  bool prepare = false;
  acceptance::Context ctx;
  std::string cache = "acceptance_cache", work = "acceptance_work";
  app.add_option("--only", only, "Criterion ids to run (default: all)")->delimiter(',');
  app.add_flag("--prepare", prepare, "Train and cache the models used by the quality criteria, then exit");
  app.add_option("--cache", cache, "Directory for cached trained models");
  app.add_option("--work", work, "Scratch directory");
  CLI11_PARSE(app, argc, argv);
  ctx.cache_dir = cache;
  ctx.work_dir = work;
  std::filesystem::create_directories(ctx.cache_dir);
  std::filesystem::create_directories(ctx.work_dir);

  if (prepare) {
    try {
      acceptance::trained_irim(ctx, rim::LossNorm::L1, std::cout);
      acceptance::trained_irim(ctx, rim::LossNorm::L2, std::cout);
    } catch (const std::exception& e) {
      std::cout << "model preparation failed: " << e.what() << "\n";
      return 1;
    }
    return 0;
  }

  std::vector<std::string> summary;
  int failed = 0;
  for (const auto& c : kCriteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    std::cout << "== " << c.id << ": " << c.title << "\n" << std::flush;
    acceptance::Report report(std::cout);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(report, ctx);
    } catch (const std::exception& e) {
      report.check(false, std::string("unexpected exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char line[256];
    std::snprintf(line, sizeof line, "%s %s  %s  (%zu/%zu checks, %.1f s)", report.passed() ? "PASS" : "FAIL", c.id,
                  c.title, report.checks() - report.failures(), report.checks(), secs);
    std::cout << line << "\n\n" << std::flush;
    summary.push_back(line);
    if (!report.passed()) ++failed;
  }
  if (summary.empty()) {
    std::cout << "no criterion matched\n";
    return 2;
  }
  std::cout << "== summary\n";
  for (const auto& s : summary) std::cout << s << "\n";
  return failed ? 1 : 0;
}
