// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: contrail_acceptance [path-to-contrail-cli]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "contrail/composite.hpp"
#include "contrail/gradcheck.hpp"
#include "contrail/harness.hpp"
#include "contrail/losses.hpp"
#include "contrail/raster.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace contrail;

namespace {

struct Outcome {
    bool pass{false};
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void run(const std::string& name, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    fmt::print("[{}] {:<22} {} ({:.2f}s)\n", o.pass ? "PASS" : "FAIL", name, o.detail, seconds_since(t0));
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
}

Outcome loss_gradients() {
    const auto t0 = Clock::now();
    LossGradCheckOptions opts;
    opts.trials = 20;
    const auto results = check_loss_gradients(opts);
    const double elapsed = seconds_since(t0);
    bool ok = elapsed < 10.0;
    double worst = 0.0;
    std::size_t n = 0;
    for (const auto& r : results) {
        ok = ok && r.passed() && r.cases >= 20 && r.tolerance <= 1e-4;
        worst = std::max(worst, r.max_rel_error);
        ++n;
    }
    // dice and combined are checked in both variants
    return {ok && n == 8, fmt::format("{} loss variants, max rel err {:.2e}, {:.2f}s < 10s", n, worst, elapsed)};
}

Outcome reductions() {
    std::mt19937_64 rng(77);
    double worst = 0.0;
    auto note = [&](const LossResult& a, const LossResult& b) {
        worst = std::max(worst, std::abs(a.value - b.value));
        for (std::size_t i = 0; i < a.grad.size(); ++i) {
            worst = std::max(worst, std::abs(a.grad[i] - b.grad[i]));
        }
    };
    for (int t = 0; t < 50; ++t) {
        std::uniform_int_distribution<int> side(2, 12);
        const int h = side(rng);
        const int w = side(rng);
        const ProbMap p = oracle::random_probs(rng, h, w, 0.0, 1.0);
        const Mask g = oracle::random_mask(rng, h, w, 0.4);
        std::uniform_real_distribution<double> u(0.05, 0.95);
        LossParams lp;
        lp.alpha = u(rng);
        lp.beta = u(rng);
        lp.gamma = 1.0;
        note(focal_tversky_loss(p, g, lp), tversky_loss(p, g, lp));

        // the two losses place the smoothing term differently, so compare at 0
        LossParams half;
        half.alpha = half.beta = 0.5;
        half.epsilon = 0.0;
        note(tversky_loss(p, g, half), dice_loss(p, g, half));

        LossParams mix;
        mix.delta = 1.0;
        note(combined_loss(p, g, mix), dice_loss(p, g, mix));
        mix.delta = 0.0;
        note(combined_loss(p, g, mix), focal_tversky_loss(p, g, mix));

        LossParams zero;
        zero.epsilon = 0.0;
        const double d = 1.0 - dice_loss(p, g, zero).value;
        const double j = 1.0 - jaccard_loss(p, g, zero).value;
        worst = std::max(worst, std::abs(d - 2.0 * j / (1.0 + j)));
    }
    return {worst <= 1e-12, fmt::format("5 identities x 50 inputs, max abs diff (values and gradients) {:.2e} <= 1e-12", worst)};
}

Outcome spot_value() {
    Mask g(2, 2);
    g.data = {1, 1, 0, 0};
    ProbMap p(2, 2);
    p.data = {1, 0, 1, 0};
    LossParams lp;
    lp.alpha = 0.7;
    lp.beta = 0.3;
    lp.gamma = 4.0 / 3.0;
    lp.delta = 0.5;
    lp.epsilon = 0.0;
    lp.dice_variant = DiceVariant::conventional;
    const double v = combined_loss(p, g, lp).value;
    return {std::abs(v - 0.54730) < 1e-5, fmt::format("combined loss {:.6f}, expected 0.54730 +- 1e-5", v)};
}

Outcome rasterizer() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(4242);
    std::uniform_int_distribution<int> side(1, 64);
    int mismatched = 0;
    std::size_t pixels = 0;
    for (int i = 0; i < 100; ++i) {
        const int h = side(rng);
        const int w = side(rng);
        const Polygon poly = oracle::random_polygon(rng, h, w, i % 3 == 0);
        const Mask got = rasterize_polygon(poly, h, w);
        mismatched += got == oracle::rasterize(poly, h, w) ? 0 : 1;
        pixels += got.count();
    }
    const double elapsed = seconds_since(t0);
    return {mismatched == 0 && elapsed < 5.0,
            fmt::format("100 polygons, {} mismatched, {} inside pixels, {:.2f}s < 5s", mismatched, pixels, elapsed)};
}

Outcome network_gradients() {
    const auto t0 = Clock::now();
    const GradCheckResult r = check_network_gradients();
    const double elapsed = seconds_since(t0);
    std::string detail = fmt::format("{} params checked, {} skipped at kinks, max rel err {:.3e} (tol {:.0e}), {:.1f}s",
                                     r.cases, r.skipped, r.max_rel_error, r.tolerance, elapsed);
    if (!r.passed()) {
        detail += fmt::format("; {} over tolerance, worst {}", r.over_tolerance, r.worst);
    }
    return {r.passed() && elapsed < 60.0, detail};
}

Outcome overfit() {
    const RunConfig cfg;
    const PreparedData data = prepare_data(cfg);
    const auto t0 = Clock::now();
    const TrainResult r = train(cfg, data.train);
    const double elapsed = seconds_since(t0);

    // first logged step at which the training mean IoU reached 0.8
    std::istringstream log(r.log_csv);
    std::string row;
    std::getline(log, row);
    long first = -1;
    double best = 0.0;
    while (std::getline(log, row)) {
        const auto last = row.rfind(',');
        if (last + 1 == row.size()) {
            continue;
        }
        const double v = std::stod(row.substr(last + 1));
        best = std::max(best, v);
        if (first < 0 && v >= 0.8) {
            first = std::stol(row.substr(0, row.find(',')));
        }
    }
    const bool ok = data.train.size() == 20 && first >= 0 && cfg.steps <= 3000 && elapsed < 900.0;
    return {ok, fmt::format("{} scenes, best train IoU {:.4f}, final {:.4f}, reached 0.8 at step {}, {:.0f}s < 900s",
                            data.train.size(), best, r.final_train_iou, first >= 0 ? std::to_string(first + 1) : "never",
                            elapsed)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism(const std::string& cli) {
    if (cli.empty()) {
        return {false, "no CLI path given"};
    }
    const fs::path dir = fs::temp_directory_path() / "contrail_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "run.json") << R"({
  // short run with augmentation so every seeded path is exercised
  "steps": 150,
  "eval_every": 50,
  "augment": "rot90_flip",
  "augment_seed": 3
})";
    for (const char* out : {"a", "b"}) {
        const std::string cmd = fmt::format("\"{}\" train \"{}\" -o \"{}\" > \"{}\" 2>&1", cli, (dir / "run.json").string(),
                                            (dir / out).string(), (dir / (std::string(out) + ".txt")).string());
        if (std::system(cmd.c_str()) != 0) {
            return {false, fmt::format("train invocation failed: {}", slurp(dir / (std::string(out) + ".txt")))};
        }
    }
    const std::string log_a = slurp(dir / "a" / "train_log.csv");
    const std::string ck_a = slurp(dir / "a" / "checkpoint.cnet");
    const bool same_log = !log_a.empty() && log_a == slurp(dir / "b" / "train_log.csv");
    const bool same_ck = !ck_a.empty() && ck_a == slurp(dir / "b" / "checkpoint.cnet");
    fs::remove_all(dir);
    return {same_log && same_ck, fmt::format("two CLI runs: log {} ({} B), checkpoint {} ({} B)",
                                             same_log ? "identical" : "DIFFERENT", log_a.size(),
                                             same_ck ? "identical" : "DIFFERENT", ck_a.size())};
}

Outcome split_contract() {
    bool ok = true;
    std::size_t checked = 0;
    std::vector<std::size_t> sizes = {2, 3, 5, 10, 99, 100, 101, 2171};
    std::mt19937_64 rng(5);
    for (int i = 0; i < 40; ++i) {
        sizes.push_back(std::uniform_int_distribution<std::size_t>(2, 5000)(rng));
    }
    std::string full;
    for (std::size_t n : sizes) {
        std::vector<Sample> records(n);
        for (std::size_t i = 0; i < n; ++i) {
            records[i].scene_id = std::to_string(i);
            records[i].mask = Mask(1, 1, 1);
        }
        const auto s = split_dataset(std::move(records), 0.8, n, true);
        const std::size_t expected = n * 4 / 5;  // floor(0.8 n) in integers
        std::vector<int> seen(n, 0);
        for (const auto* side : {&s.train, &s.test}) {
            for (const auto& r : *side) {
                ++seen[std::stoul(r.scene_id)];
            }
        }
        const bool partition = std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
        ok = ok && s.train.size() == expected && s.test.size() == n - expected && partition;
        ++checked;
        if (n == 2171) {
            full = fmt::format("n=2171 -> {}/{}", s.train.size(), s.test.size());
        }
    }
    return {ok, fmt::format("{} sizes, floor(0.8n) train, disjoint and exhaustive; {}", checked, full)};
}

Outcome night_compositing() {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<float> bt(200.0F, 320.0F);
    std::uniform_real_distribution<float> diff(-8.0F, 6.0F);
    std::uniform_real_distribution<float> refl(-0.2F, 1.5F);
    std::uniform_int_distribution<int> side(1, 24);
    int bad = 0;
    for (int t = 0; t < 100; ++t) {
        BandStack b;
        b.height = side(rng);
        b.width = side(rng);
        b.is_night = true;
        const auto n = static_cast<std::size_t>(b.height * b.width);
        for (std::size_t i = 0; i < n; ++i) {
            b.bt11.push_back(bt(rng));
            b.bt12.push_back(b.bt11.back() + diff(rng));
        }
        if (t % 4 != 0) {
            std::vector<float> c(n);
            for (auto& v : c) {
                v = refl(rng);
            }
            b.cirrus = c;
        }
        const ImagePlane base = false_color(b);
        for (std::size_t i = 1; i < base.data.size(); i += 3) {
            bad += base.data[i] == 0.0F ? 0 : 1;
        }
        BandStack perturbed = b;
        std::vector<float> c(n);
        for (auto& v : c) {
            v = refl(rng);
        }
        perturbed.cirrus = c;
        bad += false_color(perturbed) == base ? 0 : 1;
        perturbed.cirrus.reset();
        bad += false_color(perturbed) == base ? 0 : 1;
    }
    return {bad == 0, fmt::format("100 night stacks, {} violations", bad)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    run("loss-gradients", loss_gradients);
    run("loss-reductions", reductions);
    run("loss-spot-value", spot_value);
    run("rasterizer-oracle", rasterizer);
    run("network-gradients", network_gradients);
    run("overfit", overfit);
    run("determinism", [&] { return determinism(cli); });
    run("split-contract", split_contract);
    run("night-compositing", night_compositing);
    fmt::print("{} of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
