#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fnnet/datagen/scene.hpp"
#include "fnnet/diffcore/optimizer.hpp"
#include "fnnet/error.hpp"
#include "fnnet/geometry/epipolar.hpp"
#include "fnnet/geometry/pose.hpp"
#include "fnnet/model/checkpoint.hpp"
#include "fnnet/model/loss.hpp"
#include "fnnet/pipeline/evaluate.hpp"
#include "fnnet/pipeline/metrics.hpp"
#include "fnnet/pipeline/ransac.hpp"
#include "fnnet/pipeline/train.hpp"
#include "support/scenes.hpp"

using namespace fnnet;
using namespace fnnet::pipeline;

namespace {

std::vector<datagen::DatasetRecord> dataset(std::uint64_t seed, std::size_t pairs, double outlier_ratio,
                                            double jitter_px = 0.5) {
  datagen::NoiseConfig noise;
  noise.outlier_ratio = outlier_ratio;
  noise.inlier_jitter_px = jitter_px;
  noise.seed = seed;
  return datagen::generate_dataset(seed, pairs, {}, noise);
}

// Ground truth: the true essential matrix and the true labels.
Predictor oracle_predictor(const std::vector<datagen::DatasetRecord>& data) {
  return [&data](const geometry::CorrespondenceSet& corrs, std::uint64_t) {
    for (const auto& rec : data)
      if (rec.normalized().points == corrs.points)
        return Prediction{geometry::essential_from_pose(rec.pose()), rec.labels};
    throw ContractError("oracle: unknown pair");
  };
}

model::FNNetConfig small_config(std::uint64_t seed) {
  model::FNNetConfig cfg;
  cfg.channels = 8;
  cfg.n_clusters = 4;
  cfg.alpha_warmup_epochs = 0;
  cfg.seed = seed;
  return cfg;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("fnnet_test_pipeline_" + name);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("two pairs at 0.5 and 10 degrees give map5 of 50") {
    const std::vector<double> errors{0.5, 10.0};
    for (double t = 1.0; t <= 5.0; t += 1.0) CHECK(accuracy_below(errors, t) == 50.0);
    CHECK(map5(errors) == 50.0);
  }

  TEST_CASE("all zero errors give 100 and empty input gives 0") {
    CHECK(map5(std::vector<double>(7, 0.0)) == 100.0);
    CHECK(map5(std::vector<double>{}) == 0.0);
  }

  TEST_CASE("thresholds are strict") {
    CHECK(map5(std::vector<double>{1.0}) == 80.0);
    CHECK(map5(std::vector<double>{5.0}) == 0.0);
  }

  TEST_CASE("map5 never drops when an error decreases") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 8.0);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<double> e(10);
      for (double& v : e) v = u(rng);
      const double before = map5(e);
      const std::size_t i = rng() % e.size();
      e[i] *= std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      REQUIRE(map5(e) >= before);
      REQUIRE(map5(e) <= 100.0);
    }
  }

  TEST_CASE("F-score is the harmonic mean of precision and recall") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<std::uint8_t> pred(50), truth(50);
      for (std::size_t i = 0; i < 50; ++i) {
        pred[i] = rng() % 2;
        truth[i] = rng() % 3 == 0;
      }
      ConfusionCounts c;
      c.add(pred, truth);
      const PrecisionRecall pr = precision_recall(c);
      if (pr.precision + pr.recall > 0.0)
        CHECK(pr.f_score == doctest::Approx(2.0 * pr.precision * pr.recall / (pr.precision + pr.recall)).epsilon(1e-14));
      else
        CHECK(pr.f_score == 0.0);
    }
    CHECK(precision_recall(ConfusionCounts{}).f_score == 0.0);
  }

  TEST_CASE("counts are micro-averaged") {
    ConfusionCounts a, b;
    a.add(std::vector<std::uint8_t>{1, 1, 0}, std::vector<std::uint8_t>{1, 0, 1});
    b.add(std::vector<std::uint8_t>{1}, std::vector<std::uint8_t>{1});
    a += b;
    CHECK(a.true_positive == 2);
    CHECK(a.false_positive == 1);
    CHECK(a.false_negative == 1);
    CHECK(a.true_negative == 0);
    CHECK(precision_recall(a).precision == doctest::Approx(200.0 / 3.0));
    CHECK_THROWS_AS(a.add(std::vector<std::uint8_t>{1}, std::vector<std::uint8_t>{1, 0}), DimensionError);
  }
}

TEST_SUITE("ransac") {
  TEST_CASE("noiseless inliers recover the pose to a tenth of a degree") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto view = testing::synthetic_view(seed, 100);
      RansacConfig cfg;
      cfg.iterations = 50;
      cfg.seed = seed;
      const RansacResult r = ransac_essential(view.corrs, cfg);
      REQUIRE(r.success);
      CHECK(r.inlier_count == 100);
      const auto err = geometry::pose_angular_errors(view.pose, geometry::decompose_essential(r.essential, view.corrs));
      CHECK(err.rotation_deg < 0.1);
      CHECK(err.translation_deg < 0.1);
    }
  }

  TEST_CASE("same seed gives the same mask") {
    const auto rec = dataset(3, 1, 0.5)[0];
    RansacConfig cfg;
    cfg.iterations = 200;
    cfg.seed = 17;
    const RansacResult a = ransac_essential(rec.normalized(), cfg), b = ransac_essential(rec.normalized(), cfg);
    CHECK(a.inliers == b.inliers);
    CHECK(a.essential.matrix() == b.essential.matrix());
  }

  TEST_CASE("seventy percent inliers give errors under five degrees on nine in ten seeds") {
    std::size_t good = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto rec = dataset(500 + seed, 1, 0.3)[0];
      RansacConfig cfg;
      cfg.seed = seed;
      const auto corrs = rec.normalized();
      const RansacResult r = ransac_essential(corrs, cfg);
      try {
        const auto err = geometry::pose_angular_errors(rec.pose(), geometry::decompose_essential(r.essential, corrs, &r.inliers));
        good += err.max() < 5.0;
      } catch (const DegenerateError&) {
      }
    }
    CHECK(good >= 45);
  }

  TEST_CASE("configuration and input contracts") {
    RansacConfig cfg;
    cfg.iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), ContractError);
    cfg = {};
    cfg.inlier_threshold = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ContractError);
    CHECK_THROWS_AS(ransac_essential(testing::synthetic_view(1, 7).corrs, RansacConfig{}), ContractError);
  }
}

TEST_SUITE("evaluation") {
  TEST_CASE("ground-truth predictor scores 100 everywhere") {
    const auto data = dataset(4, 6, 0.5);
    const EvalReport r = evaluate(data, oracle_predictor(data));
    CHECK(r.map5 == 100.0);
    CHECK(r.precision == 100.0);
    CHECK(r.recall == 100.0);
    CHECK(r.f_score == 100.0);
    REQUIRE(r.pairs.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) CHECK(r.pairs[i].pair_id == data[i].pair_id);
  }

  TEST_CASE("report json carries the documented keys") {
    const auto data = dataset(4, 2, 0.5);
    const nlohmann::json j = evaluate(data, oracle_predictor(data)).to_json();
    for (const char* key : {"map5", "precision", "recall", "f_score", "pairs", "config"}) CHECK(j.contains(key));
    REQUIRE(j["pairs"].size() == 2);
    for (const char* key : {"pair_id", "err_r_deg", "err_t_deg"}) CHECK(j["pairs"][0].contains(key));
  }

  TEST_CASE("dataset order changes no number") {
    auto data = dataset(5, 12, 0.5);
    RansacConfig cfg;
    cfg.iterations = 100;
    const EvalReport a = evaluate(data, ransac_predictor(cfg));
    std::mt19937_64 rng(3);
    std::shuffle(data.begin(), data.end(), rng);
    const EvalReport b = evaluate(data, ransac_predictor(cfg));
    CHECK(a.map5 == b.map5);
    CHECK(a.precision == b.precision);
    CHECK(a.recall == b.recall);
    CHECK(a.f_score == b.f_score);
    for (const auto& pa : a.pairs) {
      const auto it = std::find_if(b.pairs.begin(), b.pairs.end(), [&](const PairResult& p) { return p.pair_id == pa.pair_id; });
      REQUIRE(it != b.pairs.end());
      CHECK(it->err_r_deg == pa.err_r_deg);
      CHECK(it->err_t_deg == pa.err_t_deg);
    }
  }

  TEST_CASE("RANSAC post-processing ignores correspondences outside the positive set") {
    // Scrambling every non-positive correspondence must not change any pose error.
    const auto data = dataset(6, 5, 0.5);
    auto scrambled = data;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> px(0.0, 640.0);
    for (auto& rec : scrambled)
      for (std::size_t i = 0; i < rec.corrs.size(); ++i)
        if (!rec.labels[i])
          for (double& v : rec.corrs[i]) v = px(rng);

    // Positives = ground-truth labels, E deliberately wrong so the post step matters.
    const auto by_labels = [](const std::vector<datagen::DatasetRecord>& d) {
      return [&d](const geometry::CorrespondenceSet& corrs, std::uint64_t) {
        for (const auto& rec : d)
          if (rec.normalized().points == corrs.points)
            return Prediction{geometry::EssentialMatrix(geometry::Mat3::Identity()), rec.labels};
        throw ContractError("unknown pair");
      };
    };
    EvalOptions opt;
    opt.ransac_post = true;
    opt.ransac.iterations = 200;
    const EvalReport a = evaluate(data, by_labels(data), opt);
    const EvalReport b = evaluate(scrambled, by_labels(scrambled), opt);
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
      CHECK(a.pairs[i].err_r_deg == b.pairs[i].err_r_deg);
      CHECK(a.pairs[i].err_t_deg == b.pairs[i].err_t_deg);
    }
    CHECK(a.map5 > 90.0);
  }

  TEST_CASE("unrecoverable pose scores 180 degrees") {
    const auto data = dataset(7, 2, 0.5);
    const Predictor zero = [](const geometry::CorrespondenceSet& corrs, std::uint64_t) {
      geometry::Mat3 e = geometry::Mat3::Zero();
      e(0, 0) = 1.0;  // rank one: no candidate pose
      return Prediction{geometry::EssentialMatrix(e), std::vector<std::uint8_t>(corrs.size(), 0)};
    };
    const EvalReport r = evaluate(data, zero);
    CHECK(r.map5 == 0.0);
    CHECK(r.precision == 0.0);
    CHECK(r.f_score == 0.0);
  }

  TEST_CASE("empty dataset is rejected") {
    CHECK_THROWS_AS(evaluate({}, ransac_predictor({})), ContractError);
  }

  TEST_CASE("pair seeds depend on the id, not the position") {
    CHECK(pair_seed(0, "pair_000001") == pair_seed(0, "pair_000001"));
    CHECK(pair_seed(0, "pair_000001") != pair_seed(0, "pair_000002"));
    CHECK(pair_seed(0, "pair_000001") != pair_seed(1, "pair_000001"));
  }
}

TEST_SUITE("training") {
  TEST_CASE("one epoch writes a checkpoint that reloads to the same evaluation") {
    const auto train_set = dataset(8, 10, 0.5), val_set = dataset(9, 4, 0.5);
    model::FNNet net(small_config(1));
    TrainOptions opt;
    opt.epochs = 1;
    opt.checkpoint = temp_path("one_epoch.json");
    const auto logs = train(net, train_set, val_set, opt);
    REQUIRE(logs.size() == 1);
    CHECK(logs[0].epoch == 1);

    const model::Checkpoint ck = model::load_checkpoint(opt.checkpoint);
    CHECK(ck.epoch == 1);
    EvalOptions eo;
    eo.ransac_post = true;
    const EvalReport a = evaluate(val_set, fnnet_predictor(net), eo);
    const EvalReport b = evaluate(val_set, fnnet_predictor(ck.model), eo);
    CHECK(a.to_json().dump() == b.to_json().dump());
    CHECK(a.f_score == logs[0].val_f_score);
    CHECK(a.map5 == logs[0].val_map5);
  }

  TEST_CASE("loss on a fixed record decreases over fifty steps") {
    model::FNNetConfig cfg = small_config(2);
    cfg.channels = 4;
    cfg.n_clusters = 2;
    model::FNNet net(cfg);
    const auto rec = dataset(10, 1, 0.5)[0];
    const auto corrs = rec.normalized();
    const auto e_gt = geometry::essential_from_pose(rec.pose());
    diff::Adam adam(diff::AdamConfig{.learning_rate = cfg.learning_rate});
    const auto params = net.parameters();
    std::vector<double> losses;
    for (int step = 0; step < 50; ++step) {
      diff::Graph g;
      const auto fwd = net.forward(g, corrs, diff::Mode::kTrain, true);
      const auto loss = model::fnnet_loss(fwd, rec.labels, e_gt, 0, cfg);
      losses.push_back(loss.total.value().item());
      net.zero_grad();
      g.backward(loss.total);
      adam.step(params);
    }
    CHECK(losses.back() < losses.front());
    CHECK(losses.back() < 0.9 * losses.front());
  }

  TEST_CASE("same seed gives identical logs and checkpoints") {
    const auto train_set = dataset(11, 8, 0.5), val_set = dataset(12, 3, 0.5);
    std::vector<std::string> runs[2];
    for (int run = 0; run < 2; ++run) {
      model::FNNet net(small_config(3));
      TrainOptions opt;
      opt.epochs = 2;
      opt.checkpoint = temp_path("det" + std::to_string(run) + ".json");
      opt.log = [&runs, run](const std::string& line) { runs[run].push_back(line); };
      (void)train(net, train_set, val_set, opt);
    }
    CHECK(runs[0] == runs[1]);
    CHECK(runs[0].size() == 2);
    CHECK(slurp(temp_path("det0.json")) == slurp(temp_path("det1.json")));
  }

  TEST_CASE("non-finite loss aborts and keeps the last good checkpoint") {
    const auto train_set = dataset(13, 4, 0.5), val_set = dataset(14, 2, 0.5);
    model::FNNet net(small_config(4));
    TrainOptions opt;
    opt.epochs = 3;
    opt.checkpoint = temp_path("nan.json");
    // After the first epoch, blow up the lift layer so the next forward overflows.
    opt.log = [&net](const std::string&) {
      for (diff::Parameter* p : net.parameters())
        if (p->name == "lift.w") p->value.fill(1e300);
    };
    CHECK_THROWS_AS(train(net, train_set, val_set, opt), NumericalError);
    const model::Checkpoint ck = model::load_checkpoint(opt.checkpoint);
    CHECK(ck.epoch == 1);
    for (const diff::Parameter* p : ck.model.parameters()) CHECK(p->value.all_finite());
  }

  TEST_CASE("empty inputs are rejected") {
    model::FNNet net(small_config(5));
    const auto some = dataset(15, 2, 0.5);
    CHECK_THROWS_AS(train(net, {}, some, {}), ContractError);
    CHECK_THROWS_AS(train(net, some, {}, {}), ContractError);
  }
}
