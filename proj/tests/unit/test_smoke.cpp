#include <gtest/gtest.h>

#include <random>

#include "plumewatch/error.hpp"
#include "plumewatch/smoke.hpp"
#include "support.hpp"

using namespace plumewatch;
using pwtest::at;

namespace {

SmokeParams fixture_params() {
  SmokeParams p;
  p.bg_window = 128;  // twice the longest blob
  return p;
}

std::vector<SmokeFrameResult> run_scene(const pwtest::SmokeScene& scene, int frames, const SmokeParams& p) {
  SmokeDetector det(scene.width, scene.height, p);
  std::vector<SmokeFrameResult> out;
  for (int k = 0; k < frames; ++k) out.push_back(det.push(scene.frame(k)));
  return out;
}

Dataset fake_dataset(int frames, int w = 160, int h = 120) {
  Dataset ds;
  ds.id = "fake";
  ds.frame_width = w;
  ds.frame_height = h;
  for (int i = 0; i < frames; ++i) ds.frames.push_back({i, at("2015-08-03T12:00:00Z") + std::chrono::seconds(5 * i), ""});
  return ds;
}

std::vector<SmokeFrameResult> from_counts(const std::vector<int>& counts) {
  std::vector<SmokeFrameResult> r;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    SmokeFrameResult f;
    f.frame_index = static_cast<int>(i);
    f.smoke_pixel_count = counts[i];
    f.is_daytime = true;
    if (counts[i] > 0) f.component_boxes.push_back({10 + static_cast<int>(i), 20, 40 + static_cast<int>(i), 50});
    r.push_back(f);
  }
  return r;
}

}  // namespace

TEST(SmokeDetect, StaticSceneCountsNothing) {
  pwtest::SmokeScene scene;
  scene.noise = 0;
  for (const auto& r : run_scene(scene, 40, fixture_params())) {
    EXPECT_TRUE(r.is_daytime);
    EXPECT_EQ(r.smoke_pixel_count, 0);
  }
  pwtest::SmokeScene noisy;
  for (const auto& r : run_scene(noisy, 40, fixture_params())) EXPECT_EQ(r.smoke_pixel_count, 0);
}

TEST(SmokeDetect, NightFramesAreGated) {
  pwtest::SmokeScene black;
  black.background = {0, 0, 0};
  black.noise = 0;
  black.blobs = {{10, 30, 20, 20, 40}};
  pwtest::SmokeScene dusk;
  dusk.background = {12, 12, 18};
  dusk.blobs = {{10, 30, 20, 20, 40}};
  for (const auto* scene : {&black, &dusk}) {
    for (const auto& r : run_scene(*scene, 40, fixture_params())) {
      ASSERT_LE(mean_luminance(scene->frame(r.frame_index)), 50.0);
      EXPECT_FALSE(r.is_daytime);
      EXPECT_EQ(r.smoke_pixel_count, 0);
      EXPECT_TRUE(r.component_boxes.empty());
    }
  }
}

TEST(SmokeDetect, InjectedBlobCountsTrackGroundTruth) {
  pwtest::SmokeScene scene;
  scene.blobs = {{100, 150, 50, 30, 40}};
  const auto results = run_scene(scene, 170, fixture_params());
  for (const auto& r : results) {
    const int truth = scene.truth(r.frame_index);
    if (truth == 0) {
      EXPECT_EQ(r.smoke_pixel_count, 0) << r.frame_index;
    } else {
      EXPECT_GE(r.smoke_pixel_count, 0.9 * truth) << r.frame_index;
      EXPECT_LE(r.smoke_pixel_count, 1.0 * truth) << r.frame_index;
      ASSERT_EQ(r.component_boxes.size(), 1u);
      EXPECT_EQ(r.component_boxes[0], (PixelRect{50, 30, 90, 70}));
    }
  }
}

TEST(SmokeDetect, BlobAreaSweepAndMonotonicity) {
  int previous = 0;
  for (int side : {20, 30, 45, 60, 80}) {
    pwtest::SmokeScene scene;
    scene.seed = static_cast<std::uint32_t>(side);
    scene.blobs = {{64, 113, 160 - side - 5, 120 - side - 3, side}};
    const auto results = run_scene(scene, 120, fixture_params());
    const int truth = side * side;
    for (int k = 64; k <= 113; ++k) {
      ASSERT_GE(results[k].smoke_pixel_count, 0.9 * truth) << side << " @" << k;
      ASSERT_LE(results[k].smoke_pixel_count, 1.1 * truth) << side << " @" << k;
    }
    EXPECT_GE(results[80].smoke_pixel_count, previous);
    previous = results[80].smoke_pixel_count;
    for (int k : {0, 63, 114, 119}) EXPECT_EQ(results[k].smoke_pixel_count, 0) << side << " @" << k;
  }
}

TEST(SmokeDetect, SmallComponentsAndColouredBlobsAreIgnored) {
  pwtest::SmokeScene tiny;
  tiny.blobs = {{5, 10, 10, 10, 7}};  // 49 px < 64
  for (const auto& r : run_scene(tiny, 15, fixture_params())) EXPECT_EQ(r.smoke_pixel_count, 0);
  pwtest::SmokeScene red;
  red.blob_colour = {230, 40, 40};
  red.blobs = {{5, 10, 10, 10, 30}};
  for (const auto& r : run_scene(red, 15, fixture_params())) EXPECT_EQ(r.smoke_pixel_count, 0);
}

TEST(SmokeDetect, Deterministic) {
  pwtest::SmokeScene scene;
  scene.blobs = {{20, 30, 5, 5, 25}};
  const auto a = run_scene(scene, 40, fixture_params());
  const auto b = run_scene(scene, 40, fixture_params());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].smoke_pixel_count, b[i].smoke_pixel_count);
    EXPECT_EQ(a[i].component_boxes, b[i].component_boxes);
  }
}

TEST(SmokeParamsTest, ValidationAndConfig) {
  SmokeParams p;
  EXPECT_NO_THROW(p.validate());
  p.max_saturation = 1.5;
  EXPECT_THROW(p.validate(), ValidationError);
  const auto cfg = FlatConfig::parse("bg_window = 30\nevent_threshold = 100\n");
  const SmokeParams q = SmokeParams::from_config(cfg);
  EXPECT_EQ(q.bg_window, 30);
  EXPECT_EQ(q.event_threshold, 100);
  EXPECT_EQ(q.merge_gap, 12);
  try {
    SmokeParams::from_config(FlatConfig::parse("bg_windw = 30\n"));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.parameter(), "bg_windw");
  }
  EXPECT_THROW(SmokeParams::from_config(FlatConfig::parse("min_event_frames = 0\n")), ValidationError);
}

TEST(SmokeSegment, HandExamples) {
  const std::vector<int> a = {0, 0, 600, 700, 650, 0, 0};
  EXPECT_EQ(segment_runs(a, 500, 3, 1), (std::vector<FrameRun>{{2, 4}}));
  const std::vector<int> b = {600, 600};
  EXPECT_TRUE(segment_runs(b, 500, 3, 12).empty());
  std::vector<int> c(20, 0);
  for (int i : {2, 3, 4, 10, 11, 12}) c[i] = 900;  // gap of 5
  EXPECT_EQ(segment_runs(c, 500, 3, 12), (std::vector<FrameRun>{{2, 12}}));
  EXPECT_EQ(segment_runs(c, 500, 3, 5), (std::vector<FrameRun>{{2, 4}, {10, 12}}));
  EXPECT_EQ(segment_runs(c, 500, 3, 6), (std::vector<FrameRun>{{2, 12}}));

  SmokeParams p;
  p.event_threshold = 500;
  p.min_event_frames = 3;
  p.merge_gap = 1;
  const auto events = segment_events(from_counts(a), fake_dataset(7), p);
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0].start_frame, 2);
  EXPECT_EQ(events[0].end_frame, 4);
  EXPECT_EQ(events[0].peak_count, 700);
}

TEST(SmokeSegment, MatchesRunLengthOracleOnRandomSequences) {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = std::uniform_int_distribution<int>(0, 80)(rng);
    const int t = std::uniform_int_distribution<int>(1, 1000)(rng);
    const int m = std::uniform_int_distribution<int>(1, 6)(rng);
    const int g = std::uniform_int_distribution<int>(1, 14)(rng);
    const double p_above = std::uniform_real_distribution<double>(0.05, 0.9)(rng);
    std::vector<int> counts(n);
    for (int& c : counts) {
      c = std::bernoulli_distribution(p_above)(rng) ? std::uniform_int_distribution<int>(t, 2 * t)(rng)
                                                    : std::uniform_int_distribution<int>(0, t - 1)(rng);
    }
    const auto got = segment_runs(counts, t, m, g);
    ASSERT_EQ(got, pwtest::runs_oracle(counts, t, m, g)) << "trial " << trial;

    // conservation: every above-threshold frame is in exactly one event or a dropped short run
    for (int i = 0; i < n; ++i) {
      if (counts[i] < t) continue;
      int owners = 0;
      for (const auto& r : got) owners += (i >= r.start && i <= r.end);
      ASSERT_LE(owners, 1);
    }
  }
}

TEST(SmokeSegment, EventThumbnailsAreValidAndClamped) {
  std::mt19937 rng(5);
  const Dataset ds = fake_dataset(400, 200, 100);
  SmokeParams p;
  p.event_threshold = 10;
  p.min_event_frames = 1;
  p.merge_gap = 1;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<SmokeFrameResult> results;
    for (int i = 0; i < 400; ++i) {
      SmokeFrameResult f;
      f.frame_index = i;
      f.is_daytime = true;
      if (i >= 50 && i < 50 + trial) {
        const int l = std::uniform_int_distribution<int>(0, 199)(rng);
        const int tp = std::uniform_int_distribution<int>(0, 99)(rng);
        const PixelRect b{l, tp, std::uniform_int_distribution<int>(l + 1, 200)(rng),
                          std::uniform_int_distribution<int>(tp + 1, 100)(rng)};
        f.component_boxes.push_back(b);
        f.smoke_pixel_count = std::max(10, b.width() * b.height());
      }
      results.push_back(f);
    }
    const auto events = segment_events(results, ds, p);
    ASSERT_EQ(events.size(), trial == 0 ? 0u : 1u);
    for (const auto& e : events) {
      EXPECT_NO_THROW(validate_against(e.thumbnail, ds));
      EXPECT_EQ(e.thumbnail.origin, Origin::algorithm);
      EXPECT_EQ(e.thumbnail.nframes, std::min(trial, 240));
      EXPECT_EQ(e.thumbnail.fps, 12);
      EXPECT_EQ(e.thumbnail.out_width, 320);
      EXPECT_EQ(e.thumbnail.out_height, 240);
    }
  }
}

TEST(SmokeSegment, BoundsArePaddedUnion) {
  SmokeFrameResult a, b;
  a.component_boxes = {{50, 40, 70, 50}};
  b.component_boxes = {{60, 30, 90, 45}};
  const SmokeFrameResult members[] = {a, b};
  // union (50,30)-(90,50): 40x20, padding 4 and 2
  EXPECT_EQ(event_bounds(members, 200, 100), (PixelRect{46, 28, 94, 52}));
  EXPECT_EQ(event_bounds(members, 92, 51), (PixelRect{46, 28, 92, 51}));
}

TEST(SmokeEvents, DetectionPersistsAndListsChronologically) {
  pwtest::TempDir tmp;
  const DataRoot root(tmp / "root");
  pwtest::SmokeScene scene;
  scene.blobs = {{70, 85, 100, 60, 30}, {20, 35, 10, 10, 30}};
  pwtest::write_frames(tmp / "src", 100, at("2015-08-03T12:00:00Z"), 5, [&](int k) { return scene.frame(k); });
  ingest_frames(root, "two", tmp / "src");
  EXPECT_TRUE(list_event_thumbnails(root, "two").empty());
  EXPECT_TRUE(load_frame_results(root, "two").empty());

  SmokeParams p = fixture_params();
  p.bg_window = 64;
  const DetectionRun run = run_detection(root, "two", p);
  ASSERT_EQ(run.events.size(), 2u);
  EXPECT_EQ(run.events[0].start_frame, 20);
  EXPECT_EQ(run.events[0].end_frame, 35);
  EXPECT_EQ(run.events[1].start_frame, 70);
  EXPECT_EQ(run.events[1].end_frame, 85);

  const auto listed = list_event_thumbnails(root, "two");
  ASSERT_EQ(listed.size(), 2u);
  EXPECT_LT(listed[0].second.start_frame, listed[1].second.start_frame);
  for (const auto& [url, ev] : listed) {
    EXPECT_NE(url.find("origin=algorithm"), std::string::npos);
    EXPECT_EQ(decode_url(url), ev.thumbnail);
  }
  const auto reloaded = load_frame_results(root, "two");
  ASSERT_EQ(reloaded.size(), 100u);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(reloaded[i].smoke_pixel_count, run.frames[i].smoke_pixel_count);

  // bg_window must be smaller than the frame count
  p.bg_window = 100;
  EXPECT_THROW(run_detection(root, "two", p), ValidationError);
}

TEST(SmokeEvents, QuietDatasetHasNoEvents) {
  pwtest::TempDir tmp;
  const DataRoot root(tmp / "root");
  pwtest::SmokeScene scene;
  pwtest::write_frames(tmp / "src", 10, at("2015-08-03T12:00:00Z"), 5, [&](int k) { return scene.frame(k); });
  ingest_frames(root, "quiet", tmp / "src");
  SmokeParams p;
  p.bg_window = 5;
  EXPECT_TRUE(run_detection(root, "quiet", p).events.empty());
  EXPECT_TRUE(list_event_thumbnails(root, "quiet").empty());
}
