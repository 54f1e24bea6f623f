#include <gtest/gtest.h>

#include <fstream>

#include "plumewatch/error.hpp"
#include "plumewatch/timelapse.hpp"
#include "support.hpp"

using namespace plumewatch;
using pwtest::at;
namespace fs = std::filesystem;

namespace {

Dataset ingest_pattern(const DataRoot& root, const std::string& id, const pwtest::TempDir& tmp, int w,
                       int h, int n, std::uint32_t seed = 1) {
  const auto dir = tmp / ("src-" + id);
  pwtest::write_frames(dir, n, at("2015-08-03T12:00:00Z"), 5,
                       [&](int k) { return pwtest::pattern_frame(w, h, k, seed); });
  return ingest_frames(root, id, dir);
}

}  // namespace

TEST(Ingest, ThreeFramesFiveSecondsApart) {
  pwtest::TempDir tmp;
  const DataRoot root(tmp / "root");
  const Dataset ds = ingest_pattern(root, "d1", tmp, 8, 6, 3);
  EXPECT_EQ(ds.frame_count(), 3);
  EXPECT_DOUBLE_EQ(ds.capture_interval_s, 5.0);
  EXPECT_TRUE(ds.gaps.empty());
  EXPECT_EQ(ds.frame_width, 8);
  EXPECT_EQ(format_date(ds.capture_date), "2015-08-03");
  EXPECT_EQ(ds.frames[2].capture_time, at("2015-08-03T12:00:10Z"));
  EXPECT_TRUE(fs::exists(root.frames_dir("d1") / "20150803T120010Z.png"));

  const Dataset loaded = root.load_dataset("d1");
  EXPECT_EQ(loaded.frame_count(), 3);
  EXPECT_EQ(loaded.frames[1].file, ds.frames[1].file);
  EXPECT_EQ(root.list_datasets(), std::vector<std::string>{"d1"});
  EXPECT_EQ(root.read_frame(loaded, 1), pwtest::pattern_frame(8, 6, 1, 1));
}

TEST(Ingest, FullDayAtFiveSecondCadence) {
  // 24 h at one frame per 5 s is 17,280 frames.
  pwtest::TempDir tmp;
  const DataRoot root(tmp / "root");
  const Image tiny(2, 2, {50, 60, 70});
  pwtest::write_frames(tmp / "day", 17280, at("2015-08-03T00:00:00Z"), 5, [&](int) { return tiny; });
  const Dataset ds = ingest_frames(root, "day", tmp / "day");
  EXPECT_EQ(ds.frame_count(), 17280);
  EXPECT_DOUBLE_EQ(ds.capture_interval_s, 5.0);
  EXPECT_EQ(ds.frames.back().capture_time, at("2015-08-03T23:59:55Z"));
  EXPECT_EQ(format_date(ds.capture_date), "2015-08-03");
}

TEST(Ingest, MixedDimensionsNameTheOddFile) {
  pwtest::TempDir tmp;
  const auto dir = tmp / "mixed";
  pwtest::write_frames(dir, 3, at("2015-08-03T12:00:00Z"), 5, [](int) { return Image(192, 108); });
  write_png(dir / "20150803T120015Z.png", Image(64, 48));
  try {
    ingest_frames(DataRoot(tmp / "root"), "mixed", dir);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("20150803T120015Z.png"), std::string::npos) << e.what();
  }
}

TEST(Ingest, RejectsUnparsableNamesAndEmptyDirs) {
  pwtest::TempDir tmp;
  const DataRoot root(tmp / "root");
  fs::create_directories(tmp / "empty");
  EXPECT_THROW(ingest_frames(root, "e", tmp / "empty"), ValidationError);

  pwtest::write_frames(tmp / "bad", 2, at("2015-08-03T12:00:00Z"), 5, [](int) { return Image(4, 4); });
  write_png(tmp / "bad" / "holiday.png", Image(4, 4));
  try {
    ingest_frames(root, "bad", tmp / "bad");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("holiday.png"), std::string::npos);
  }
  EXPECT_THROW(ingest_frames(root, "../escape", tmp / "bad"), ValidationError);
  EXPECT_THROW(ingest_frames(root, "x", tmp / "nope"), IoError);
  EXPECT_FALSE(root.has_dataset("bad"));
}

TEST(Ingest, MedianIntervalAndMissingFrameAnnotations) {
  pwtest::TempDir tmp;
  const auto dir = tmp / "gappy";
  const Image img(4, 4);
  const Timestamp t0 = at("2015-08-03T12:00:00Z");
  fs::create_directories(dir);
  for (int s : {0, 5, 10, 15, 35, 40, 45}) {
    write_png(dir / (format_iso8601_basic(t0 + std::chrono::seconds(s)) + ".png"), img);
  }
  const Dataset ds = ingest_frames(DataRoot(tmp / "root"), "gappy", dir);
  EXPECT_DOUBLE_EQ(ds.capture_interval_s, 5.0);
  ASSERT_EQ(ds.gaps.size(), 1u);
  EXPECT_EQ(ds.gaps[0].after_index, 3);
  EXPECT_EQ(ds.gaps[0].gap_s, 20);
  EXPECT_EQ(ds.gaps[0].missing_frames, 3);
}

TEST(Ingest, JpegFramesAreAccepted) {
  pwtest::TempDir tmp;
  pwtest::write_frames(tmp / "j", 2, at("2015-08-03T12:00:00Z"), 5, [](int) { return Image(16, 8, {90, 90, 90}); },
                       ".jpg");
  const Dataset ds = ingest_frames(DataRoot(tmp / "root"), "j", tmp / "j");
  EXPECT_EQ(ds.frame_count(), 2);
  EXPECT_EQ(ds.frames[0].file, "20150803T120000Z.jpg");
}

TEST(FrameIndex, FloorSemanticsAndClamp) {
  Dataset ds;
  for (int i = 0; i < 10; ++i) ds.frames.push_back({i, at("2015-08-03T12:00:00Z") + std::chrono::seconds(5 * i), ""});
  const Timestamp f7 = ds.frames[7].capture_time;
  EXPECT_EQ(frame_index_at(ds, f7), 7);
  EXPECT_EQ(frame_index_at(ds, f7 + std::chrono::seconds(2)), 7);
  EXPECT_EQ(frame_index_at(ds, at("2015-08-03T11:00:00Z")), 0);
  EXPECT_EQ(frame_index_at(ds, at("2015-08-04T00:00:00Z")), 9);
  int prev = 0;
  for (int s = -20; s < 80; ++s) {
    const int i = frame_index_at(ds, at("2015-08-03T12:00:00Z") + std::chrono::seconds(s));
    EXPECT_GE(i, prev);
    prev = i;
  }
}

TEST(Pyramid, GeometryFromTheInvariantFormulas) {
  const auto a = TilePyramid::plan("a", 1920, 1080, 512);
  EXPECT_EQ(a.num_levels, 3);
  EXPECT_EQ(a.cols(2), 4);
  EXPECT_EQ(a.rows(2), 3);
  EXPECT_EQ(a.cols(0), 1);
  EXPECT_EQ(a.rows(0), 1);
  EXPECT_EQ(a.scale(0), 4);
  EXPECT_EQ(a.level_width(0), 480);
  EXPECT_EQ(a.level_height(0), 270);

  const auto b = TilePyramid::plan("b", 512, 512, 512);
  EXPECT_EQ(b.num_levels, 1);
  EXPECT_EQ(b.cols(0), 1);
  EXPECT_EQ(b.rows(0), 1);

  const auto c = TilePyramid::plan("c", 4000, 3000, 512);
  EXPECT_EQ(c.num_levels, 4);
  EXPECT_EQ(c.cols(3), 8);
  EXPECT_EQ(c.rows(3), 6);

  const auto d = TilePyramid::plan("d", 513, 10, 512);
  EXPECT_EQ(d.num_levels, 2);
  EXPECT_THROW(TilePyramid::plan("e", 10, 10, 0), ValidationError);
}

TEST(Pyramid, NativeMosaicAndLevelsMatchOracles) {
  pwtest::TempDir tmp;
  const DataRoot root(tmp / "root");
  // odd sizes exercise black padding at every level
  const Dataset ds = ingest_pattern(root, "p", tmp, 101, 67, 5, 3);
  const TilePyramid pyr = build_pyramid(root, "p", 32, 2);
  ASSERT_EQ(pyr.num_levels, 3);
  EXPECT_EQ(load_pyramid(root, "p").segment_length, 2);

  for (int f = 0; f < ds.frame_count(); ++f) {
    Image expected = root.read_frame(ds, f);
    for (int level = pyr.num_levels - 1; level >= 0; --level) {
      const int ts = pyr.tile_size;
      for (int r = 0; r < pyr.rows(level); ++r) {
        for (int c = 0; c < pyr.cols(level); ++c) {
          const TileClip clip = get_tile(root, {"p", level, r, c, f, 1});
          ASSERT_EQ(clip.frames.size(), 1u);
          const Image& tile = clip.frames[0];
          for (int y = 0; y < ts; ++y) {
            for (int x = 0; x < ts; ++x) {
              const int gx = c * ts + x, gy = r * ts + y;
              const Rgb want = gx < expected.width() && gy < expected.height() ? expected.at(gx, gy) : Rgb{};
              ASSERT_EQ(tile.at(x, y), want) << "frame " << f << " level " << level << " tile " << r << "_" << c;
            }
          }
        }
      }
      expected = pwtest::box_halve_oracle(expected);
    }
  }
}

TEST(Pyramid, ClipsSpanSegmentsAndRoundTripThroughTheWireFormat) {
  pwtest::TempDir tmp;
  const DataRoot root(tmp / "root");
  ingest_pattern(root, "s", tmp, 40, 30, 7);
  build_pyramid(root, "s", 16, 3);
  const TileClip clip = get_tile(root, {"s", 2, 1, 2, 1, 5});
  ASSERT_EQ(clip.frames.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(clip.frames[i], get_tile(root, {"s", 2, 1, 2, 1 + i, 1}).frames[0]);

  const auto bytes = encode_tile_clip(clip);
  const TileClip back = decode_tile_clip(bytes);
  EXPECT_EQ(back.tile_size, 16);
  EXPECT_EQ(back.address.level, 2);
  EXPECT_EQ(back.address.row, 1);
  EXPECT_EQ(back.address.col, 2);
  EXPECT_EQ(back.address.frame_start, 1);
  EXPECT_EQ(back.frames, clip.frames);

  // the on-disk segment is readable by an independent reader of the documented layout
  pwtest::SegmentReader seg(root.tiles_dir("s") / "2" / "1_2" / "1.bin");
  EXPECT_EQ(seg.tile_size(), 16u);
  EXPECT_EQ(seg.frame_start(), 3u);
  EXPECT_EQ(seg.frame_count(), 3u);
  EXPECT_EQ(seg.next(), clip.frames[2]);
}

TEST(Pyramid, OutOfRangeAddressesAreNotFound) {
  pwtest::TempDir tmp;
  const DataRoot root(tmp / "root");
  ingest_pattern(root, "o", tmp, 40, 30, 3);
  EXPECT_THROW(get_tile(root, {"o", 0, 0, 0, 0, 1}), NotFoundError);  // not built yet
  build_pyramid(root, "o", 16);
  EXPECT_THROW(get_tile(root, {"o", 2, 2, 0, 0, 1}), NotFoundError);
  EXPECT_THROW(get_tile(root, {"o", 3, 0, 0, 0, 1}), NotFoundError);
  EXPECT_THROW(get_tile(root, {"o", 2, 0, 3, 0, 1}), NotFoundError);
  EXPECT_THROW(get_tile(root, {"o", 2, 0, 0, 2, 2}), NotFoundError);
  EXPECT_THROW(build_pyramid(root, "unknown", 16), NotFoundError);
  EXPECT_THROW(decode_tile_clip(std::vector<std::uint8_t>{1, 2, 3}), IoError);
}

TEST(Pyramid, BuildIsDeterministic) {
  pwtest::TempDir tmp;
  const DataRoot root(tmp / "root");
  ingest_pattern(root, "det", tmp, 50, 20, 3);
  build_pyramid(root, "det", 16);
  const auto first = encode_tile_clip(get_tile(root, {"det", 2, 0, 1, 0, 3}));
  build_pyramid(root, "det", 16);
  EXPECT_EQ(encode_tile_clip(get_tile(root, {"det", 2, 0, 1, 0, 3})), first);
}
