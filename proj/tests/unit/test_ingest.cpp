#include <doctest.h>

#include <fstream>
#include <random>

#include "helpers.hpp"
#include "tailtopo/csv.hpp"
#include "tailtopo/error.hpp"
#include "tailtopo/ingest.hpp"

using namespace tailtopo;
namespace fs = std::filesystem;

namespace {
void write(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}
}  // namespace

TEST_CASE("signal panel shape passthrough") {
  const auto dir = testutil::tmp_dir("ingest_shape");
  std::string body = "a,b,c\n";
  for (int t = 0; t < 1000; ++t) body += std::to_string(t) + "," + std::to_string(-t) + ",0.5\n";
  write(dir / "s.csv", body);
  const auto p = load_signal_panel(dir / "s.csv", 256.0);
  CHECK(p.channels == std::vector<std::string>{"a", "b", "c"});
  CHECK(p.samples.rows() == 1000);
  CHECK(p.samples.cols() == 3);
  CHECK(p.samples(999, 1) == -999.0);
  CHECK(p.subject_id == "s");
}

TEST_CASE("NaN in signal cites its row") {
  const auto dir = testutil::tmp_dir("ingest_nan");
  std::string body = "a,b\n";
  for (int t = 1; t <= 10; ++t) body += (t == 7 ? std::string("1,NaN\n") : std::string("1,2\n"));
  write(dir / "s.csv", body);
  try {
    load_signal_panel(dir / "s.csv", 100.0);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 7") != std::string::npos);
    CHECK(msg.find("'b'") != std::string::npos);
  }
}

TEST_CASE("duplicate channel labels rejected") {
  const auto dir = testutil::tmp_dir("ingest_dup");
  write(dir / "s.csv", "F3,F3\n1,2\n3,4\n");
  CHECK_THROWS_AS(load_signal_panel(dir / "s.csv", 100.0), ValidationError);
}

TEST_CASE("malformed CSV reports the line") {
  const auto dir = testutil::tmp_dir("ingest_bad");
  write(dir / "s.csv", "a,b\n1,2\n3\n");
  try {
    load_signal_panel(dir / "s.csv", 100.0);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("feature panel loading") {
  const auto dir = testutil::tmp_dir("ingest_feat");
  std::mt19937_64 rng(5);
  const Matrix v = testutil::frechet_panel(rng, 2000, 12);
  BandPeriodogramPanel panel;
  panel.subject_id = "x";
  panel.band = BandSpec::standard(BandName::gamma);
  panel.channels = testutil::labels(12);
  panel.values = v;
  write_feature_panel(dir / "f.csv", panel);
  const auto back = load_feature_panel(dir / "f.csv");
  CHECK(back.values.rows() == 2000);
  CHECK(back.values.cols() == 12);
  CHECK(back.band.name == BandName::gamma);
  // bit-exact round trip
  CHECK((back.values.array() == v.array()).all());

  write(dir / "neg.csv", "# band=gamma\na,b\n1,2\n-1.0,3\n");
  CHECK_THROWS_AS(load_feature_panel(dir / "neg.csv"), ValidationError);

  write(dir / "empty.csv", "");
  CHECK_THROWS_AS(load_feature_panel(dir / "empty.csv"), ParseError);
}

TEST_CASE("round trip of awkward doubles") {
  const auto dir = testutil::tmp_dir("ingest_rt");
  BandPeriodogramPanel panel;
  panel.channels = {"a", "b", "c"};
  panel.band = BandSpec::standard(BandName::none);
  panel.values.resize(4, 3);
  panel.values << 0.1, 1.0 / 3.0, 5e-324, 1e308, 2.2250738585072014e-308, 123456789.123456789, 0.30000000000000004,
      std::nextafter(1.0, 2.0), 7.0, 1e-17, 9.999999999999999e22, 3.141592653589793;
  write_feature_panel(dir / "r.csv", panel);
  const auto back = load_feature_panel(dir / "r.csv");
  CHECK((back.values.array() == panel.values.array()).all());
}

TEST_CASE("manifest paths resolve against the manifest directory") {
  const auto dir = testutil::tmp_dir("ingest_manifest");
  fs::create_directories(dir / "sub");
  write(dir / "sub" / "m.csv", "subject_id,path,label\ns1,a.csv,1\ns2,b.csv,\n");
  const auto m = load_manifest(dir / "sub" / "m.csv");
  REQUIRE(m.size() == 2);
  CHECK(m[0].path == dir / "sub" / "a.csv");
  CHECK(m[0].label == 1);
  CHECK_FALSE(m[1].label.has_value());
  write(dir / "bad.csv", "subject_id,path,label\ns1,a.csv,0\n");
  CHECK_THROWS_AS(load_manifest(dir / "bad.csv"), ParseError);
}

TEST_CASE("partition parsing and resolution") {
  const auto p = ChannelPartition::parse("F3,F7:P3,P4");
  CHECK(p.x_channels == std::vector<std::string>{"F3", "F7"});
  CHECK(p.y_channels == std::vector<std::string>{"P3", "P4"});
  CHECK(p.to_string() == "F3,F7:P3,P4");
  CHECK_THROWS_AS(ChannelPartition::parse("F3,F7"), InvalidArgument);

  const std::vector<std::string> ch{"P3", "F3", "O1", "F7", "P4"};
  const auto r = resolve_partition(p, ch);
  CHECK(r.x_index == std::vector<Eigen::Index>{1, 3});
  CHECK(r.y_index == std::vector<Eigen::Index>{0, 4});
  CHECK_THROWS_AS(resolve_partition(ChannelPartition::parse("F3,XX:P3,P4"), ch), ValidationError);
  CHECK_THROWS_AS(resolve_partition(ChannelPartition::parse("F3,F7:F3,P4"), ch), ValidationError);
  CHECK_THROWS_AS(resolve_partition(ChannelPartition::parse("F3:P3,P4"), ch), ValidationError);
}

TEST_CASE("partition resolution is order-stable") {
  const std::vector<std::string> ch{"a", "b", "c", "d", "e", "f"};
  const auto r1 = resolve_partition(ChannelPartition::parse("a,c,e:b,d"), ch);
  const auto r2 = resolve_partition(ChannelPartition::parse("e,a,c:d,b"), ch);
  auto sorted = [](std::vector<Eigen::Index> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  CHECK(sorted(r1.x_index) == sorted(r2.x_index));
  CHECK(sorted(r1.y_index) == sorted(r2.y_index));
  CHECK(r2.x_index == std::vector<Eigen::Index>{4, 0, 2});
}

TEST_CASE("halves split") {
  const auto h = ChannelPartition::halves({"a", "b", "c", "d", "e"});
  CHECK(h.x_channels == std::vector<std::string>{"a", "b"});
  CHECK(h.y_channels == std::vector<std::string>{"c", "d", "e"});
}
