#include "cli/dispatch.hpp"
#include "cli/ingest.hpp"
#include "cli/run_config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace densityshape;
using namespace densityshape::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name)
{
  const fs::path dir = fs::temp_directory_path() / ("densityshape-unit-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string message_of(const std::function<void()>& f)
{
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

} // namespace

TEST(Ingest, PlainColumnWithCommentsAndBlanks)
{
  const auto r = ingest_text("# data\n3\n\n1.5\n  2 \n", "", "mem");
  EXPECT_EQ(r.n, 3u);
  EXPECT_EQ(r.min, 1.5);
  EXPECT_EQ(r.max, 3.0);
  EXPECT_EQ(r.column, "1");
}

TEST(Ingest, HeaderByNameAndCrlf)
{
  const auto r = ingest_text("\xEF\xBB\xBFid,value\r\n1,0.5\r\n2,0.5\r\n3,-1e-3\r\n", "value", "mem");
  EXPECT_EQ(r.n, 3u);
  EXPECT_EQ(r.duplicates, 1u);
  EXPECT_EQ(r.min, -1e-3);
  EXPECT_EQ(r.column, "value");
}

TEST(Ingest, HeaderDetectedAndIndexSelector)
{
  const auto r = ingest_text("a,b\n1,10\n2,20\n", "2", "mem");
  EXPECT_EQ(r.column, "b");
  EXPECT_EQ(r.max, 20.0);
  EXPECT_EQ(ingest_text("1,10\n2,20\n", "2", "mem").min, 10.0);
}

TEST(Ingest, ErrorsNameTheLine)
{
  EXPECT_EQ(message_of([] { ingest_text("1\n2\nx\n", "", "f.csv"); }),
            "f.csv: line 3: cannot parse 'x' as a finite real");
  EXPECT_EQ(message_of([] { ingest_text("1\ninf\n", "", "f.csv"); }),
            "f.csv: line 2: cannot parse 'inf' as a finite real");
  EXPECT_EQ(message_of([] { ingest_text("# nothing\n", "", "f.csv"); }), "f.csv: no observations");
  EXPECT_EQ(message_of([] { ingest_text("a\n1\n", "b", "f.csv"); }), "f.csv: no column named 'b'");
  EXPECT_FALSE(message_of([] { ingest_text("1,2\n3\n", "2", "f.csv"); }).empty());
  EXPECT_FALSE(message_of([] { ingest("/nonexistent/input.csv"); }).empty());
}

TEST(RunConfig, JsonRoundTrip)
{
  RunConfig c;
  c.command = "quantile-curves";
  c.input = "x.csv";
  c.seed = 99;
  c.alphas = { 0.1, 0.9 };
  c.target = 0.25;
  c.interval_lo = -1.0;
  c.h_values = { 0.1, 0.3 };
  const nlohmann::json j = c;
  const RunConfig back = j.get<RunConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_EQ(back.target, 0.25);
  EXPECT_FALSE(back.interval_hi.has_value());
  EXPECT_TRUE(j.at("interval_hi").is_null());
}

TEST(RunConfig, BandwidthPolicyParsing)
{
  EXPECT_EQ(BandwidthPolicy::parse("rot").kind, BandwidthPolicy::Kind::rot);
  const auto f = BandwidthPolicy::parse("fixed:0.25");
  EXPECT_EQ(f.kind, BandwidthPolicy::Kind::fixed);
  EXPECT_EQ(f.value, 0.25);
  EXPECT_EQ(BandwidthPolicy::parse(f.str()).value, 0.25);
  EXPECT_ANY_THROW(BandwidthPolicy::parse("fixed:-1"));
  EXPECT_ANY_THROW(BandwidthPolicy::parse("silverman"));
}

TEST(RunConfig, ValidationAndLists)
{
  RunConfig c;
  c.command = "bootstrap";
  c.input = "x";
  EXPECT_NO_THROW(validate(c));
  c.alphas = { 0.5, 1.0 };
  EXPECT_ANY_THROW(validate(c));
  c = {};
  c.command = "frobnicate";
  EXPECT_ANY_THROW(validate(c));
  EXPECT_EQ(parse_real_list("0.1, 0.2,3"), (std::vector<double>{ 0.1, 0.2, 3.0 }));
  EXPECT_ANY_THROW(parse_real_list("0.1,,x"));
}

TEST(Dispatch, ExcessMassOutputsAndRerun)
{
  const fs::path dir = scratch("em");
  std::ofstream(dir / "in.txt") << "0\n1\n";
  RunConfig c;
  c.command = "excess-mass";
  c.input = (dir / "in.txt").string();
  c.output = (dir / "a").string();
  c.curve_points = 8;
  const RunOutcome out = dispatch(c);
  EXPECT_EQ(out.summary.at("delta"), 0.5);
  EXPECT_TRUE(fs::exists(dir / "a" / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "a" / "manifest.json"));
  for (const auto& f : out.files)
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;

  RunConfig again = load_config((dir / "a" / "manifest.json").string());
  again.output = (dir / "b").string();
  dispatch(again);
  for (const auto& f : out.files)
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST(Dispatch, ErrorsCarryTheirStage)
{
  const fs::path dir = scratch("err");
  std::ofstream(dir / "bad.txt") << "1\noops\n";
  RunConfig c;
  c.command = "modes";
  c.input = (dir / "bad.txt").string();
  c.output = (dir / "out").string();
  try {
    dispatch(c);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage, "ingest");
  }
  std::ostringstream out, err;
  EXPECT_EQ(run_and_report(c, out, err), 1);
  const auto doc = nlohmann::json::parse(err.str());
  EXPECT_EQ(doc.at("error").at("stage"), "ingest");
  EXPECT_TRUE(fs::exists(dir / "out" / "error.json"));
}

TEST(Dispatch, CsvRealsRoundTrip)
{
  for (double v : { 0.1, 1.0 / 3.0, -2.5e-300, 12345678.9 })
    EXPECT_EQ(std::stod(csv_real(v)), v);
}
