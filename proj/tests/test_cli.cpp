#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "run_config.hpp"
#include "tamed/errors.hpp"

namespace tamed::cli {
namespace {

namespace fs = std::filesystem;

constexpr std::string_view kMinimal = R"(
problem = "example1"
command = "converge"
levels = [8..13]
reference_level = 16
seed = 42
)";

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("tamed-cli-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string prefix(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, std::string_view text) const {
    std::ofstream(path_ / name) << text;
    return (path_ / name).string();
  }

 private:
  fs::path path_;
};

int invoke(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "tamed");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return code;
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

TEST(ParseConfig, MinimalConfigGetsDefaults) {
  const RunConfig c = parse_config(kMinimal);
  EXPECT_EQ(c.problem, "example1");
  EXPECT_EQ(c.command, Command::Converge);
  EXPECT_EQ(c.levels, (std::vector<int>{8, 9, 10, 11, 12, 13}));
  EXPECT_EQ(c.reference_level, 16);
  EXPECT_EQ(c.master_seed, 42u);
  EXPECT_EQ(c.q_list, std::vector<double>{2.0});
  EXPECT_EQ(c.paths, 10000u);
  EXPECT_EQ(c.worker_count, 0u);
  EXPECT_EQ(c.resolved_scheme(), SchemeKind::TamedMilsteinContinuous);
}

TEST(ParseConfig, LevelAtOrAboveReferenceRejected) {
  EXPECT_THROW(parse_config(R"(problem = "example1"
command = "converge"
levels = [8, 16]
reference_level = 16
seed = 1)"),
               ConfigError);
}

TEST(ParseConfig, SeparationGuard) {
  try {
    parse_config(R"(problem = "example1"
command = "converge"
levels = [8..13]
reference_level = 15
seed = 1)");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("reference_level"), std::string::npos);
  }
}

TEST(ParseConfig, FiveNormColumns) {
  const RunConfig c = parse_config(std::string(kMinimal) + "q_list = [1,2,3,4,5]\n");
  EXPECT_EQ(c.q_list, (std::vector<double>{1, 2, 3, 4, 5}));
}

TEST(ParseConfig, UnknownKeyIsNamed) {
  try {
    parse_config(std::string(kMinimal) + "step_size = 0.1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("step_size"), std::string::npos);
  }
}

TEST(ParseConfig, MissingKeysAreListed) {
  try {
    parse_config("command = \"converge\"\nlevels = [3]\n");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (const char* key : {"problem", "seed", "reference_level"}) {
      EXPECT_NE(msg.find(key), std::string::npos) << key;
    }
    EXPECT_EQ(msg.find("levels"), std::string::npos);
  }
}

TEST(ParseConfig, SectionsApplyToMatchingCommand) {
  const std::string text = std::string(kMinimal) + R"(
[converge]
paths = 500   # converge only
[moments]
paths = 7
p = 4
)";
  const RunConfig converge = parse_config(text);
  EXPECT_EQ(converge.paths, 500u);
  EXPECT_EQ(converge.p, 2.0);
  const RunConfig moments = parse_config(text, Command::Moments);
  EXPECT_EQ(moments.command, Command::Moments);
  EXPECT_EQ(moments.paths, 7u);
  EXPECT_EQ(moments.p, 4.0);
}

TEST(ParseConfig, ValueTypesAndGuards) {
  const std::string base = R"(problem = "example2-uniform-λ3"
command = "simulate"
levels = [2, 4]
seed = 18446744073709551615
scheme = "tamed-euler"
threads = 3
out = "run/a"
initial_value = 2.5
)";
  const RunConfig c = parse_config(base);
  EXPECT_EQ(c.master_seed, 18446744073709551615ull);
  EXPECT_EQ(c.scheme, SchemeKind::TamedEuler);
  EXPECT_EQ(c.worker_count, 3u);
  EXPECT_EQ(c.output_prefix, "run/a");
  EXPECT_EQ(c.initial_value, 2.5);
  EXPECT_THROW(parse_config(base + "paths = 0\n"), ConfigError);
  EXPECT_THROW(parse_config(base + "paths = 1.5\n"), ConfigError);
  EXPECT_THROW(parse_config(base + "q_list = [0.5]\n"), ConfigError);
  EXPECT_THROW(parse_config(base + "levels = [2]\n"), ConfigError);  // duplicate
  EXPECT_THROW(parse_config(base + "problem2 = 1\n"), ConfigError);
  EXPECT_THROW(parse_config(base + "[bogus]\n"), ConfigError);
  EXPECT_THROW(parse_config("problem = \"nope\"\ncommand = \"check\"\nseed = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("problem = \"example1\"\ncommand = \"simulate\"\nlevels = [0]\nseed = 1\n"),
               ConfigError);
  EXPECT_THROW(parse_config("problem = \"example1\"\ncommand = \"simulate\"\nlevels = [31]\nseed = 1\n"),
               ConfigError);
  EXPECT_THROW(parse_config("problem = \"example1\"\ncommand = \"fly\"\nseed = 1\n"), ConfigError);
}

TEST(Run, ConvergeWritesExpectedRows) {
  TempDir dir;
  RunConfig c = parse_config(R"(problem = "example1"
command = "converge"
levels = [3..8]
reference_level = 11
seed = 42
paths = 200
q_list = [1, 2]
)");
  c.output_prefix = dir.prefix("ex1");
  std::ostringstream out, log;
  EXPECT_EQ(run(c, out, log), 0);
  const std::string errors = read_file(dir.prefix("ex1") + "_errors.csv");
  const std::string rates = read_file(dir.prefix("ex1") + "_rates.csv");
  EXPECT_EQ(count_lines(errors), 1u + 6u * 2u);
  EXPECT_EQ(errors.substr(0, errors.find('\n')),
            "level,h,q,error,half_width,paths,diverged,log2_h,log2_error");
  EXPECT_EQ(count_lines(rates), 3u);
  EXPECT_EQ(rates.substr(0, rates.find('\n')), "q,slope,intercept,r_squared");
  EXPECT_NE(errors.find("\n3,1.2500000000000000e-01,1.0000000000000000e+00,"), std::string::npos);

  // Same configuration, same bytes.
  c.output_prefix = dir.prefix("again");
  EXPECT_EQ(run(c, out, log), 0);
  EXPECT_EQ(read_file(dir.prefix("again") + "_errors.csv"), errors);
  EXPECT_EQ(read_file(dir.prefix("again") + "_rates.csv"), rates);
}

TEST(Run, OutputsIndependentOfThreadCount) {
  TempDir dir;
  const std::string cfg = dir.write("c.cfg", R"(problem = "example2-normal-λ5"
levels = [3, 4, 5]
reference_level = 8
seed = 9
paths = 150
q_list = [1, 2, 3]
)");
  std::vector<std::string> outputs;
  for (const char* threads : {"1", "2", "8"}) {
    const std::string prefix = dir.prefix(std::string("t") + threads);
    ASSERT_EQ(invoke({"converge", "--config", cfg, "--threads", threads, "--out", prefix}), 0);
    outputs.push_back(read_file(prefix + "_errors.csv") + read_file(prefix + "_rates.csv"));
    ASSERT_EQ(invoke({"simulate", "--config", cfg, "--threads", threads, "--out", prefix}), 0);
    outputs.back() += read_file(prefix + "_paths.csv");
  }
  EXPECT_EQ(outputs[0], outputs[1]);
  EXPECT_EQ(outputs[0], outputs[2]);
}

TEST(Run, SimulateAndMomentsFiles) {
  TempDir dir;
  const std::string cfg = dir.write("c.cfg", R"(problem = "example1"
levels = [2, 3]
seed = 5
paths = 4
initial_value = 2.0
)");
  ASSERT_EQ(invoke({"simulate", "--config", cfg, "--out", dir.prefix("s")}), 0);
  const std::string paths = read_file(dir.prefix("s") + "_paths.csv");
  EXPECT_EQ(count_lines(paths), 1u + 4u * 2u);
  EXPECT_EQ(paths.substr(0, paths.find('\n')), "path,level,terminal_0,sup_norm,diverged");
  ASSERT_EQ(invoke({"moments", "--config", cfg, "--out", dir.prefix("m")}), 0);
  const std::string moments = read_file(dir.prefix("m") + "_moments.csv");
  EXPECT_EQ(count_lines(moments), 3u);
}

TEST(Run, SeedFlagOverridesConfig) {
  TempDir dir;
  const std::string cfg = dir.write("c.cfg", R"(problem = "example1"
levels = [3]
seed = 5
paths = 3
)");
  ASSERT_EQ(invoke({"simulate", "--config", cfg, "--out", dir.prefix("a")}), 0);
  ASSERT_EQ(invoke({"simulate", "--config", cfg, "--seed", "6", "--out", dir.prefix("b")}), 0);
  EXPECT_NE(read_file(dir.prefix("a") + "_paths.csv"), read_file(dir.prefix("b") + "_paths.csv"));
}

TEST(ExitCodes, CheckPassesOnBuiltins) {
  TempDir dir;
  for (const char* name : {"example1", "example2-uniform-λ3", "example2-normal-λ5"}) {
    const std::string cfg =
        dir.write("c.cfg", "problem = \"" + std::string(name) + "\"\nseed = 1\n");
    EXPECT_EQ(invoke({"check", "--config", cfg}), 0) << name;
  }
}

TEST(ExitCodes, ValidationRuntimeAndUsage) {
  TempDir dir;
  std::string err;
  const std::string bad = dir.write("bad.cfg", "problem = \"example1\"\nseed = 1\nlevels = [3]\n");
  EXPECT_EQ(invoke({"converge", "--config", bad}, &err), 1);
  EXPECT_NE(err.find("reference_level"), std::string::npos);
  EXPECT_EQ(invoke({"converge", "--config", dir.prefix("missing.cfg")}), 1);
  EXPECT_EQ(invoke({"converge"}), 1);
  EXPECT_EQ(invoke({"teleport", "--config", bad}), 1);
  EXPECT_EQ(invoke({"--help"}), 0);

  const std::string incompatible = dir.write("inc.cfg", R"(problem = "example2-normal-λ3"
levels = [3]
reference_level = 6
seed = 1
paths = 5
scheme = "tamed-milstein-continuous"
)");
  EXPECT_EQ(invoke({"converge", "--config", incompatible}, &err), 2);
  EXPECT_NE(err.find("jump-free"), std::string::npos);

  const std::string unwritable = dir.write("w.cfg", R"(problem = "example1"
levels = [3]
seed = 1
paths = 2
)");
  EXPECT_EQ(invoke({"simulate", "--config", unwritable, "--out",
                    (dir.path() / "no" / "such" / "dir" / "x").string()}),
            2);
}

}  // namespace
}  // namespace tamed::cli
