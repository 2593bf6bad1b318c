#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

// End-to-end checks against the installed binary: argument handling and the
// documented exit codes (0 ok, 1 usage/config, 2 data, 3 numeric).

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(SADD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

const char* kSmall =
    " --set data.n_train_videos=6 --set data.n_test_videos=4"
    " --set data.windows_per_video=2 --set arch.audio_sample_len=400"
    " --set arch.video_frames=4 --set arch.feature_dim=8"
    " --set \"arch.audio_blocks=4:9:4:0,6:5:2:1:4:4\""
    " --set \"arch.visual_blocks=2:3x3x3:1x2x2:0,3:1x3x3:1x1x1:0,4:2x3x3:1x1x1:1:1x2x2:1x2x2\""
    " --set train.epochs=1 --set train.batch_size=4";

fs::path temp_root() {
  const fs::path dir = fs::temp_directory_path() / "sadd_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("cli end to end") {
  const fs::path root = temp_root();
  const std::string data = (root / "data").string();
  const std::string runp = (root / "run").string();

  CHECK(run("--help") == 0);
  CHECK(run("") == 1);                    // missing subcommand
  CHECK(run("bogus-subcommand") == 1);    // unknown subcommand
  CHECK(run("generate") == 1);            // missing --out

  CHECK(run("generate --out " + data + " --seed 4" + kSmall) == 0);
  // refusing to overwrite is a config error
  CHECK(run("generate --out " + data + " --seed 4" + kSmall) == 1);
  CHECK(run("generate --out " + data + " --seed 4 --force" + kSmall) == 0);

  // bad config key
  CHECK(run("generate --out " + (root / "x").string() + " --set nope.key=1") == 1);

  CHECK(run("train --data " + data + " --out " + runp + kSmall) == 0);
  CHECK(run("eval --checkpoint " + runp + "/checkpoint.sadd --data " + data +
            " --out " + (root / "eval").string() + kSmall) == 0);
  CHECK(fs::exists(root / "eval" / "scores.csv"));

  // missing artifacts are data errors
  CHECK(run("eval --checkpoint " + runp + "/missing.sadd --data " + data +
            " --out " + (root / "eval2").string() + kSmall) == 2);
  CHECK(run("train --data " + (root / "no_data").string() + " --out " +
            (root / "run2").string() + kSmall) == 2);

  // hist with an unknown id is a data error
  CHECK(run("hist --checkpoint " + runp + "/checkpoint.sadd --data " + data +
            " --out " + (root / "hist").string() + " --ids zzz" + kSmall) == 2);
}
