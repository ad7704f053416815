#pragma once

// Runs the driftgauge executable in a scratch directory and captures its
// exit status and output streams.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef DRIFTGAUGE_CLI
#error "DRIFTGAUGE_CLI must name the driftgauge executable"
#endif

namespace cli {

namespace fs = std::filesystem;

struct Result {
  int status = -1;
  std::string out;
  std::string err;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Sandbox {
 public:
  explicit Sandbox(const std::string& name)
      : dir_(fs::temp_directory_path() /
             ("driftgauge-" + name + "-" + std::to_string(::getpid()))) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Sandbox() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  Sandbox(const Sandbox&) = delete;
  Sandbox& operator=(const Sandbox&) = delete;

  const fs::path& dir() const { return dir_; }
  std::string path(const std::string& file) const { return (dir_ / file).string(); }

  // args is appended to the executable verbatim; env is prefixed to the
  // command line (e.g. "DRIFTGAUGE_SEED=3").
  Result run(const std::string& args, const std::string& env = "") const {
    const std::string out = path(".stdout"), err = path(".stderr");
    const std::string cmd = "cd '" + dir_.string() + "' && " + env + (env.empty() ? "" : " ") +
                            "'" DRIFTGAUGE_CLI "' " + args + " > '" + out + "' 2> '" + err + "'";
    const int raw = std::system(cmd.c_str());
    Result r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  std::string read(const std::string& file) const { return slurp(dir_ / file); }

 private:
  fs::path dir_;
};

}  // namespace cli
