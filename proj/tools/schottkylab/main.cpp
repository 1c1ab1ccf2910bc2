#include <cstdio>
#include <exception>
#include <filesystem>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "manifest.hpp"
#include "runners.hpp"
#include "schottky/types.hpp"

namespace {

struct Cli {
  std::string manifest_path;
  std::string out_dir = ".";
  schottkylab::RunContext ctx;
};

void add_common(CLI::App* cmd, Cli& cli, int& seed_count, int& tol_count) {
  cmd->add_option("--manifest", cli.manifest_path, "input manifest file")->required();
  cmd->add_option("--out", cli.out_dir, "directory for report files");
  cmd->add_option("--seed", cli.ctx.seed, "seed for stochastic commands")
      ->each([&seed_count](const std::string&) { ++seed_count; });
  cmd->add_option("--tol", cli.ctx.tol, "pass/fail tolerance override")
      ->each([&tol_count](const std::string&) { ++tol_count; });
  cmd->add_option("--threads", cli.ctx.threads,
                  "worker threads, 0 = auto (pipelines currently run serially)")
      ->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"residual laboratory for theta functions, pole dynamics and "
               "the flow criteria that detect period matrices of curves"};
  app.require_subcommand(1);

  Cli cli;
  int seed_count = 0;
  int tol_count = 0;

  // group.sub commands mirror the manifest command ids; `run` takes the id
  // from the manifest itself
  std::string chosen;
  std::map<std::string, CLI::App*> groups;
  for (const std::string& id : schottkylab::command_ids()) {
    const std::string group = id.substr(0, id.find('.'));
    const std::string sub = id.substr(id.find('.') + 1);
    auto [it, fresh] = groups.try_emplace(group, nullptr);
    if (fresh) {
      it->second = app.add_subcommand(group);
      it->second->require_subcommand(1);
    }
    CLI::App* cmd = it->second->add_subcommand(sub);
    add_common(cmd, cli, seed_count, tol_count);
    cmd->callback([&chosen, id]() { chosen = id; });
  }
  CLI::App* run = app.add_subcommand("run", "command named by the manifest [run] section");
  add_common(run, cli, seed_count, tol_count);
  run->callback([&chosen]() { chosen.clear(); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    cli.ctx.out_dir = cli.out_dir;
    cli.ctx.has_seed = seed_count > 0;
    cli.ctx.has_tol = tol_count > 0;
    schottkylab::Manifest m = schottkylab::Manifest::parse_file(cli.manifest_path);
    std::string command = chosen;
    if (command.empty()) {
      if (!m.has("run", "command")) {
        throw schottky::UsageError("the run subcommand needs command = ... in [run]");
      }
      command = m.take("run", "command");
    }
    std::filesystem::create_directories(cli.ctx.out_dir);
    return schottkylab::run_command(command, m, cli.ctx);
  } catch (const schottky::UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const schottky::ConventionError& e) {
    std::fprintf(stderr, "input convention violated: %s\n", e.what());
    return 2;
  } catch (const schottky::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
