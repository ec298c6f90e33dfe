#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "macs/app.hpp"

namespace {

using macs::json;

void print_ztest(const macs::ZTest& t) {
  std::cout << json{{"z", t.z}, {"p_two_sided", t.p_two_sided}, {"p_greater", t.p_greater}}.dump() << '\n';
}

std::string out_dir_for(const macs::ConfigDocument& doc, const std::string& flag, const std::string& config_path) {
  if (!flag.empty()) return flag;
  std::filesystem::path p(doc.output_dir);
  if (p.is_relative()) p = std::filesystem::path(config_path).parent_path() / p;
  return p.string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Multi-attribute constrained sequence editing: toy tasks, pair datasets, campaigns"};
  cli.require_subcommand(1);
  std::string log_level = "warn";
  cli.add_option("--log-level", log_level, "debug, info, warn, error or off")
      ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}));

  // synth
  auto* synth = cli.add_subcommand("synth", "Generate a toy pool file and a ready-to-run config");
  synth->require_subcommand(1);
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  macs::synth::StyleOptions style_opt;
  macs::synth::ProteinOptions protein_opt;
  auto* synth_style = synth->add_subcommand("style", "Text reviews with sentiment and complexity");
  synth_style->add_option("--seed", synth_seed)->required();
  synth_style->add_option("--out", synth_out, "Output directory")->required();
  synth_style->add_option("--groups", style_opt.groups)->check(CLI::PositiveNumber);
  synth_style->add_option("--words", style_opt.words)->check(CLI::PositiveNumber);
  synth_style->add_option("--drift", style_opt.drift_std, "Secondary-attribute drift of a variation")
      ->check(CLI::NonNegativeNumber);
  synth_style->add_option("--mixed-fraction", style_opt.mixed_fraction, "Share of variations retargeting both attributes")
      ->check(CLI::Range(0.0, 1.0));
  auto* synth_protein = synth->add_subcommand("protein", "Wild type and mutants on a toy fitness landscape");
  synth_protein->add_option("--seed", synth_seed)->required();
  synth_protein->add_option("--out", synth_out, "Output directory")->required();
  synth_protein->add_option("--length", protein_opt.length)->check(CLI::PositiveNumber);
  synth_protein->add_option("--mutants", protein_opt.mutants)->check(CLI::PositiveNumber);

  // pairs
  auto* pairs = cli.add_subcommand("pairs", "Build, sample and inspect edit-pair datasets");
  pairs->require_subcommand(1);
  std::string pairs_config, pairs_out;
  std::optional<std::uint64_t> pairs_seed;
  std::string window_strategy = "target-satisfying", weight_mode = "wbc", sampler_mode = "knn";
  bool anchors = false;
  std::size_t count = 1000, k = 30, tau = 400, draws = 10000;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", pairs_config, "Config with attributes, evaluators and pools")->required();
    sub->add_option("--seed", pairs_seed, "Overrides the config seed");
    sub->add_option("--out", pairs_out, "Output file")->required();
  };
  auto example_flags = [&](CLI::App* sub) {
    sub->add_option("--windows", window_strategy)->check(CLI::IsMember({"target-satisfying", "nonneg-gain"}));
    sub->add_option("--weights", weight_mode)->check(CLI::IsMember({"sft", "wbc"}));
    sub->add_flag("--anchors", anchors, "Attach an anchor sequence to every example");
  };
  auto* pairs_build = pairs->add_subcommand("build", "Every ordered within-group pair as a training example");
  common(pairs_build);
  example_flags(pairs_build);
  auto* pairs_sample = pairs->add_subcommand("sample", "Draw training examples with a pair sampler");
  common(pairs_sample);
  example_flags(pairs_sample);
  pairs_sample->add_option("--sampler", sampler_mode)->check(CLI::IsMember({"random", "knn", "window-uniform"}));
  pairs_sample->add_option("--count", count)->check(CLI::PositiveNumber);
  pairs_sample->add_option("-k", k)->check(CLI::PositiveNumber);
  pairs_sample->add_option("--tau", tau)->check(CLI::PositiveNumber);
  auto* pairs_stats = pairs->add_subcommand("stats", "Change-vector histograms of random vs k-NN sampling (CSV)");
  common(pairs_stats);
  pairs_stats->add_option("--draws", draws)->check(CLI::PositiveNumber);
  pairs_stats->add_option("-k", k)->check(CLI::PositiveNumber);

  // campaign
  auto* campaign = cli.add_subcommand("campaign", "Run an evaluation campaign and write its report");
  campaign->require_subcommand(1);
  std::string camp_config, camp_out, camp_strategy;
  std::optional<std::uint64_t> camp_seed;
  std::size_t camp_workers = 1;
  for (const char* mode : {"style", "discover"}) {
    auto* sub = campaign->add_subcommand(mode, std::string(mode) == "style" ? "Constrained style transfer"
                                                                            : "Protein discovery");
    sub->add_option("--config", camp_config)->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", camp_seed, "Overrides the config seed");
    sub->add_option("--out", camp_out, "Report directory (default: output.dir of the config)");
    sub->add_option("--workers", camp_workers, "Parallel episode workers")->check(CLI::PositiveNumber);
    sub->add_option("--strategy", camp_strategy, "Overrides episode.strategy");
  }

  // ztest / report
  long s1 = 0, n1 = 0, s2 = 0, n2 = 0;
  auto* ztest = cli.add_subcommand("ztest", "Two-proportions z-test");
  ztest->add_option("--s1", s1)->required();
  ztest->add_option("--n1", n1)->required();
  ztest->add_option("--s2", s2)->required();
  ztest->add_option("--n2", n2)->required();
  auto* report = cli.add_subcommand("report", "Inspect campaign reports");
  report->require_subcommand(1);
  std::string report_a, report_b;
  auto* compare = report->add_subcommand("compare", "Per-combo z-tests between two reports (CSV)");
  compare->add_option("a", report_a, "Report directory or summary.json")->required();
  compare->add_option("b", report_b, "Report directory or summary.json")->required();

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : static_cast<int>(macs::ExitCode::config);
  }

  try {
    namespace app = macs::app;
    if (log_level == "debug") macs::log::set_level(macs::log::Level::debug);
    if (log_level == "info") macs::log::set_level(macs::log::Level::info);
    if (log_level == "warn") macs::log::set_level(macs::log::Level::warn);
    if (log_level == "error") macs::log::set_level(macs::log::Level::error);
    if (log_level == "off") macs::log::set_level(macs::log::Level::off);

    if (synth_style->parsed()) {
      app::synth_style(synth_seed, style_opt, synth_out);
    } else if (synth_protein->parsed()) {
      app::synth_protein(synth_seed, protein_opt, synth_out);
    } else if (pairs->parsed()) {
      const app::Session s(app::load(pairs_config, pairs_seed));
      const auto seed = s.doc().seed;
      if (pairs_stats->parsed()) {
        const auto stats = app::pair_stats(s, draws, k, seed);
        auto out = macs::open_for_write(pairs_out);
        out << app::stats_csv(stats, s.doc().space);
        macs::check_written(out, pairs_out);
        for (const auto& st : stats) {
          std::cout << json{{"sampler", st.sampler},
                            {"draws", st.hist.total},
                            {"occupied", st.hist.occupied()},
                            {"entropy", st.hist.entropy()}}
                           .dump()
                    << '\n';
        }
      } else {
        const auto ws = macs::parse_window_strategy(window_strategy);
        const auto wm = macs::parse_weight_mode(weight_mode);
        std::vector<macs::TrainingExample> examples;
        if (pairs_build->parsed()) {
          examples = app::all_examples(s, ws, wm, anchors, seed);
        } else {
          macs::SamplerConfig sc;
          sc.mode = macs::parse_sampler_mode(sampler_mode);
          sc.k = k;
          sc.tau = tau;
          macs::BuildOptions opts;
          opts.count = count;
          opts.window_strategy = ws;
          opts.weight_mode = wm;
          opts.with_anchor = anchors;
          examples = app::sampled_examples(s, sc, opts, seed);
        }
        macs::export_examples(examples, s.doc().space, pairs_out);
        std::cout << json{{"examples", examples.size()}}.dump() << '\n';
      }
    } else if (campaign->parsed()) {
      const bool style = campaign->got_subcommand("style");
      std::optional<std::string> strategy;
      if (!camp_strategy.empty()) strategy = camp_strategy;
      const auto doc = app::load(camp_config, camp_seed, strategy);
      if ((doc.campaign.mode == "style") != style) {
        throw macs::ConfigError("config campaign.mode is '" + doc.campaign.mode + "'; use 'campaign " +
                                (doc.campaign.mode == "style" ? "style" : "discover") + "'");
      }
      const auto dir = out_dir_for(doc, camp_out, camp_config);
      const auto summary = app::run_campaign(doc, camp_workers, dir);
      std::cout << json{{"report", dir}, {"headline", summary.at("headline")}}.dump() << '\n';
    } else if (ztest->parsed()) {
      print_ztest(macs::two_prop_ztest(s1, n1, s2, n2));
    } else if (compare->parsed()) {
      std::cout << app::compare_csv(macs::compare_reports(app::read_summary(report_a), app::read_summary(report_b)));
    }
    return 0;
  } catch (const macs::Error& e) {
    std::cerr << "macs: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const json::exception& e) {
    std::cerr << "macs: malformed input: " << e.what() << '\n';
    return static_cast<int>(macs::ExitCode::config);
  } catch (const std::exception& e) {
    std::cerr << "macs: " << e.what() << '\n';
    return static_cast<int>(macs::ExitCode::failure);
  }
}
